#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "langstep/metrics.hpp"
#include "langstep/model.hpp"
#include "langstep/schedule.hpp"

namespace langstep {

struct ConfigError {
  std::string path;  // location inside the document, e.g. "/schedule/gamma1"
  std::string message;
};

struct ModelSpec {
  std::string name;  // "ou" | "heavytail"
  std::map<std::string, double> params;
};

struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::polynomial;
  double gamma1 = 0.5;
  double a = 0.9;
  std::vector<double> values;

  StepSchedule make(std::size_t horizon) const;
};

// Fully validated experiment description. Unknown keys are rejected at parse
// time; validation collects every error instead of stopping at the first.
struct ExperimentConfig {
  std::string kind;  // run | oracle | one-step-strong | one-step-weak |
                     // long-run | check | bel
  ModelSpec model;
  ScheduleSpec schedule;
  std::size_t paths = 1000;
  std::size_t steps = 1000;
  std::uint64_t seed = 0;
  std::vector<std::size_t> checkpoints;
  std::vector<double> gammas;        // one-step sweeps
  std::size_t substeps = 64;
  DistanceEstimator distance = DistanceEstimator::w1_exact_1d;
  std::optional<double> t_burn;
  std::size_t bins = 0;
  std::vector<double> x0;
  double bel_t = 1.0;                // bel horizon
  std::size_t record_every = 1;      // run: thin the empirical export
  std::string out;
  bool force = false;

  DiffusionModel make_model() const;
  std::string echo_json() const;  // canonical echo with defaults filled
};

struct ParseResult {
  std::optional<ExperimentConfig> config;
  std::vector<ConfigError> errors;
  bool ok() const { return config.has_value(); }
};

// Parses and validates the JSON experiment config.
ParseResult parse_config(const std::string& text);

// Flag mini-syntaxes used by the command line:
//   model:    "ou:alpha=1,sigma=1.4142,d=1"  /  "heavytail:d=2,kappa=1"
//   schedule: "poly:0.5:0.9"  /  "expl:0.3,0.2,0.1"
ModelSpec parse_model_spec(const std::string& text);
ScheduleSpec parse_schedule_spec(const std::string& text);
DistanceEstimator parse_estimator(const std::string& name);

}  // namespace langstep
