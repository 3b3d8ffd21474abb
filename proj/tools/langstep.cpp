// langstep: decreasing-step Langevin sampler experiments.
//
// Subcommands: run, oracle, rates {one-step-strong, one-step-weak, long-run},
// check, bel. Either pass flags or a full JSON config via --config.
// LANGSTEP_THREADS caps the worker count.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "langstep/config.hpp"
#include "langstep/experiment.hpp"
#include "langstep/version.hpp"

using nlohmann::json;

namespace {

struct CommonFlags {
  std::string model;
  std::string schedule;
  std::string out;
  std::size_t paths = 1000;
  std::size_t steps = 1000;
  std::size_t substeps = 64;
  std::uint64_t seed = 0;
  std::string checkpoints;
  std::string gammas;
  std::string distance = "w1_exact_1d";
  std::string x0;
  double bel_t = 1.0;
  double t_burn = -1.0;
  std::size_t bins = 0;
  std::size_t record_every = 1;
  bool force = false;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool needs_out) {
  cmd->add_option("--model", f.model, "builtin model spec, e.g. ou:alpha=1,sigma=1.4,d=1");
  cmd->add_option("--schedule", f.schedule, "step schedule, poly:<g1>:<a> or expl:a,b,c");
  cmd->add_option("--paths", f.paths, "number of Monte Carlo paths");
  cmd->add_option("--seed", f.seed, "master seed");
  auto* out = cmd->add_option("--out", f.out, "output CSV path");
  if (needs_out) out->required();
  cmd->add_flag("--force", f.force, "allow overwriting an existing output file");
}

std::vector<double> split_doubles(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(std::stod(part));
  return out;
}

json flags_to_json(const std::string& kind, const CommonFlags& f) {
  json j;
  j["experiment"] = kind;
  if (!f.model.empty()) j["model"] = f.model;
  if (!f.schedule.empty()) j["schedule"] = f.schedule;
  j["paths"] = f.paths;
  j["steps"] = f.steps;
  j["substeps"] = f.substeps;
  j["seed"] = f.seed;
  if (!f.checkpoints.empty()) j["checkpoints"] = split_doubles(f.checkpoints);
  if (!f.gammas.empty()) j["gammas"] = split_doubles(f.gammas);
  j["distance"] = f.distance;
  if (!f.x0.empty()) j["x0"] = split_doubles(f.x0);
  j["bel_t"] = f.bel_t;
  if (f.t_burn >= 0.0) j["t_burn"] = f.t_burn;
  if (f.bins) j["bins"] = f.bins;
  j["record_every"] = f.record_every;
  if (!f.out.empty()) j["out"] = f.out;
  j["force"] = f.force;
  return j;
}

int run_from_json(const std::string& text) {
  const langstep::ParseResult parsed = langstep::parse_config(text);
  if (!parsed.ok()) {
    for (const auto& e : parsed.errors)
      std::cerr << "config error at " << (e.path.empty() ? "/" : e.path) << ": " << e.message
                << "\n";
    return langstep::kExitIoError;
  }
  return langstep::run_experiment(*parsed.config, std::cout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"decreasing-step Euler (Langevin) sampler experiments"};
  app.set_version_flag("--version", langstep::kVersion);
  app.require_subcommand(0, 1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON experiment config file");

  CommonFlags f;
  std::string oracle_alpha = "1", oracle_sigma = "1";
  std::size_t oracle_n = 1000;

  auto* run = app.add_subcommand("run", "simulate chains and export the empirical measure");
  add_common(run, f, true);
  run->add_option("--steps", f.steps, "steps per chain");
  run->add_option("--x0", f.x0, "start point (comma-separated coordinates)");
  run->add_option("--record-every", f.record_every, "thin the exported samples");

  auto* oracle = app.add_subcommand("oracle", "dump OU closed-form curves");
  oracle->add_option("--alpha", oracle_alpha, "confluence rate")->required();
  oracle->add_option("--sigma", oracle_sigma, "noise scale")->required();
  oracle->add_option("--schedule", f.schedule, "step schedule")->required();
  oracle->add_option("--n", oracle_n, "number of steps to tabulate")->required();
  oracle->add_option("--out", f.out, "output CSV path")->required();
  oracle->add_flag("--force", f.force, "allow overwriting");

  auto* rates = app.add_subcommand("rates", "convergence-order experiments");
  rates->require_subcommand(1);
  auto* strong = rates->add_subcommand("one-step-strong", "L2 one-step error sweep");
  add_common(strong, f, true);
  strong->add_option("--gammas", f.gammas, "comma-separated step sizes")->required();
  strong->add_option("--substeps", f.substeps, "fine reference grid size");
  strong->add_option("--x0", f.x0, "expansion point");
  auto* weak = rates->add_subcommand("one-step-weak", "weak one-step error sweep (g = x^2)");
  add_common(weak, f, true);
  weak->add_option("--gammas", f.gammas, "comma-separated step sizes")->required();
  weak->add_option("--substeps", f.substeps, "initial reference grid size");
  weak->add_option("--x0", f.x0, "expansion point");
  auto* longrun = rates->add_subcommand("long-run", "distance to the invariant law vs gamma_n");
  add_common(longrun, f, true);
  longrun->add_option("--checkpoints", f.checkpoints, "comma-separated step counts")->required();
  longrun->add_option("--distance", f.distance, "w1_exact_1d | tv_histogram | w1_sliced");
  longrun->add_option("--t-burn", f.t_burn, "burn-in time override");
  longrun->add_option("--bins", f.bins, "histogram bins override");
  longrun->add_option("--x0", f.x0, "start point");

  auto* check = app.add_subcommand("check", "probe model/schedule assumptions");
  add_common(check, f, false);

  auto* bel = app.add_subcommand("bel", "gradient of E[x_1] via the tangent-weight estimator");
  add_common(bel, f, true);
  bel->add_option("--t", f.bel_t, "time horizon");
  bel->add_option("--substeps", f.substeps, "simulation grid size");
  bel->add_option("--x0", f.x0, "gradient evaluation point");

  CLI11_PARSE(app, argc, argv);

  if (!config_path.empty()) {
    std::ifstream is(config_path);
    if (!is) {
      std::cerr << "cannot read config file '" << config_path << "'\n";
      return langstep::kExitIoError;
    }
    std::stringstream buf;
    buf << is.rdbuf();
    return run_from_json(buf.str());
  }

  json j;
  if (run->parsed()) {
    j = flags_to_json("run", f);
  } else if (oracle->parsed()) {
    f.model = "ou:alpha=" + oracle_alpha + ",sigma=" + oracle_sigma + ",d=1";
    f.steps = oracle_n;
    j = flags_to_json("oracle", f);
  } else if (strong->parsed()) {
    j = flags_to_json("one-step-strong", f);
  } else if (weak->parsed()) {
    j = flags_to_json("one-step-weak", f);
  } else if (longrun->parsed()) {
    j = flags_to_json("long-run", f);
  } else if (check->parsed()) {
    j = flags_to_json("check", f);
  } else if (bel->parsed()) {
    j = flags_to_json("bel", f);
  } else {
    std::cerr << app.help();
    return langstep::kExitIoError;
  }
  return run_from_json(j.dump());
}
