#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "langstep/dist.hpp"
#include "langstep/metrics.hpp"
#include "langstep/model.hpp"
#include "langstep/schedule.hpp"
#include "langstep/scheme.hpp"

namespace langstep {

// Least-squares fit of log(error) against log(scale).
struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::vector<std::pair<double, double>> pairs;  // (scale, error), as fitted
};

RateFit rate_fit(std::span<const std::pair<double, double>> pairs);

struct ErrorEstimate {
  double error = 0.0;
  double std_error = 0.0;
  std::size_t n_substeps_used = 0;
  bool inconclusive = false;  // Richardson refinement hit its cap
};

// L^p error over one step of size gamma between the Euler step and a coupled
// reference: a fine Euler grid on n_substeps sub-intervals whose increments
// sum bit-exactly to the coarse increment; for OU models the exact Gaussian
// transition conditioned on those increments is used instead (zero reference
// bias). p in {1, 2, 4}.
ErrorEstimate one_step_strong_error(const DiffusionModel& m, const Vec& x, double gamma,
                                    int p, std::size_t n_paths, std::size_t n_substeps,
                                    std::uint64_t seed, int n_threads = 0);

// |E g(coarse) - E g(reference)| with paired paths (common increments). The
// fine reference doubles its grid until the Richardson difference between
// n_substeps and 2 n_substeps drops below 10% of the measured error; past
// n_substeps > 2^14 the estimate is flagged inconclusive. OU models use the
// exact transition and skip refinement.
ErrorEstimate one_step_weak_error(const DiffusionModel& m, const ScalarFn& g, const Vec& x,
                                  double gamma, std::size_t n_paths,
                                  std::size_t n_substeps, std::uint64_t seed,
                                  int n_threads = 0);

// ---- long-run distance decay ---------------------------------------------

struct LongRunTarget {
  // exactly one of:
  std::optional<AnalyticDist1d> analytic;      // exact invariant law (d = 1)
  std::optional<std::size_t> reference_steps;  // marginal of a longer run
                                               // (approximate target)
};

struct LongRunOptions {
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  Vec x0;
  std::function<Vec(const NoiseSource&, std::uint64_t&)> x0_sampler;  // warm start
  DistanceEstimator estimator = DistanceEstimator::w1_exact_1d;
  std::optional<double> t_burn;  // default: log(1/gamma_min)/rho
  std::size_t hist_bins = 0;     // tv_histogram override
  std::size_t sliced_projections = 64;
  int n_threads = 0;
  BlowUpPolicy policy = BlowUpPolicy::abort_all;
};

struct LongRunPoint {
  std::size_t n = 0;
  double gamma_n = 0.0;
  double value = 0.0;
  bool fitted = false;  // past burn-in
};

struct LongRunResult {
  std::vector<LongRunPoint> points;
  std::vector<DistanceReport> reports;  // one per checkpoint, same order
  std::size_t burn_in_index = 0;        // first fitted point
  RateFit fit;                          // over fitted points, value vs gamma_n
  bool target_approximate = false;
  std::size_t dropped_paths = 0;
};

// Runs n_paths chains, measures the distance between the cross-path marginal
// and the target at each checkpoint, and fits distance against gamma_n past
// burn-in (first checkpoint with Gamma_n >= t_burn).
LongRunResult long_run_rate_experiment(const DiffusionModel& m, const StepSchedule& sched,
                                       std::span<const std::size_t> checkpoints,
                                       const LongRunTarget& target,
                                       const LongRunOptions& opt);

}  // namespace langstep
