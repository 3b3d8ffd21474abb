#include "langstep/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>

#include "langstep/errorlab.hpp"
#include "langstep/io.hpp"
#include "langstep/metrics.hpp"
#include "langstep/ou_oracle.hpp"
#include "langstep/scheme.hpp"
#include "langstep/tangent.hpp"
#include "langstep/version.hpp"

namespace langstep {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Vec config_x0(const ExperimentConfig& cfg, int d) {
  Vec x0 = Vec::Zero(d);
  if (!cfg.x0.empty()) {
    if (static_cast<int>(cfg.x0.size()) != d)
      throw std::invalid_argument("x0 dimension does not match the model");
    for (int k = 0; k < d; ++k) x0(k) = cfg.x0[k];
  }
  return x0;
}

std::ofstream open_results(const ExperimentConfig& cfg) {
  const std::string path = prepare_output_path(cfg.out, cfg.force);
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open output '" + path + "' for writing");
  return os;
}

// invariant law of a builtin, when known in closed form
std::optional<AnalyticDist1d> invariant_law(const ExperimentConfig& cfg,
                                            const DiffusionModel& m) {
  if (m.d != 1) return std::nullopt;
  if (cfg.model.name == "ou" && m.constants.ou) {
    const auto [alpha, sigma] = *m.constants.ou;
    return gaussian_dist(0.0, sigma / std::sqrt(2.0 * alpha));
  }
  auto kappa = cfg.model.params.find("kappa");
  if (cfg.model.name == "heavytail" &&
      (kappa == cfg.model.params.end() || kappa->second == 1.0))
    return heavy_tail_gibbs_dist();
  return std::nullopt;
}

int run_chains_export(const ExperimentConfig& cfg, std::ostream& log) {
  const DiffusionModel m = cfg.make_model();
  const StepSchedule sched = cfg.schedule.make(
      cfg.schedule.kind == ScheduleKind::polynomial ? cfg.steps : cfg.schedule.values.size());
  const std::size_t n_steps = std::min(cfg.steps, sched.horizon());
  const Vec x0 = config_x0(cfg, m.d);

  SampleDump dump;
  dump.d = m.d;
  std::vector<std::vector<SampleDump::Row>> per_path(cfg.paths);
  parallel_for_blocks(cfg.paths, worker_count(0), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      NoiseSource noise(cfg.seed, p);
      std::vector<SampleDump::Row>& rows = per_path[p];
      StepObserver obs = [&](const StepRecord& r) {
        if ((r.step - 1) % cfg.record_every != 0) return;
        SampleDump::Row row;
        row.stream = p;
        row.n = r.step - 1;  // the pre-step position carries the weight
        row.time = sched.gamma_sum(r.step - 1);
        row.x = r.x_before;
        row.weight = r.gamma;
        rows.push_back(std::move(row));
      };
      std::vector<StepObserver> observers{obs};
      run_chain(m, sched, n_steps, x0, noise, observers);
    }
  });
  for (auto& rows : per_path)
    for (auto& r : rows) dump.rows.push_back(std::move(r));

  std::ofstream os = open_results(cfg);
  const bool binary = cfg.out.size() > 4 && cfg.out.substr(cfg.out.size() - 4) == ".bin";
  if (binary)
    write_samples_binary(os, dump);
  else
    write_samples_csv(os, dump);
  log << "wrote " << dump.rows.size() << " sample rows to " << cfg.out << "\n";
  return kExitOk;
}

int run_oracle(const ExperimentConfig& cfg, std::ostream& log) {
  if (cfg.model.name != "ou")
    throw std::invalid_argument("the oracle experiment needs an OU model");
  auto get = [&](const std::string& key, double fallback) {
    auto it = cfg.model.params.find(key);
    return it == cfg.model.params.end() ? fallback : it->second;
  };
  const double alpha = get("alpha", 1.0), sigma = get("sigma", 1.0);
  const StepSchedule sched = cfg.schedule.make(cfg.steps);
  const std::size_t n = std::min(cfg.steps, sched.horizon());
  OuOracle oracle(alpha, sigma, sched);
  std::ofstream os = open_results(cfg);
  const std::vector<std::string> cols{"n", "gamma_n", "Gamma_n", "sigma_n_sq", "w1", "tv_lower"};
  write_csv_header(os, cols);
  for (std::size_t k = 1; k <= n; ++k) {
    const double row[] = {static_cast<double>(k),       sched.gamma(k),
                          sched.gamma_sum(k),           oracle.variance_recursion(k),
                          oracle.exact_w1_to_invariant(k), oracle.tv_lower_bound_curve(k)};
    write_csv_row(os, row);
  }
  if (auto sq = oracle.square_summable())
    log << "sum gamma_n^2 " << (*sq ? "converges" : "diverges") << "\n";
  log << "wrote " << n << " oracle rows to " << cfg.out << "\n";
  return kExitOk;
}

int run_one_step(const ExperimentConfig& cfg, std::ostream& log, bool strong) {
  if (cfg.gammas.empty())
    throw std::invalid_argument("one-step experiments need a 'gammas' sweep");
  const DiffusionModel m = cfg.make_model();
  Vec x = config_x0(cfg, m.d);
  if (cfg.x0.empty()) x.setConstant(1.0);
  std::ofstream os = open_results(cfg);
  const std::vector<std::string> cols{"gamma", "error", "std_error", "substeps"};
  write_csv_header(os, cols);
  std::vector<std::pair<double, double>> pairs;
  bool inconclusive = false;
  for (std::size_t i = 0; i < cfg.gammas.size(); ++i) {
    const double g = cfg.gammas[i];
    ErrorEstimate est;
    if (strong) {
      est = one_step_strong_error(m, x, g, 2, cfg.paths, cfg.substeps, cfg.seed + i);
    } else {
      ScalarFn payoff = [](const Vec& v) { return v(0) * v(0); };
      est = one_step_weak_error(m, payoff, x, g, cfg.paths, cfg.substeps, cfg.seed + i);
    }
    inconclusive = inconclusive || est.inconclusive;
    const double row[] = {g, est.error, est.std_error, static_cast<double>(est.n_substeps_used)};
    write_csv_row(os, row);
    if (est.error > 0.0) pairs.emplace_back(g, est.error);
  }
  if (pairs.size() >= 3) {
    const RateFit fit = rate_fit(pairs);
    log << (strong ? "strong" : "weak") << " one-step fit: slope " << fit.slope
        << "  intercept " << fit.intercept << "  r2 " << fit.r2 << "\n";
  }
  if (inconclusive) {
    log << "warning: Richardson refinement hit its cap; reference bias uncontrolled\n";
    return kExitInconclusive;
  }
  return kExitOk;
}

int run_long_run(const ExperimentConfig& cfg, std::ostream& log) {
  if (cfg.checkpoints.empty())
    throw std::invalid_argument("long-run experiment needs 'checkpoints'");
  const DiffusionModel m = cfg.make_model();
  LongRunTarget target;
  std::size_t horizon = cfg.checkpoints.back();
  if (auto law = invariant_law(cfg, m)) {
    target.analytic = *law;
  } else {
    target.reference_steps = 10 * cfg.checkpoints.back();
    horizon = *target.reference_steps;
  }
  const StepSchedule sched = cfg.schedule.make(horizon);
  LongRunOptions opt;
  opt.n_paths = cfg.paths;
  opt.seed = cfg.seed;
  opt.x0 = config_x0(cfg, m.d);
  opt.estimator = cfg.distance;
  opt.t_burn = cfg.t_burn;
  opt.hist_bins = cfg.bins;
  const LongRunResult res = long_run_rate_experiment(m, sched, cfg.checkpoints, target, opt);
  std::ofstream os = open_results(cfg);
  const std::vector<std::string> cols{"n", "gamma_n", "value", "fitted"};
  write_csv_header(os, cols);
  for (const auto& p : res.points) {
    const double row[] = {static_cast<double>(p.n), p.gamma_n, p.value,
                          p.fitted ? 1.0 : 0.0};
    write_csv_row(os, row);
  }
  std::ofstream js(cfg.out + ".distances.jsonl");
  for (const auto& rep : res.reports) js << distance_report_json(rep) << "\n";
  log << "long-run fit (" << estimator_name(cfg.distance) << " vs gamma_n): slope "
      << res.fit.slope << "  r2 " << res.fit.r2
      << (res.target_approximate ? "  [target approximate: reference run]" : "") << "\n";
  return kExitOk;
}

int run_check(const ExperimentConfig& cfg, std::ostream& log) {
  const DiffusionModel m = cfg.make_model();
  const StepSchedule sched = cfg.schedule.make(std::max<std::size_t>(cfg.steps, 1000));
  const auto gam = sched.check_gamma_assumption(sched.horizon());
  log << "schedule: non_increasing=" << gam.non_increasing;
  if (gam.vanishing)
    log << " vanishing=" << *gam.vanishing;
  else
    log << " vanishing=inconclusive";
  if (gam.divergent)
    log << " divergent=" << *gam.divergent;
  else
    log << " divergent=inconclusive";
  if (!gam.note.empty()) log << "  (" << gam.note << ")";
  log << "\n";
  const double vp = sched.varpi();
  log << "varpi" << (sched.varpi_is_estimate() ? " (tail estimate)" : "") << " = " << vp << "\n";

  const int samples = static_cast<int>(std::max<std::size_t>(cfg.paths, 100));
  const auto diss = check_dissipativity(m, samples, 5.0, cfg.seed);
  log << "dissipativity estimate (empirical only): " << diss.estimate;
  if (diss.alpha)
    log << "  => (C_alpha) holds empirically with alpha = " << *diss.alpha;
  else
    log << "  => no contraction observed";
  log << "\n";
  const auto ell = check_ellipticity(m, samples, 5.0, cfg.seed);
  log << "min eigenvalue of sigma sigma^T over probes: " << ell.min_eigenvalue << "\n";
  if (m.has_lyapunov() && m.lyapunov_grad) {
    const auto mr = check_mean_reversion(m, samples, 5.0, cfg.seed);
    log << "mean reversion fit: alpha_hat = " << mr.alpha_hat << "  beta_hat = " << mr.beta_hat
        << "  worst violation = " << mr.worst_violation << "  Cb_hat = " << mr.cb_hat << "\n";
  }
  if (m.constants.contraction_rho) {
    const double rho = *m.constants.contraction_rho;
    log << "varpi < rho check: " << vp << (vp < rho ? " < " : " >= ") << rho
        << (vp < rho ? "  (rate hypotheses admissible)" : "  (rate hypotheses violated)") << "\n";
    if (vp == 0.0)
      log << "note: varpi = 0 accepted everywhere (the additive-rate hypothesis is stated "
             "for varpi > 0; not enforced here)\n";
  }
  return kExitOk;
}

int run_bel(const ExperimentConfig& cfg, std::ostream& log) {
  const DiffusionModel m = cfg.make_model();
  Vec x = config_x0(cfg, m.d);
  ScalarFn payoff = [](const Vec& v) { return v(0); };
  const auto res =
      bel_gradient(m, payoff, x, cfg.bel_t, cfg.paths, cfg.substeps, cfg.seed);
  std::ofstream os = open_results(cfg);
  const std::vector<std::string> cols{"coordinate", "gradient", "std_error"};
  write_csv_header(os, cols);
  for (int k = 0; k < m.d; ++k) {
    const double row[] = {static_cast<double>(k + 1), res.gradient(k), res.std_error(k)};
    write_csv_row(os, row);
  }
  log << "BEL gradient of E[x_1] at t=" << cfg.bel_t << ": " << res.gradient.transpose()
      << "  (std err " << res.std_error.transpose() << ", " << res.rejected
      << " paths rejected)\n";
  return kExitOk;
}

}  // namespace

int run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
  const auto t0 = Clock::now();
  int code = kExitOk;
  try {
    if (cfg.kind == "run")
      code = run_chains_export(cfg, log);
    else if (cfg.kind == "oracle")
      code = run_oracle(cfg, log);
    else if (cfg.kind == "one-step-strong")
      code = run_one_step(cfg, log, true);
    else if (cfg.kind == "one-step-weak")
      code = run_one_step(cfg, log, false);
    else if (cfg.kind == "long-run")
      code = run_long_run(cfg, log);
    else if (cfg.kind == "check")
      code = run_check(cfg, log);
    else if (cfg.kind == "bel")
      code = run_bel(cfg, log);
    else
      throw std::invalid_argument("unknown experiment kind '" + cfg.kind + "'");
  } catch (const BlowUpError& e) {
    log << "blow-up: non-finite state at step " << e.step() << "\n";
    return kExitBlowUp;
  } catch (const std::runtime_error& e) {
    log << "error: " << e.what() << "\n";
    return kExitIoError;
  }
  if (!cfg.out.empty() && code != kExitIoError && cfg.kind != "check")
    write_manifest(cfg.out, cfg.echo_json(), cfg.seed, seconds_since(t0));
  return code;
}

}  // namespace langstep
