#include "langstep/errorlab.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "langstep/noise.hpp"

namespace langstep {

RateFit rate_fit(std::span<const std::pair<double, double>> pairs) {
  if (pairs.size() < 3) throw std::invalid_argument("rate_fit: need >= 3 pairs");
  RateFit fit;
  fit.pairs.assign(pairs.begin(), pairs.end());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(pairs.size());
  std::vector<double> lx(pairs.size()), ly(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!(pairs[i].first > 0.0) || !(pairs[i].second > 0.0))
      throw std::invalid_argument("rate_fit: scales and errors must be positive");
    lx[i] = std::log(pairs[i].first);
    ly[i] = std::log(pairs[i].second);
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw std::invalid_argument("rate_fit: degenerate scales");
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss_res = 0, ss_tot = 0;
  const double ymean = sy / n;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double pred = fit.intercept + fit.slope * lx[i];
    ss_res += (ly[i] - pred) * (ly[i] - pred);
    ss_tot += (ly[i] - ymean) * (ly[i] - ymean);
  }
  fit.r2 = ss_tot == 0.0 ? 1.0 : 1.0 - ss_res / ss_tot;
  return fit;
}

namespace {

// Exact OU transition over step h conditioned on the Brownian increment dw:
//   X' = e^{-a h} X + s (beta dw + sc eta),  eta ~ N(0, I) independent.
struct OuConditional {
  double decay, beta, sc, sigma;
  OuConditional(double alpha, double sigma_, double h) : sigma(sigma_) {
    decay = std::exp(-alpha * h);
    const double c = (1.0 - decay) / alpha;            // Cov(xi, dW)
    const double v = (1.0 - decay * decay) / (2.0 * alpha);
    beta = c / h;
    sc = std::sqrt(std::max(v - c * c / h, 0.0));
  }
};

struct MeanVar {
  double mean = 0.0;
  double sd = 0.0;  // of the per-path values
};

MeanVar mean_and_sd(std::span<const double> xs) {
  double m = 0.0;
  for (double v : xs) m += v;
  m /= static_cast<double>(xs.size());
  double s2 = 0.0;
  for (double v : xs) s2 += (v - m) * (v - m);
  s2 /= static_cast<double>(xs.size() > 1 ? xs.size() - 1 : 1);
  return {m, std::sqrt(s2)};
}

}  // namespace

ErrorEstimate one_step_strong_error(const DiffusionModel& m, const Vec& x, double gamma,
                                    int p, std::size_t n_paths, std::size_t n_substeps,
                                    std::uint64_t seed, int n_threads) {
  if (p != 1 && p != 2 && p != 4)
    throw std::invalid_argument("one_step_strong_error: p must be 1, 2 or 4");
  if (n_substeps < 32)
    throw std::invalid_argument("one_step_strong_error: need n_substeps >= 32");
  if (n_paths == 0) throw std::invalid_argument("one_step_strong_error: n_paths must be >= 1");
  if (x.size() != m.d) throw std::invalid_argument("one_step_strong_error: x dimension mismatch");

  const int d = m.d, q = m.q;
  const double h = gamma / static_cast<double>(n_substeps);
  const double sqh = std::sqrt(h);
  const bool exact_ou = m.constants.ou.has_value();
  std::vector<double> errs(n_paths);

  parallel_for_blocks(n_paths, worker_count(n_threads), [&](std::size_t lo, std::size_t hi) {
    EulerWorkspace ws(m);
    Vec dw(q), total(q);
    ChainState fine;
    std::optional<OuConditional> ou;
    if (exact_ou) ou.emplace(m.constants.ou->first, m.constants.ou->second, h);
    for (std::size_t path = lo; path < hi; ++path) {
      NoiseSource noise(seed, path);
      fine.x = x;
      fine.n = 0;
      fine.elapsed = 0.0;
      total.setZero();
      for (std::size_t k = 0; k < n_substeps; ++k) {
        noise.fill_normals(static_cast<std::uint64_t>(k) * q, std::span(dw.data(), q));
        dw *= sqh;
        total += dw;  // fixed aggregation order: coarse increment bit-exact
        if (exact_ou) {
          for (int j = 0; j < d; ++j) {
            const double eta = noise.normal(kAuxCounterBase + k * q + j);
            fine.x(j) = ou->decay * fine.x(j) + ou->sigma * (ou->beta * dw(j) + ou->sc * eta);
          }
        } else {
          euler_step_inplace(m, h, dw, fine, ws);
        }
      }
      // one coarse Euler step on the aggregated increment
      ChainState coarse{x, 0, 0.0};
      euler_step_inplace(m, gamma, total, coarse, ws);
      const double dist = (fine.x - coarse.x).norm();
      errs[path] = p == 1 ? dist : (p == 2 ? dist * dist : dist * dist * dist * dist);
    }
  });

  const MeanVar mv = mean_and_sd(errs);
  ErrorEstimate out;
  out.n_substeps_used = n_substeps;
  out.error = std::pow(mv.mean, 1.0 / p);
  // delta method for (mean)^{1/p}
  const double se_mean = mv.sd / std::sqrt(static_cast<double>(n_paths));
  out.std_error = mv.mean > 0.0
                      ? se_mean * std::pow(mv.mean, 1.0 / p - 1.0) / static_cast<double>(p)
                      : se_mean;
  return out;
}

namespace {

// Simulates, per path, g at the coarse one-step Euler value and at fine Euler
// values with S and 2S substeps whose increments aggregate exactly.
struct WeakSamples {
  std::vector<double> coarse, fine, finer;  // g values per path
};

WeakSamples weak_samples(const DiffusionModel& m, const ScalarFn& g, const Vec& x,
                         double gamma, std::size_t n_paths, std::size_t S,
                         std::uint64_t seed, std::uint64_t counter_base, int n_threads) {
  const int q = m.q;
  const std::size_t S2 = 2 * S;
  const double h2 = gamma / static_cast<double>(S2);
  const double sqh2 = std::sqrt(h2);
  WeakSamples out;
  out.coarse.resize(n_paths);
  out.fine.resize(n_paths);
  out.finer.resize(n_paths);

  parallel_for_blocks(n_paths, worker_count(n_threads), [&](std::size_t lo, std::size_t hi) {
    EulerWorkspace ws(m);
    Vec dw(q), pair_sum(q), total(q);
    ChainState fine, finer;
    for (std::size_t path = lo; path < hi; ++path) {
      NoiseSource noise(seed, path);
      finer.x = x;
      finer.n = 0;
      finer.elapsed = 0.0;
      fine.x = x;
      fine.n = 0;
      fine.elapsed = 0.0;
      total.setZero();
      for (std::size_t k = 0; k < S; ++k) {
        pair_sum.setZero();
        for (int half = 0; half < 2; ++half) {
          const std::uint64_t idx = counter_base + (2 * k + half) * q;
          noise.fill_normals(idx, std::span(dw.data(), q));
          dw *= sqh2;
          pair_sum += dw;
          euler_step_inplace(m, h2, dw, finer, ws);
        }
        total += pair_sum;
        euler_step_inplace(m, 2.0 * h2, pair_sum, fine, ws);
      }
      ChainState coarse{x, 0, 0.0};
      euler_step_inplace(m, gamma, total, coarse, ws);
      out.coarse[path] = g(coarse.x);
      out.fine[path] = g(fine.x);
      out.finer[path] = g(finer.x);
    }
  });
  return out;
}

}  // namespace

ErrorEstimate one_step_weak_error(const DiffusionModel& m, const ScalarFn& g, const Vec& x,
                                  double gamma, std::size_t n_paths,
                                  std::size_t n_substeps, std::uint64_t seed,
                                  int n_threads) {
  if (n_paths == 0) throw std::invalid_argument("one_step_weak_error: n_paths must be >= 1");
  if (n_substeps == 0) throw std::invalid_argument("one_step_weak_error: n_substeps must be >= 1");
  if (x.size() != m.d) throw std::invalid_argument("one_step_weak_error: x dimension mismatch");
  const int d = m.d, q = m.q;

  if (m.constants.ou) {
    // exact reference: coarse and exact transition share the increment
    const OuConditional ou(m.constants.ou->first, m.constants.ou->second, gamma);
    std::vector<double> diffs(n_paths);
    const double sg = std::sqrt(gamma);
    parallel_for_blocks(n_paths, worker_count(n_threads), [&](std::size_t lo, std::size_t hi) {
      EulerWorkspace ws(m);
      Vec dw(q), exact(d);
      for (std::size_t path = lo; path < hi; ++path) {
        NoiseSource noise(seed, path);
        noise.fill_normals(0, std::span(dw.data(), q));
        dw *= sg;
        ChainState coarse{x, 0, 0.0};
        euler_step_inplace(m, gamma, dw, coarse, ws);
        for (int j = 0; j < d; ++j) {
          const double eta = noise.normal(kAuxCounterBase + j);
          exact(j) = ou.decay * x(j) + ou.sigma * (ou.beta * dw(j) + ou.sc * eta);
        }
        diffs[path] = g(coarse.x) - g(exact);
      }
    });
    const MeanVar mv = mean_and_sd(diffs);
    ErrorEstimate out;
    out.error = std::fabs(mv.mean);
    out.std_error = mv.sd / std::sqrt(static_cast<double>(n_paths));
    out.n_substeps_used = 0;  // exact transition, no grid
    return out;
  }

  constexpr std::size_t kCap = 1u << 14;
  std::size_t S = n_substeps;
  std::uint64_t attempt = 0;
  ErrorEstimate out;
  while (true) {
    // counters per attempt live in disjoint ranges so refinements never reuse
    const std::uint64_t base = attempt * (std::uint64_t{1} << 40);
    const WeakSamples s = weak_samples(m, g, x, gamma, n_paths, S, seed, base, n_threads);
    std::vector<double> dcf(n_paths), dref(n_paths);
    for (std::size_t i = 0; i < n_paths; ++i) {
      dcf[i] = s.coarse[i] - s.finer[i];
      dref[i] = s.finer[i] - s.fine[i];  // Richardson difference, coupled
    }
    const MeanVar err = mean_and_sd(dcf);
    const MeanVar rich = mean_and_sd(dref);
    out.error = std::fabs(err.mean);
    out.std_error = err.sd / std::sqrt(static_cast<double>(n_paths));
    out.n_substeps_used = 2 * S;
    if (std::fabs(rich.mean) <= 0.1 * out.error) {
      out.inconclusive = false;
      return out;
    }
    if (2 * S > kCap) {
      out.inconclusive = true;  // reference bias not controlled at the cap
      return out;
    }
    S *= 2;
    ++attempt;
  }
}

LongRunResult long_run_rate_experiment(const DiffusionModel& m, const StepSchedule& sched,
                                       std::span<const std::size_t> checkpoints,
                                       const LongRunTarget& target,
                                       const LongRunOptions& opt) {
  if (checkpoints.empty()) throw std::invalid_argument("long_run_rate_experiment: no checkpoints");
  if (opt.n_paths == 0) throw std::invalid_argument("long_run_rate_experiment: n_paths must be >= 1");
  const bool analytic = target.analytic.has_value();
  if (analytic == target.reference_steps.has_value())
    throw std::invalid_argument("long_run_rate_experiment: target must be analytic xor reference");
  if (analytic && m.d != 1)
    throw std::invalid_argument("long_run_rate_experiment: analytic target needs d = 1");
  if (!analytic && *target.reference_steps <= checkpoints.back())
    throw std::invalid_argument("long_run_rate_experiment: reference run must outlast checkpoints");

  EnsembleSpec spec;
  spec.n_paths = opt.n_paths;
  spec.checkpoints.assign(checkpoints.begin(), checkpoints.end());
  spec.master_seed = opt.seed;
  spec.x0 = opt.x0;
  spec.x0_sampler = opt.x0_sampler;
  spec.policy = opt.policy;
  const EnsembleResult ens = run_ensemble(m, sched, spec, opt.n_threads);

  LongRunResult res;
  res.dropped_paths = ens.dropped;
  res.target_approximate = !analytic;

  // reference sample from a longer run on disjoint streams
  std::vector<double> ref1d;
  Mat refnd;
  if (!analytic) {
    EnsembleSpec rspec = spec;
    rspec.checkpoints = {*target.reference_steps};
    rspec.stream_offset = std::uint64_t{1} << 32;
    const EnsembleResult rens = run_ensemble(m, sched, rspec, opt.n_threads);
    refnd = rens.marginals[0];
    if (m.d == 1) {
      ref1d.reserve(rspec.n_paths);
      for (Eigen::Index i = 0; i < refnd.rows(); ++i)
        if (std::isfinite(refnd(i, 0))) ref1d.push_back(refnd(i, 0));
    }
    res.dropped_paths += rens.dropped;
  }

  auto distance_at = [&](const Mat& marg) -> DistanceReport {
    if (m.d == 1) {
      std::vector<double> xs;
      xs.reserve(marg.rows());
      for (Eigen::Index i = 0; i < marg.rows(); ++i)
        if (std::isfinite(marg(i, 0))) xs.push_back(marg(i, 0));
      switch (opt.estimator) {
        case DistanceEstimator::w1_exact_1d:
          return analytic ? w1_exact_1d(xs, {}, *target.analytic) : w1_exact_1d(xs, ref1d);
        case DistanceEstimator::tv_histogram: {
          HistogramSpec hs;
          hs.bins = opt.hist_bins;
          return analytic ? tv_histogram_vs_analytic(xs, *target.analytic, hs)
                          : tv_histogram(xs, ref1d, hs);
        }
        default:
          throw std::invalid_argument("long_run_rate_experiment: unsupported estimator for d=1");
      }
    }
    switch (opt.estimator) {
      case DistanceEstimator::w1_sliced:
        return w1_sliced(marg, refnd, opt.sliced_projections, opt.seed ^ 0x5deece66dull);
      case DistanceEstimator::tv_histogram: {
        HistogramSpec hs;
        hs.bins = opt.hist_bins;
        return tv_histogram_nd(marg, refnd, hs);
      }
      default:
        throw std::invalid_argument("long_run_rate_experiment: unsupported estimator for d>1");
    }
  };

  // burn-in: first checkpoint with Gamma_n >= t_burn, where by default t_burn
  // solves e^{-rho t} = gamma at the last checkpoint
  const double rho = m.constants.contraction_rho.value_or(1.0);
  const double gamma_min = sched.gamma(checkpoints.back());
  const double t_burn = opt.t_burn.value_or(std::log(1.0 / gamma_min) / rho);

  std::vector<std::pair<double, double>> fitted;
  res.burn_in_index = checkpoints.size();
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    LongRunPoint pt;
    pt.n = checkpoints[c];
    pt.gamma_n = sched.gamma(pt.n);
    DistanceReport rep = distance_at(ens.marginals[c]);
    if (res.target_approximate) rep.note += (rep.note.empty() ? "" : "; ") + std::string("target approximate");
    pt.value = rep.value;
    res.reports.push_back(std::move(rep));
    pt.fitted = sched.gamma_sum(pt.n) >= t_burn;
    if (pt.fitted && res.burn_in_index == checkpoints.size()) res.burn_in_index = c;
    if (pt.fitted && pt.value > 0.0) fitted.emplace_back(pt.gamma_n, pt.value);
    res.points.push_back(pt);
  }
  if (fitted.size() < 3)
    throw std::runtime_error(
        "long_run_rate_experiment: fewer than 3 checkpoints past burn-in; lower t_burn or "
        "extend checkpoints");
  res.fit = rate_fit(fitted);
  return res;
}

}  // namespace langstep
