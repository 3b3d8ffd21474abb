#include "langstep/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "langstep/noise.hpp"

namespace langstep {

std::string estimator_name(DistanceEstimator e) {
  switch (e) {
    case DistanceEstimator::w1_exact_1d: return "w1_exact_1d";
    case DistanceEstimator::w1_sliced: return "w1_sliced";
    case DistanceEstimator::tv_histogram: return "tv_histogram";
    case DistanceEstimator::tv_quadrature: return "tv_quadrature";
  }
  return "unknown";
}

namespace {

constexpr const char* kTvNote = "mass-2 convention, value in [0,2]";

// Sorted atoms with normalized cumulative levels; cum.back() forced to 1.
struct SortedAtoms {
  std::vector<double> x;
  std::vector<double> cum;
};

SortedAtoms sort_and_normalize(std::span<const double> xs, std::span<const double> ws) {
  if (xs.empty()) throw std::invalid_argument("w1_exact_1d: empty sample set");
  if (!ws.empty() && ws.size() != xs.size())
    throw std::invalid_argument("w1_exact_1d: weight/sample size mismatch");
  std::vector<std::size_t> idx(xs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return xs[i] < xs[j]; });
  SortedAtoms out;
  out.x.resize(xs.size());
  out.cum.resize(xs.size());
  double total = 0.0;
  if (ws.empty()) {
    total = static_cast<double>(xs.size());
  } else {
    for (double w : ws) {
      if (!(w > 0.0)) throw std::invalid_argument("w1_exact_1d: weights must be positive");
      total += w;
    }
  }
  double run = 0.0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out.x[k] = xs[idx[k]];
    run += ws.empty() ? 1.0 : ws[idx[k]];
    out.cum[k] = run / total;
  }
  out.cum.back() = 1.0;
  return out;
}

}  // namespace

DistanceReport w1_exact_1d(std::span<const double> xa, std::span<const double> wa,
                           std::span<const double> xb, std::span<const double> wb) {
  const SortedAtoms a = sort_and_normalize(xa, wa);
  const SortedAtoms b = sort_and_normalize(xb, wb);
  // merged sweep over quantile levels
  double value = 0.0;
  double u = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.x.size() && j < b.x.size()) {
    const double next = std::min(a.cum[i], b.cum[j]);
    value += std::fabs(a.x[i] - b.x[j]) * (next - u);
    u = next;
    if (a.cum[i] <= next) ++i;
    if (b.cum[j] <= next) ++j;
  }
  DistanceReport rep;
  rep.value = value;
  rep.estimator = DistanceEstimator::w1_exact_1d;
  rep.n_a = xa.size();
  rep.n_b = xb.size();
  return rep;
}

DistanceReport w1_exact_1d(std::span<const double> xa, std::span<const double> xb) {
  return w1_exact_1d(xa, {}, xb, {});
}

DistanceReport w1_exact_1d(std::span<const double> xa, std::span<const double> wa,
                           const AnalyticDist1d& dist) {
  if (!dist.cdf || !dist.quantile)
    throw std::invalid_argument("w1_exact_1d: analytic side needs cdf and quantile");
  const SortedAtoms a = sort_and_normalize(xa, wa);
  // Quantile integral per piece, clamped away from the endpoint singularities
  // (mass below 1e-14 contributes negligibly for finite-mean laws).
  constexpr double kEdge = 1e-14;
  auto antider = [&](double lo, double hi) {
    if (hi <= lo) return 0.0;
    if (dist.quantile_antiderivative)
      return dist.quantile_antiderivative(hi) - dist.quantile_antiderivative(lo);
    const double clo = std::max(lo, kEdge), chi = std::min(hi, 1.0 - kEdge);
    if (chi <= clo) return 0.0;
    return adaptive_simpson(dist.quantile, clo, chi, 1e-12 + 1e-10 * (chi - clo));
  };
  double value = 0.0;
  double lo = 0.0;
  for (std::size_t k = 0; k < a.x.size(); ++k) {
    const double hi = a.cum[k];
    const double xs = a.x[k];
    const double ustar = std::clamp(dist.cdf(xs), lo, hi);
    // q <= x_k left of ustar and >= x_k right of it
    const double left = xs * (ustar - lo) - antider(lo, ustar);
    const double right = antider(ustar, hi) - xs * (hi - ustar);
    value += std::max(left, 0.0) + std::max(right, 0.0);
    lo = hi;
  }
  DistanceReport rep;
  rep.value = value;
  rep.estimator = DistanceEstimator::w1_exact_1d;
  rep.n_a = xa.size();
  rep.note = "vs analytic law";
  return rep;
}

DistanceReport w1_sliced(const Mat& a, const Mat& b, std::size_t n_projections,
                         std::uint64_t seed) {
  if (a.rows() == 0 || b.rows() == 0) throw std::invalid_argument("w1_sliced: empty samples");
  if (a.cols() != b.cols()) throw std::invalid_argument("w1_sliced: dimension mismatch");
  if (n_projections == 0) throw std::invalid_argument("w1_sliced: need >= 1 projection");
  const int d = static_cast<int>(a.cols());
  NoiseSource src(seed, 0);
  std::uint64_t ctr = 0;
  Vec dir(d);
  std::vector<double> pa(a.rows()), pb(b.rows());
  double sum = 0.0;
  for (std::size_t p = 0; p < n_projections; ++p) {
    double nrm = 0.0;
    do {
      for (int k = 0; k < d; ++k) dir(k) = src.normal(ctr++);
      nrm = dir.norm();
    } while (nrm == 0.0);
    dir /= nrm;
    Eigen::Map<Vec>(pa.data(), a.rows()) = a * dir;
    Eigen::Map<Vec>(pb.data(), b.rows()) = b * dir;
    sum += w1_exact_1d(pa, pb).value;
  }
  DistanceReport rep;
  rep.value = sum / static_cast<double>(n_projections);
  rep.estimator = DistanceEstimator::w1_sliced;
  rep.n_a = a.rows();
  rep.n_b = b.rows();
  rep.projections = n_projections;
  rep.note = "sliced surrogate, not an estimate of W1 itself";
  return rep;
}

namespace {

std::size_t auto_bins(std::size_t na, std::size_t nb) {
  return static_cast<std::size_t>(
      std::ceil(std::cbrt(static_cast<double>(std::min(na, nb)))));
}

std::pair<double, double> default_range(std::vector<double> pooled) {
  std::sort(pooled.begin(), pooled.end());
  auto quant = [&](double q) {
    const double pos = q * static_cast<double>(pooled.size() - 1);
    const std::size_t i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    return i + 1 < pooled.size() ? pooled[i] * (1.0 - frac) + pooled[i + 1] * frac
                                 : pooled[i];
  };
  double lo = quant(0.001), hi = quant(0.999);
  const double ext = 0.1 * (hi - lo);
  lo -= ext;
  hi += ext;
  if (!(hi > lo)) hi = lo + 1.0;  // degenerate sample
  return {lo, hi};
}

// counts[0] underflow, counts[1..bins] interior, counts[bins+1] overflow
std::vector<double> bin_fractions(std::span<const double> xs, double lo, double hi,
                                  std::size_t bins) {
  std::vector<double> counts(bins + 2, 0.0);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (double x : xs) {
    if (x < lo)
      counts[0] += 1.0;
    else if (x >= hi)
      counts[bins + 1] += 1.0;
    else {
      std::size_t i = static_cast<std::size_t>((x - lo) / width);
      if (i >= bins) i = bins - 1;
      counts[i + 1] += 1.0;
    }
  }
  for (double& c : counts) c /= static_cast<double>(xs.size());
  return counts;
}

}  // namespace

DistanceReport tv_histogram(std::span<const double> a, std::span<const double> b,
                            HistogramSpec spec) {
  if (a.empty() || b.empty()) throw std::invalid_argument("tv_histogram: empty samples");
  const std::size_t bins = spec.bins ? spec.bins : auto_bins(a.size(), b.size());
  if (bins < 2) throw std::invalid_argument("tv_histogram: need >= 2 bins");
  auto [lo, hi] = spec.range ? *spec.range : [&] {
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    return default_range(std::move(pooled));
  }();
  const auto pa = bin_fractions(a, lo, hi, bins);
  const auto pb = bin_fractions(b, lo, hi, bins);
  double value = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) value += std::fabs(pa[i] - pb[i]);
  DistanceReport rep;
  rep.value = value;
  rep.estimator = DistanceEstimator::tv_histogram;
  rep.n_a = a.size();
  rep.n_b = b.size();
  rep.bins = bins;
  rep.note = kTvNote;
  return rep;
}

DistanceReport tv_histogram_vs_analytic(std::span<const double> a, const AnalyticDist1d& dist,
                                        HistogramSpec spec) {
  if (a.empty()) throw std::invalid_argument("tv_histogram_vs_analytic: empty sample");
  if (!dist.cdf) throw std::invalid_argument("tv_histogram_vs_analytic: analytic cdf missing");
  const std::size_t bins = spec.bins ? spec.bins : auto_bins(a.size(), a.size());
  if (bins < 2) throw std::invalid_argument("tv_histogram_vs_analytic: need >= 2 bins");
  auto [lo, hi] = spec.range ? *spec.range
                             : default_range(std::vector<double>(a.begin(), a.end()));
  const auto pa = bin_fractions(a, lo, hi, bins);
  const double width = (hi - lo) / static_cast<double>(bins);
  double value = std::fabs(pa[0] - dist.cdf(lo));
  for (std::size_t i = 0; i < bins; ++i) {
    const double q = dist.cdf(lo + width * static_cast<double>(i + 1)) -
                     dist.cdf(lo + width * static_cast<double>(i));
    value += std::fabs(pa[i + 1] - q);
  }
  value += std::fabs(pa[bins + 1] - (1.0 - dist.cdf(hi)));
  DistanceReport rep;
  rep.value = value;
  rep.estimator = DistanceEstimator::tv_histogram;
  rep.n_a = a.size();
  rep.bins = bins;
  rep.note = std::string(kTvNote) + "; vs analytic bin probabilities";
  return rep;
}

DistanceReport tv_histogram_nd(const Mat& a, const Mat& b, HistogramSpec spec) {
  if (a.rows() == 0 || b.rows() == 0) throw std::invalid_argument("tv_histogram_nd: empty samples");
  if (a.cols() != b.cols()) throw std::invalid_argument("tv_histogram_nd: dimension mismatch");
  const int d = static_cast<int>(a.cols());
  if (d > 3) throw std::invalid_argument("tv_histogram_nd: product binning supported for d <= 3");
  const std::size_t bins =
      spec.bins ? spec.bins : auto_bins(static_cast<std::size_t>(a.rows()),
                                        static_cast<std::size_t>(b.rows()));
  if (bins < 2) throw std::invalid_argument("tv_histogram_nd: need >= 2 bins");
  std::vector<double> lo(d), width(d);
  for (int k = 0; k < d; ++k) {
    std::vector<double> pooled;
    pooled.reserve(a.rows() + b.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i) pooled.push_back(a(i, k));
    for (Eigen::Index i = 0; i < b.rows(); ++i) pooled.push_back(b(i, k));
    auto [l, h] = spec.range ? *spec.range : default_range(std::move(pooled));
    lo[k] = l;
    width[k] = (h - l) / static_cast<double>(bins);
  }
  const std::size_t cells_per_axis = bins + 2;
  std::size_t total_cells = 1;
  for (int k = 0; k < d; ++k) total_cells *= cells_per_axis;
  std::vector<double> pa(total_cells, 0.0), pb(total_cells, 0.0);
  auto fill = [&](const Mat& m, std::vector<double>& p) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      std::size_t flat = 0;
      for (int k = 0; k < d; ++k) {
        const double x = m(i, k);
        std::size_t idx;
        if (x < lo[k])
          idx = 0;
        else {
          const std::size_t j = static_cast<std::size_t>((x - lo[k]) / width[k]);
          idx = j >= bins ? bins + 1 : j + 1;
        }
        flat = flat * cells_per_axis + idx;
      }
      p[flat] += 1.0;
    }
    for (double& c : p) c /= static_cast<double>(m.rows());
  };
  fill(a, pa);
  fill(b, pb);
  double value = 0.0;
  for (std::size_t i = 0; i < total_cells; ++i) value += std::fabs(pa[i] - pb[i]);
  DistanceReport rep;
  rep.value = value;
  rep.estimator = DistanceEstimator::tv_histogram;
  rep.n_a = a.rows();
  rep.n_b = b.rows();
  rep.bins = bins;
  rep.note = kTvNote;
  return rep;
}

namespace {

double simpson_rule(double a, double fa, double b, double fb, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double fa,
                            double b, double fb, double m, double fm, double whole,
                            double tol, int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson_rule(a, fa, m, fm, flm);
  const double right = simpson_rule(m, fm, b, fb, frm);
  const double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol, int max_depth) {
  if (b <= a) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fb = f(b), fm = f(m);
  const double whole = simpson_rule(a, fa, b, fb, fm);
  return adaptive_simpson_rec(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

double tv_gaussian_1d(double s1, double s2) {
  if (!(s1 > 0.0) || !(s2 > 0.0))
    throw std::invalid_argument("tv_gaussian_1d: scales must be positive");
  if (s1 == s2) return 0.0;
  const double a = std::min(s1, s2), b = std::max(s1, s2);
  // density crossing: x_c^2 = 2 log(b/a) a^2 b^2 / (b^2 - a^2)
  const double xc =
      std::sqrt(2.0 * std::log(b / a) * a * a * b * b / (b * b - a * a));
  const double L = 40.0 * b;
  auto f = [&](double x) {
    return std::fabs(gaussian_pdf(x, 0.0, s1) - gaussian_pdf(x, 0.0, s2));
  };
  // Even integrand, split at the crossing (the only kink). Panels grow
  // geometrically from both density scales so widely separated scales
  // (s2/s1 up to ~1e6) cannot slip between the quadrature's initial probes.
  std::vector<double> edges{0.0};
  for (double e = 0.25 * a; e < xc; e *= 2.0) edges.push_back(e);
  edges.push_back(xc);
  for (double e = 0.25 * b; e < L; e *= 2.0)
    if (e > xc) edges.push_back(e);
  edges.push_back(L);
  std::sort(edges.begin(), edges.end());
  const double tol = 1e-8 / (2.0 * static_cast<double>(edges.size()));
  double half = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i)
    half += adaptive_simpson(f, edges[i], edges[i + 1], tol);
  return 2.0 * half;
}

DistanceReport tv_quadrature_gaussian(double s1, double s2) {
  DistanceReport rep;
  rep.value = tv_gaussian_1d(s1, s2);
  rep.estimator = DistanceEstimator::tv_quadrature;
  rep.note = kTvNote;
  return rep;
}

std::string distance_report_json(const DistanceReport& rep) {
  std::string out = "{\"estimator\":\"" + estimator_name(rep.estimator) + "\"";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", rep.value);
  out += ",\"value\":" + std::string(buf);
  if (rep.n_a) out += ",\"n_a\":" + std::to_string(rep.n_a);
  if (rep.n_b) out += ",\"n_b\":" + std::to_string(rep.n_b);
  if (rep.bins) out += ",\"bins\":" + std::to_string(rep.bins);
  if (rep.projections) out += ",\"projections\":" + std::to_string(rep.projections);
  if (!rep.note.empty()) out += ",\"note\":\"" + rep.note + "\"";
  out += "}";
  return out;
}

double devroye_lower_bound(double var_n, double var_inf) {
  if (!(var_inf > 0.0)) throw std::invalid_argument("devroye_lower_bound: var_inf must be > 0");
  if (!(var_n >= 0.0)) throw std::invalid_argument("devroye_lower_bound: var_n must be >= 0");
  return std::min(1.0, std::fabs(1.0 - var_n / var_inf)) / 200.0;
}

MomentTrackReport moment_track(const DiffusionModel& m, const EnsembleResult& ens,
                               std::span<const double> exponents, const Vec& x0,
                               double threshold_k) {
  if (!m.has_lyapunov()) throw std::invalid_argument("moment_track: model has no Lyapunov function");
  if (exponents.empty()) throw std::invalid_argument("moment_track: no exponents");
  MomentTrackReport rep;
  rep.checkpoints = ens.checkpoints;
  rep.exponents.assign(exponents.begin(), exponents.end());
  rep.threshold_k = threshold_k;
  rep.averages.assign(exponents.size(), std::vector<double>(ens.checkpoints.size(), 0.0));
  rep.flagged.assign(ens.checkpoints.size(), false);
  const double v0 = m.lyapunov(x0);
  Vec x(m.d);
  for (std::size_t c = 0; c < ens.checkpoints.size(); ++c) {
    const Mat& marg = ens.marginals[c];
    std::vector<double> sums(exponents.size(), 0.0);
    std::size_t kept = 0;
    for (Eigen::Index i = 0; i < marg.rows(); ++i) {
      if (!marg.row(i).allFinite()) continue;  // dropped path
      ++kept;
      x = marg.row(i).transpose();
      const double v = m.lyapunov(x);
      for (std::size_t e = 0; e < exponents.size(); ++e)
        sums[e] += std::pow(v, exponents[e]);
    }
    if (kept == 0) throw std::runtime_error("moment_track: all paths dropped at a checkpoint");
    for (std::size_t e = 0; e < exponents.size(); ++e) {
      rep.averages[e][c] = sums[e] / static_cast<double>(kept);
      if (rep.averages[e][c] > threshold_k * std::pow(v0, exponents[e]))
        rep.flagged[c] = true;
    }
  }
  return rep;
}

}  // namespace langstep
