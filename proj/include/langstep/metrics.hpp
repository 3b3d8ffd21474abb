#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "langstep/dist.hpp"
#include "langstep/model.hpp"
#include "langstep/scheme.hpp"

namespace langstep {

enum class DistanceEstimator { w1_exact_1d, w1_sliced, tv_histogram, tv_quadrature };
std::string estimator_name(DistanceEstimator e);

// All TV values use the paper's total-mass-2 convention (test functions with
// sup norm <= 1), so tv values live in [0, 2]; every report says so in note.
struct DistanceReport {
  double value = 0.0;
  DistanceEstimator estimator = DistanceEstimator::w1_exact_1d;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  std::size_t bins = 0;         // tv_histogram
  std::size_t projections = 0;  // w1_sliced
  std::string note;
};

// Exact 1D W1 between weighted samples: the quantile coupling
// int_0^1 |F_A^{-1}(u) - F_B^{-1}(u)| du via a merged-breakpoint sweep.
// Weights are positive and normalized internally.
DistanceReport w1_exact_1d(std::span<const double> xa, std::span<const double> wa,
                           std::span<const double> xb, std::span<const double> wb);
// Equal-weight convenience.
DistanceReport w1_exact_1d(std::span<const double> xa, std::span<const double> xb);
// Empirical vs analytic side: quantile integrals in closed form when the
// distribution carries an antiderivative, by adaptive quadrature otherwise.
DistanceReport w1_exact_1d(std::span<const double> xa, std::span<const double> wa,
                           const AnalyticDist1d& b);

// Average of w1_exact_1d over unit directions drawn uniformly on the sphere
// (seeded). A practical surrogate for d >= 2, reported as "sliced" -- it does
// not estimate W1 itself.
DistanceReport w1_sliced(const Mat& a, const Mat& b, std::size_t n_projections,
                         std::uint64_t seed);

struct HistogramSpec {
  std::size_t bins = 0;  // 0: ceil(min(N_A, N_B)^{1/3}) per axis
  // default range: pooled [q_0.001, q_0.999] extended by 10%; mass outside
  // goes to two overflow bins per axis
  std::optional<std::pair<double, double>> range;
};

// sum_i |p_i - q_i| over shared bins of the normalized histograms (in [0,2]).
DistanceReport tv_histogram(std::span<const double> a, std::span<const double> b,
                            HistogramSpec spec = {});
// Product-binned low-dimensional variant (d <= 3).
DistanceReport tv_histogram_nd(const Mat& a, const Mat& b, HistogramSpec spec = {});
// Sample histogram against exact bin probabilities of an analytic law
// (halves the estimator noise relative to sample-vs-sample).
DistanceReport tv_histogram_vs_analytic(std::span<const double> a, const AnalyticDist1d& b,
                                        HistogramSpec spec = {});

// int |phi_{0,s1} - phi_{0,s2}| dx by adaptive quadrature (abs tol 1e-8),
// pieces split at the analytic density crossings; range [0,2].
double tv_gaussian_1d(double s1, double s2);
// Same value wrapped as a report under the tv_quadrature tag.
DistanceReport tv_quadrature_gaussian(double s1, double s2);

// One JSON row {"estimator":..., "value":..., meta...} for appending to an
// experiment's results.
std::string distance_report_json(const DistanceReport& rep);

// (1/200) min(1, |1 - var_n/var_inf|): the two-centered-Gaussian TV lower
// bound, mass-2 convention.
double devroye_lower_bound(double var_n, double var_inf);

// Adaptive Simpson quadrature to absolute tolerance.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol, int max_depth = 48);

// Cross-path averages of V^a over ensemble checkpoints; a checkpoint is
// flagged when any tracked exponent exceeds threshold_k * V^a(x0).
struct MomentTrackReport {
  std::vector<std::size_t> checkpoints;
  std::vector<double> exponents;
  std::vector<std::vector<double>> averages;  // [exponent][checkpoint]
  std::vector<bool> flagged;                  // per checkpoint
  double threshold_k = 1e3;
};

MomentTrackReport moment_track(const DiffusionModel& m, const EnsembleResult& ens,
                               std::span<const double> exponents, const Vec& x0,
                               double threshold_k = 1e3);

}  // namespace langstep
