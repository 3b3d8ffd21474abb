#include "langstep/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace langstep {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

StepSchedule::StepSchedule(ScheduleKind kind, std::vector<double> gamma, double g1,
                           double a)
    : kind_(kind), gamma_(std::move(gamma)), poly_gamma1_(g1), poly_a_(a) {
  if (gamma_.empty()) throw std::invalid_argument("StepSchedule: empty step table");
  gamma_sum_.resize(gamma_.size() + 1);
  gamma_sum_[0] = 0.0;
  // Plain sequential accumulation: the cache must satisfy
  // Gamma_n == Gamma_{n-1} + gamma_n as doubles, and n_of_t searches this
  // same array, so boundary cases like N(Gamma_n) = n are deterministic.
  for (std::size_t k = 0; k < gamma_.size(); ++k) {
    if (!(gamma_[k] > 0.0) || !std::isfinite(gamma_[k]))
      throw std::invalid_argument("StepSchedule: steps must be positive finite");
    if (k > 0 && gamma_[k] > gamma_[k - 1])
      throw std::invalid_argument("StepSchedule: steps must be non-increasing");
    gamma_sum_[k + 1] = gamma_sum_[k] + gamma_[k];
  }
}

StepSchedule StepSchedule::polynomial(double gamma1, double a, std::size_t horizon) {
  if (!(gamma1 > 0.0)) throw std::invalid_argument("polynomial schedule: gamma1 must be > 0");
  if (!(a >= 0.0)) throw std::invalid_argument("polynomial schedule: a must be >= 0");
  if (horizon == 0) throw std::invalid_argument("polynomial schedule: horizon must be >= 1");
  std::vector<double> g(horizon);
  for (std::size_t n = 1; n <= horizon; ++n)
    g[n - 1] = gamma1 / std::pow(static_cast<double>(n), a);
  return StepSchedule(ScheduleKind::polynomial, std::move(g), gamma1, a);
}

StepSchedule StepSchedule::explicit_table(std::vector<double> values) {
  return StepSchedule(ScheduleKind::explicit_table, std::move(values), 0.0, 0.0);
}

double StepSchedule::gamma(std::size_t n) const {
  if (n == 0) throw std::invalid_argument("gamma: step indexing starts at 1");
  if (n > gamma_.size()) throw std::out_of_range("gamma: beyond schedule horizon");
  return gamma_[n - 1];
}

double StepSchedule::gamma_sum(std::size_t n) const {
  if (n >= gamma_sum_.size()) throw std::out_of_range("gamma_sum: beyond schedule horizon");
  return gamma_sum_[n];
}

std::size_t StepSchedule::n_of_t(double t) const {
  if (!(t >= 0.0)) throw std::invalid_argument("n_of_t: t must be >= 0");
  if (t > gamma_sum_.back())
    throw std::out_of_range("n_of_t: t beyond cached Gamma horizon");
  // max{k : Gamma_k <= t}; Gamma is strictly increasing.
  auto it = std::upper_bound(gamma_sum_.begin(), gamma_sum_.end(), t);
  return static_cast<std::size_t>(it - gamma_sum_.begin()) - 1;
}

double StepSchedule::varpi() const {
  if (kind_ == ScheduleKind::polynomial) {
    if (poly_a_ == 0.0) return 0.0;
    if (poly_a_ < 1.0) return 0.0;
    if (poly_a_ == 1.0) return 1.0 / poly_gamma1_;
    return kInf;
  }
  // Tail-maximum estimate over the second half of the table.
  const std::size_t m = gamma_.size();
  if (m < 2) return 0.0;
  double est = 0.0;
  for (std::size_t k = std::max<std::size_t>(1, m / 2); k < m; ++k) {
    const double num = gamma_[k - 1] - gamma_[k];
    est = std::max(est, num / (gamma_[k] * gamma_[k]));
  }
  return est;
}

GammaAssumptionReport StepSchedule::check_gamma_assumption(std::size_t horizon) const {
  if (horizon == 0) throw std::invalid_argument("check_gamma_assumption: horizon must be >= 1");
  GammaAssumptionReport rep;
  const std::size_t m = std::min(horizon, gamma_.size());
  rep.non_increasing = true;
  for (std::size_t k = 1; k < m; ++k)
    if (gamma_[k] > gamma_[k - 1]) rep.non_increasing = false;
  if (kind_ == ScheduleKind::polynomial) {
    rep.vanishing = poly_a_ > 0.0;
    rep.divergent = poly_a_ <= 1.0;  // p-series
    if (poly_a_ == 0.0) rep.note = "constant steps: gamma_n does not vanish";
  } else {
    rep.note = "explicit table: limit properties inconclusive over a finite horizon";
  }
  return rep;
}

// The recursion contracts past errors by exp(-rho gamma_{k+1}) but injects
// fresh rounding every step, amplifying to ~eps/(rho gamma_n) in double.
// Extended-precision accumulation keeps the result within a few ulps of the
// exact reduction of the cached (gamma, Gamma) values.
double StepSchedule::decay_sum(std::size_t n, double rho) const {
  if (n == 0) throw std::invalid_argument("decay_sum: n must be >= 1");
  if (!(rho > 0.0)) throw std::invalid_argument("decay_sum: rho must be > 0");
  if (n > gamma_.size()) throw std::out_of_range("decay_sum: beyond schedule horizon");
  long double u = static_cast<long double>(gamma_[0]) * gamma_[0];
  for (std::size_t k = 1; k < n; ++k) {
    const long double g = gamma_[k];
    u = u * std::exp(-static_cast<long double>(rho) * g) + g * g;
  }
  return static_cast<double>(u);
}

std::vector<double> StepSchedule::decay_sums(std::size_t n, double rho) const {
  if (n == 0) throw std::invalid_argument("decay_sums: n must be >= 1");
  if (!(rho > 0.0)) throw std::invalid_argument("decay_sums: rho must be > 0");
  if (n > gamma_.size()) throw std::out_of_range("decay_sums: beyond schedule horizon");
  std::vector<double> out(n);
  long double u = static_cast<long double>(gamma_[0]) * gamma_[0];
  out[0] = static_cast<double>(u);
  for (std::size_t k = 1; k < n; ++k) {
    const long double g = gamma_[k];
    u = u * std::exp(-static_cast<long double>(rho) * g) + g * g;
    out[k] = static_cast<double>(u);
  }
  return out;
}

std::optional<bool> StepSchedule::square_summable() const {
  if (kind_ == ScheduleKind::polynomial) return poly_a_ > 0.5;
  return std::nullopt;
}

double StepSchedule::poly_gamma1() const {
  if (kind_ != ScheduleKind::polynomial)
    throw std::logic_error("poly_gamma1: not a polynomial schedule");
  return poly_gamma1_;
}

double StepSchedule::poly_exponent() const {
  if (kind_ != ScheduleKind::polynomial)
    throw std::logic_error("poly_exponent: not a polynomial schedule");
  return poly_a_;
}

}  // namespace langstep
