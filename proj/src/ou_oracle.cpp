#include "langstep/ou_oracle.hpp"

#include "langstep/metrics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace langstep {

OuOracle::OuOracle(double alpha, double sigma, StepSchedule schedule, double v0)
    : alpha_(alpha), sigma_(sigma), schedule_(std::move(schedule)) {
  if (!(alpha > 0.0)) throw std::invalid_argument("OuOracle: alpha must be > 0");
  if (!(sigma > 0.0)) throw std::invalid_argument("OuOracle: sigma must be > 0");
  if (!(v0 >= 0.0)) throw std::invalid_argument("OuOracle: initial variance must be >= 0");
  const std::size_t h = schedule_.horizon();
  var_.resize(h + 1);
  var_[0] = v0;
  for (std::size_t n = 0; n < h; ++n) {
    const double g = schedule_.gamma(n + 1);
    const double c = 1.0 - alpha_ * g;
    var_[n + 1] = var_[n] * c * c + sigma_ * sigma_ * g;
  }
}

double OuOracle::invariant_variance() const { return sigma_ * sigma_ / (2.0 * alpha_); }

double OuOracle::variance_recursion(std::size_t n) const {
  if (n >= var_.size()) throw std::out_of_range("variance_recursion: beyond schedule horizon");
  return var_[n];
}

double OuOracle::exact_marginal_variance(double alpha, double sigma, double t) {
  if (!(alpha > 0.0) || !(sigma > 0.0))
    throw std::invalid_argument("exact_marginal_variance: alpha, sigma must be > 0");
  if (!(t >= 0.0)) throw std::invalid_argument("exact_marginal_variance: t must be >= 0");
  return sigma * sigma / (2.0 * alpha) * (-std::expm1(-2.0 * alpha * t));
}

double OuOracle::exact_w1_to_invariant(std::size_t n) const {
  const double mean_abs_z = std::sqrt(2.0 / std::numbers::pi);
  return std::fabs(std::sqrt(variance_recursion(n)) - std::sqrt(invariant_variance())) *
         mean_abs_z;
}

double OuOracle::tv_lower_bound_curve(std::size_t n) const {
  return devroye_lower_bound(variance_recursion(n), invariant_variance());
}

}  // namespace langstep
