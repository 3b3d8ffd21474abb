#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "langstep/schedule.hpp"

namespace langstep {

// Closed-form laws of the alpha-confluent centered Ornstein-Uhlenbeck process
// dX = -alpha X dt + sigma dW and of its decreasing-step Euler chain. The
// chain marginal is exactly N(0, sigma_n^2) (Gaussian start), with
//
//   sigma_{n+1}^2 = sigma_n^2 (1 - alpha gamma_{n+1})^2 + sigma^2 gamma_{n+1}
//
// which this class evaluates by the recursion itself (the closed product-sum
// form cancels catastrophically). Default start sigma_0^2 = 0 (chain at the
// origin); a warm start passes its initial variance v0.
class OuOracle {
 public:
  OuOracle(double alpha, double sigma, StepSchedule schedule, double v0 = 0.0);

  double alpha() const { return alpha_; }
  double sigma() const { return sigma_; }
  double invariant_variance() const;  // sigma^2 / (2 alpha)
  const StepSchedule& schedule() const { return schedule_; }

  // sigma_n^2; memo built eagerly to the schedule horizon.
  double variance_recursion(std::size_t n) const;

  // Var(X_t) = (sigma^2 / 2 alpha)(1 - e^{-2 alpha t}).
  static double exact_marginal_variance(double alpha, double sigma, double t);

  // W1([Xbar_{Gamma_n}], nu) = |sigma_n - sigma/sqrt(2 alpha)| E|Z|.
  double exact_w1_to_invariant(std::size_t n) const;

  // (1/200) min(1, |1 - sigma_n^2 / (sigma^2/(2 alpha))|).
  double tv_lower_bound_curve(std::size_t n) const;

  // Whether sum gamma_n^2 < inf for the driving schedule (status recorded in
  // oracle dumps; the recursion itself holds regardless).
  std::optional<bool> square_summable() const { return schedule_.square_summable(); }

 private:
  double alpha_;
  double sigma_;
  StepSchedule schedule_;
  std::vector<double> var_;  // sigma_0^2 .. sigma_H^2
};

}  // namespace langstep
