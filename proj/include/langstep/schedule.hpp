#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace langstep {

enum class ScheduleKind { polynomial, explicit_table };

// Outcome of probing assumption (Gamma) over a finite horizon. The two limit
// properties cannot be decided from a finite table, in which case they are
// left unset and `note` says why.
struct GammaAssumptionReport {
  bool non_increasing = false;
  std::optional<bool> vanishing;  // gamma_n -> 0
  std::optional<bool> divergent;  // sum gamma_n = +inf
  std::string note;

  bool holds() const {
    return non_increasing && vanishing.value_or(false) && divergent.value_or(false);
  }
};

// Non-increasing positive step sequence (gamma_n)_{n>=1} with cached partial
// sums Gamma_n = gamma_1 + ... + gamma_n, Gamma_0 = 0.
//
// Immutable after construction; the Gamma cache is built eagerly up to the
// declared horizon so concurrent reads need no synchronization. Queries past
// the horizon throw std::out_of_range.
class StepSchedule {
 public:
  static constexpr std::size_t kDefaultHorizon = 100'000;

  // gamma_n = gamma1 / n^a, a >= 0. a = 0 gives constant steps (allowed; the
  // assumption checker reports the vanishing violation).
  static StepSchedule polynomial(double gamma1, double a,
                                 std::size_t horizon = kDefaultHorizon);

  // Explicit table of positive steps; rejects increasing entries.
  static StepSchedule explicit_table(std::vector<double> values);

  ScheduleKind kind() const { return kind_; }
  std::size_t horizon() const { return gamma_.size(); }

  // gamma_n, n >= 1 (step indexing starts at 1).
  double gamma(std::size_t n) const;

  // Gamma_n with Gamma_0 = 0; O(1) from the cache.
  double gamma_sum(std::size_t n) const;

  // N(t) = max{k >= 0 : Gamma_k <= t}, by binary search over the cache.
  std::size_t n_of_t(double t) const;

  // Index varpi = limsup (gamma_n - gamma_{n+1}) / gamma_{n+1}^2. Closed form
  // for polynomial schedules; for explicit tables a tail-maximum estimate
  // (a limsup is not computable from a finite table, see varpi_is_estimate).
  double varpi() const;
  bool varpi_is_estimate() const { return kind_ == ScheduleKind::explicit_table; }

  GammaAssumptionReport check_gamma_assumption(std::size_t horizon) const;

  // u_n = sum_{k<=n} gamma_k^2 exp(-rho (Gamma_n - Gamma_k)), evaluated by the
  // stable recursion u_{k+1} = u_k exp(-rho gamma_{k+1}) + gamma_{k+1}^2.
  double decay_sum(std::size_t n, double rho) const;
  // All of u_1..u_n in one O(n) pass (for boundedness sweeps).
  std::vector<double> decay_sums(std::size_t n, double rho) const;

  // Whether sum gamma_n^2 converges (decidable for polynomial kind only).
  std::optional<bool> square_summable() const;

  double gamma1() const { return gamma_[0]; }
  // Polynomial parameters; throw for explicit tables.
  double poly_gamma1() const;
  double poly_exponent() const;
  const std::vector<double>& table() const { return gamma_; }

 private:
  StepSchedule(ScheduleKind kind, std::vector<double> gamma, double g1, double a);

  ScheduleKind kind_;
  std::vector<double> gamma_;      // gamma_1..gamma_H
  std::vector<double> gamma_sum_;  // Gamma_0..Gamma_H
  double poly_gamma1_ = 0.0;
  double poly_a_ = 0.0;
};

}  // namespace langstep
