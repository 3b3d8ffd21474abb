#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "langstep/metrics.hpp"
#include "langstep/ou_oracle.hpp"
#include "langstep/schedule.hpp"

using langstep::devroye_lower_bound;
using langstep::OuOracle;
using langstep::StepSchedule;

TEST_CASE("variance recursion: start, one step, constant-step fixed point") {
  const double sqrt2 = std::sqrt(2.0);
  OuOracle o(1.0, sqrt2, StepSchedule::polynomial(0.1, 0.0, 4000));
  CHECK(o.variance_recursion(0) == 0.0);
  CHECK(o.variance_recursion(1) == doctest::Approx(0.2).epsilon(1e-15));
  // constant step: fixed point sigma^2 gamma / (1 - (1 - alpha gamma)^2)
  CHECK(o.variance_recursion(4000) == doctest::Approx(1.0526315789473684).epsilon(1e-9));
}

TEST_CASE("exact marginal variance") {
  const double sqrt2 = std::sqrt(2.0);
  CHECK(OuOracle::exact_marginal_variance(1.0, sqrt2, 0.0) == 0.0);
  CHECK(OuOracle::exact_marginal_variance(1.0, sqrt2, 1.0) ==
        doctest::Approx(0.8646647167633873).epsilon(1e-14));
  CHECK(OuOracle::exact_marginal_variance(1.0, sqrt2, 50.0) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("exact W1 to invariant") {
  const double sqrt2 = std::sqrt(2.0);
  OuOracle o(1.0, sqrt2, StepSchedule::polynomial(0.1, 1.0, 10));
  CHECK(o.exact_w1_to_invariant(1) == doctest::Approx(0.4410597375723112).epsilon(1e-13));
}

TEST_CASE("TV lower bound curve") {
  const double sqrt2 = std::sqrt(2.0);
  OuOracle o(1.0, sqrt2, StepSchedule::polynomial(0.5, 0.9, 100000));
  CHECK(o.tv_lower_bound_curve(0) == doctest::Approx(1.0 / 200.0).epsilon(1e-15));
  CHECK(o.tv_lower_bound_curve(100000) < 1e-6);  // sigma_n^2 -> sigma^2/(2 alpha)
}

TEST_CASE("devroye lower bound arithmetic") {
  CHECK(devroye_lower_bound(1.0, 1.0) == 0.0);
  CHECK(devroye_lower_bound(0.0, 1.0) == doctest::Approx(0.005).epsilon(1e-15));
  CHECK(devroye_lower_bound(1.1, 1.0) == doctest::Approx(0.0005).epsilon(1e-12));
  CHECK_THROWS(devroye_lower_bound(1.0, 0.0));
}

TEST_CASE("variance recursion: rises from 0, settles above the invariant variance") {
  // The recursion chases the moving fixed point sigma^2 g / (1 - (1 - a g)^2),
  // which sits above sigma^2/(2 alpha); so sigma_n^2 climbs from 0, crosses
  // the invariant variance once, and decays back toward it from above.
  const double sqrt2 = std::sqrt(2.0);
  OuOracle o(1.0, sqrt2, StepSchedule::polynomial(0.5, 0.9, 100000));
  const double vinf = o.invariant_variance();
  bool crossed = false;
  double prev = 0.0;
  for (std::size_t n = 1; n <= 100000; ++n) {
    const double v = o.variance_recursion(n);
    if (!crossed) {
      REQUIRE(v >= prev);  // monotone below the invariant variance
      if (v >= vinf) crossed = true;
    } else if (n > 100) {
      REQUIRE(v >= vinf);  // excess stays positive past the transient
      REQUIRE(v <= prev);  // and shrinks with gamma_n
    }
    prev = v;
  }
  CHECK(crossed);
  CHECK(o.variance_recursion(100000) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("w1/gamma_n and tv_bound/gamma_n sit in fixed brackets (a = 0.9 sweep)") {
  const double sqrt2 = std::sqrt(2.0);
  auto sched = StepSchedule::polynomial(0.5, 0.9, 100000);
  OuOracle o(1.0, sqrt2, sched);
  double lo_w = 1e300, hi_w = 0.0, lo_tv = 1e300, hi_tv = 0.0;
  for (std::size_t n = 1000; n <= 100000; n += 111) {
    const double g = sched.gamma(n);
    const double rw = o.exact_w1_to_invariant(n) / g;
    const double rtv = o.tv_lower_bound_curve(n) / g;
    lo_w = std::min(lo_w, rw);
    hi_w = std::max(hi_w, rw);
    lo_tv = std::min(lo_tv, rtv);
    hi_tv = std::max(hi_tv, rtv);
  }
  CHECK(lo_w > 0.0);
  CHECK(hi_w / lo_w < 5.0);
  CHECK(lo_tv > 0.0);
  CHECK(hi_tv / lo_tv < 5.0);
}

TEST_CASE("warm start: recursion accepts an initial variance") {
  const double sqrt2 = std::sqrt(2.0);
  OuOracle o(1.0, sqrt2, StepSchedule::polynomial(0.1, 0.9, 10), 1.0);
  CHECK(o.variance_recursion(0) == 1.0);
  CHECK(o.variance_recursion(1) == doctest::Approx(1.0 * 0.9 * 0.9 + 0.2).epsilon(1e-15));
}

TEST_CASE("square summability recorded") {
  const double sqrt2 = std::sqrt(2.0);
  OuOracle o(1.0, sqrt2, StepSchedule::polynomial(0.5, 0.9, 10));
  CHECK(o.square_summable().value());
}
