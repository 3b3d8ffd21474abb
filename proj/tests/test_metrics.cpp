#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "langstep/dist.hpp"
#include "langstep/metrics.hpp"
#include "langstep/model.hpp"
#include "langstep/noise.hpp"
#include "langstep/scheme.hpp"
#include "oracles.hpp"

using namespace langstep;

namespace {

// stratified sample of an analytic law (near-noiseless empirical stand-in)
std::vector<double> stratified(const AnalyticDist1d& d, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = d.quantile((static_cast<double>(i) + 0.5) / static_cast<double>(n));
  return out;
}

std::vector<double> gaussian_sample(double mu, double sigma, std::size_t n,
                                    std::uint64_t seed, std::uint64_t stream) {
  NoiseSource src(seed, stream);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = mu + sigma * src.normal(i);
  return out;
}

}  // namespace

TEST_CASE("w1 exact 1d: identical inputs and point masses") {
  std::vector<double> a{0.3, -1.0, 2.0}, w{0.2, 0.5, 0.3};
  CHECK(w1_exact_1d(a, w, a, w).value == 0.0);
  std::vector<double> d0{0.0}, d1{1.0};
  CHECK(w1_exact_1d(d0, d1).value == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(w1_exact_1d(std::vector<double>{}, d1), std::invalid_argument);
}

TEST_CASE("w1 exact 1d agrees with the transport LP on random atom pairs") {
  NoiseSource rng(606, 0);
  for (int rep = 0; rep < 25; ++rep) {
    const std::size_t na = 2 + static_cast<std::size_t>(rng.next_normal() * rng.next_normal() * 2) % 7;
    const std::size_t nb = 2 + static_cast<std::size_t>(std::fabs(rng.next_normal()) * 3) % 7;
    std::vector<double> xa(na), wa(na), xb(nb), wb(nb);
    for (auto& v : xa) v = 2.0 * rng.next_normal();
    for (auto& v : xb) v = 2.0 * rng.next_normal();
    for (auto& v : wa) v = 0.1 + std::fabs(rng.next_normal());
    for (auto& v : wb) v = 0.1 + std::fabs(rng.next_normal());
    const double lp = oracles::transport_lp_w1(xa, wa, xb, wb);
    const double sweep = w1_exact_1d(xa, wa, xb, wb).value;
    CHECK(std::fabs(lp - sweep) <= 1e-10);
  }
}

TEST_CASE("w1 exact 1d is a metric on small samples") {
  NoiseSource rng(607, 0);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> a(4), b(4), c(4);
    for (auto& v : a) v = rng.next_normal();
    for (auto& v : b) v = rng.next_normal();
    for (auto& v : c) v = rng.next_normal();
    const double ab = w1_exact_1d(a, b).value;
    const double ba = w1_exact_1d(b, a).value;
    const double ac = w1_exact_1d(a, c).value;
    const double cb = w1_exact_1d(c, b).value;
    CHECK(ab == doctest::Approx(ba).epsilon(1e-13));
    CHECK(ab <= ac + cb + 1e-12);
  }
}

TEST_CASE("w1 empirical vs analytic gaussian: scale gap |s1-s2| sqrt(2/pi)") {
  const auto ref = gaussian_dist(0.0, 2.0);
  const auto sample = stratified(gaussian_dist(0.0, 1.0), 200000);
  const double expect = std::sqrt(2.0 / std::numbers::pi);  // |1-2| E|Z|
  CHECK(w1_exact_1d(sample, {}, ref).value == doctest::Approx(expect).epsilon(2e-3));
  // self-distance of a stratified sample is near zero
  const auto self_ref = gaussian_dist(0.0, 1.0);
  CHECK(w1_exact_1d(sample, {}, self_ref).value < 2e-4);
}

TEST_CASE("w1 vs analytic: closed-form antiderivative path matches quadrature path") {
  auto g = gaussian_dist(0.3, 1.4);
  auto g_quad = g;
  g_quad.quantile_antiderivative = nullptr;  // force adaptive quadrature
  const auto sample = gaussian_sample(0.0, 1.0, 2000, 17, 0);
  const double a = w1_exact_1d(sample, {}, g).value;
  const double b = w1_exact_1d(sample, {}, g_quad).value;
  CHECK(a == doctest::Approx(b).epsilon(1e-7));
}

TEST_CASE("w1 sliced: zero on equal inputs, point masses give 2/pi") {
  Mat a(3, 2);
  a << 0, 0, 1, 1, -1, 0.5;
  CHECK(w1_sliced(a, a, 37, 5).value == 0.0);

  Mat p(1, 2), q(1, 2);
  p << 0, 0;
  q << 1, 0;
  const auto rep = w1_sliced(p, q, 20000, 6);
  CHECK(rep.value == doctest::Approx(2.0 / std::numbers::pi).epsilon(0.02));
  CHECK(rep.projections == 20000);
}

TEST_CASE("w1 sliced: isotropic gaussians reduce to the 1d closed form") {
  const std::size_t n = 20000;
  Mat a(n, 2), b(n, 2);
  NoiseSource src(8, 0);
  std::uint64_t c = 0;
  for (std::size_t i = 0; i < n; ++i) {
    a(i, 0) = src.normal(c++);
    a(i, 1) = src.normal(c++);
    b(i, 0) = 2.0 * src.normal(c++);
    b(i, 1) = 2.0 * src.normal(c++);
  }
  const double expect = std::sqrt(2.0 / std::numbers::pi);
  CHECK(w1_sliced(a, b, 200, 7).value == doctest::Approx(expect).epsilon(0.05));
}

TEST_CASE("tv histogram: identical, disjoint, and hand-built cases") {
  std::vector<double> a{0.1, 0.2, 0.3, 0.4, 0.5};
  CHECK(tv_histogram(a, a).value == 0.0);

  std::vector<double> lo(100, 0.0), hi(100, 10.0);
  for (std::size_t i = 0; i < lo.size(); ++i) {
    lo[i] = static_cast<double>(i % 7) * 0.01;
    hi[i] = 10.0 + static_cast<double>(i % 5) * 0.01;
  }
  CHECK(tv_histogram(lo, hi).value == doctest::Approx(2.0).epsilon(1e-12));

  // 3 bins over [0,3): A has fractions (2/4, 1/4, 1/4), B has (0, 2/3, 1/3)
  std::vector<double> xa{0.5, 0.5, 1.5, 2.5}, xb{1.5, 1.5, 2.5};
  HistogramSpec spec;
  spec.bins = 3;
  spec.range = std::make_pair(0.0, 3.0);
  const double expect = std::fabs(0.5 - 0.0) + std::fabs(0.25 - 2.0 / 3.0) +
                        std::fabs(0.25 - 1.0 / 3.0);
  CHECK(tv_histogram(xa, xb, spec).value == doctest::Approx(expect).epsilon(1e-12));
  CHECK_THROWS_AS(tv_histogram(xa, xb, HistogramSpec{1, std::nullopt}), std::invalid_argument);
}

TEST_CASE("tv histogram noise floor: same-law samples stay below 0.05 at N=1e5") {
  const auto a = gaussian_sample(0.0, 1.0, 100000, 21, 0);
  const auto b = gaussian_sample(0.0, 1.0, 100000, 21, 1);
  const auto rep = tv_histogram(a, b);
  CHECK(rep.bins == 47);  // ceil(1e5^{1/3})
  CHECK(rep.value < 0.05);
  CHECK(rep.value > 0.0);
}

TEST_CASE("tv histogram vs analytic bin probabilities has a smaller floor") {
  const auto a = gaussian_sample(0.0, 1.0, 100000, 22, 0);
  const auto b = gaussian_sample(0.0, 1.0, 100000, 22, 1);
  const double two_sample = tv_histogram(a, b).value;
  const double vs_exact = tv_histogram_vs_analytic(a, gaussian_dist(0.0, 1.0)).value;
  CHECK(vs_exact < two_sample);
}

TEST_CASE("tv histogram nd: product binning in d=2") {
  const std::size_t n = 5000;
  Mat a(n, 2), b(n, 2);
  NoiseSource src(23, 0);
  std::uint64_t c = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (int k = 0; k < 2; ++k) {
      a(i, k) = src.normal(c++);
      b(i, k) = src.normal(c++);
    }
  const auto rep = tv_histogram_nd(a, b);
  CHECK(rep.value > 0.0);
  CHECK(rep.value < 0.5);  // same law, moderate sample
  CHECK(tv_histogram_nd(a, a).value == 0.0);
  Mat wide(2, 4);
  CHECK_THROWS_AS(tv_histogram_nd(wide, wide), std::invalid_argument);
}

TEST_CASE("tv gaussian 1d: frozen trapezoid oracle and limits") {
  CHECK(tv_gaussian_1d(1.0, 1.0) == 0.0);
  // 1e6-point composite trapezoid on [-80, 80], computed before the build
  CHECK(tv_gaussian_1d(1.0, 2.0) == doctest::Approx(0.6453491377328571).epsilon(1e-6));
  CHECK(tv_gaussian_1d(1.0, 1e6) > 1.99);
  CHECK_THROWS_AS(tv_gaussian_1d(0.0, 1.0), std::invalid_argument);

  // symmetric in its arguments
  CHECK(tv_gaussian_1d(0.7, 1.9) == doctest::Approx(tv_gaussian_1d(1.9, 0.7)).epsilon(1e-12));

  // re-derive via the oracle at another scale pair
  const double s1 = 0.8, s2 = 1.7;
  const double oracle = oracles::trapezoid(
      [&](double x) { return std::fabs(gaussian_pdf(x, 0, s1) - gaussian_pdf(x, 0, s2)); },
      -80.0, 80.0, 1000001);
  CHECK(tv_gaussian_1d(s1, s2) == doctest::Approx(oracle).epsilon(1e-6));
}

TEST_CASE("tv_quadrature report tag and distance JSON rows") {
  auto rep = tv_quadrature_gaussian(1.0, 2.0);
  CHECK(rep.estimator == DistanceEstimator::tv_quadrature);
  CHECK(rep.value == doctest::Approx(0.6453491377).epsilon(1e-6));
  const std::string row = distance_report_json(rep);
  CHECK(row.find("\"estimator\":\"tv_quadrature\"") != std::string::npos);
  CHECK(row.find("\"value\":0.645349") != std::string::npos);
  auto h = tv_histogram(std::vector<double>{0.0, 1.0}, std::vector<double>{0.5, 1.5},
                        HistogramSpec{4, std::make_pair(0.0, 2.0)});
  const std::string hrow = distance_report_json(h);
  CHECK(hrow.find("\"bins\":4") != std::string::npos);
}

TEST_CASE("devroye bound sits below the true gaussian TV") {
  for (int i = 0; i < 20; ++i) {
    const double ratio = 0.1 + (10.0 - 0.1) * i / 19.0;
    const double dev = devroye_lower_bound(ratio, 1.0);
    const double tv = tv_gaussian_1d(std::sqrt(ratio), 1.0);
    CHECK(dev <= tv + 1e-12);
  }
}

TEST_CASE("moment track: frozen chain is constant, OU plateaus at gaussian moments") {
  auto frozen = make_ou_model(1.0, 1.0, 1);
  frozen.drift = [](const Vec&, Vec& out) { out = Vec::Zero(1); };
  frozen.diffusion = [](const Vec&, Mat& out) { out = Mat::Zero(1, 1); };
  auto sched = StepSchedule::polynomial(0.1, 0.5, 500);
  Vec x0(1);
  x0 << 2.0;
  EnsembleSpec spec;
  spec.n_paths = 16;
  spec.checkpoints = {10, 500};
  spec.master_seed = 3;
  spec.x0 = x0;
  auto ens = run_ensemble(frozen, sched, spec, 1);
  const double exps[] = {1.0, 2.0};
  auto rep = moment_track(frozen, ens, exps, x0);
  CHECK(rep.averages[0][0] == 5.0);  // V = 1 + 4
  CHECK(rep.averages[0][1] == 5.0);
  CHECK(rep.averages[1][1] == 25.0);
  CHECK_FALSE(rep.flagged[0]);

  auto ou = make_ou_model(1.0, std::sqrt(2.0), 1);
  EnsembleSpec spec2;
  spec2.n_paths = 4000;
  spec2.checkpoints = {400, 500};
  spec2.master_seed = 4;
  spec2.x0 = Vec::Zero(1);
  auto ens2 = run_ensemble(ou, sched, spec2, 2);
  auto rep2 = moment_track(ou, ens2, exps, spec2.x0);
  // stationary E V = 1 + sigma^2/(2 alpha) = 2; E V^2 = 1 + 2 E X^2 + 3 (E X^2)^2 = 6
  CHECK(rep2.averages[0][1] == doctest::Approx(2.0).epsilon(0.05));
  CHECK(rep2.averages[1][1] == doctest::Approx(6.0).epsilon(0.15));
}

TEST_CASE("heavy tail analytic law: cdf/quantile round trip and moments") {
  auto d = heavy_tail_gibbs_dist();
  CHECK(d.cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  for (double u : {0.01, 0.3, 0.5, 0.77, 0.999})
    CHECK(d.cdf(d.quantile(u)) == doctest::Approx(u).epsilon(1e-9));
  // Var = 1 for density (2/pi)(1+x^2)^{-2}
  const auto xs = stratified(d, 400000);
  double var = 0.0;
  for (double x : xs) var += x * x;
  var /= static_cast<double>(xs.size());
  CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}
