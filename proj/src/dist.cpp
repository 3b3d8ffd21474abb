#include "langstep/dist.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "langstep/noise.hpp"

namespace langstep {

double gaussian_pdf(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

double gaussian_cdf(double x, double mu, double sigma) {
  return 0.5 * std::erfc(-(x - mu) / (sigma * std::sqrt(2.0)));
}

AnalyticDist1d gaussian_dist(double mu, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_dist: sigma must be > 0");
  AnalyticDist1d d;
  d.pdf = [mu, sigma](double x) { return gaussian_pdf(x, mu, sigma); };
  d.cdf = [mu, sigma](double x) { return gaussian_cdf(x, mu, sigma); };
  d.quantile = [mu, sigma](double u) { return mu + sigma * normal_quantile(u); };
  // I(u) = mu u - sigma phi(Phi^{-1}(u)), I' = quantile
  d.quantile_antiderivative = [mu, sigma](double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return mu;
    const double z = normal_quantile(u);
    return mu * u - sigma * gaussian_pdf(z, 0.0, 1.0);
  };
  return d;
}

AnalyticDist1d heavy_tail_gibbs_dist() {
  AnalyticDist1d d;
  const double pi = std::numbers::pi;
  d.pdf = [pi](double x) {
    const double s = 1.0 + x * x;
    return 2.0 / (pi * s * s);
  };
  d.cdf = [pi](double x) { return 0.5 + (std::atan(x) + x / (1.0 + x * x)) / pi; };
  d.quantile = [d](double u) {
    if (!(u > 0.0 && u < 1.0))
      throw std::invalid_argument("heavy_tail quantile: u must be in (0,1)");
    // bisection, then Newton polish
    double lo = -1e9, hi = 1e9;
    for (int i = 0; i < 80; ++i) {
      const double mid = 0.5 * (lo + hi);
      (d.cdf(mid) < u ? lo : hi) = mid;
    }
    double x = 0.5 * (lo + hi);
    for (int i = 0; i < 4; ++i) {
      const double f = d.cdf(x) - u;
      const double df = d.pdf(x);
      if (df <= 0.0) break;
      x -= f / df;
    }
    return x;
  };
  return d;
}

}  // namespace langstep
