#pragma once

#include <functional>

namespace langstep {

// Analytic one-dimensional law used as a comparison target by the distance
// estimators. `quantile_antiderivative` is I(u) with I' = quantile; when
// present, quantile integrals are evaluated in closed form, otherwise by
// adaptive quadrature.
struct AnalyticDist1d {
  std::function<double(double)> pdf;
  std::function<double(double)> cdf;
  std::function<double(double)> quantile;
  std::function<double(double)> quantile_antiderivative;
};

AnalyticDist1d gaussian_dist(double mu, double sigma);

// Invariant law of the d=1, kappa=1 heavy-tail model: density
// (2/pi) (1+x^2)^{-2}, cdf 1/2 + (atan x + x/(1+x^2))/pi.
AnalyticDist1d heavy_tail_gibbs_dist();

double gaussian_pdf(double x, double mu, double sigma);
double gaussian_cdf(double x, double mu, double sigma);

}  // namespace langstep
