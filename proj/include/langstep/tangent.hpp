#pragma once

#include <cstdint>

#include "langstep/model.hpp"

namespace langstep {

// First-variation (tangent) process Y_t = dX^x_t / dx, d x d, started at the
// identity. det(Y) is tracked alongside for degeneracy diagnostics.
struct TangentState {
  Mat y;
  static TangentState identity(int d) { return TangentState{Mat::Identity(d, d)}; }
  double det() const { return y.determinant(); }
};

struct TangentWorkspace {
  Mat jac;   // d x d
  Mat col;   // d x d
  Mat accum; // d x d
  explicit TangentWorkspace(int d) : jac(d, d), col(d, d), accum(d, d) {}
};

// Euler update of dY = grad b(X) Y dt + sum_j grad sigma_{.j}(X) Y dW^j:
//   Y' = Y + dt grad b(x) Y + sum_j grad sigma_{.j}(x) Y dW_j.
void tangent_step_inplace(const DiffusionModel& m, const Vec& x, double dt,
                          const Vec& dw, TangentState& s, TangentWorkspace& ws);
TangentState tangent_step(const DiffusionModel& m, const TangentState& s, const Vec& x,
                          double dt, const Vec& dw);

// Monte Carlo gradient of P_t f(x) = E f(X^x_t) through the weight
// f(X_t) (1/t) int_0^t (sigma(X_s)^{-1} Y_s)^* dW_s, with sigma^{-1} the
// right-inverse sigma^* (sigma sigma^*)^{-1}. X and Y are simulated on a
// uniform grid of n_substeps; paths whose sigma sigma^* is numerically
// singular are rejected and counted (more than 1% rejections aborts).
struct BelResult {
  Vec gradient;
  Vec std_error;
  std::size_t paths = 0;
  std::size_t rejected = 0;
  double min_abs_det_y = 0.0;  // tangent degeneracy diagnostic at the horizon
};

BelResult bel_gradient(const DiffusionModel& m, const ScalarFn& f, const Vec& x,
                       double t, std::size_t n_paths, std::size_t n_substeps,
                       std::uint64_t seed, int n_threads = 0);

}  // namespace langstep
