#include "langstep/tangent.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "langstep/noise.hpp"
#include "langstep/scheme.hpp"

namespace langstep {

void tangent_step_inplace(const DiffusionModel& m, const Vec& x, double dt,
                          const Vec& dw, TangentState& s, TangentWorkspace& ws) {
  eval_drift_jacobian(m, x, ws.jac);
  ws.accum.noalias() = dt * (ws.jac * s.y);
  for (int j = 0; j < m.q; ++j) {
    eval_diffusion_column_jacobian(m, x, j, ws.col);
    ws.accum.noalias() += dw(j) * (ws.col * s.y);
  }
  s.y += ws.accum;
}

TangentState tangent_step(const DiffusionModel& m, const TangentState& s, const Vec& x,
                          double dt, const Vec& dw) {
  TangentState out = s;
  TangentWorkspace ws(m.d);
  tangent_step_inplace(m, x, dt, dw, out, ws);
  return out;
}

BelResult bel_gradient(const DiffusionModel& m, const ScalarFn& f, const Vec& x,
                       double t, std::size_t n_paths, std::size_t n_substeps,
                       std::uint64_t seed, int n_threads) {
  if (!(t > 0.0)) throw std::invalid_argument("bel_gradient: t must be > 0");
  if (n_paths == 0 || n_substeps == 0)
    throw std::invalid_argument("bel_gradient: n_paths and n_substeps must be >= 1");
  if (x.size() != m.d) throw std::invalid_argument("bel_gradient: x dimension mismatch");

  const int d = m.d, q = m.q;
  const double h = t / static_cast<double>(n_substeps);
  const double sq = std::sqrt(h);

  // per-path estimates, written by path index so threading cannot reorder
  Mat est(n_paths, d);
  std::vector<std::uint8_t> ok(n_paths, 1);
  std::vector<double> dets(n_paths, 0.0);

  parallel_for_blocks(n_paths, worker_count(n_threads), [&](std::size_t lo, std::size_t hi) {
    EulerWorkspace ews(m);
    TangentWorkspace tws(d);
    Eigen::LLT<Mat> llt(d);
    Vec dw(q), v(d), u(d), weight(d);
    Mat a(d, d);
    for (std::size_t p = lo; p < hi; ++p) {
      NoiseSource noise(seed, p);
      ChainState s{x, 0, 0.0};
      TangentState y = TangentState::identity(d);
      weight.setZero();
      bool rejected = false;
      for (std::size_t k = 0; k < n_substeps; ++k) {
        noise.fill_normals(static_cast<std::uint64_t>(k) * q, std::span(dw.data(), q));
        dw *= sq;
        // weight increment at the left endpoint: Y^T (sigma sigma^*)^{-1} sigma dW
        m.diffusion(s.x, ews.sigma);
        a.noalias() = ews.sigma * ews.sigma.transpose();
        llt.compute(a);
        if (llt.info() != Eigen::Success) {
          rejected = true;
          break;
        }
        v.noalias() = ews.sigma * dw;
        u = llt.solve(v);
        weight.noalias() += y.y.transpose() * u;
        tangent_step_inplace(m, s.x, h, dw, y, tws);
        try {
          euler_step_inplace(m, h, dw, s, ews);
        } catch (const BlowUpError&) {
          rejected = true;
          break;
        }
      }
      if (rejected || !weight.allFinite()) {
        ok[p] = 0;
        est.row(p).setZero();
        continue;
      }
      dets[p] = std::fabs(y.det());
      const double fx = f(s.x);
      est.row(p) = (fx / t) * weight.transpose();
      if (!est.row(p).allFinite()) {
        ok[p] = 0;
        est.row(p).setZero();
      }
    }
  });

  BelResult res;
  std::size_t kept = 0;
  Vec mean = Vec::Zero(d);
  res.min_abs_det_y = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < n_paths; ++p) {
    if (!ok[p]) continue;
    ++kept;
    mean += est.row(p).transpose();
    res.min_abs_det_y = std::min(res.min_abs_det_y, dets[p]);
  }
  res.rejected = n_paths - kept;
  res.paths = kept;
  if (res.rejected * 100 > n_paths)
    throw std::runtime_error("bel_gradient: more than 1% of paths rejected (singular sigma sigma^*)");
  if (kept == 0) throw std::runtime_error("bel_gradient: no usable paths");
  mean /= static_cast<double>(kept);
  Vec var = Vec::Zero(d);
  for (std::size_t p = 0; p < n_paths; ++p) {
    if (!ok[p]) continue;
    const Vec diff = est.row(p).transpose() - mean;
    var += diff.cwiseProduct(diff);
  }
  var /= static_cast<double>(kept > 1 ? kept - 1 : 1);
  res.gradient = mean;
  res.std_error = (var / static_cast<double>(kept)).cwiseSqrt();
  return res;
}

}  // namespace langstep
