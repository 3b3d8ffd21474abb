#include "langstep/model.hpp"

#include <cmath>
#include <stdexcept>

#include "langstep/noise.hpp"

namespace langstep {

void eval_drift_jacobian(const DiffusionModel& m, const Vec& x, Mat& out) {
  out.resize(m.d, m.d);
  if (m.drift_jacobian) {
    m.drift_jacobian(x, out);
    return;
  }
  const double h = fd_step(x);
  Vec xp = x, xm = x, bp(m.d), bm(m.d);
  for (int k = 0; k < m.d; ++k) {
    xp(k) = x(k) + h;
    xm(k) = x(k) - h;
    m.drift(xp, bp);
    m.drift(xm, bm);
    out.col(k) = (bp - bm) / (2.0 * h);
    xp(k) = x(k);
    xm(k) = x(k);
  }
}

void eval_diffusion_column_jacobian(const DiffusionModel& m, const Vec& x, int j, Mat& out) {
  out.resize(m.d, m.d);
  if (m.diffusion_column_jacobian) {
    m.diffusion_column_jacobian(x, j, out);
    return;
  }
  const double h = fd_step(x);
  Vec xp = x, xm = x;
  Mat sp(m.d, m.q), sm(m.d, m.q);
  for (int k = 0; k < m.d; ++k) {
    xp(k) = x(k) + h;
    xm(k) = x(k) - h;
    m.diffusion(xp, sp);
    m.diffusion(xm, sm);
    out.col(k) = (sp.col(j) - sm.col(j)) / (2.0 * h);
    xp(k) = x(k);
    xm(k) = x(k);
  }
}

DiffusionModel make_ou_model(double alpha, double sigma, int d) {
  if (!(alpha > 0.0) || !(sigma > 0.0) || d < 1)
    throw std::invalid_argument("make_ou_model: need alpha > 0, sigma > 0, d >= 1");
  DiffusionModel m;
  m.d = d;
  m.q = d;
  m.name = "ou";
  m.drift = [alpha](const Vec& x, Vec& out) { out = -alpha * x; };
  m.diffusion = [sigma, d](const Vec&, Mat& out) {
    out = sigma * Mat::Identity(d, d);
  };
  m.lyapunov = [](const Vec& x) { return 1.0 + x.squaredNorm(); };
  m.lyapunov_grad = [](const Vec& x, Vec& out) { out = 2.0 * x; };
  m.drift_jacobian = [alpha, d](const Vec&, Mat& out) {
    out = -alpha * Mat::Identity(d, d);
  };
  m.diffusion_column_jacobian = [d](const Vec&, int, Mat& out) {
    out = Mat::Zero(d, d);
  };
  m.constants.dissipativity_alpha = alpha;
  m.constants.contraction_rho = alpha;
  m.constants.contraction_c = 1.0;
  m.constants.contraction_t0 = 0.0;
  m.constants.ellipticity_sigma0_sq = sigma * sigma;
  // (grad V | b) = -2 alpha |x|^2 = 2 alpha - 2 alpha V for V = 1 + |x|^2
  m.constants.mean_reversion_alpha = 2.0 * alpha;
  m.constants.mean_reversion_beta = 2.0 * alpha;
  m.constants.ou = std::make_pair(alpha, sigma);
  return m;
}

DiffusionModel make_heavy_tail_model(int d, double kappa) {
  if (d < 1 || !(kappa > 0.0))
    throw std::invalid_argument("make_heavy_tail_model: need d >= 1, kappa > 0");
  DiffusionModel m;
  m.d = d;
  m.q = d;
  m.name = "heavytail";
  const double c = d + kappa - 1.0;
  m.drift = [c](const Vec& x, Vec& out) { out = -c * x; };
  m.diffusion = [d](const Vec& x, Mat& out) {
    out = std::sqrt(1.0 + x.squaredNorm()) * Mat::Identity(d, d);
  };
  m.lyapunov = [](const Vec& x) { return 1.0 + x.squaredNorm(); };  // W_1
  m.lyapunov_grad = [](const Vec& x, Vec& out) { out = 2.0 * x; };
  m.drift_jacobian = [c, d](const Vec&, Mat& out) { out = -c * Mat::Identity(d, d); };
  m.diffusion_column_jacobian = [d](const Vec& x, int j, Mat& out) {
    // sigma column j = s(x) e_j with s = sqrt(1+|x|^2): d s / d x_k = x_k / s
    out = Mat::Zero(d, d);
    out.row(j) = x.transpose() / std::sqrt(1.0 + x.squaredNorm());
  };
  const double diss = c - 0.5 * d;  // valid when kappa > 1 - d/2
  if (diss > 0.0) {
    m.constants.dissipativity_alpha = diss;
    m.constants.contraction_rho = diss;
    m.constants.contraction_c = 1.0;
    m.constants.contraction_t0 = 0.0;
  }
  m.constants.ellipticity_sigma0_sq = 1.0;
  return m;
}

DiffusionModel make_gradient_langevin_model(GradFn grad_V, double sigma, int d) {
  if (!grad_V || !(sigma > 0.0) || d < 1)
    throw std::invalid_argument("make_gradient_langevin_model: bad arguments");
  DiffusionModel m;
  m.d = d;
  m.q = d;
  m.name = "gradient_langevin";
  const double s2 = sigma * sigma;
  m.drift = [grad_V, s2](const Vec& x, Vec& out) {
    grad_V(x, out);
    out *= -s2;
  };
  const double amp = std::sqrt(2.0) * sigma;
  m.diffusion = [amp, d](const Vec&, Mat& out) { out = amp * Mat::Identity(d, d); };
  m.diffusion_column_jacobian = [d](const Vec&, int, Mat& out) { out = Mat::Zero(d, d); };
  m.constants.ellipticity_sigma0_sq = 2.0 * s2;
  return m;
}

Vec gibbs_drift(const GradFn& grad_V, const SigmaField& field, const Vec& x) {
  if (!field.sigma) throw std::invalid_argument("gibbs_drift: sigma field not set");
  const int d = field.d;
  if (x.size() != d) throw std::invalid_argument("gibbs_drift: x dimension mismatch");
  Vec gv(d);
  grad_V(x, gv);
  if (gv.size() != d) throw std::invalid_argument("gibbs_drift: grad_V dimension mismatch");

  Mat sig(d, field.q);
  field.sigma(x, sig);
  const Mat a = sig * sig.transpose();

  Vec div = Vec::Zero(d);
  if (field.ssT_partial) {
    Mat dj(d, d);
    for (int j = 0; j < d; ++j) {
      field.ssT_partial(x, j, dj);
      div += dj.col(j);
    }
  } else {
    const double h = fd_step(x);
    Vec xp = x, xm = x;
    Mat sp(d, field.q), sm(d, field.q);
    for (int j = 0; j < d; ++j) {
      xp(j) = x(j) + h;
      xm(j) = x(j) - h;
      field.sigma(xp, sp);
      field.sigma(xm, sm);
      // column j of d(sigma sigma^*)/d x_j
      div += ((sp * sp.transpose() - sm * sm.transpose()) / (2.0 * h)).col(j);
      xp(j) = x(j);
      xm(j) = x(j);
    }
  }
  return -0.5 * (a * gv - div);
}

DiffusionModel make_gibbs_multiplicative_model(GradFn grad_V, SigmaField field) {
  if (!grad_V || !field.sigma)
    throw std::invalid_argument("make_gibbs_multiplicative_model: bad arguments");
  DiffusionModel m;
  m.d = field.d;
  m.q = field.q;
  m.name = "gibbs_multiplicative";
  m.drift = [grad_V, field](const Vec& x, Vec& out) { out = gibbs_drift(grad_V, field, x); };
  auto sig = field.sigma;
  m.diffusion = [sig](const Vec& x, Mat& out) { sig(x, out); };
  return m;
}

namespace {

// Uniform point in the ball of given radius (direction from normals, radius
// via u^{1/d} scaling); counters advance by d+1 per draw.
Vec uniform_in_ball(const NoiseSource& src, std::uint64_t& ctr, int d, double radius) {
  Vec z(d);
  for (int i = 0; i < d; ++i) z(i) = src.normal(ctr++);
  const double nrm = z.norm();
  const double u = src.uniform(ctr++);
  if (nrm == 0.0) return Vec::Zero(d);
  return z * (radius * std::pow(u, 1.0 / d) / nrm);
}

}  // namespace

DissipativityReport check_dissipativity(const DiffusionModel& m, int sample_count,
                                        double radius, std::uint64_t seed,
                                        double exclude_radius) {
  if (sample_count < 2) throw std::invalid_argument("check_dissipativity: need >= 2 pairs");
  if (!(radius > 0.0)) throw std::invalid_argument("check_dissipativity: radius must be > 0");
  if (exclude_radius >= radius)
    throw std::invalid_argument("check_dissipativity: exclude_radius must be < radius");
  NoiseSource src(seed, 0);
  std::uint64_t ctr = 0;
  DissipativityReport rep;
  Vec bx(m.d), by(m.d);
  Mat sx(m.d, m.q), sy(m.d, m.q);
  double worst = -std::numeric_limits<double>::infinity();
  int done = 0;
  while (done < sample_count) {
    const Vec x = uniform_in_ball(src, ctr, m.d, radius);
    const Vec y = uniform_in_ball(src, ctr, m.d, radius);
    if (exclude_radius > 0.0 && (x.norm() <= exclude_radius || y.norm() <= exclude_radius))
      continue;
    const double d2 = (x - y).squaredNorm();
    if (d2 == 0.0) continue;  // degenerate pair: resample
    m.drift(x, bx);
    m.drift(y, by);
    m.diffusion(x, sx);
    m.diffusion(y, sy);
    const double num = (bx - by).dot(x - y) + 0.5 * (sx - sy).squaredNorm();
    worst = std::max(worst, num / d2);
    ++done;
  }
  rep.estimate = worst;
  rep.pairs = done;
  if (worst < 0.0) rep.alpha = -worst;
  return rep;
}

EllipticityReport check_ellipticity(const DiffusionModel& m, int sample_count,
                                    double radius, std::uint64_t seed) {
  if (sample_count < 1) throw std::invalid_argument("check_ellipticity: need >= 1 point");
  NoiseSource src(seed, 1);
  std::uint64_t ctr = 0;
  Mat sig(m.d, m.q);
  double min_eig = std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Mat> es;
  for (int i = 0; i < sample_count; ++i) {
    const Vec x = uniform_in_ball(src, ctr, m.d, radius);
    m.diffusion(x, sig);
    es.compute(sig * sig.transpose(), Eigen::EigenvaluesOnly);
    min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
  }
  return EllipticityReport{min_eig, sample_count, true};
}

MeanReversionReport check_mean_reversion(const DiffusionModel& m, int sample_count,
                                         double radius, std::uint64_t seed) {
  if (!m.has_lyapunov() || !m.lyapunov_grad)
    throw std::invalid_argument("check_mean_reversion: model has no Lyapunov data");
  if (sample_count < 3) throw std::invalid_argument("check_mean_reversion: need >= 3 points");
  NoiseSource src(seed, 2);
  std::uint64_t ctr = 0;
  Vec b(m.d), gv(m.d);
  std::vector<double> vs(sample_count), ys(sample_count);
  double cb = 0.0;
  for (int i = 0; i < sample_count; ++i) {
    const Vec x = uniform_in_ball(src, ctr, m.d, radius);
    m.drift(x, b);
    m.lyapunov_grad(x, gv);
    const double v = m.lyapunov(x);
    if (!(v > 0.0)) throw std::runtime_error("check_mean_reversion: V must be positive");
    vs[i] = v;
    ys[i] = gv.dot(b);
    cb = std::max(cb, b.squaredNorm() / v);
  }
  // least squares for y = beta - alpha v
  double sv = 0, sy = 0, svv = 0, svy = 0;
  for (int i = 0; i < sample_count; ++i) {
    sv += vs[i];
    sy += ys[i];
    svv += vs[i] * vs[i];
    svy += vs[i] * ys[i];
  }
  const double n = sample_count;
  const double denom = n * svv - sv * sv;
  if (denom == 0.0) throw std::runtime_error("check_mean_reversion: degenerate probe set");
  const double slope = (n * svy - sv * sy) / denom;  // y ~ slope * v + c
  const double c = (sy - slope * sv) / n;
  MeanReversionReport rep;
  rep.alpha_hat = -slope;
  rep.beta_hat = c;
  rep.cb_hat = cb;
  rep.points = sample_count;
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < sample_count; ++i)
    worst = std::max(worst, ys[i] - (rep.beta_hat - rep.alpha_hat * vs[i]));
  rep.worst_violation = worst;
  return rep;
}

}  // namespace langstep
