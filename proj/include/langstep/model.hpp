#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>

namespace langstep {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// In-place evaluation signatures so simulation loops stay allocation-free.
using DriftFn = std::function<void(const Vec&, Vec&)>;          // R^d -> R^d
using DiffusionFn = std::function<void(const Vec&, Mat&)>;      // R^d -> d x q
using ScalarFn = std::function<double(const Vec&)>;
using GradFn = std::function<void(const Vec&, Vec&)>;
using JacobianFn = std::function<void(const Vec&, Mat&)>;       // d x d
// Jacobian of diffusion column j: out(i,k) = d sigma_{ij} / d x_k.
using ColumnJacobianFn = std::function<void(const Vec&, int, Mat&)>;

// Known analytic constants of a built-in model, so experiments can check
// hypotheses like varpi < rho mechanically. User models leave these unset.
struct ModelConstants {
  std::optional<double> dissipativity_alpha;   // (C_alpha) constant
  std::optional<double> contraction_rho;       // exponential contraction rate
  std::optional<double> contraction_c;         // prefactor of the contraction bound
  std::optional<double> contraction_t0;        // time the bound holds from
  std::optional<double> ellipticity_sigma0_sq; // sigma sigma^* >= sigma0^2 I
  std::optional<double> mean_reversion_alpha;  // (grad V | b) <= beta - alpha V
  std::optional<double> mean_reversion_beta;
  std::optional<std::pair<double, double>> ou; // (alpha, sigma): exact transition known
};

// SDE model dX = b(X) dt + sigma(X) dW. Drift/diffusion must be pure
// functions (paths are simulated in parallel); models are immutable value
// objects once built.
struct DiffusionModel {
  int d = 0;  // state dimension
  int q = 0;  // noise dimension
  DriftFn drift;
  DiffusionFn diffusion;

  // Optional Lyapunov data for (S)-style probes and moment tracking.
  ScalarFn lyapunov;
  GradFn lyapunov_grad;

  // Optional analytic Jacobians; finite differences are used when absent.
  JacobianFn drift_jacobian;
  ColumnJacobianFn diffusion_column_jacobian;

  ModelConstants constants;
  std::string name;

  bool has_lyapunov() const { return static_cast<bool>(lyapunov); }
};

// Central finite-difference step for derivative probes.
inline double fd_step(const Vec& x) { return std::max(1e-5, 1e-5 * x.norm()); }

// grad b (d x d), analytic when the model carries one, else central FD.
void eval_drift_jacobian(const DiffusionModel& m, const Vec& x, Mat& out);
// grad of diffusion column j, analytic or central FD.
void eval_diffusion_column_jacobian(const DiffusionModel& m, const Vec& x, int j, Mat& out);

// ---- built-in models --------------------------------------------------------

// dX = -alpha X dt + sigma dW (diffusion sigma * I_d), invariant
// N(0, sigma^2/(2 alpha) I).
DiffusionModel make_ou_model(double alpha, double sigma, int d);

// dX = -(d + kappa - 1) X dt + sqrt(1 + |X|^2) dW; invariant density
// proportional to (1 + |x|^2)^{-(d+kappa)}. Satisfies (C_alpha) with
// alpha = (d + kappa - 1) - d/2 when kappa > 1 - d/2.
DiffusionModel make_heavy_tail_model(int d, double kappa);

// dX = -sigma^2 grad V dt + sqrt(2) sigma dW, invariant proportional to
// exp(-V/sigma^2).
DiffusionModel make_gradient_langevin_model(GradFn grad_V, double sigma, int d);

// ---- Gibbs drift for multiplicative samplers -------------------------------

// Matrix field sigma(x) with optional analytic partials of A = sigma sigma^*.
struct SigmaField {
  int d = 0;
  int q = 0;
  DiffusionFn sigma;
  // ssT_partial(x, j, out): out = d(sigma sigma^*)/d x_j. When absent the
  // partials come from central differences with step fd_step(x).
  std::function<void(const Vec&, int, Mat&)> ssT_partial;
};

// Drift making C e^{-V} invariant for dX = b dt + sigma dW:
//   b = -1/2 ( (sigma sigma^*) grad V - [ sum_j d_j (sigma sigma^*)_{ij} ]_i ).
Vec gibbs_drift(const GradFn& grad_V, const SigmaField& field, const Vec& x);

// Model built from a potential gradient and a sigma field via gibbs_drift.
DiffusionModel make_gibbs_multiplicative_model(GradFn grad_V, SigmaField field);

// ---- empirical assumption probes --------------------------------------------
// Sampling-based certificates of violation, never proofs of satisfaction;
// every report carries empirical_only = true.

struct DissipativityReport {
  double estimate = 0.0;           // max over pairs of the (C_alpha) ratio
  std::optional<double> alpha;     // -estimate when the estimate is negative
  int pairs = 0;
  bool empirical_only = true;
};

// Pairs drawn uniformly in the ball of the given radius; with
// exclude_radius > 0 both points are constrained to |x| > exclude_radius
// (outside-a-compact dissipativity probe).
DissipativityReport check_dissipativity(const DiffusionModel& m, int sample_count,
                                        double radius, std::uint64_t seed,
                                        double exclude_radius = 0.0);

struct EllipticityReport {
  double min_eigenvalue = 0.0;
  int points = 0;
  bool empirical_only = true;
};

EllipticityReport check_ellipticity(const DiffusionModel& m, int sample_count,
                                    double radius, std::uint64_t seed);

struct MeanReversionReport {
  double alpha_hat = 0.0;
  double beta_hat = 0.0;
  double worst_violation = 0.0;  // max of (grad V|b) - (beta_hat - alpha_hat V)
  double cb_hat = 0.0;           // max |b|^2 / V
  int points = 0;
  bool empirical_only = true;
};

// Least-squares fit of (grad V | b)(x) = beta - alpha V(x) over probe points.
MeanReversionReport check_mean_reversion(const DiffusionModel& m, int sample_count,
                                         double radius, std::uint64_t seed);

}  // namespace langstep
