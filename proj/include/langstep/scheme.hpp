#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "langstep/model.hpp"
#include "langstep/noise.hpp"
#include "langstep/schedule.hpp"

namespace langstep {

// Chain position after n steps; elapsed is Gamma_n of the driving schedule
// (set from the schedule cache inside run_chain, so the identity is exact).
struct ChainState {
  Vec x;
  std::size_t n = 0;
  double elapsed = 0.0;
};

// Non-finite drift/diffusion/state: fatal diagnostic carrying the step index
// and the offending position.
class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(std::size_t step, Vec state)
      : std::runtime_error("chain blow-up at step " + std::to_string(step)),
        step_(step),
        state_(std::move(state)) {}
  std::size_t step() const { return step_; }
  const Vec& state() const { return state_; }

 private:
  std::size_t step_;
  Vec state_;
};

// Scratch buffers so the step loop does not allocate.
struct EulerWorkspace {
  Vec drift;
  Mat sigma;
  Vec z;
  explicit EulerWorkspace(const DiffusionModel& m)
      : drift(m.d), sigma(m.d, m.q), z(m.q) {}
};

// x' = x + gamma b(x) + sigma(x) w, where w is the Brownian increment over
// the step (W_{Gamma_{n+1}} - W_{Gamma_n}, i.e. sqrt(gamma) Z).
ChainState euler_step(const DiffusionModel& m, const ChainState& s, double gamma,
                      const Vec& w);

// In-place variant used by the simulation loops; advances s.n and s.elapsed.
void euler_step_inplace(const DiffusionModel& m, double gamma, const Vec& w,
                        ChainState& s, EulerWorkspace& ws);

// Genuine (continuous-time) value X_{Gamma_k + t_offset} inside one step:
// the Brownian position at t_offset is drawn from the bridge conditioned on
// the full increment, using bridge_noise ~ N(0, I_q). Endpoints t_offset = 0
// and t_offset = gamma are exact and consume no bridge noise.
Vec genuine_value(const DiffusionModel& m, const ChainState& before, double gamma,
                  const Vec& full_increment, double t_offset, const Vec& bridge_noise);

// gamma_k-weighted occupation measure: nu_n = (1/Gamma_n) sum gamma_k
// delta_{X_{Gamma_{k-1}}} (the pre-step position carries the weight).
class WeightedEmpiricalMeasure {
 public:
  explicit WeightedEmpiricalMeasure(int dim);

  void add(const Vec& x, double weight);
  std::size_t size() const { return w_.size(); }
  int dim() const { return dim_; }
  // Total weight, compensated summation; integrate(f == 1) reproduces it
  // bitwise so the normalization identity holds exactly.
  double total_weight() const { return wsum_; }
  double integrate(const ScalarFn& f) const;
  Vec mean() const;

  double weight(std::size_t i) const { return w_[i]; }
  double coord(std::size_t i, int k) const { return xs_[i * dim_ + k]; }
  std::vector<double> component(int k) const;
  const std::vector<double>& weights() const { return w_; }

 private:
  int dim_;
  std::vector<double> xs_;  // row-major samples
  std::vector<double> w_;
  double wsum_ = 0.0;
  double wcarry_ = 0.0;
};

// Per-step observer; x_before is weighted by gamma in the empirical measure.
struct StepRecord {
  std::size_t step;  // index of the step just taken (1-based: state is X_{Gamma_step})
  double gamma;
  const Vec& x_before;
  const Vec& x_after;
  double elapsed_after;
};
using StepObserver = std::function<void(const StepRecord&)>;

// Observer appending (x_before, gamma_k) to a measure.
StepObserver empirical_observer(WeightedEmpiricalMeasure& measure);

// Records states at the given step indices (0 records x0).
class SnapshotRecorder {
 public:
  explicit SnapshotRecorder(std::vector<std::size_t> at_steps);
  StepObserver observer();
  const std::vector<std::size_t>& steps() const { return at_; }
  const std::vector<Vec>& snapshots() const { return snaps_; }
  void record_initial(const Vec& x0);

 private:
  std::vector<std::size_t> at_;
  std::vector<Vec> snaps_;
};

// Counter layout inside one stream: step k of the chain consumes counters
// [k q, (k+1) q); draws that are not chain increments (warm starts, bridges)
// live above kAuxCounterBase so they can never collide.
inline constexpr std::uint64_t kAuxCounterBase = 1ull << 62;

// Iterates euler_step from x0; deterministic for fixed (seed, stream).
ChainState run_chain(const DiffusionModel& m, const StepSchedule& sched,
                     std::size_t n_steps, const Vec& x0, const NoiseSource& noise,
                     std::span<const StepObserver> observers = {});

// ---- multi-path driver -------------------------------------------------------

enum class BlowUpPolicy { abort_all, drop_path };

struct EnsembleSpec {
  std::size_t n_paths = 0;
  std::vector<std::size_t> checkpoints;  // strictly increasing, >= 1
  std::uint64_t master_seed = 0;
  std::uint64_t stream_offset = 0;  // path i uses stream stream_offset + i
  Vec x0;
  // Optional warm start: draws x0 per path from auxiliary counters.
  std::function<Vec(const NoiseSource&, std::uint64_t& ctr)> x0_sampler;
  BlowUpPolicy policy = BlowUpPolicy::abort_all;
};

struct EnsembleResult {
  std::vector<std::size_t> checkpoints;
  // One (n_paths x d) matrix per checkpoint; rows of dropped paths are NaN.
  std::vector<Mat> marginals;
  std::size_t dropped = 0;
  std::vector<std::size_t> dropped_paths;
};

// Paths are embarrassingly parallel; each path owns its stream and writes
// into its own row, so the result is identical for any thread count.
EnsembleResult run_ensemble(const DiffusionModel& m, const StepSchedule& sched,
                            const EnsembleSpec& spec, int n_threads = 0);

// Worker count: explicit request, else LANGSTEP_THREADS, else hardware.
int worker_count(int requested = 0);

// Static split of [0, jobs) into blocks run on worker threads.
void parallel_for_blocks(std::size_t jobs, int n_threads,
                         const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace langstep
