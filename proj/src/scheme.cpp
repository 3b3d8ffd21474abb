#include "langstep/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <thread>

namespace langstep {

void euler_step_inplace(const DiffusionModel& m, double gamma, const Vec& w,
                        ChainState& s, EulerWorkspace& ws) {
  m.drift(s.x, ws.drift);
  m.diffusion(s.x, ws.sigma);
  s.x += gamma * ws.drift;
  s.x.noalias() += ws.sigma * w;
  s.n += 1;
  s.elapsed += gamma;
  if (!s.x.allFinite()) throw BlowUpError(s.n, s.x);
}

ChainState euler_step(const DiffusionModel& m, const ChainState& s, double gamma,
                      const Vec& w) {
  if (!(gamma > 0.0)) throw std::invalid_argument("euler_step: gamma must be > 0");
  ChainState out = s;
  EulerWorkspace ws(m);
  euler_step_inplace(m, gamma, w, out, ws);
  return out;
}

Vec genuine_value(const DiffusionModel& m, const ChainState& before, double gamma,
                  const Vec& full_increment, double t_offset, const Vec& bridge_noise) {
  if (!(t_offset >= 0.0 && t_offset <= gamma))
    throw std::invalid_argument("genuine_value: t_offset outside [0, gamma]");
  if (t_offset == 0.0) return before.x;
  Vec b(m.d);
  Mat sig(m.d, m.q);
  m.drift(before.x, b);
  m.diffusion(before.x, sig);
  if (t_offset == gamma) return before.x + gamma * b + sig * full_increment;
  // Brownian bridge: W(t) | W(gamma) ~ N((t/gamma) W(gamma), t(gamma-t)/gamma I)
  const double frac = t_offset / gamma;
  const double sd = std::sqrt(t_offset * (gamma - t_offset) / gamma);
  Vec w = frac * full_increment + sd * bridge_noise;
  return before.x + t_offset * b + sig * w;
}

WeightedEmpiricalMeasure::WeightedEmpiricalMeasure(int dim) : dim_(dim) {
  if (dim < 1) throw std::invalid_argument("WeightedEmpiricalMeasure: dim must be >= 1");
}

void WeightedEmpiricalMeasure::add(const Vec& x, double weight) {
  if (x.size() != dim_) throw std::invalid_argument("WeightedEmpiricalMeasure: dim mismatch");
  if (!(weight > 0.0)) throw std::invalid_argument("WeightedEmpiricalMeasure: weight must be > 0");
  for (int k = 0; k < dim_; ++k) xs_.push_back(x(k));
  w_.push_back(weight);
  // Kahan update; integrate() replays the identical sequence for f == 1.
  const double y = weight - wcarry_;
  const double t = wsum_ + y;
  wcarry_ = (t - wsum_) - y;
  wsum_ = t;
}

double WeightedEmpiricalMeasure::integrate(const ScalarFn& f) const {
  if (w_.empty()) throw std::runtime_error("WeightedEmpiricalMeasure: empty measure");
  double sum = 0.0, carry = 0.0;
  Vec x(dim_);
  for (std::size_t i = 0; i < w_.size(); ++i) {
    for (int k = 0; k < dim_; ++k) x(k) = xs_[i * dim_ + k];
    const double y = w_[i] * f(x) - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  return sum / wsum_;
}

Vec WeightedEmpiricalMeasure::mean() const {
  Vec out = Vec::Zero(dim_);
  for (std::size_t i = 0; i < w_.size(); ++i)
    for (int k = 0; k < dim_; ++k) out(k) += w_[i] * xs_[i * dim_ + k];
  return out / wsum_;
}

std::vector<double> WeightedEmpiricalMeasure::component(int k) const {
  std::vector<double> out(w_.size());
  for (std::size_t i = 0; i < w_.size(); ++i) out[i] = xs_[i * dim_ + k];
  return out;
}

StepObserver empirical_observer(WeightedEmpiricalMeasure& measure) {
  return [&measure](const StepRecord& r) { measure.add(r.x_before, r.gamma); };
}

SnapshotRecorder::SnapshotRecorder(std::vector<std::size_t> at_steps) : at_(std::move(at_steps)) {
  std::sort(at_.begin(), at_.end());
}

void SnapshotRecorder::record_initial(const Vec& x0) {
  if (!at_.empty() && at_.front() == 0) snaps_.push_back(x0);
}

StepObserver SnapshotRecorder::observer() {
  return [this](const StepRecord& r) {
    if (std::binary_search(at_.begin(), at_.end(), r.step)) snaps_.push_back(r.x_after);
  };
}

ChainState run_chain(const DiffusionModel& m, const StepSchedule& sched,
                     std::size_t n_steps, const Vec& x0, const NoiseSource& noise,
                     std::span<const StepObserver> observers) {
  if (x0.size() != m.d) throw std::invalid_argument("run_chain: x0 dimension mismatch");
  if (n_steps > sched.horizon()) throw std::out_of_range("run_chain: n_steps beyond schedule horizon");
  ChainState s{x0, 0, 0.0};
  EulerWorkspace ws(m);
  Vec w(m.q), x_before(m.d);
  const int q = m.q;
  for (std::size_t k = 0; k < n_steps; ++k) {
    const double g = sched.gamma(k + 1);
    const double sq = std::sqrt(g);
    noise.fill_normals(static_cast<std::uint64_t>(k) * q, std::span(w.data(), q));
    w *= sq;
    if (!observers.empty()) x_before = s.x;
    try {
      euler_step_inplace(m, g, w, s, ws);
    } catch (const BlowUpError&) {
      throw BlowUpError(k + 1, s.x);  // report the failing step index
    }
    // keep the elapsed/Gamma identity exact against the cache
    s.elapsed = sched.gamma_sum(s.n);
    if (!observers.empty()) {
      StepRecord rec{k + 1, g, x_before, s.x, s.elapsed};
      for (const auto& obs : observers) obs(rec);
    }
  }
  return s;
}

int worker_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("LANGSTEP_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

void parallel_for_blocks(std::size_t jobs, int n_threads,
                         const std::function<void(std::size_t, std::size_t)>& body) {
  const int workers = std::min<std::size_t>(std::max(1, n_threads), std::max<std::size_t>(jobs, 1));
  if (workers <= 1 || jobs <= 1) {
    body(0, jobs);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr first_error;
  std::mutex err_mutex;
  const std::size_t chunk = (jobs + workers - 1) / workers;
  for (int t = 0; t < workers; ++t) {
    const std::size_t lo = static_cast<std::size_t>(t) * chunk;
    const std::size_t hi = std::min(jobs, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      try {
        body(lo, hi);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

EnsembleResult run_ensemble(const DiffusionModel& m, const StepSchedule& sched,
                            const EnsembleSpec& spec, int n_threads) {
  if (spec.n_paths == 0) throw std::invalid_argument("run_ensemble: n_paths must be >= 1");
  if (spec.checkpoints.empty()) throw std::invalid_argument("run_ensemble: no checkpoints");
  for (std::size_t i = 0; i < spec.checkpoints.size(); ++i) {
    if (spec.checkpoints[i] == 0 ||
        (i > 0 && spec.checkpoints[i] <= spec.checkpoints[i - 1]))
      throw std::invalid_argument("run_ensemble: checkpoints must be strictly increasing");
  }
  const std::size_t n_steps = spec.checkpoints.back();
  if (n_steps > sched.horizon())
    throw std::out_of_range("run_ensemble: checkpoint beyond schedule horizon");
  if (!spec.x0_sampler && spec.x0.size() != m.d)
    throw std::invalid_argument("run_ensemble: x0 dimension mismatch");

  EnsembleResult res;
  res.checkpoints = spec.checkpoints;
  res.marginals.assign(spec.checkpoints.size(), Mat(spec.n_paths, m.d));

  std::vector<std::uint8_t> dropped(spec.n_paths, 0);
  const int q = m.q;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  parallel_for_blocks(spec.n_paths, worker_count(n_threads), [&](std::size_t lo, std::size_t hi) {
    EulerWorkspace ws(m);
    Vec w(q);
    for (std::size_t p = lo; p < hi; ++p) {
      NoiseSource noise(spec.master_seed, spec.stream_offset + p);
      ChainState s;
      if (spec.x0_sampler) {
        std::uint64_t aux = kAuxCounterBase;
        s.x = spec.x0_sampler(noise, aux);
      } else {
        s.x = spec.x0;
      }
      s.n = 0;
      s.elapsed = 0.0;
      std::size_t ci = 0;
      try {
        for (std::size_t k = 0; k < n_steps; ++k) {
          const double g = sched.gamma(k + 1);
          noise.fill_normals(static_cast<std::uint64_t>(k) * q, std::span(w.data(), q));
          w *= std::sqrt(g);
          euler_step_inplace(m, g, w, s, ws);
          if (ci < spec.checkpoints.size() && s.n == spec.checkpoints[ci]) {
            res.marginals[ci].row(p) = s.x.transpose();
            ++ci;
          }
        }
      } catch (const BlowUpError& e) {
        if (spec.policy == BlowUpPolicy::abort_all) throw;
        dropped[p] = 1;
        for (std::size_t j = 0; j < spec.checkpoints.size(); ++j)
          res.marginals[j].row(p).setConstant(nan);
        (void)e;
      }
    }
  });

  for (std::size_t p = 0; p < spec.n_paths; ++p) {
    if (dropped[p]) {
      ++res.dropped;
      res.dropped_paths.push_back(p);
    }
  }
  return res;
}

}  // namespace langstep
