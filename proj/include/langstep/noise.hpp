#pragma once

#include <cstdint>
#include <span>

namespace langstep {

// Philox4x32-10 keystream block: 128 bits of output for a (key, counter) pair.
struct PhiloxBlock {
  std::uint32_t w[4];
};

PhiloxBlock philox4x32_10(std::uint64_t key, std::uint64_t ctr_lo, std::uint64_t ctr_hi);

// Standard normal quantile (inverse CDF), Wichura's AS241 double-precision
// variant. p must lie in (0,1).
double normal_quantile(double p);

// Counter-based Gaussian stream keyed by (master seed, stream id).
//
// Contract: normal(counter) is a pure function of (seed, stream, counter) --
// the same triple always yields the same value, and distinct streams are
// independent keystreams. One normal per counter, produced as
// Phi^{-1}(u) with u the 53-bit uniform carried by words 0..1 of the
// Philox4x32-10 block at (key = seed, counter = (counter, stream)).
// This mapping is frozen: changing it changes every simulation output.
class NoiseSource {
 public:
  NoiseSource(std::uint64_t master_seed, std::uint64_t stream)
      : seed_(master_seed), stream_(stream) {}

  std::uint64_t master_seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  double normal(std::uint64_t counter) const;
  double uniform(std::uint64_t counter) const;  // in (0,1)
  void fill_normals(std::uint64_t counter0, std::span<double> out) const;

  // Stateful cursor over consecutive counters, for callers that just need a
  // sequence. The cursor is plain state; replaying requires the same start.
  double next_normal() { return normal(cursor_++); }
  std::uint64_t cursor() const { return cursor_; }
  void seek(std::uint64_t counter) { cursor_ = counter; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t cursor_ = 0;
};

}  // namespace langstep
