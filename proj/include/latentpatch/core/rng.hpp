#pragma once

#include <cstdint>

namespace lp {

std::uint64_t mix64(std::uint64_t x);

// Derives a stream id from up to three indices, e.g. (iteration, member,
// scene). Distinct tuples map to distinct streams with overwhelming
// probability.
std::uint64_t stream_id(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

// Counter-based generator: output k of stream (seed, stream) is
// mix64(key + k * golden), so any member of a population can be sampled
// independently of evaluation order. Identical (seed, stream) pairs give
// identical sequences on every platform.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  std::uint64_t next_u64();
  // Uniform on [0,1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  // Standard normal via Box-Muller.
  double normal();

  Rng derive(std::uint64_t stream) const { return Rng(seed_, stream); }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace lp
