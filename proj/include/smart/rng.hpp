#ifndef SMART_RNG_HPP
#define SMART_RNG_HPP

#include "smart/numeric.hpp"

#include <cstdint>

namespace smart {

/// Counter-based generator: the n-th draw is a pure function of (seed, n).
/// Callers own their state; there is no global stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0, std::uint64_t counter = 0) : seed_(seed), counter_(counter) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64();
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

  Tensor uniform_tensor(Index rows, Index cols, double lo, double hi);
  Tensor normal_tensor(Index rows, Index cols, double sd = 1.0);

  /// Independent stream keyed by `stream`; does not advance this generator.
  Rng derive(std::uint64_t stream) const;

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace smart

#endif  // SMART_RNG_HPP
