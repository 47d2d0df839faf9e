#pragma once

#include <cstdint>

namespace mt2st {

/**
 * Deterministic random stream (splitmix64). Every source of randomness in the
 * library draws from one of these so that runs are reproducible bit-for-bit
 * and independent of the standard library's distribution implementations.
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  // Uniform in [0, 1), 53-bit resolution.
  double next_unit();

  // Standard normal via Marsaglia's polar method.
  double next_normal();

  // Uniform integer in [0, n). n must be nonzero.
  std::uint64_t next_index(std::uint64_t n);

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Stable derivation of substream seeds (per layer, per step, per task...).
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c);
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                       std::uint64_t d);

}  // namespace mt2st
