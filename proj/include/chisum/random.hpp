#pragma once

// Counter-based generator: output k of stream (seed, stream) is the SplitMix64
// finalizer applied to key + k * golden-gamma, where the key hashes seed and
// stream. Any sample can be regenerated from (seed, stream, k) alone, so
// parallel runs split into fixed streams reproduce bit for bit.

#include <cstdint>

namespace chisum {

std::uint64_t splitmix64_mix(std::uint64_t z) noexcept;

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept;

  std::uint64_t next() noexcept;
  /// Uniform on (0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Standard normal by the Box-Muller transform.
  double normal() noexcept;

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0;
  bool has_spare_ = false;
};

}  // namespace chisum
