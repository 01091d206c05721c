#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rfcast/grid.hpp"

namespace rfcast {

/// Counter-based generator. Word i of the stream (i = 1, 2, ...) is
///
///   mix64(key + i * 0x9E3779B97F4A7C15),   key = mix64(seed)
///
/// where mix64 is the SplitMix64 finalizer. Normals use Box-Muller on pairs
/// of uniforms u = (word >> 11) * 2^-53. Only integer arithmetic feeds the
/// uniform stream, so it is identical on every platform.
///
/// Single-owner: parallel work derives child generators with `child`.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1).
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n); n must be positive.
  std::size_t index(std::size_t n) noexcept;
  double normal() noexcept;

  /// Independent generator for (this seed, stream); does not advance *this.
  Rng child(std::uint64_t stream) const noexcept { return Rng(derive_seed(seed_, stream)); }

  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;
  static std::uint64_t mix64(std::uint64_t z) noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// i.i.d. standard normal grid.
Grid gaussian_sample(Rng& rng, std::size_t rows, std::size_t cols);
std::vector<double> gaussian_vector(Rng& rng, std::size_t n);

}  // namespace rfcast
