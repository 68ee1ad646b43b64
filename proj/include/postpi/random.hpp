#pragma once

#include "postpi/numerics.hpp"

#include <array>
#include <cstddef>
#include <cstdint>

namespace postpi {

/// Identifies one independent random stream. Every draw is a pure function
/// of (base_seed, stream_index, position in the stream).
struct RngSeed {
  std::uint64_t base_seed = 0;
  std::uint64_t stream_index = 0;

  friend bool operator==(const RngSeed&, const RngSeed&) = default;
};

/// Key for a child stream family. Children of the same parent with different
/// `purpose` values never collide with each other or with the parent's own
/// streams (up to 64-bit hash collisions).
RngSeed derive_seed(const RngSeed& parent, std::uint64_t purpose,
                    std::uint64_t stream_index = 0);

/// Philox4x32-10 keyed by base_seed; the 128-bit counter is
/// (stream_index, block number).
class CounterRng {
 public:
  explicit CounterRng(const RngSeed& seed) : seed_(seed) {}

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1) with 53 bits of resolution.
  double uniform();
  double standard_normal();
  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);

  const RngSeed& seed() const noexcept { return seed_; }

 private:
  void refill();

  RngSeed seed_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// Raw Philox4x32-10 block function, exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

RealVector sample_standard_normal(const RngSeed& seed, std::size_t m);

/// m draws of (Z1, Z2) with unit variances and correlation rho, built as
/// Z2 = rho*Z1 + sqrt(1 - rho^2)*W.
RealMatrix sample_bivariate_normal(const RngSeed& seed, std::size_t m,
                                   double rho);

}  // namespace postpi
