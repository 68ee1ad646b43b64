#include "postpi/random.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace postpi {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t(kPhiloxM0) * ctr[0];
    const std::uint64_t p1 = std::uint64_t(kPhiloxM1) * ctr[2];
    const auto hi0 = std::uint32_t(p0 >> 32), lo0 = std::uint32_t(p0);
    const auto hi1 = std::uint32_t(p1 >> 32), lo1 = std::uint32_t(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

RngSeed derive_seed(const RngSeed& parent, std::uint64_t purpose,
                    std::uint64_t stream_index) {
  std::uint64_t h = splitmix64(parent.base_seed);
  h = splitmix64(h ^ parent.stream_index);
  h = splitmix64(h ^ (purpose + 0x5851F42D4C957F2Dull));
  return RngSeed{h, stream_index};
}

void CounterRng::refill() {
  const std::array<std::uint32_t, 4> counter{
      std::uint32_t(block_), std::uint32_t(block_ >> 32),
      std::uint32_t(seed_.stream_index), std::uint32_t(seed_.stream_index >> 32)};
  const std::array<std::uint32_t, 2> key{std::uint32_t(seed_.base_seed),
                                         std::uint32_t(seed_.base_seed >> 32)};
  const auto out = philox4x32_10(counter, key);
  ++block_;
  buffer_[0] = (std::uint64_t(out[1]) << 32) | out[0];
  buffer_[1] = (std::uint64_t(out[3]) << 32) | out[2];
  buffered_ = 2;
}

std::uint64_t CounterRng::next_u64() {
  if (buffered_ == 0) refill();
  return buffer_[2 - buffered_--];
}

double CounterRng::uniform() {
  return (double(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::standard_normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  // Box-Muller; uniform() never returns 0 so the log is finite.
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_normal_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::uint64_t CounterRng::below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("CounterRng::below: bound is 0");
  // Lemire's multiply-shift with rejection.
  std::uint64_t x = next_u64();
  unsigned __int128 m = (unsigned __int128)x * bound;
  auto low = std::uint64_t(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      x = next_u64();
      m = (unsigned __int128)x * bound;
      low = std::uint64_t(m);
    }
  }
  return std::uint64_t(m >> 64);
}

RealVector sample_standard_normal(const RngSeed& seed, std::size_t m) {
  if (m == 0) throw std::invalid_argument("sample_standard_normal: m must be >= 1");
  CounterRng rng(seed);
  RealVector out(static_cast<Eigen::Index>(m));
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = rng.standard_normal();
  return out;
}

RealMatrix sample_bivariate_normal(const RngSeed& seed, std::size_t m,
                                   double rho) {
  if (!(std::abs(rho) < 1.0))
    throw std::invalid_argument("sample_bivariate_normal: |rho| must be < 1");
  if (m == 0) throw std::invalid_argument("sample_bivariate_normal: m must be >= 1");
  CounterRng rng(seed);
  const double tail = std::sqrt(1.0 - rho * rho);
  RealMatrix out(static_cast<Eigen::Index>(m), 2);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double z1 = rng.standard_normal();
    const double w = rng.standard_normal();
    out(i, 0) = z1;
    out(i, 1) = rho * z1 + tail * w;
  }
  return out;
}

}  // namespace postpi
