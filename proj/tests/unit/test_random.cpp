#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "postpi/random.hpp"

#include <cmath>
#include <set>

using namespace postpi;

namespace {

double correlation(const RealVector& a, const RealVector& b) {
  const RealVector ac = a.array() - a.mean();
  const RealVector bc = b.array() - b.mean();
  return ac.dot(bc) / std::sqrt(ac.squaredNorm() * bc.squaredNorm());
}

}  // namespace

TEST_CASE("philox4x32-10 known-answer vectors") {
  using Block = std::array<std::uint32_t, 4>;
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) ==
        Block{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                      {0xffffffff, 0xffffffff}) ==
        Block{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                      {0xa4093822, 0x299f31d0}) ==
        Block{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("same seed gives bitwise identical draws") {
  const RngSeed seed{123, 4};
  const RealVector a = sample_standard_normal(seed, 1000);
  const RealVector b = sample_standard_normal(seed, 1000);
  CHECK(a == b);
  CHECK(sample_bivariate_normal(seed, 200, 0.3) == sample_bivariate_normal(seed, 200, 0.3));
}

TEST_CASE("different streams give different sequences") {
  const RealVector a = sample_standard_normal({123, 0}, 64);
  const RealVector b = sample_standard_normal({123, 1}, 64);
  const RealVector c = sample_standard_normal({124, 0}, 64);
  CHECK(a != b);
  CHECK(a != c);
  CHECK((a - b).cwiseAbs().minCoeff() > 0.0);
}

TEST_CASE("derived seeds separate purposes and streams") {
  const RngSeed parent{7, 3};
  std::set<std::pair<std::uint64_t, std::uint64_t>> seen;
  for (std::uint64_t purpose = 0; purpose < 20; ++purpose)
    for (std::uint64_t s = 0; s < 20; ++s) {
      const RngSeed d = derive_seed(parent, purpose, s);
      CHECK(d == derive_seed(parent, purpose, s));
      seen.insert({d.base_seed, d.stream_index});
    }
  CHECK(seen.size() == 400);
  CHECK(derive_seed(parent, 1) != derive_seed({7, 4}, 1));
}

TEST_CASE("standard normal moments over 1e5 draws") {
  const RealVector z = sample_standard_normal({2024, 0}, 100000);
  const double mean = z.mean();
  const double var = (z.array() - mean).square().sum() / double(z.size() - 1);
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("uniform and bounded integer draws") {
  CounterRng rng({99, 0});
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / 100000.0 - 0.5) < 0.005);

  std::array<int, 7> counts{};
  for (int i = 0; i < 70000; ++i) {
    const auto k = rng.below(7);
    REQUIRE(k < 7);
    ++counts[k];
  }
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
  CHECK(rng.below(1) == 0);
}

TEST_CASE("bivariate normal correlation") {
  struct Case {
    double rho, tol;
  };
  for (const Case c : {Case{0.0, 0.03}, Case{0.5, 0.03}, Case{0.99, 0.01}}) {
    CAPTURE(c.rho);
    const RealMatrix z = sample_bivariate_normal({31, 2}, 100000, c.rho);
    REQUIRE(z.cols() == 2);
    CHECK(std::abs(correlation(z.col(0), z.col(1)) - c.rho) < c.tol);
    for (int j = 0; j < 2; ++j) {
      const RealVector col = z.col(j);
      const double mean = col.mean();
      CHECK(std::abs(mean) < 0.02);
      CHECK(std::abs((col.array() - mean).square().mean() - 1.0) < 0.03);
    }
  }
}

TEST_CASE("bivariate normal rejects |rho| >= 1") {
  CHECK_THROWS(sample_bivariate_normal({1, 0}, 10, 1.0));
  CHECK_THROWS(sample_bivariate_normal({1, 0}, 10, -1.5));
}
