#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <set>
#include <vector>

#include "spectrum/rng.hpp"

using namespace spectrum;

TEST_CASE("streams are deterministic and independent") {
  RngStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  std::vector<std::uint64_t> va, vb, vc, vd;
  for (int i = 0; i < 64; ++i) {
    va.push_back(a.next_u64());
    vb.push_back(b.next_u64());
    vc.push_back(c.next_u64());
    vd.push_back(d.next_u64());
  }
  CHECK(va == vb);
  CHECK(va != vc);
  CHECK(va != vd);
}

TEST_CASE("uniform doubles live in the half-open unit interval") {
  RngStream r(1, 0);
  double lo = 1.0, hi = 0.0, sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    double u = r.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  CHECK(sum / n == Catch::Approx(0.5).margin(0.01));
  CHECK(lo < 0.01);
  CHECK(hi > 0.99);
}

TEST_CASE("bounded draws cover their range without bias") {
  RngStream r(9, 3);
  std::vector<int> counts(10, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    std::uint64_t k = r.uniform_below(10);
    REQUIRE(k < 10);
    ++counts[static_cast<std::size_t>(k)];
  }
  for (int c : counts) CHECK(c == Catch::Approx(n / 10.0).epsilon(0.05));
  CHECK(r.uniform_below(1) == 0);
}

TEST_CASE("mix64 scrambles nearby inputs") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(mix64(i));
  CHECK(seen.size() == 1000);
  CHECK(mix64(0) != 0);
}
