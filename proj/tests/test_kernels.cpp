#include <random>
#include <vector>

#include "doctest.h"
#include "lmdiff/kernels.hpp"

using namespace lmdiff::kernels;

namespace {

const KernelTable* simd_or_skip() {
  const KernelTable* t = avx2_table();
  if (t == nullptr) MESSAGE("AVX2 variant unavailable on this host; equivalence checks skipped");
  return t;
}

std::vector<double> random_values(std::mt19937_64& rng, std::size_t n, bool with_ties) {
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  std::vector<double> v(n);
  for (auto& x : v) x = with_ties ? std::round(u(rng)) : u(rng);
  return v;
}

}  // namespace

TEST_CASE("kernels: scalar table is always present and active() picks a table") {
  CHECK(scalar_table().isa == Isa::Scalar);
  const auto& a = active();
  CHECK((a.isa == Isa::Scalar || a.isa == Isa::Avx2));
}

TEST_CASE("kernels: avx2 matches scalar bit-for-bit on every kernel") {
  const KernelTable* simd = simd_or_skip();
  if (simd == nullptr) return;
  const KernelTable& ref = scalar_table();
  std::mt19937_64 rng(1234);

  for (std::size_t n = 1; n <= 67; ++n) {
    for (bool ties : {false, true}) {
      auto v = random_values(rng, n, ties);
      CHECK(simd->max_value(v) == ref.max_value(v));

      std::vector<double> o1(n), o2(n);
      const double s1 = ref.exp_shifted(v, 0.7, ref.max_value(v), o1);
      const double s2 = simd->exp_shifted(v, 0.7, ref.max_value(v), o2);
      CHECK(s1 == s2);
      CHECK(o1 == o2);

      ref.scale(o1, 1.0 / s1);
      simd->scale(o2, 1.0 / s2);
      CHECK(o1 == o2);

      for (std::size_t t = 0; t < n; ++t) REQUIRE(simd->count_preceding(v, t) == ref.count_preceding(v, t));

      std::vector<float> fa(n), fb(n);
      for (std::size_t i = 0; i < n; ++i) {
        fa[i] = static_cast<float>(v[i]);
        fb[i] = static_cast<float>(v[n - 1 - i]);
      }
      std::vector<double> d1(n), d2(n);
      ref.diff_f32(fa, fb, d1);
      simd->diff_f32(fa, fb, d2);
      CHECK(d1 == d2);

      std::vector<std::uint32_t> ra(n), rb(n);
      for (std::size_t i = 0; i < n; ++i) {
        ra[i] = 1 + static_cast<std::uint32_t>(rng() % 120);
        rb[i] = 1 + static_cast<std::uint32_t>(rng() % 120);
      }
      std::vector<std::int64_t> r1(n), c1(n), r2(n), c2(n);
      ref.rank_diff_u32(ra, rb, 50, r1, c1);
      simd->rank_diff_u32(ra, rb, 50, r2, c2);
      CHECK(r1 == r2);
      CHECK(c1 == c2);
    }
  }
}

TEST_CASE("kernels: count_missing agrees across variants for assorted overlaps") {
  const KernelTable* simd = simd_or_skip();
  if (simd == nullptr) return;
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t k = 1 + rng() % 20;
    std::vector<std::uint32_t> pool(60);
    for (std::uint32_t i = 0; i < pool.size(); ++i) pool[i] = i * 7 + 3;
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<std::uint32_t> a(pool.begin(), pool.begin() + static_cast<long>(k));
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<std::uint32_t> b(pool.begin(), pool.begin() + static_cast<long>(k));
    REQUIRE(simd->count_missing_u32(a, b) == scalar_table().count_missing_u32(a, b));
  }
}

TEST_CASE("kernels: count_preceding counts ties below the target only") {
  const std::vector<double> v{0.25, 0.25, 0.25, 0.25};
  CHECK(scalar_table().count_preceding(v, 0) == 0);
  CHECK(scalar_table().count_preceding(v, 2) == 2);
  if (const auto* simd = avx2_table()) CHECK(simd->count_preceding(v, 3) == 3);
}
