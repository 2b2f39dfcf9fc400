// Compiled with -mavx2. Only reached after a runtime CPU check.
#include "lmdiff/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <bit>
#include <cmath>

namespace lmdiff::kernels::avx2 {
namespace {

double max_value(std::span<const double> values) {
  const std::size_t n = values.size();
  std::size_t i = 0;
  double m = values[0];
  if (n >= 4) {
    __m256d acc = _mm256_loadu_pd(values.data());
    for (i = 4; i + 4 <= n; i += 4) acc = _mm256_max_pd(acc, _mm256_loadu_pd(values.data() + i));
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    m = std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
  }
  for (; i < n; ++i) m = std::max(m, values[i]);
  return m;
}

double exp_shifted(std::span<const double> in, double scale, double shift, std::span<double> out) {
  const std::size_t n = in.size();
  const __m256d vshift = _mm256_set1_pd(shift);
  const __m256d vscale = _mm256_set1_pd(scale);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d x = _mm256_sub_pd(_mm256_loadu_pd(in.data() + i), vshift);
    _mm256_storeu_pd(out.data() + i, _mm256_mul_pd(x, vscale));
  }
  for (; i < n; ++i) out[i] = (in[i] - shift) * scale;
  // Sequential sum keeps the result identical to the reference.
  double sum = 0.0;
  for (i = 0; i < n; ++i) {
    out[i] = std::exp(out[i]);
    sum += out[i];
  }
  return sum;
}

void scale(std::span<double> values, double factor) {
  const std::size_t n = values.size();
  const __m256d f = _mm256_set1_pd(factor);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(values.data() + i, _mm256_mul_pd(_mm256_loadu_pd(values.data() + i), f));
  for (; i < n; ++i) values[i] *= factor;
}

template <int Predicate>
std::uint64_t count_cmp(const double* p, std::size_t n, double t) {
  const __m256d vt = _mm256_set1_pd(t);
  std::uint64_t count = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const int mask = _mm256_movemask_pd(_mm256_cmp_pd(_mm256_loadu_pd(p + i), vt, Predicate));
    count += static_cast<std::uint64_t>(std::popcount(static_cast<unsigned>(mask)));
  }
  for (; i < n; ++i) {
    if constexpr (Predicate == _CMP_GE_OQ) count += p[i] >= t;
    else count += p[i] > t;
  }
  return count;
}

std::uint64_t count_preceding(std::span<const double> values, std::size_t target) {
  const double t = values[target];
  return count_cmp<_CMP_GE_OQ>(values.data(), target, t) +
         count_cmp<_CMP_GT_OQ>(values.data() + target + 1, values.size() - target - 1, t);
}

void diff_f32(std::span<const float> a, std::span<const float> b, std::span<double> out) {
  const std::size_t n = a.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d va = _mm256_cvtps_pd(_mm_loadu_ps(a.data() + i));
    __m256d vb = _mm256_cvtps_pd(_mm_loadu_ps(b.data() + i));
    _mm256_storeu_pd(out.data() + i, _mm256_sub_pd(va, vb));
  }
  for (; i < n; ++i) out[i] = static_cast<double>(a[i]) - static_cast<double>(b[i]);
}

void rank_diff_u32(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b,
                   std::uint32_t cap, std::span<std::int64_t> out,
                   std::span<std::int64_t> clamped_out) {
  const std::size_t n = a.size();
  const __m128i vcap = _mm_set1_epi32(static_cast<int>(cap));
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m128i va = _mm_loadu_si128(reinterpret_cast<const __m128i*>(a.data() + i));
    const __m128i vb = _mm_loadu_si128(reinterpret_cast<const __m128i*>(b.data() + i));
    const __m256i wa = _mm256_cvtepu32_epi64(va);
    const __m256i wb = _mm256_cvtepu32_epi64(vb);
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(out.data() + i), _mm256_sub_epi64(wb, wa));
    const __m256i ca = _mm256_cvtepu32_epi64(_mm_min_epu32(va, vcap));
    const __m256i cb = _mm256_cvtepu32_epi64(_mm_min_epu32(vb, vcap));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(clamped_out.data() + i),
                        _mm256_sub_epi64(cb, ca));
  }
  for (; i < n; ++i) {
    out[i] = static_cast<std::int64_t>(b[i]) - static_cast<std::int64_t>(a[i]);
    clamped_out[i] = static_cast<std::int64_t>(std::min(b[i], cap)) -
                     static_cast<std::int64_t>(std::min(a[i], cap));
  }
}

std::uint32_t count_missing_u32(std::span<const std::uint32_t> a,
                                std::span<const std::uint32_t> b) {
  const std::size_t nb = b.size();
  std::uint32_t missing = 0;
  for (std::uint32_t x : a) {
    const __m256i vx = _mm256_set1_epi32(static_cast<int>(x));
    bool found = false;
    std::size_t j = 0;
    for (; j + 8 <= nb && !found; j += 8) {
      const __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b.data() + j));
      found = _mm256_movemask_epi8(_mm256_cmpeq_epi32(vb, vx)) != 0;
    }
    for (; j < nb && !found; ++j) found = b[j] == x;
    missing += !found;
  }
  return missing;
}

}  // namespace

extern const KernelTable kTable;
const KernelTable kTable{
    Isa::Avx2,        &max_value, &exp_shifted,   &scale,
    &count_preceding, &diff_f32,  &rank_diff_u32, &count_missing_u32,
};

}  // namespace lmdiff::kernels::avx2
