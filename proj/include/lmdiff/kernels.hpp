#pragma once

// Data-parallel inner loops used by the measure and prediction code.
//
// Every kernel has a scalar reference implementation. Vectorized variants are
// compiled per instruction set and picked once at startup from the CPU's
// feature flags; all variants must return bit-identical results to the
// scalar reference (tests/test_kernels.cpp enforces this).

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace lmdiff::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa) noexcept;

struct KernelTable {
  Isa isa;

  /// Largest element. Input must be non-empty.
  double (*max_value)(std::span<const double> values);

  /// out[i] = exp(scale * (in[i] - shift)), returns the sum of out.
  /// Exponentiation stays scalar in every variant; only the tail loops differ.
  double (*exp_shifted)(std::span<const double> in, double scale, double shift,
                        std::span<double> out);

  /// values[i] *= factor.
  void (*scale)(std::span<double> values, double factor);

  /// Number of j with values[j] > values[target], plus the number of j < target
  /// with values[j] == values[target].
  std::uint64_t (*count_preceding)(std::span<const double> values, std::size_t target);

  /// out[i] = a[i] - b[i] (float inputs widened to double before subtracting).
  void (*diff_f32)(std::span<const float> a, std::span<const float> b, std::span<double> out);

  /// out[i] = int64(b[i]) - int64(a[i]) and clamped_out[i] = min(b[i],cap) - min(a[i],cap).
  void (*rank_diff_u32)(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b,
                        std::uint32_t cap, std::span<std::int64_t> out,
                        std::span<std::int64_t> clamped_out);

  /// Count of elements of `a` absent from `b`. Elements of each side are distinct.
  std::uint32_t (*count_missing_u32)(std::span<const std::uint32_t> a,
                                     std::span<const std::uint32_t> b);
};

const KernelTable& scalar_table() noexcept;

/// Returns nullptr when the variant is not compiled in or the CPU lacks it.
const KernelTable* avx2_table() noexcept;

/// The table selected for this process. `LMDIFF_SIMD=scalar` in the
/// environment forces the reference path.
const KernelTable& active() noexcept;

}  // namespace lmdiff::kernels
