#include "lmdiff/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace lmdiff::kernels {
namespace {

double max_value(std::span<const double> values) {
  double m = values[0];
  for (double v : values) m = std::max(m, v);
  return m;
}

double exp_shifted(std::span<const double> in, double scale, double shift, std::span<double> out) {
  double sum = 0.0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = std::exp((in[i] - shift) * scale);
    sum += out[i];
  }
  return sum;
}

void scale(std::span<double> values, double factor) {
  for (double& v : values) v *= factor;
}

std::uint64_t count_preceding(std::span<const double> values, std::size_t target) {
  const double t = values[target];
  std::uint64_t n = 0;
  for (std::size_t j = 0; j < target; ++j) n += values[j] >= t;
  for (std::size_t j = target + 1; j < values.size(); ++j) n += values[j] > t;
  return n;
}

void diff_f32(std::span<const float> a, std::span<const float> b, std::span<double> out) {
  for (std::size_t i = 0; i < a.size(); ++i)
    out[i] = static_cast<double>(a[i]) - static_cast<double>(b[i]);
}

void rank_diff_u32(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b,
                   std::uint32_t cap, std::span<std::int64_t> out,
                   std::span<std::int64_t> clamped_out) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    out[i] = static_cast<std::int64_t>(b[i]) - static_cast<std::int64_t>(a[i]);
    clamped_out[i] = static_cast<std::int64_t>(std::min(b[i], cap)) -
                     static_cast<std::int64_t>(std::min(a[i], cap));
  }
}

std::uint32_t count_missing_u32(std::span<const std::uint32_t> a,
                                std::span<const std::uint32_t> b) {
  std::uint32_t missing = 0;
  for (std::uint32_t x : a) missing += std::find(b.begin(), b.end(), x) == b.end();
  return missing;
}

constexpr KernelTable kScalar{
    Isa::Scalar,   &max_value,     &exp_shifted,       &scale,
    &count_preceding, &diff_f32,   &rank_diff_u32,     &count_missing_u32,
};

}  // namespace

const KernelTable& scalar_table() noexcept { return kScalar; }

}  // namespace lmdiff::kernels
