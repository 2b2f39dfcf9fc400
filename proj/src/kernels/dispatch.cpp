#include <cstdlib>
#include <cstring>

#include "lmdiff/kernels.hpp"

namespace lmdiff::kernels {

#ifdef LMDIFF_HAVE_AVX2
namespace avx2 {
extern const KernelTable kTable;
}
#endif

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "unknown";
}

const KernelTable* avx2_table() noexcept {
#ifdef LMDIFF_HAVE_AVX2
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &avx2::kTable : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() noexcept {
  static const KernelTable& table = [&]() -> const KernelTable& {
    const char* forced = std::getenv("LMDIFF_SIMD");
    if (forced != nullptr && std::strcmp(forced, "scalar") == 0) return scalar_table();
    if (const KernelTable* t = avx2_table()) return *t;
    return scalar_table();
  }();
  return table;
}

}  // namespace lmdiff::kernels
