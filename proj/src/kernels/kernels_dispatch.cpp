#include <cstdlib>
#include <string_view>

#include "glocal/kernels.hpp"

namespace glocal::kernels {

#if defined(GLOCAL_HAVE_AVX2)
namespace detail {
const KernelSet& avx2_set();
}

const KernelSet* avx2() {
#if defined(__GNUC__)
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  static const bool supported = false;
#endif
  return supported ? &detail::avx2_set() : nullptr;
}
#else
const KernelSet* avx2() { return nullptr; }
#endif

const KernelSet& active() {
  static const KernelSet& chosen = [] () -> const KernelSet& {
    const char* forced = std::getenv("GLOCAL_KERNELS");
    if (forced != nullptr && std::string_view(forced) == "scalar") return scalar();
    if (const KernelSet* fast = avx2()) return *fast;
    return scalar();
  }();
  return chosen;
}

}  // namespace glocal::kernels
