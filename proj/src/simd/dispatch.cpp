#include "vamct/simd/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string_view>

namespace vamct::simd {

#if defined(VAMCT_HAVE_AVX2)
const Kernels& avx2_kernels_impl();
#endif

const Kernels* avx2_kernels() {
#if defined(VAMCT_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &avx2_kernels_impl() : nullptr;
#else
  return nullptr;
#endif
}

namespace {

const Kernels* detect() {
  if (const char* env = std::getenv("VAMCT_SIMD")) {
    std::string_view want(env);
    if (want == "scalar") return &scalar_kernels();
    if (want == "avx2" && avx2_kernels()) return avx2_kernels();
  }
  if (const Kernels* k = avx2_kernels()) return k;
  return &scalar_kernels();
}

std::atomic<const Kernels*>& current() {
  static std::atomic<const Kernels*> k{detect()};
  return k;
}

}  // namespace

const Kernels& active_kernels() { return *current().load(std::memory_order_relaxed); }

bool select_kernels(std::string_view name) {
  if (name == "scalar") {
    current() = &scalar_kernels();
    return true;
  }
  if (name == "avx2" && avx2_kernels()) {
    current() = avx2_kernels();
    return true;
  }
  return false;
}

}  // namespace vamct::simd
