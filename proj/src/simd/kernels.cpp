#include <atomic>
#include <cstdlib>
#include <string>

#include "kernels_internal.hpp"
#include "mfmarl/errors.hpp"

namespace mfmarl::simd {
namespace {

bool cpu_supports(Backend b) {
  switch (b) {
    case Backend::kScalar:
      return true;
    case Backend::kAvx2:
#if defined(MFMARL_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Backend::kNeon:
#if defined(MFMARL_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable* choose_initial() {
  if (const char* forced = std::getenv("MFMARL_SIMD")) {
    const std::string name(forced);
    for (Backend b : {Backend::kScalar, Backend::kAvx2, Backend::kNeon}) {
      if (name == backend_name(b) && cpu_supports(b)) return &kernels_for(b);
    }
  }
  if (cpu_supports(Backend::kAvx2)) return &kernels_for(Backend::kAvx2);
  if (cpu_supports(Backend::kNeon)) return &kernels_for(Backend::kNeon);
  return &kernels_for(Backend::kScalar);
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{choose_initial()};
  return slot;
}

}  // namespace

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::kScalar:
      return "scalar";
    case Backend::kAvx2:
      return "avx2";
    case Backend::kNeon:
      return "neon";
  }
  return "unknown";
}

bool backend_available(Backend b) { return cpu_supports(b); }

const KernelTable& kernels_for(Backend b) {
  if (!cpu_supports(b)) {
    throw InputError("SIMD backend '" + std::string(backend_name(b)) +
                     "' is not available on this build/CPU");
  }
  switch (b) {
#if defined(MFMARL_HAVE_AVX2)
    case Backend::kAvx2:
      return detail::avx2_table();
#endif
#if defined(MFMARL_HAVE_NEON)
    case Backend::kNeon:
      return detail::neon_table();
#endif
    default:
      return detail::scalar_table();
  }
}

const KernelTable& active_kernels() {
  return *active_slot().load(std::memory_order_acquire);
}

void set_active_backend(Backend b) {
  active_slot().store(&kernels_for(b), std::memory_order_release);
}

}  // namespace mfmarl::simd
