#pragma once

// Dense double-precision kernels used by the hot loops (agent views, network
// forward/backward passes, L1 distances). Each kernel has a scalar reference
// implementation and optional vector variants; the variant is chosen once at
// startup from CPU features and can be forced with MFMARL_SIMD=scalar|avx2|neon.

#include <cstddef>
#include <span>
#include <string_view>

namespace mfmarl::simd {

enum class Backend { kScalar, kAvx2, kNeon };

struct KernelTable {
  Backend backend;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y = A x, A row-major rows x cols
  void (*gemv)(const double* a, std::size_t rows, std::size_t cols,
               const double* x, double* y);
  // y = A^T x, A row-major rows x cols
  void (*gemv_t)(const double* a, std::size_t rows, std::size_t cols,
                 const double* x, double* y);
  // sum_i |a[i] - b[i]|
  double (*l1_diff)(const double* a, const double* b, std::size_t n);
  // sum_i a[i]
  double (*sum)(const double* a, std::size_t n);
};

std::string_view backend_name(Backend b);

// Compiled in and supported by the running CPU.
bool backend_available(Backend b);

// Throws InputError when the backend is unavailable.
const KernelTable& kernels_for(Backend b);

const KernelTable& active_kernels();

// Test hook. Throws InputError when the backend is unavailable.
void set_active_backend(Backend b);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active_kernels().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active_kernels().axpy(alpha, x.data(), y.data(), x.size());
}

inline void gemv(std::span<const double> a, std::size_t rows, std::size_t cols,
                 std::span<const double> x, std::span<double> y) {
  active_kernels().gemv(a.data(), rows, cols, x.data(), y.data());
}

inline void gemv_t(std::span<const double> a, std::size_t rows,
                   std::size_t cols, std::span<const double> x,
                   std::span<double> y) {
  active_kernels().gemv_t(a.data(), rows, cols, x.data(), y.data());
}

inline double l1_diff(std::span<const double> a, std::span<const double> b) {
  return active_kernels().l1_diff(a.data(), b.data(), a.size());
}

inline double sum(std::span<const double> a) {
  return active_kernels().sum(a.data(), a.size());
}

}  // namespace mfmarl::simd
