#pragma once

#include "mfmarl/simd/kernels.hpp"

namespace mfmarl::simd::detail {

const KernelTable& scalar_table();
#if defined(MFMARL_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(MFMARL_HAVE_NEON)
const KernelTable& neon_table();
#endif

}  // namespace mfmarl::simd::detail
