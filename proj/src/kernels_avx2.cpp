// Compiled with -mavx2 -mfma on x86-64; falls back to an empty table
// elsewhere. Runtime selection lives in kernels_dispatch.cpp.

#include "kernels_impl.hpp"

#if defined(__AVX2__)

namespace cbs {

namespace {

void forward(const KernelGrid& g, const KernelEnv* env, const StateParams& sp, WMode mode,
             const double* px, const double* py, const double* pz, int count,
             const SweepOutputs& out) {
  detail::sweep_forward_t<simd::pack4>(g, env, sp, mode, px, py, pz, count, out);
}

void adjoint(const KernelGrid& g, const KernelEnv* env, const StateParams& sp, WMode mode,
             const double* px, const double* py, const double* pz, int count,
             const SweepSeeds& seeds, GridAdjoint& ga, double* xbarx, double* xbary,
             double* xbarz) {
  detail::sweep_adjoint_t<simd::pack4>(g, env, sp, mode, px, py, pz, count, seeds, ga, xbarx,
                                       xbary, xbarz);
}

}  // namespace

const KernelTable* avx2_kernels() {
  static const KernelTable table{forward, adjoint, "avx2"};
  return &table;
}

}  // namespace cbs

#else

namespace cbs {
const KernelTable* avx2_kernels() { return nullptr; }
}  // namespace cbs

#endif
