#include "kernels_impl.hpp"

namespace cbs {

namespace {

void forward(const KernelGrid& g, const KernelEnv* env, const StateParams& sp, WMode mode,
             const double* px, const double* py, const double* pz, int count,
             const SweepOutputs& out) {
  detail::sweep_forward_t<simd::pack1>(g, env, sp, mode, px, py, pz, count, out);
}

void adjoint(const KernelGrid& g, const KernelEnv* env, const StateParams& sp, WMode mode,
             const double* px, const double* py, const double* pz, int count,
             const SweepSeeds& seeds, GridAdjoint& ga, double* xbarx, double* xbary,
             double* xbarz) {
  detail::sweep_adjoint_t<simd::pack1>(g, env, sp, mode, px, py, pz, count, seeds, ga, xbarx,
                                       xbary, xbarz);
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{forward, adjoint, "scalar"};
  return table;
}

}  // namespace cbs
