#pragma once

// State kernels: for a batch of points, sweep the printing plane along a
// frame grid and accumulate the printed state w, the local printing
// direction d, and the environment-collision integral, plus the reverse
// (adjoint) pass. Scalar and AVX2 variants are selected at runtime and are
// equivalence-tested against each other.

#include <string>
#include <vector>

#include "cbs/frames.hpp"

namespace cbs {

struct KernelGrid {
  int n = 0;
  const double* t = nullptr;
  const double *cx = nullptr, *cy = nullptr, *cz = nullptr;
  const double *tx = nullptr, *ty = nullptr, *tz = nullptr;
  const double *nx = nullptr, *ny = nullptr, *nz = nullptr;
  const double *bx = nullptr, *by = nullptr, *bz = nullptr;
  const double* tw = nullptr;  // trapezoid weights for the collision time integral
};

KernelGrid kernel_grid(const CurveFrames& f, const std::vector<double>& trap_weights);
std::vector<double> trapezoid_weights(const std::vector<double>& t);

// Half-space sets in WCS coordinates (x along rolled n, y along rolled b,
// z along the tangent), flattened over polytopes.
struct KernelEnv {
  int npoly = 0;
  std::vector<int> row_begin;            // npoly+1 offsets
  std::vector<double> ax, ay, az, off;   // unit rows and offsets b
};

struct StateParams {
  double alpha = 1e3;
  double beta = 1e3;
  double rx = 72.0;
  double ry = 40.5;
  double eps_abs = 1e-9;  // |x|_ε = sqrt(x² + eps_abs)
};

// Plate vertices are "printed from t=0": their state weight is pinned to 1.
enum class WMode { kSweep, kOne };

// All arrays have `count` entries; null pointers are skipped.
struct SweepOutputs {
  double* w = nullptr;
  double* dx = nullptr;
  double* dy = nullptr;
  double* dz = nullptr;
  double* co = nullptr;       // Σ_i tw_i · w_i · C_i
  double* co_peak = nullptr;  // max_i w_i · C_i (diagnostic, not differentiated)
};

struct SweepSeeds {
  const double* wbar = nullptr;
  const double* dxbar = nullptr;
  const double* dybar = nullptr;
  const double* dzbar = nullptr;
  const double* cobar = nullptr;
};

using SweepForwardFn = void (*)(const KernelGrid&, const KernelEnv*, const StateParams&, WMode,
                                const double* px, const double* py, const double* pz, int count,
                                const SweepOutputs& out);
using SweepAdjointFn = void (*)(const KernelGrid&, const KernelEnv*, const StateParams&, WMode,
                                const double* px, const double* py, const double* pz, int count,
                                const SweepSeeds& seeds, GridAdjoint& ga, double* xbarx,
                                double* xbary, double* xbarz);

struct KernelTable {
  SweepForwardFn forward = nullptr;
  SweepAdjointFn adjoint = nullptr;
  const char* name = "";
};

const KernelTable& scalar_kernels();
const KernelTable* avx2_kernels();  // null when unsupported or not built

// Active table: AVX2 when the CPU supports it, unless overridden by
// set_kernel_backend("scalar"|"avx2"|"auto") or env CBS_KERNEL.
const KernelTable& active_kernels();
void set_kernel_backend(const std::string& name);
std::string kernel_backend_name();

}  // namespace cbs
