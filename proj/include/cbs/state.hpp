#pragma once

#include <vector>

#include "cbs/frames.hpp"
#include "cbs/kernels.hpp"

namespace cbs {

// Reference (single-point, plain libm) implementations of the smoothed
// printing-state fields. Batched evaluation with identical semantics goes
// through the state kernels; equivalence is tested.

// Overflow-safe 1/(1 + exp(-beta x)) and its x-derivative beta·sig·(1-sig).
double sigmoid(double x, double beta);
double sigmoid_dot(double x, double beta);

// Smooth max: max-shifted (1/alpha)·log Σ exp(alpha·v_i). Exact for n = 1;
// bounded by max(v) + log(n)/alpha.
double lse_max(const double* v, int n, double alpha);
double lse_max(const std::vector<double>& v, double alpha);

// Uniform time grid on [0,1] with trapezoid quadrature weights.
struct TimeGrid {
  std::vector<double> t;
  std::vector<double> weights;
};
TimeGrid uniform_time_grid(int nodes);

// Smoothed contact state: sigmoid-derivative bump at the plane through c(t)
// (unit-tangent signed distance, so beta acts per mm) times the smoothed
// effective-area factor R_delta built on the rolled axes. Peak beta/4.
double contact_smooth(const Vec3& q, const FrameSample& f, const StateParams& sp);

// Printed-state weight w(q,t) ∈ [0,1]: accumulated plane-crossing mass over
// grid nodes with t_i <= t, clamped. Monotone nondecreasing in t.
double printed_state(const Vec3& q, const CurveFrames& f, double t, const StateParams& sp);

// Local printing direction d(q), unnormalized crossing-weighted tangent sum.
Vec3 local_print_dir(const Vec3& q, const CurveFrames& f, const StateParams& sp);

// ‖d‖ guard: points with ‖d‖ <= 1e-6 were never swept and have no usable
// direction; normalized_dir applies the same floor to the denominator.
bool swept(const Vec3& d);
Vec3 normalized_dir(const Vec3& d);

}  // namespace cbs
