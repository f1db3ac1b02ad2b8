#pragma once

#include <utility>
#include <vector>

#include "cbs/vec.hpp"

namespace cbs {

// 4D Bézier trajectory: spatial path (mm) plus roll angle about the tangent
// (rad) as the fourth component. Degree = p.size()-1, default degree 5.
struct Curve {
  std::vector<Vec4> p;

  int degree() const { return int(p.size()) - 1; }
  bool valid() const;  // ≥2 control points, non-degenerate spatial arc
};

// de Casteljau evaluation of all four components. t ∈ [0,1].
Vec4 curve_eval(const Curve& c, double t);

// Hodograph: d/dt of all four components, per unit t.
Vec4 curve_derivative(const Curve& c, double t);

// Exact split: left covers [0,t], right covers [t,1], both same degree.
std::pair<Curve, Curve> curve_subdivide(const Curve& c, double t = 0.5);

// Bernstein basis row B_k^n(t), k = 0..degree. B must hold degree+1 values.
void bernstein_row(int degree, double t, double* B);

// Per-control-point weights of the derivative:
// dB[k] = n·(B_{k-1}^{n-1}(t) − B_k^{n-1}(t)),  ċ(t) = Σ_k dB[k]·p_k.
void bernstein_deriv_row(int degree, double t, double* dB);

// Straight vertical curve from z=0 to z=z_top, θ≡0, evenly spaced points.
Curve vertical_curve(double z_top, int degree = 5);

}  // namespace cbs
