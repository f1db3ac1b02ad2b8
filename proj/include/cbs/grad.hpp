#pragma once

// Design vector (all curves' control points + the setup transform) and the
// reverse-mode gradient of the total loss: kernel adjoints for everything
// flowing through the sweep, hand-derived seeds for the surface terms, and
// frame pullback to control points.

#include <cstdint>
#include <vector>

#include "cbs/losses.hpp"

namespace cbs {

struct DesignVector {
  std::vector<Curve> curves;
  SetupTransform q;
  bool optimize_q = false;
  bool anchored = false;             // first curve launches vertically off the plate
  std::vector<std::uint8_t> frozen;  // per packed scalar, see layout below

  // Layout: per curve, control points in order, 4 scalars each (x,y,z,theta);
  // after all curves, q as (rot.x,rot.y,rot.z, trans.x,trans.y,trans.z).
  int size() const;
  int curve_offset(int j) const;  // packed index of curve j's first scalar
  int q_offset() const { return size() - 6; }
  std::vector<double> pack() const;
  void unpack(const std::vector<double>& v);

  // Re-establishes the anchor after an unconstrained step: p1 back over p0
  // with strictly positive launch height.
  void project();

  // Freezes q when not optimized and anchors the first curve: p0 position
  // frozen on the plate, p1 sharing its x/y so the launch tangent is +z.
  static DesignVector make(std::vector<Curve> curves, const SetupTransform& q, bool optimize_q,
                           bool anchor_first = true);
};

struct RegionMembership {
  std::vector<int> omega;  // solid-sample indices
  std::vector<int> psi;    // surface-sample indices
};

// Switches individual loss terms on/off, for per-term gradient validation.
struct TermMask {
  bool co = true, cp = true, ca = true, fl = true, sq = true;
};

struct GradResult {
  LossReport report;
  std::vector<double> grad;  // size() entries, frozen components exactly 0
};

GradResult loss_and_gradient(const SolidSamples& solid, const SurfaceSamples& surf,
                             const std::vector<RegionMembership>& members,
                             const DesignVector& x, const Environment& env,
                             const LossWeights& weights, const StateParams& sp, int nodes,
                             const TermMask& mask = {});

}  // namespace cbs
