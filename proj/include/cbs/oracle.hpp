#pragma once

// Exact, non-smoothed reference checks: first-passage printing state on a
// dense grid, strict polytope containment, and hard floating/cliff/collision
// detectors. No smoothing parameter enters any computation here.

#include <optional>
#include <string>
#include <vector>

#include "cbs/env.hpp"
#include "cbs/grad.hpp"

namespace cbs {

struct EffectiveArea {
  double rx = 72.0;
  double ry = 40.5;
};

// First exact passage of the printing plane over a point: the first grid
// interval whose plane offset changes sign from >= 0 to < 0 while the point
// sits inside the hard reach rectangle at either flank.
struct Passage {
  double t;  // grid time of the first node past the plane
  int node;  // index of that node in the dense grid
};

std::optional<Passage> exact_state(const Vec3& q, const CurveFrames& dense,
                                   const EffectiveArea& ea);
// Convenience: builds a dense grid of (nodes-1)*factor+1 nodes internally.
std::optional<Passage> exact_state(const Vec3& q, const Curve& curve, int nodes,
                                   const EffectiveArea& ea, int dense_factor);

// Distance (mm) from q's sweep to the nearest state decision boundary: the
// smallest node plane offset plus, around sign-change intervals, the
// reach-rectangle margins across the covering coarse interval (`stride`
// dense nodes per coarse one). Crossings with mixed in/out reach return 0:
// there the smooth gate genuinely averages. Smooth and hard state agree
// wherever this margin exceeds a few sigmoid transition widths.
double state_margin(const Vec3& q, const CurveFrames& dense, const EffectiveArea& ea,
                    int stride = 4);

struct ContainmentResult {
  bool inside;   // strictly inside: max_k(a_k . x + b_k) < 0
  double depth;  // -max_k(a_k . x + b_k); positive inside
};
ContainmentResult exact_containment(const Vec3& x, const Polytope& poly);

// Samples whose neighbors all lie strictly above along the sample's own
// print direction. Samples without a direction or neighbors never flag.
std::vector<int> detect_floating(const SurfaceSamples& surf, const std::vector<int>& psi,
                                 const std::vector<Vec3>& lpd, double tol = 1e-9);

// Solid samples with no exact passage event.
std::vector<int> coverage_check(const SolidSamples& solid, const std::vector<int>& omega,
                                const CurveFrames& dense, const EffectiveArea& ea);

struct CollisionEvent {
  int sample;  // solid-sample index (plate-vertex index in plate_collisions)
  int polytope;
  int region;  // index of the curve whose sweep produced the event
  double t;    // first offending grid time
};

struct HardDiagnostics {
  std::vector<double> printed_time;    // per solid sample, -1 = never printed
  std::vector<int> unswept;            // solid samples with no passage
  std::vector<std::uint8_t> floating;  // per surface sample
  std::vector<double> cliff_deg;       // per surface sample, NaN without direction
  std::vector<CollisionEvent> collisions;        // first event per (sample, polytope)
  std::vector<CollisionEvent> plate_collisions;  // first event per (vertex, polytope)

  bool hard_ok() const {
    return unswept.empty() && collisions.empty() && plate_collisions.empty() &&
           std::find(floating.begin(), floating.end(), std::uint8_t(1)) == floating.end();
  }
};

// Runs every hard check over a region partition: passage per solid sample,
// printed-pose containment against the environment (model samples after
// their passage, plate vertices from the start), floating and cliff angles
// for surface samples from the hard first-passage direction.
HardDiagnostics hard_diagnostics(const SolidSamples& solid, const SurfaceSamples& surf,
                                 const std::vector<RegionMembership>& members,
                                 const std::vector<Curve>& curves, const SetupTransform& q,
                                 const Environment& env, const EffectiveArea& ea,
                                 int smooth_nodes, int dense_factor = 4);

std::string diagnostics_json(const HardDiagnostics& d);

}  // namespace cbs
