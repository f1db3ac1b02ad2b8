#pragma once

// Region membership under the ordered start-plane half-spaces, per-region
// hard-constraint verdicts, and curve splitting with the floating and margin
// heuristics that seed the children for re-optimization.

#include <vector>

#include "cbs/oracle.hpp"

namespace cbs {

struct Partition {
  std::vector<int> omega_label;  // per solid sample, region index
  std::vector<int> psi_label;    // per surface sample
  int regions = 0;

  // Inverse lists, sample indices ascending within each region.
  std::vector<RegionMembership> members() const;
};

// Labels every sample with the largest region j whose cumulative start-plane
// conditions hold: (Qq - c_k(0)) . dc_k(0) >= 0 for every k <= j. The last
// region carries no upper bound. A sample failing the first curve's plane is
// printable by no region and aborts with a setup violation.
Partition assign_membership(const SolidSamples& solid, const SurfaceSamples& surf,
                            const std::vector<Curve>& curves, const SetupTransform& q);

struct RegionCheck {
  int floating = 0;
  int collisions = 0;  // model events plus plate events charged to the sweeping curve
  int unswept = 0;

  bool pass() const { return floating == 0 && collisions == 0 && unswept == 0; }
  int violations() const { return floating + collisions + unswept; }
};

// Bins the exact-oracle counts by region. Verdicts come from the hard
// detectors alone; smoothed loss values never enter.
std::vector<RegionCheck> check_constraints(const HardDiagnostics& diag, const Partition& part);

int total_violations(const std::vector<RegionCheck>& checks);

// Replaces curves[j] by its two halves (exact subdivision at t=0.5). When
// region j reported floating samples, the lower child's endpoint moves onto
// the nearest one (ties: smallest index) and its end tangent is made
// orthogonal to the mean neighbor offset there. Afterwards every curve past
// the first gets its start pulled back by margin_eps along its own start
// tangent so neighboring regions overlap. Roll angles are inherited from the
// subdivision throughout.
std::vector<Curve> split_curve(const std::vector<Curve>& curves, int j,
                               const SurfaceSamples& surf, const std::vector<int>& floating,
                               const SetupTransform& q, double margin_eps, int max_curves);

}  // namespace cbs
