#pragma once

// The five manufacturing losses and their per-region aggregation: collision,
// completeness, and floating prevention form the hard-constraint group Γ_j;
// cliff angle and surface quality form the soft objective L_j. Smoothed
// terms are evaluated on the sweep kernels' time grid.

#include <cstdint>
#include <vector>

#include "cbs/env.hpp"
#include "cbs/frames.hpp"
#include "cbs/kernels.hpp"
#include "cbs/sampling.hpp"

namespace cbs {

// sin(0.698 rad): the 40° material cliff-angle bound, compared against n·d̂.
double default_cliff_sin();

struct LossWeights {
  double w_sq = 0.1;
  double w_ca = 1.0;
  double w_gamma = 100.0;
  double cliff = default_cliff_sin();  // threshold compared against n·d̂
};
void validate_weights(const LossWeights& w);

struct RegionLosses {
  double co = 0.0, cp = 0.0, ca = 0.0, fl = 0.0, sq = 0.0;

  double gamma() const { return co + cp + fl; }
  double objective(const LossWeights& w) const { return w.w_sq * sq + w.w_ca * ca; }
};

struct LossReport {
  std::vector<RegionLosses> regions;
  double total = 0.0;
  // Hard per-sample detectors, sized to the full sample sets.
  std::vector<std::uint8_t> floating_flags;   // surface: below all neighbors along d
  std::vector<std::uint8_t> collision_flags;  // solid: peak printed·inside product > 0.25
  std::vector<double> cliff_values;           // surface: n·d̂, 0 when unswept

  double gamma_sum() const;
};

// One region of the partition: its curve's frame grid plus sample indices.
struct Region {
  const CurveFrames* frames = nullptr;
  std::vector<int> omega;  // indices into the solid set
  std::vector<int> psi;    // indices into the surface set
};

// Forward sweep of one curve, cached for loss assembly and reused by the
// gradient pass. d is evaluated at every surface sample because k-NN
// neighborhoods cross region boundaries.
struct RegionSweep {
  std::vector<double> w, co, co_peak;  // per region solid sample
  std::vector<double> dx, dy, dz;      // per surface sample (all of them)
  std::vector<double> plate_co;        // per plate vertex, printed state pinned to 1
  std::vector<double> tw;              // trapezoid weights of the time grid
};
RegionSweep sweep_region(const SolidSamples& solid, const std::vector<int>& omega,
                         const SurfaceSamples& surf, const CurveFrames& frames,
                         const SetupTransform& Q, const Environment* env,
                         const StateParams& sp);

// Assembles the five per-region sums from one cached sweep. When diag is
// given, hard per-sample detectors are written into its arrays.
RegionLosses assemble_region(const RegionSweep& rs, const std::vector<int>& omega,
                             const SurfaceSamples& surf, const std::vector<int>& psi,
                             const SetupTransform& Q, double cliff_sin, const StateParams& sp,
                             LossReport* diag);

double collision_loss(const SolidSamples& solid, const std::vector<int>& omega,
                      const CurveFrames& frames, const SetupTransform& Q,
                      const Environment& env, const StateParams& sp);
double completeness_loss(const SolidSamples& solid, const std::vector<int>& omega,
                         const CurveFrames& frames, const SetupTransform& Q,
                         const StateParams& sp);
double cliff_angle_loss(const SurfaceSamples& surf, const std::vector<int>& psi,
                        const CurveFrames& frames, const SetupTransform& Q, double cliff_sin,
                        const StateParams& sp);
double floating_loss(const SurfaceSamples& surf, const std::vector<int>& psi,
                     const CurveFrames& frames, const SetupTransform& Q,
                     const StateParams& sp);
double surface_quality_loss(const SurfaceSamples& surf, const std::vector<int>& psi,
                            const CurveFrames& frames, const SetupTransform& Q,
                            const StateParams& sp);

LossReport total_loss(const SolidSamples& solid, const SurfaceSamples& surf,
                      const std::vector<Region>& regions, const SetupTransform& Q,
                      const Environment& env, const LossWeights& weights,
                      const StateParams& sp);

}  // namespace cbs
