#include "cbs/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cbs/error.hpp"
#include "cbs/state.hpp"

namespace cbs {
namespace {

constexpr double kDirFloor = 1e-6;          // ‖d‖ below this: sample not yet swept
constexpr double kCollisionPeakFlag = 0.25;  // hard flag: peak w·C beyond printed·inside

void check_indices(const std::vector<int>& idx, int count, const char* what) {
  for (int i : idx)
    require_input(i >= 0 && i < count, std::string(what) + " sample index out of range");
}

}  // namespace

double default_cliff_sin() { return std::sin(0.698); }

void validate_weights(const LossWeights& w) {
  require_input(w.w_sq >= 0.0 && w.w_ca >= 0.0 && w.w_gamma >= 0.0,
                "loss weights must be non-negative");
  require_input(w.cliff >= 0.0 && w.cliff < 1.0, "cliff threshold must lie in [0,1)");
}

double LossReport::gamma_sum() const {
  double g = 0.0;
  for (const RegionLosses& r : regions) g += r.gamma();
  return g;
}

RegionSweep sweep_region(const SolidSamples& solid, const std::vector<int>& omega,
                         const SurfaceSamples& surf, const CurveFrames& frames,
                         const SetupTransform& Q, const Environment* env,
                         const StateParams& sp) {
  RegionSweep rs;
  rs.tw = trapezoid_weights(frames.t);
  const KernelGrid grid = kernel_grid(frames, rs.tw);
  const KernelTable& kt = active_kernels();
  const Mat3 R = Q.rot_matrix();

  KernelEnv ke;
  const bool with_env = env && !env->polytopes.empty();
  if (with_env) ke = kernel_env(*env);

  const int no = static_cast<int>(omega.size());
  rs.w.assign(no, 0.0);
  rs.co.assign(no, 0.0);
  rs.co_peak.assign(no, 0.0);
  if (no > 0) {
    std::vector<double> px(no), py(no), pz(no);
    for (int i = 0; i < no; ++i) {
      const Vec3 q = R * solid.p[omega[i]] + Q.translation;
      px[i] = q.x;
      py[i] = q.y;
      pz[i] = q.z;
    }
    SweepOutputs out;
    out.w = rs.w.data();
    if (with_env) {
      out.co = rs.co.data();
      out.co_peak = rs.co_peak.data();
    }
    kt.forward(grid, with_env ? &ke : nullptr, sp, WMode::kSweep, px.data(), py.data(), pz.data(),
               no, out);
  }

  const int ns = surf.count();
  rs.dx.assign(ns, 0.0);
  rs.dy.assign(ns, 0.0);
  rs.dz.assign(ns, 0.0);
  if (ns > 0) {
    std::vector<double> sx(ns), sy(ns), sz(ns);
    for (int i = 0; i < ns; ++i) {
      const Vec3 q = R * surf.p[i] + Q.translation;
      sx[i] = q.x;
      sy[i] = q.y;
      sz[i] = q.z;
    }
    SweepOutputs out;
    out.dx = rs.dx.data();
    out.dy = rs.dy.data();
    out.dz = rs.dz.data();
    kt.forward(grid, nullptr, sp, WMode::kSweep, sx.data(), sy.data(), sz.data(), ns, out);
  }

  // The plate rides the platform directly: Q positions only the model on it,
  // so plate vertices see the pose transforms alone, printed from t = 0.
  if (with_env && env->has_plate) {
    const int nv = static_cast<int>(env->plate.verts.size());
    rs.plate_co.assign(nv, 0.0);
    std::vector<double> vx(nv), vy(nv), vz(nv);
    for (int i = 0; i < nv; ++i) {
      vx[i] = env->plate.verts[i].x;
      vy[i] = env->plate.verts[i].y;
      vz[i] = env->plate.verts[i].z;
    }
    SweepOutputs out;
    out.co = rs.plate_co.data();
    kt.forward(grid, &ke, sp, WMode::kOne, vx.data(), vy.data(), vz.data(), nv, out);
  }
  return rs;
}

RegionLosses assemble_region(const RegionSweep& rs, const std::vector<int>& omega,
                             const SurfaceSamples& surf, const std::vector<int>& psi,
                             const SetupTransform& Q, double cliff_sin, const StateParams& sp,
                             LossReport* diag) {
  RegionLosses rl;
  for (size_t i = 0; i < omega.size(); ++i) {
    rl.co += rs.co[i];
    rl.cp += 1.0 - rs.w[i];
    if (diag && rs.co_peak[i] > kCollisionPeakFlag) diag->collision_flags[omega[i]] = 1;
  }
  for (double pc : rs.plate_co) rl.co += pc;

  if (!psi.empty())
    require_input(surf.knn.size() == surf.p.size() && surf.rho.size() == surf.p.size(),
                  "surface losses need build_knn to fill rho and neighbor lists");
  const Mat3 R = Q.rot_matrix();
  std::vector<double> projs;
  for (int qi : psi) {
    const Vec3 d{rs.dx[qi], rs.dy[qi], rs.dz[qi]};
    const double len = norm(d);
    if (len > kDirFloor) {
      const Vec3 nq = R * surf.n[qi];
      const double cosv = dot(nq, d) / len;
      rl.ca += surf.rho[qi] * std::max(0.0, -cliff_sin - cosv);
      if (surf.quality[qi]) rl.sq += surf.rho[qi] * std::sqrt(cosv * cosv + sp.eps_abs);
      if (diag) diag->cliff_values[qi] = cosv;
    }

    const std::vector<int>& nbr = surf.knn[qi];
    projs.clear();
    double hard_max = -std::numeric_limits<double>::infinity();
    for (int pi : nbr) {
      const Vec3 dp{rs.dx[pi], rs.dy[pi], rs.dz[pi]};
      const double proj = dot(R * (surf.p[qi] - surf.p[pi]), dp);
      projs.push_back(proj);
      hard_max = std::max(hard_max, proj);
    }
    if (!projs.empty()) {
      rl.fl += sigmoid(-lse_max(projs.data(), static_cast<int>(projs.size()), sp.alpha), sp.beta);
      if (diag && hard_max < 0.0) diag->floating_flags[qi] = 1;
    }
  }
  rl.sq *= surf.area_ratio;
  return rl;
}

namespace {

const SurfaceSamples& empty_surface() {
  static const SurfaceSamples s;
  return s;
}

}  // namespace

double collision_loss(const SolidSamples& solid, const std::vector<int>& omega,
                      const CurveFrames& frames, const SetupTransform& Q,
                      const Environment& env, const StateParams& sp) {
  check_indices(omega, solid.count(), "solid");
  const RegionSweep rs = sweep_region(solid, omega, empty_surface(), frames, Q, &env, sp);
  double co = 0.0;
  for (double v : rs.co) co += v;
  for (double v : rs.plate_co) co += v;
  return co;
}

double completeness_loss(const SolidSamples& solid, const std::vector<int>& omega,
                         const CurveFrames& frames, const SetupTransform& Q,
                         const StateParams& sp) {
  check_indices(omega, solid.count(), "solid");
  const RegionSweep rs = sweep_region(solid, omega, empty_surface(), frames, Q, nullptr, sp);
  double cp = 0.0;
  for (double w : rs.w) cp += 1.0 - w;
  return cp;
}

double cliff_angle_loss(const SurfaceSamples& surf, const std::vector<int>& psi,
                        const CurveFrames& frames, const SetupTransform& Q, double cliff_sin,
                        const StateParams& sp) {
  check_indices(psi, surf.count(), "surface");
  const RegionSweep rs = sweep_region(SolidSamples{}, {}, surf, frames, Q, nullptr, sp);
  return assemble_region(rs, {}, surf, psi, Q, cliff_sin, sp, nullptr).ca;
}

double floating_loss(const SurfaceSamples& surf, const std::vector<int>& psi,
                     const CurveFrames& frames, const SetupTransform& Q,
                     const StateParams& sp) {
  check_indices(psi, surf.count(), "surface");
  const RegionSweep rs = sweep_region(SolidSamples{}, {}, surf, frames, Q, nullptr, sp);
  return assemble_region(rs, {}, surf, psi, Q, default_cliff_sin(), sp, nullptr).fl;
}

double surface_quality_loss(const SurfaceSamples& surf, const std::vector<int>& psi,
                            const CurveFrames& frames, const SetupTransform& Q,
                            const StateParams& sp) {
  check_indices(psi, surf.count(), "surface");
  const RegionSweep rs = sweep_region(SolidSamples{}, {}, surf, frames, Q, nullptr, sp);
  return assemble_region(rs, {}, surf, psi, Q, default_cliff_sin(), sp, nullptr).sq;
}

LossReport total_loss(const SolidSamples& solid, const SurfaceSamples& surf,
                      const std::vector<Region>& regions, const SetupTransform& Q,
                      const Environment& env, const LossWeights& weights,
                      const StateParams& sp) {
  validate_weights(weights);
  LossReport report;
  report.floating_flags.assign(surf.count(), 0);
  report.collision_flags.assign(solid.count(), 0);
  report.cliff_values.assign(surf.count(), 0.0);

  for (const Region& region : regions) {
    require_input(region.frames != nullptr, "region without a curve frame grid");
    check_indices(region.omega, solid.count(), "solid");
    check_indices(region.psi, surf.count(), "surface");
    const RegionSweep rs =
        sweep_region(solid, region.omega, surf, *region.frames, Q, &env, sp);
    report.regions.push_back(
        assemble_region(rs, region.omega, surf, region.psi, Q, weights.cliff, sp, &report));
  }

  double total = 0.0;
  for (const RegionLosses& r : report.regions) total += r.objective(weights);
  total += weights.w_gamma * report.gamma_sum();
  report.total = total;
  return report;
}

}  // namespace cbs
