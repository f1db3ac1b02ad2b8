#include "cbs/grad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cbs/error.hpp"
#include "cbs/state.hpp"

namespace cbs {
namespace {

constexpr double kDirFloor = 1e-6;  // must match the loss assembly
constexpr double kMinLaunchHeight = 1e-3;

void check_region_indices(const std::vector<int>& idx, int count, const char* what) {
  for (int i : idx)
    require_input(i >= 0 && i < count, std::string(what) + " sample index out of range");
}

}  // namespace

int DesignVector::size() const {
  int n = 6;
  for (const Curve& c : curves) n += 4 * static_cast<int>(c.p.size());
  return n;
}

int DesignVector::curve_offset(int j) const {
  int off = 0;
  for (int i = 0; i < j; ++i) off += 4 * static_cast<int>(curves[i].p.size());
  return off;
}

std::vector<double> DesignVector::pack() const {
  std::vector<double> v;
  v.reserve(size());
  for (const Curve& c : curves)
    for (const Vec4& p : c.p) {
      v.push_back(p.x);
      v.push_back(p.y);
      v.push_back(p.z);
      v.push_back(p.w);
    }
  v.push_back(q.rotation.x);
  v.push_back(q.rotation.y);
  v.push_back(q.rotation.z);
  v.push_back(q.translation.x);
  v.push_back(q.translation.y);
  v.push_back(q.translation.z);
  return v;
}

void DesignVector::unpack(const std::vector<double>& v) {
  require_input(static_cast<int>(v.size()) == size(), "design vector length mismatch");
  size_t i = 0;
  for (Curve& c : curves)
    for (Vec4& p : c.p) {
      p.x = v[i++];
      p.y = v[i++];
      p.z = v[i++];
      p.w = v[i++];
    }
  q.rotation = Vec3{v[i], v[i + 1], v[i + 2]};
  q.translation = Vec3{v[i + 3], v[i + 4], v[i + 5]};
}

void DesignVector::project() {
  if (!anchored) return;
  Curve& c0 = curves.front();
  c0.p[1].x = c0.p[0].x;
  c0.p[1].y = c0.p[0].y;
  if (c0.p[1].z < c0.p[0].z + kMinLaunchHeight) c0.p[1].z = c0.p[0].z + kMinLaunchHeight;
}

DesignVector DesignVector::make(std::vector<Curve> curves, const SetupTransform& q,
                                bool optimize_q, bool anchor_first) {
  require_input(!curves.empty(), "design vector needs at least one curve");
  for (const Curve& c : curves)
    require_input(c.valid(), "design vector curve needs at least two control points");
  DesignVector x;
  x.curves = std::move(curves);
  x.q = q;
  x.optimize_q = optimize_q;
  x.frozen.assign(x.size(), 0);
  if (anchor_first) {
    x.anchored = true;
    Curve& c0 = x.curves.front();
    c0.p[1].x = c0.p[0].x;  // launch tangent along +z
    c0.p[1].y = c0.p[0].y;
    if (c0.p[1].z <= c0.p[0].z) c0.p[1].z = c0.p[0].z + kMinLaunchHeight;
    x.frozen[0] = x.frozen[1] = x.frozen[2] = 1;  // p0 pinned to the plate
    x.frozen[4] = x.frozen[5] = 1;                // p1 x/y tied to p0
  }
  if (!optimize_q)
    for (int k = 0; k < 6; ++k) x.frozen[x.q_offset() + k] = 1;
  return x;
}

GradResult loss_and_gradient(const SolidSamples& solid, const SurfaceSamples& surf,
                             const std::vector<RegionMembership>& members,
                             const DesignVector& x, const Environment& env,
                             const LossWeights& weights, const StateParams& sp, int nodes,
                             const TermMask& mask) {
  validate_weights(weights);
  require_input(members.size() == x.curves.size(),
                "one membership list per curve is required");
  require_input(x.frozen.size() == static_cast<size_t>(x.size()),
                "frozen mask length mismatch");
  for (const Curve& c : x.curves)
    for (const Vec4& p : c.p)
      require_numeric(std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z) &&
                          std::isfinite(p.w),
                      "non-finite control point in design vector");

  GradResult res;
  res.grad.assign(x.size(), 0.0);
  res.report.floating_flags.assign(surf.count(), 0);
  res.report.collision_flags.assign(solid.count(), 0);
  res.report.cliff_values.assign(surf.count(), 0.0);

  const Mat3 R = x.q.rot_matrix();
  const KernelTable& kt = active_kernels();
  KernelEnv ke;
  const bool with_env = !env.polytopes.empty();
  if (with_env) ke = kernel_env(env);
  const int ns = surf.count();

  Vec3 rotbar{0, 0, 0}, trabar{0, 0, 0};

  for (size_t j = 0; j < x.curves.size(); ++j) {
    const RegionMembership& mem = members[j];
    check_region_indices(mem.omega, solid.count(), "solid");
    check_region_indices(mem.psi, ns, "surface");

    const CurveFrames f = build_frames(x.curves[j], nodes);
    const RegionSweep rs = sweep_region(solid, mem.omega, surf, f, x.q, &env, sp);
    RegionLosses rl = assemble_region(rs, mem.omega, surf, mem.psi, x.q, weights.cliff, sp,
                                      &res.report);
    if (!mask.co) rl.co = 0.0;
    if (!mask.cp) rl.cp = 0.0;
    if (!mask.ca) rl.ca = 0.0;
    if (!mask.fl) rl.fl = 0.0;
    if (!mask.sq) rl.sq = 0.0;
    res.report.regions.push_back(rl);

    const KernelGrid grid = kernel_grid(f, rs.tw);
    GridAdjoint ga;
    ga.resize(f.nodes);

    // Solid samples: completeness seeds w, collision seeds the time integral.
    const int no = static_cast<int>(mem.omega.size());
    if (no > 0 && (mask.cp || (mask.co && with_env))) {
      std::vector<double> px(no), py(no), pz(no);
      for (int i = 0; i < no; ++i) {
        const Vec3 p = R * solid.p[mem.omega[i]] + x.q.translation;
        px[i] = p.x;
        py[i] = p.y;
        pz[i] = p.z;
      }
      std::vector<double> wbar, cobar, xbx(no, 0.0), xby(no, 0.0), xbz(no, 0.0);
      SweepSeeds seeds;
      if (mask.cp) {
        wbar.assign(no, -weights.w_gamma);
        seeds.wbar = wbar.data();
      }
      if (mask.co && with_env) {
        cobar.assign(no, weights.w_gamma);
        seeds.cobar = cobar.data();
      }
      kt.adjoint(grid, with_env ? &ke : nullptr, sp, WMode::kSweep, px.data(), py.data(),
                 pz.data(), no, seeds, ga, xbx.data(), xby.data(), xbz.data());
      for (int i = 0; i < no; ++i) {
        const Vec3 xb{xbx[i], xby[i], xbz[i]};
        trabar += xb;
        rotbar += rotate_point_jacobian(x.q.rotation, solid.p[mem.omega[i]]).tmul(xb);
      }
    }

    // Surface samples: hand seeds for cliff / quality / floating, then the
    // kernel adjoint carries them through d into the grid.
    if (ns > 0 && !mem.psi.empty() && (mask.ca || mask.sq || mask.fl)) {
      std::vector<double> dbx(ns, 0.0), dby(ns, 0.0), dbz(ns, 0.0);
      for (int qi : mem.psi) {
        const Vec3 d{rs.dx[qi], rs.dy[qi], rs.dz[qi]};
        const double len = norm(d);
        if (len > kDirFloor && (mask.ca || mask.sq)) {
          const Vec3 dhat = d / len;
          const Vec3 nq = R * surf.n[qi];
          const double cosv = dot(nq, dhat);
          double cbar = 0.0;  // d(total)/d(cosv)
          if (mask.ca && -weights.cliff - cosv > 0.0) cbar -= weights.w_ca * surf.rho[qi];
          if (mask.sq && surf.quality[qi])
            cbar += weights.w_sq * surf.area_ratio * surf.rho[qi] * cosv /
                    std::sqrt(cosv * cosv + sp.eps_abs);
          if (cbar != 0.0) {
            const Vec3 dterm = (nq - dhat * cosv) * (cbar / len);
            dbx[qi] += dterm.x;
            dby[qi] += dterm.y;
            dbz[qi] += dterm.z;
            rotbar += rotate_point_jacobian(x.q.rotation, surf.n[qi]).tmul(dhat * cbar);
          }
        }
        if (mask.fl && !surf.knn[qi].empty()) {
          const std::vector<int>& nbr = surf.knn[qi];
          const int k = static_cast<int>(nbr.size());
          std::vector<double> projs(k);
          for (int t = 0; t < k; ++t) {
            const int pi = nbr[t];
            projs[t] = dot(R * (surf.p[qi] - surf.p[pi]),
                           Vec3{rs.dx[pi], rs.dy[pi], rs.dz[pi]});
          }
          const double L = lse_max(projs.data(), k, sp.alpha);
          const double sdot = sigmoid_dot(-L, sp.beta);
          // softmax over neighbors; normalized to guard roundoff
          double wsum = 0.0;
          std::vector<double> wsm(k);
          for (int t = 0; t < k; ++t) {
            wsm[t] = std::exp(sp.alpha * (projs[t] - L));
            wsum += wsm[t];
          }
          const double scale = -weights.w_gamma * sdot / wsum;
          for (int t = 0; t < k; ++t) {
            const int pi = nbr[t];
            const double pbar = scale * wsm[t];
            if (pbar == 0.0) continue;
            const Vec3 v = surf.p[qi] - surf.p[pi];
            const Vec3 dp{rs.dx[pi], rs.dy[pi], rs.dz[pi]};
            const Vec3 rv = R * v;
            dbx[pi] += pbar * rv.x;
            dby[pi] += pbar * rv.y;
            dbz[pi] += pbar * rv.z;
            rotbar += rotate_point_jacobian(x.q.rotation, v).tmul(dp * pbar);
          }
        }
      }

      std::vector<double> sx(ns), sy(ns), sz(ns);
      for (int i = 0; i < ns; ++i) {
        const Vec3 p = R * surf.p[i] + x.q.translation;
        sx[i] = p.x;
        sy[i] = p.y;
        sz[i] = p.z;
      }
      std::vector<double> xbx(ns, 0.0), xby(ns, 0.0), xbz(ns, 0.0);
      SweepSeeds seeds;
      seeds.dxbar = dbx.data();
      seeds.dybar = dby.data();
      seeds.dzbar = dbz.data();
      kt.adjoint(grid, nullptr, sp, WMode::kSweep, sx.data(), sy.data(), sz.data(), ns, seeds,
                 ga, xbx.data(), xby.data(), xbz.data());
      for (int i = 0; i < ns; ++i) {
        const Vec3 xb{xbx[i], xby[i], xbz[i]};
        if (xb.x == 0.0 && xb.y == 0.0 && xb.z == 0.0) continue;
        trabar += xb;
        rotbar += rotate_point_jacobian(x.q.rotation, surf.p[i]).tmul(xb);
      }
    }

    // Plate vertices ride the poses directly; their positions are constant,
    // so only the grid adjoint is collected.
    if (mask.co && with_env && env.has_plate && !env.plate.verts.empty()) {
      const int nv = static_cast<int>(env.plate.verts.size());
      std::vector<double> vx(nv), vy(nv), vz(nv), cobar(nv, weights.w_gamma);
      for (int i = 0; i < nv; ++i) {
        vx[i] = env.plate.verts[i].x;
        vy[i] = env.plate.verts[i].y;
        vz[i] = env.plate.verts[i].z;
      }
      SweepSeeds seeds;
      seeds.cobar = cobar.data();
      kt.adjoint(grid, &ke, sp, WMode::kOne, vx.data(), vy.data(), vz.data(), nv, seeds, ga,
                 nullptr, nullptr, nullptr);
    }

    std::vector<Vec4> pbar(x.curves[j].p.size(), Vec4{0, 0, 0, 0});
    frames_pullback(f, ga, pbar.data());
    const int off = x.curve_offset(static_cast<int>(j));
    for (size_t k = 0; k < pbar.size(); ++k) {
      res.grad[off + 4 * k + 0] = pbar[k].x;
      res.grad[off + 4 * k + 1] = pbar[k].y;
      res.grad[off + 4 * k + 2] = pbar[k].z;
      res.grad[off + 4 * k + 3] = pbar[k].w;
    }
  }

  const int qo = x.q_offset();
  res.grad[qo + 0] = rotbar.x;
  res.grad[qo + 1] = rotbar.y;
  res.grad[qo + 2] = rotbar.z;
  res.grad[qo + 3] = trabar.x;
  res.grad[qo + 4] = trabar.y;
  res.grad[qo + 5] = trabar.z;

  for (int i = 0; i < x.size(); ++i)
    if (x.frozen[i]) res.grad[i] = 0.0;

  double total = 0.0;
  for (const RegionLosses& r : res.report.regions) total += r.objective(weights);
  total += weights.w_gamma * res.report.gamma_sum();
  res.report.total = total;

  require_numeric(std::isfinite(total), "non-finite total loss");
  for (double g : res.grad)
    require_numeric(std::isfinite(g), "non-finite gradient component");
  return res;
}

}  // namespace cbs
