#include "cbs/partition.hpp"

#include <cmath>
#include <string>

#include "cbs/error.hpp"

namespace cbs {

namespace {

struct StartPlane {
  Vec3 origin;
  Vec3 dir;  // unnormalized start tangent; only its sign pattern matters
};

std::vector<StartPlane> start_planes(const std::vector<Curve>& curves) {
  std::vector<StartPlane> planes;
  planes.reserve(curves.size());
  for (const Curve& c : curves) {
    const Vec3 d = curve_derivative(c, 0.0).xyz();
    require_input(norm(d) > 1e-12, "curve has a degenerate start tangent");
    planes.push_back({c.p.front().xyz(), d});
  }
  return planes;
}

// Largest j with every plane k <= j satisfied; -1 when even the first fails.
int label_of(const Vec3& pt, const std::vector<StartPlane>& planes) {
  int label = -1;
  for (size_t j = 0; j < planes.size(); ++j) {
    if (dot(pt - planes[j].origin, planes[j].dir) < 0.0) break;
    label = int(j);
  }
  return label;
}

}  // namespace

std::vector<RegionMembership> Partition::members() const {
  std::vector<RegionMembership> out(size_t(regions));
  for (size_t i = 0; i < omega_label.size(); ++i)
    out[size_t(omega_label[i])].omega.push_back(int(i));
  for (size_t i = 0; i < psi_label.size(); ++i)
    out[size_t(psi_label[i])].psi.push_back(int(i));
  return out;
}

Partition assign_membership(const SolidSamples& solid, const SurfaceSamples& surf,
                            const std::vector<Curve>& curves, const SetupTransform& q) {
  require_input(!curves.empty(), "membership needs at least one curve");
  const std::vector<StartPlane> planes = start_planes(curves);

  Partition part;
  part.regions = int(curves.size());
  part.omega_label.resize(size_t(solid.count()));
  part.psi_label.resize(size_t(surf.count()));

  for (int i = 0; i < solid.count(); ++i) {
    const int lab = label_of(q.apply(solid.p[size_t(i)]), planes);
    require_input(lab >= 0, "setup violation: solid sample " + std::to_string(i) +
                                " lies below the first start plane");
    part.omega_label[size_t(i)] = lab;
  }
  for (int i = 0; i < surf.count(); ++i) {
    const int lab = label_of(q.apply(surf.p[size_t(i)]), planes);
    require_input(lab >= 0, "setup violation: surface sample " + std::to_string(i) +
                                " lies below the first start plane");
    part.psi_label[size_t(i)] = lab;
  }
  return part;
}

std::vector<RegionCheck> check_constraints(const HardDiagnostics& diag, const Partition& part) {
  require_input(part.regions >= 1, "constraint check needs at least one region");
  require_input(diag.printed_time.size() == part.omega_label.size(),
                "diagnostics and partition disagree on the solid sample count");
  require_input(diag.floating.size() == part.psi_label.size(),
                "diagnostics and partition disagree on the surface sample count");

  std::vector<RegionCheck> checks(size_t(part.regions));
  for (int i : diag.unswept) checks[size_t(part.omega_label[size_t(i)])].unswept += 1;
  for (const CollisionEvent& e : diag.collisions) {
    require_input(e.region >= 0 && e.region < part.regions, "collision event region out of range");
    checks[size_t(e.region)].collisions += 1;
  }
  for (const CollisionEvent& e : diag.plate_collisions) {
    require_input(e.region >= 0 && e.region < part.regions,
                  "plate collision event region out of range");
    checks[size_t(e.region)].collisions += 1;
  }
  for (size_t i = 0; i < diag.floating.size(); ++i)
    if (diag.floating[i]) checks[size_t(part.psi_label[i])].floating += 1;
  return checks;
}

int total_violations(const std::vector<RegionCheck>& checks) {
  int total = 0;
  for (const RegionCheck& c : checks) total += c.violations();
  return total;
}

namespace {

// End tangent orthogonal to the mean neighbor offset at the landing sample:
// the penultimate point moves so the endpoint stays exactly on Qq_f.
void land_on_floating(Curve& lower, const SurfaceSamples& surf, const std::vector<int>& floating,
                      const SetupTransform& q) {
  const Vec3 tip = lower.p.back().xyz();
  int best = -1;
  double best_d2 = 0.0;
  for (int i : floating) {
    require_input(i >= 0 && i < surf.count(), "floating sample index out of range");
    const double d2 = norm2(q.apply(surf.p[size_t(i)]) - tip);
    if (best < 0 || d2 < best_d2 || (d2 == best_d2 && i < best)) {
      best = i;
      best_d2 = d2;
    }
  }
  const Vec3 target = q.apply(surf.p[size_t(best)]);
  Vec4& pn = lower.p.back();
  pn = Vec4(target, pn.w);

  // Degree-1 curves have no interior point to adjust without disturbing the
  // start plane.
  if (lower.p.size() < 3) return;
  Vec4& pm = lower.p[lower.p.size() - 2];

  if (size_t(best) >= surf.knn.size()) return;
  const auto& nbrs = surf.knn[size_t(best)];
  if (nbrs.empty()) return;
  Vec3 vbar{0, 0, 0};
  for (int nb : nbrs) vbar += surf.p[size_t(nb)] - surf.p[size_t(best)];
  vbar = q.rot_matrix() * (vbar / double(nbrs.size()));
  const double vlen = norm(vbar);
  if (vlen < 1e-12) return;

  const Vec3 vhat = vbar / vlen;
  const Vec3 d = pn.xyz() - pm.xyz();
  Vec3 dperp = d - vhat * dot(d, vhat);
  if (norm(dperp) < 1e-9 * std::fmax(norm(d), 1.0)) {
    // Approach was parallel to the neighbor plane normal; keep the arrival
    // speed but pick any direction inside the plane.
    const Vec3 seed = std::fabs(vhat.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    dperp = normalized(cross(vhat, seed)) * std::fmax(norm(d), 1e-3);
  }
  pm = Vec4(pn.xyz() - dperp, pm.w);
}

void pull_back_start(Curve& c, double eps) {
  const Vec3 u = c.p[1].xyz() - c.p[0].xyz();
  const double len = norm(u);
  require_input(len > 1e-12, "curve has a degenerate start tangent");
  // Moving p0 straight back along the start tangent keeps its direction.
  c.p[0] = Vec4(c.p[0].xyz() - u * (eps / len), c.p[0].w);
}

}  // namespace

std::vector<Curve> split_curve(const std::vector<Curve>& curves, int j,
                               const SurfaceSamples& surf, const std::vector<int>& floating,
                               const SetupTransform& q, double margin_eps, int max_curves) {
  require_input(!curves.empty(), "splitting needs at least one curve");
  require_input(j >= 0 && j < int(curves.size()), "split index out of range");
  require_input(margin_eps >= 0.0, "margin distance must be non-negative");
  require_input(max_curves >= 2, "curve cap must allow at least two curves");
  if (int(curves.size()) + 1 > max_curves)
    throw InfeasibleError("curve cap reached: splitting region " + std::to_string(j) +
                          " would exceed " + std::to_string(max_curves) + " curves");

  auto halves = curve_subdivide(curves[size_t(j)], 0.5);
  if (!floating.empty()) land_on_floating(halves.first, surf, floating, q);

  std::vector<Curve> out;
  out.reserve(curves.size() + 1);
  out.insert(out.end(), curves.begin(), curves.begin() + j);
  out.push_back(std::move(halves.first));
  out.push_back(std::move(halves.second));
  out.insert(out.end(), curves.begin() + j + 1, curves.end());

  if (margin_eps > 0.0)
    for (size_t k = 1; k < out.size(); ++k) pull_back_start(out[k], margin_eps);
  return out;
}

}  // namespace cbs
