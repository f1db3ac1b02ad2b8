#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <json.hpp>

#include "cbs/env.hpp"
#include "cbs/error.hpp"
#include "cbs/losses.hpp"
#include "cbs/meshgen.hpp"
#include "cbs/oracle.hpp"
#include "cbs/rng.hpp"
#include "cbs/state.hpp"
#include "test_util.hpp"

using namespace cbs;

namespace {

const SetupTransform kIdentityQ{};

std::vector<int> all_indices(int n) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

// Surface set straight from sphere-mesh vertices with exact sphere normals.
SurfaceSamples sphere_surface(const Vec3& center, double radius, int subdiv, int k = 12) {
  const Mesh m = make_icosphere(center, radius, subdiv);
  SurfaceSamples s;
  s.p = m.v;
  for (const Vec3& v : m.v) s.n.push_back((v - center) * (1.0 / norm(v - center)));
  s.quality.assign(s.p.size(), 1);
  s.area_ratio = 1.0;
  build_knn(s, k);
  return s;
}

int argmin_z(const std::vector<Vec3>& pts, int begin, int end) {
  int best = begin;
  for (int i = begin; i < end; ++i)
    if (pts[size_t(i)].z < pts[size_t(best)].z) best = i;
  return best;
}

}  // namespace

TEST_CASE("exact state: linear passage, reach gating, dense-grid contract") {
  const Curve c = vertical_curve(10.0);
  const EffectiveArea ea{2.0, 2.0};

  const auto mid = exact_state(Vec3{0, 0, 5}, c, 65, ea, 4);
  REQUIRE(bool(mid));
  CHECK(std::fabs(mid->t - 0.5) <= 1.0 / 256.0);

  // The dense grid refines the smooth one in place.
  const CurveFrames dense = build_frames(c, 257);
  const CurveFrames smooth = build_frames(c, 65);
  CHECK(dense.t[4] == smooth.t[1]);
  const auto same = exact_state(Vec3{0, 0, 5}, dense, ea);
  REQUIRE(bool(same));
  CHECK(same->t == mid->t);
  CHECK(dense.t[same->node] == same->t);

  CHECK_FALSE(exact_state(Vec3{0, 0, 20}, c, 65, ea, 4));  // plane never reaches it
  CHECK_FALSE(exact_state(Vec3{5, 0, 5}, c, 65, ea, 4));   // outside the reach rectangle
  CHECK_FALSE(exact_state(Vec3{0, 3, 5}, c, 65, ea, 4));

  CHECK_THROWS_WITH_AS(exact_state(Vec3{0, 0, 5}, c, 65, ea, 2), doctest::Contains("4x"),
                       InputError);
}

TEST_CASE("exact containment: strictness and agreement with analytic shapes") {
  const Polytope cube = box_polytope(Vec3{-0.5, -0.5, -0.5}, Vec3{0.5, 0.5, 0.5});
  const ContainmentResult center = exact_containment(Vec3{0, 0, 0}, cube);
  CHECK(center.inside);
  CHECK(center.depth == 0.5);

  const ContainmentResult face = exact_containment(Vec3{0.5, 0, 0}, cube);
  CHECK_FALSE(face.inside);  // boundary is not strictly inside
  CHECK(face.depth == 0.0);

  const ContainmentResult out = exact_containment(Vec3{0.7, 0, 0}, cube);
  CHECK_FALSE(out.inside);
  CHECK(out.depth == doctest::Approx(-0.2));

  // Against analytic predicates on 1000 random points each.
  Rng rng(31);
  const Polytope box = box_polytope(Vec3{-1, -1, -1}, Vec3{2, 2, 2});
  for (int i = 0; i < 1000; ++i) {
    const Vec3 p{rng.uniform(-2.0, 3.0), rng.uniform(-2.0, 3.0), rng.uniform(-2.0, 3.0)};
    const bool analytic = p.x > -1 && p.x < 2 && p.y > -1 && p.y < 2 && p.z > -1 && p.z < 2;
    CHECK(exact_containment(p, box).inside == analytic);
  }

  const double s3 = std::sqrt(3.0);
  Polytope tetra;
  tetra.a = {Vec3{-1, 0, 0}, Vec3{0, -1, 0}, Vec3{0, 0, -1}, Vec3{1 / s3, 1 / s3, 1 / s3}};
  tetra.b = {0.0, 0.0, 0.0, -2.0 / s3};
  finalize_polytope(tetra, "tetra");
  for (int i = 0; i < 1000; ++i) {
    const Vec3 p{rng.uniform(-0.5, 2.5), rng.uniform(-0.5, 2.5), rng.uniform(-0.5, 2.5)};
    const bool analytic = p.x > 0 && p.y > 0 && p.z > 0 && p.x + p.y + p.z < 2;
    CHECK(exact_containment(p, tetra).inside == analytic);
  }
}

TEST_CASE("floating detector: pole flags, coplanar stays clean") {
  const SurfaceSamples sphere = sphere_surface(Vec3{0, 0, 6}, 2.0, 2);
  const int n = sphere.count();
  const int pole = argmin_z(sphere.p, 0, n);
  // The bottom pole must be a strict minimum for this fixture to make sense.
  double second = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i)
    if (i != pole) second = std::min(second, sphere.p[size_t(i)].z);
  REQUIRE(second > sphere.p[size_t(pole)].z + 1e-6);

  std::vector<Vec3> lpd(size_t(n), Vec3{0, 0, 1});
  const std::vector<int> flagged = detect_floating(sphere, all_indices(n), lpd);
  REQUIRE(flagged.size() == 1);
  CHECK(flagged[0] == pole);

  // Samples printed perpendicular to a plane of coplanar neighbors: the
  // strict inequality never fires on the zero offsets.
  SurfaceSamples plane;
  for (int ix = 0; ix < 5; ++ix)
    for (int iy = 0; iy < 5; ++iy) {
      plane.p.push_back(Vec3{double(ix), double(iy), 0.0});
      plane.n.push_back(Vec3{0, 0, -1});
    }
  plane.quality.assign(plane.p.size(), 1);
  build_knn(plane, 6);
  std::vector<Vec3> up(plane.p.size(), Vec3{0, 0, 1});
  CHECK(detect_floating(plane, all_indices(plane.count()), up).empty());

  // No direction, no flag -- even for the pole.
  std::vector<Vec3> none(size_t(n), Vec3{0, 0, 0});
  CHECK(detect_floating(sphere, all_indices(n), none).empty());

  CHECK_THROWS_WITH_AS(detect_floating(sphere, {0}, {Vec3{0, 0, 1}}),
                       doctest::Contains("one print direction"), InputError);
}

TEST_CASE("floating detector: eight hanging lobes flag exactly eight points") {
  SurfaceSamples lobes;
  const int per = int(make_icosphere(Vec3{0, 0, 0}, 0.8, 2).v.size());
  for (int b = 0; b < 8; ++b) {
    const double ang = 2.0 * std::numbers::pi * b / 8.0;
    const Vec3 center{3.0 * std::cos(ang), 3.0 * std::sin(ang), 4.0};
    const SurfaceSamples s = sphere_surface(center, 0.8, 2);
    lobes.p.insert(lobes.p.end(), s.p.begin(), s.p.end());
    lobes.n.insert(lobes.n.end(), s.n.begin(), s.n.end());
  }
  lobes.quality.assign(lobes.p.size(), 1);
  build_knn(lobes, 12);

  std::vector<Vec3> lpd(lobes.p.size(), Vec3{0, 0, 1});
  const std::vector<int> flagged = detect_floating(lobes, all_indices(lobes.count()), lpd);
  REQUIRE(flagged.size() == 8);
  for (int b = 0; b < 8; ++b) {
    const int pole = argmin_z(lobes.p, b * per, (b + 1) * per);
    CHECK(std::find(flagged.begin(), flagged.end(), pole) != flagged.end());
  }
}

TEST_CASE("coverage check: full sweep covers, half-height sweep lists the top") {
  SolidSamples solid;
  for (int ix = 0; ix < 6; ++ix)
    for (int iy = 0; iy < 6; ++iy)
      for (int iz = 0; iz < 10; ++iz)
        solid.p.push_back(Vec3{-1.0 + 0.4 * ix, -1.0 + 0.4 * iy, 0.25 + 0.97 * iz});
  const EffectiveArea ea{40.0, 40.0};

  const CurveFrames full = build_frames(vertical_curve(12.0), 257);
  CHECK(coverage_check(solid, all_indices(solid.count()), full, ea).empty());

  const CurveFrames half = build_frames(vertical_curve(5.0), 257);
  const std::vector<int> unswept = coverage_check(solid, all_indices(solid.count()), half, ea);
  int expect = 0;
  for (const Vec3& p : solid.p)
    if (p.z > 5.0) ++expect;
  CHECK(int(unswept.size()) == expect);
  for (int i : unswept) CHECK(solid.p[size_t(i)].z > 5.0);
  const double frac = double(unswept.size()) / double(solid.count());
  CHECK(std::fabs(frac - 0.5) < 0.05);

  CHECK(coverage_check(solid, {}, half, ea).empty());
}

TEST_CASE("hard and smooth state agree away from decision margins") {
  Rng rng(99);
  const StateParams sp{1e3, 1e3, 6.0, 5.0, 1e-9};
  const EffectiveArea ea{sp.rx, sp.ry};
  int checked = 0, skipped = 0, printed = 0;

  for (int trial = 0; trial < 5; ++trial) {
    const Curve c = testutil::random_traj_curve(rng, 14.0);
    const CurveFrames smooth = build_frames(c, 65);
    const CurveFrames dense = build_frames(c, 257);

    SolidSamples pts;
    for (int i = 0; i < 100; ++i)
      pts.p.push_back(
          Vec3{rng.uniform(-8.0, 8.0), rng.uniform(-8.0, 8.0), rng.uniform(-2.0, 16.0)});
    const RegionSweep rs = sweep_region(pts, all_indices(100), SurfaceSamples{}, smooth,
                                        kIdentityQ, nullptr, sp);
    for (int i = 0; i < 100; ++i) {
      if (state_margin(pts.p[size_t(i)], dense, ea) * sp.beta < 3.0) {
        ++skipped;
        continue;
      }
      const double hard = exact_state(pts.p[size_t(i)], dense, ea) ? 1.0 : 0.0;
      CAPTURE(trial);
      CAPTURE(i);
      CHECK(std::fabs(rs.w[size_t(i)] - hard) < 0.05);
      ++checked;
      printed += hard > 0.5;
    }
  }
  CHECK(checked >= 350);  // the carve-out must stay a small minority
  CHECK(printed >= 50);   // both outcomes well represented
  CHECK(checked - printed >= 50);
}

TEST_CASE("hard diagnostics: passage times, collisions, plate events") {
  SolidSamples solid;
  solid.p = {Vec3{0, 0, 1}};
  SurfaceSamples surf;  // none
  const std::vector<Curve> curves{vertical_curve(20.0)};
  std::vector<RegionMembership> members(1);
  members[0].omega = {0};

  Environment env;
  env.polytopes.push_back(box_polytope(Vec3{-1, -1, -18.5}, Vec3{1, 1, -2}));
  const EffectiveArea ea;

  HardDiagnostics d =
      hard_diagnostics(solid, surf, members, curves, kIdentityQ, env, ea, 65, 4);
  CHECK(d.unswept.empty());
  CHECK(std::fabs(d.printed_time[0] - 0.05) <= 1.0 / 256.0);  // plane crosses z=1 at t=1/20
  REQUIRE(d.collisions.size() == 1);
  CHECK(d.collisions[0].sample == 0);
  CHECK(d.collisions[0].polytope == 0);
  // Sample enters the obstacle once it trails the plane by 2mm: z(t)=3.
  CHECK(std::fabs(d.collisions[0].t - 0.15) <= 1.0 / 256.0);
  CHECK_FALSE(d.hard_ok());

  // Same sweep against a laterally clear obstacle: no events at all.
  Environment clear;
  clear.polytopes.push_back(box_polytope(Vec3{4, -1, -18.5}, Vec3{6, 1, -2}));
  const HardDiagnostics ok =
      hard_diagnostics(solid, surf, members, curves, kIdentityQ, clear, ea, 65, 4);
  CHECK(ok.collisions.empty());
  CHECK(ok.hard_ok());

  // Plate corners ride through an off-axis slab from t=0.
  Environment plate_env;
  plate_env.polytopes.push_back(box_polytope(Vec3{4, -30, -1.5}, Vec3{30, 30, -0.5}));
  plate_env.plate = box_polytope(Vec3{-10, -10, -1}, Vec3{10, 10, 0});
  plate_env.has_plate = true;
  const HardDiagnostics pd =
      hard_diagnostics(solid, surf, members, curves, kIdentityQ, plate_env, ea, 65, 4);
  CHECK(pd.collisions.empty());  // the model sample at x=0 never reaches x>=4
  REQUIRE_FALSE(pd.plate_collisions.empty());
  double earliest = 1.0;
  for (const CollisionEvent& e : pd.plate_collisions) {
    earliest = std::min(earliest, e.t);
    CHECK(plate_env.plate.verts[size_t(e.sample)].x == 10.0);  // only the +x corners reach
  }
  CHECK(earliest == 0.0);  // bottom corners start inside the slab
}

TEST_CASE("hard diagnostics: floating and cliff angles through the setup transform") {
  const Vec3 center{0, 0, 6};
  const SurfaceSamples sphere = sphere_surface(center, 2.0, 2);
  const int n = sphere.count();
  SolidSamples solid;  // none
  const std::vector<Curve> curves{vertical_curve(14.0)};
  std::vector<RegionMembership> members(1);
  members[0].psi = all_indices(n);
  const Environment env;
  const EffectiveArea ea;

  const HardDiagnostics d =
      hard_diagnostics(solid, SurfaceSamples{sphere}, members, curves, kIdentityQ, env, ea, 65,
                       4);
  const int pole = argmin_z(sphere.p, 0, n);
  int flags = 0;
  for (int i = 0; i < n; ++i) flags += d.floating[size_t(i)];
  CHECK(flags == 1);
  CHECK(d.floating[size_t(pole)] == 1);
  CHECK(d.cliff_deg[size_t(pole)] == doctest::Approx(90.0).epsilon(1e-6));

  int top = 0;
  for (int i = 0; i < n; ++i)
    if (sphere.p[size_t(i)].z > sphere.p[size_t(top)].z) top = i;
  CHECK(d.cliff_deg[size_t(top)] == doctest::Approx(-90.0).epsilon(1e-6));

  // Flip the model upside down with Q: the flagged sample must follow.
  SetupTransform flip;
  flip.rotation = Vec3{std::numbers::pi, 0, 0};
  flip.translation = Vec3{0, 0, 12.0};
  const HardDiagnostics fd =
      hard_diagnostics(solid, SurfaceSamples{sphere}, members, curves, flip, env, ea, 65, 4);
  flags = 0;
  for (int i = 0; i < n; ++i) flags += fd.floating[size_t(i)];
  CHECK(flags == 1);
  CHECK(fd.floating[size_t(top)] == 1);
  CHECK(fd.cliff_deg[size_t(top)] == doctest::Approx(90.0).epsilon(1e-6));

  CHECK_THROWS_WITH_AS(
      hard_diagnostics(solid, SurfaceSamples{sphere}, {}, curves, kIdentityQ, env, ea, 65, 4),
      doctest::Contains("membership"), InputError);
}

TEST_CASE("diagnostics JSON carries every field") {
  SolidSamples solid;
  solid.p = {Vec3{0, 0, 1}, Vec3{0, 0, 30}};  // second sample is never reached
  SurfaceSamples surf;
  surf.p = {Vec3{0, 0, 1}};
  surf.n = {Vec3{0, 0, -1}};
  surf.quality = {1};
  surf.knn = {{}};
  surf.rho = {1.0};

  std::vector<RegionMembership> members(1);
  members[0].omega = {0, 1};
  members[0].psi = {0};
  Environment env;
  env.polytopes.push_back(box_polytope(Vec3{-1, -1, -18.5}, Vec3{1, 1, -2}));

  const HardDiagnostics d = hard_diagnostics(solid, surf, members, {vertical_curve(20.0)},
                                             kIdentityQ, env, EffectiveArea{}, 65, 4);
  const nlohmann::json j = nlohmann::json::parse(diagnostics_json(d));
  CHECK(j["unswept"] == std::vector<int>{1});
  CHECK(j["printed_time"].size() == 2);
  CHECK(j["printed_time"][1] == -1.0);
  CHECK(j["collisions"].size() == 1);
  CHECK(j["collisions"][0]["sample"] == 0);
  CHECK(j["hard_ok"] == false);
  CHECK(j["cliff_deg"].size() == 1);
  CHECK(j["cliff_deg"][0].is_number());  // swept surface sample has an angle
  CHECK(j["floating"].is_array());
  CHECK(j["plate_collisions"].empty());
}
