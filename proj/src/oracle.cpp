#include "cbs/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <json.hpp>

#include "cbs/error.hpp"

namespace cbs {

namespace {

// Workspace offsets of q against the plane frame at node i.
struct PlaneOffsets {
  double a, e, s;
};

PlaneOffsets offsets(const Vec3& q, const CurveFrames& f, int i) {
  const Vec3 r = q - f.c(i);
  return {dot(r, f.n(i)), dot(r, f.b(i)), dot(r, f.tangent(i))};
}

bool in_rect(const PlaneOffsets& o, const EffectiveArea& ea) {
  return std::fabs(o.a) < ea.rx && std::fabs(o.e) < ea.ry;
}

CurveFrames dense_frames(const Curve& curve, int nodes, int dense_factor) {
  require_input(nodes >= 2, "state grid needs at least two nodes");
  require_input(dense_factor >= 4, "the exact-state grid must be at least 4x denser");
  return build_frames(curve, (nodes - 1) * dense_factor + 1);
}

void merge_collisions(std::vector<CollisionEvent>& out, int sample, int region, const Vec3& q,
                      const CurveFrames& f, int from_node, const Environment& env) {
  const int npoly = int(env.polytopes.size());
  std::vector<std::uint8_t> seen(npoly, 0);
  int remaining = npoly;
  for (int i = from_node; i < f.nodes && remaining > 0; ++i) {
    const PlaneOffsets o = offsets(q, f, i);
    const Vec3 w{o.a, o.e, o.s};
    for (int k = 0; k < npoly; ++k) {
      if (seen[k]) continue;
      if (exact_containment(w, env.polytopes[k]).inside) {
        out.push_back(CollisionEvent{sample, k, region, f.t[i]});
        seen[k] = 1;
        --remaining;
      }
    }
  }
}

}  // namespace

std::optional<Passage> exact_state(const Vec3& q, const CurveFrames& dense,
                                   const EffectiveArea& ea) {
  PlaneOffsets prev = offsets(q, dense, 0);
  bool prev_in = in_rect(prev, ea);
  for (int i = 1; i < dense.nodes; ++i) {
    const PlaneOffsets cur = offsets(q, dense, i);
    const bool cur_in = in_rect(cur, ea);
    if (prev.s >= 0.0 && cur.s < 0.0 && (prev_in || cur_in))
      return Passage{dense.t[i], i};
    prev = cur;
    prev_in = cur_in;
  }
  return std::nullopt;
}

std::optional<Passage> exact_state(const Vec3& q, const Curve& curve, int nodes,
                                   const EffectiveArea& ea, int dense_factor) {
  return exact_state(q, dense_frames(curve, nodes, dense_factor), ea);
}

double state_margin(const Vec3& q, const CurveFrames& dense, const EffectiveArea& ea,
                    int stride) {
  require_input(stride >= 1, "state margin stride must be positive");
  std::vector<PlaneOffsets> o(size_t(dense.nodes));
  double margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < dense.nodes; ++i) {
    o[size_t(i)] = offsets(q, dense, i);
    margin = std::min(margin, std::fabs(o[size_t(i)].s));
  }
  for (int i = 1; i < dense.nodes; ++i) {
    if ((o[size_t(i - 1)].s >= 0.0) == (o[size_t(i)].s >= 0.0)) continue;
    // The coarse state grid sees this crossing through a whole stride-wide
    // interval: its reach gate averages the flanking coarse nodes, so every
    // node of the covering interval must be decisively (and uniformly)
    // inside or outside the rectangle.
    const int lo = ((i - 1) / stride) * stride;
    const int hi = std::min(((i + stride - 1) / stride) * stride, dense.nodes - 1);
    bool any_in = false, any_out = false;
    for (int k = lo; k <= hi; ++k) {
      const PlaneOffsets& w = o[size_t(k)];
      (in_rect(w, ea) ? any_in : any_out) = true;
      margin = std::min(margin, std::fabs(ea.rx - std::fabs(w.a)));
      margin = std::min(margin, std::fabs(ea.ry - std::fabs(w.e)));
    }
    if (any_in && any_out) return 0.0;
  }
  return margin;
}

ContainmentResult exact_containment(const Vec3& x, const Polytope& poly) {
  const double m = polytope_margin(poly, x);
  return ContainmentResult{m < 0.0, -m};
}

std::vector<int> detect_floating(const SurfaceSamples& surf, const std::vector<int>& psi,
                                 const std::vector<Vec3>& lpd, double tol) {
  require_input(lpd.size() == surf.p.size(), "one print direction per surface sample");
  std::vector<int> flagged;
  for (int qi : psi) {
    require_input(qi >= 0 && qi < surf.count(), "surface sample index out of range");
    const Vec3 d = lpd[size_t(qi)];
    const double len = norm(d);
    if (len <= 0.0 || surf.knn[size_t(qi)].empty()) continue;
    const Vec3 dhat = d * (1.0 / len);
    bool all_above = true;
    for (int pi : surf.knn[size_t(qi)]) {
      if (dot(surf.p[size_t(pi)] - surf.p[size_t(qi)], dhat) <= tol) {
        all_above = false;
        break;
      }
    }
    if (all_above) flagged.push_back(qi);
  }
  return flagged;
}

std::vector<int> coverage_check(const SolidSamples& solid, const std::vector<int>& omega,
                                const CurveFrames& dense, const EffectiveArea& ea) {
  std::vector<int> unswept;
  for (int i : omega) {
    require_input(i >= 0 && i < solid.count(), "solid sample index out of range");
    if (!exact_state(solid.p[size_t(i)], dense, ea)) unswept.push_back(i);
  }
  return unswept;
}

HardDiagnostics hard_diagnostics(const SolidSamples& solid, const SurfaceSamples& surf,
                                 const std::vector<RegionMembership>& members,
                                 const std::vector<Curve>& curves, const SetupTransform& q,
                                 const Environment& env, const EffectiveArea& ea,
                                 int smooth_nodes, int dense_factor) {
  require_input(members.size() == curves.size(), "one membership list per curve is required");

  HardDiagnostics d;
  d.printed_time.assign(size_t(solid.count()), -1.0);
  d.floating.assign(size_t(surf.count()), 0);
  d.cliff_deg.assign(size_t(surf.count()), std::numeric_limits<double>::quiet_NaN());

  const Mat3 rot = q.rot_matrix();
  std::vector<Vec3> lpd(size_t(surf.count()), Vec3{0, 0, 0});

  for (size_t j = 0; j < curves.size(); ++j) {
    const CurveFrames f = dense_frames(curves[j], smooth_nodes, dense_factor);

    for (int i : members[j].omega) {
      require_input(i >= 0 && i < solid.count(), "solid sample index out of range");
      const Vec3 qm = q.apply(solid.p[size_t(i)]);
      const auto pass = exact_state(qm, f, ea);
      if (!pass) {
        d.unswept.push_back(i);
        continue;
      }
      d.printed_time[size_t(i)] = pass->t;
      if (!env.polytopes.empty()) merge_collisions(d.collisions, i, int(j), qm, f, pass->node, env);
    }

    for (int i : members[j].psi) {
      require_input(i >= 0 && i < surf.count(), "surface sample index out of range");
      const Vec3 qm = q.apply(surf.p[size_t(i)]);
      const auto pass = exact_state(qm, f, ea);
      if (!pass) continue;
      const Vec3 dir = f.tangent(pass->node);
      lpd[size_t(i)] = dir;
      const double cosv = dot(rot * surf.n[size_t(i)], dir);
      const double arg = std::clamp(-cosv, -1.0, 1.0);
      d.cliff_deg[size_t(i)] = std::asin(arg) * 180.0 / std::numbers::pi;
    }

    // The plate rides the platform through every region's sweep.
    if (env.has_plate && !env.polytopes.empty())
      for (size_t v = 0; v < env.plate.verts.size(); ++v)
        merge_collisions(d.plate_collisions, int(v), int(j), env.plate.verts[v], f, 0, env);
  }

  // Floating needs every direction in place first: neighbors may sit in a
  // different region than the sample they support. Neighbor offsets rotate
  // into MCS under Q; rotating the direction back instead is the identical
  // inequality on the stored model-space points.
  std::vector<Vec3> back(lpd.size());
  for (size_t i = 0; i < lpd.size(); ++i) back[i] = rot.tmul(lpd[i]);
  for (const RegionMembership& m : members)
    for (int qi : detect_floating(surf, m.psi, back)) d.floating[size_t(qi)] = 1;

  return d;
}

std::string diagnostics_json(const HardDiagnostics& d) {
  nlohmann::json j;
  j["printed_time"] = d.printed_time;
  j["unswept"] = d.unswept;
  j["floating"] = nlohmann::json::array();
  for (size_t i = 0; i < d.floating.size(); ++i)
    if (d.floating[i]) j["floating"].push_back(int(i));
  j["cliff_deg"] = nlohmann::json::array();
  for (double c : d.cliff_deg)
    j["cliff_deg"].push_back(std::isfinite(c) ? nlohmann::json(c) : nlohmann::json());
  const auto events = [](const std::vector<CollisionEvent>& evs) {
    nlohmann::json arr = nlohmann::json::array();
    for (const CollisionEvent& e : evs)
      arr.push_back(
          {{"sample", e.sample}, {"polytope", e.polytope}, {"region", e.region}, {"t", e.t}});
    return arr;
  };
  j["collisions"] = events(d.collisions);
  j["plate_collisions"] = events(d.plate_collisions);
  j["hard_ok"] = d.hard_ok();
  return j.dump(2);
}

}  // namespace cbs
