#include "cbs/env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "cbs/error.hpp"

namespace cbs {
namespace {

using nlohmann::json;

constexpr double kUnitRowTol = 1e-9;
constexpr double kVertexFeasTol = 1e-7;  // mm slack when testing candidate vertices
constexpr double kVertexDedupTol = 1e-6;
constexpr double kRecessionTol = 1e-9;

// Solves [a0;a1;a2]·x = -(b0,b1,b2). Returns false when the three planes are
// near-parallel (|det| below tol, rows are unit so det is well scaled).
bool plane_intersection(const Vec3& a0, const Vec3& a1, const Vec3& a2, double b0, double b1,
                        double b2, Vec3& x) {
  const Vec3 c12 = cross(a1, a2);
  const double det = dot(a0, c12);
  if (std::abs(det) < 1e-9) return false;
  const Vec3 c20 = cross(a2, a0);
  const Vec3 c01 = cross(a0, a1);
  x = (c12 * (-b0) + c20 * (-b1) + c01 * (-b2)) * (1.0 / det);
  return true;
}

// The recession cone {d : a_k·d <= 0 for all k} is non-trivial iff the set is
// unbounded. With three independent rows the cone is pointed, so any nonzero
// cone owns an extreme ray along some ±(a_i × a_j); with fewer independent
// rows any direction orthogonal to all rows recedes.
bool is_bounded(const Polytope& p) {
  const int n = p.rows();
  if (n < 3) return false;
  double best_det = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k)
        best_det = std::max(best_det, std::abs(dot(p.a[i], cross(p.a[j], p.a[k]))));
  if (best_det < 1e-9) return false;  // rank < 3: a whole line or plane recedes
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      Vec3 d = cross(p.a[i], p.a[j]);
      const double len = norm(d);
      if (len < 1e-12) continue;
      d = d * (1.0 / len);
      for (int s = 0; s < 2; ++s) {
        const Vec3 ray = (s == 0) ? d : d * -1.0;
        bool recedes = true;
        for (int k = 0; k < n && recedes; ++k) recedes = dot(p.a[k], ray) <= kRecessionTol;
        if (recedes) return false;
      }
    }
  }
  return true;
}

void enumerate_vertices(Polytope& p) {
  p.verts.clear();
  const int n = p.rows();
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      for (int k = j + 1; k < n; ++k) {
        Vec3 x;
        if (!plane_intersection(p.a[i], p.a[j], p.a[k], p.b[i], p.b[j], p.b[k], x)) continue;
        if (polytope_margin(p, x) > kVertexFeasTol) continue;
        bool dup = false;
        for (const Vec3& v : p.verts)
          if (norm(v - x) < kVertexDedupTol) {
            dup = true;
            break;
          }
        if (!dup) p.verts.push_back(x);
      }
    }
  }
}

Polytope parse_polytope(const json& j, const std::string& what) {
  require_input(j.is_object() && j.contains("A") && j.contains("b"),
                what + ": expected object with \"A\" and \"b\"");
  const json& ja = j.at("A");
  const json& jb = j.at("b");
  require_input(ja.is_array() && jb.is_array() && ja.size() == jb.size(),
                what + ": \"A\" and \"b\" must be arrays of equal length");
  Polytope p;
  for (size_t r = 0; r < ja.size(); ++r) {
    const json& row = ja.at(r);
    require_input(row.is_array() && row.size() == 3 && row.at(0).is_number() &&
                      row.at(1).is_number() && row.at(2).is_number(),
                  what + ": each row of \"A\" must be three numbers");
    require_input(jb.at(r).is_number(), what + ": \"b\" entries must be numbers");
    p.a.push_back(Vec3{row.at(0).get<double>(), row.at(1).get<double>(), row.at(2).get<double>()});
    p.b.push_back(jb.at(r).get<double>());
  }
  finalize_polytope(p, what);
  return p;
}

json polytope_json(const Polytope& p) {
  json ja = json::array();
  json jb = json::array();
  for (int r = 0; r < p.rows(); ++r) {
    ja.push_back({p.a[r].x, p.a[r].y, p.a[r].z});
    jb.push_back(p.b[r]);
  }
  return json{{"A", ja}, {"b", jb}};
}

}  // namespace

double polytope_margin(const Polytope& p, const Vec3& x) {
  double m = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < p.rows(); ++k) m = std::max(m, dot(p.a[k], x) + p.b[k]);
  return m;
}

Polytope box_polytope(const Vec3& lo, const Vec3& hi) {
  require_input(lo.x < hi.x && lo.y < hi.y && lo.z < hi.z, "box polytope: lo must be below hi");
  Polytope p;
  p.a = {Vec3{1, 0, 0}, Vec3{-1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, -1, 0}, Vec3{0, 0, 1}, Vec3{0, 0, -1}};
  p.b = {-hi.x, lo.x, -hi.y, lo.y, -hi.z, lo.z};
  finalize_polytope(p, "box polytope");
  return p;
}

void finalize_polytope(Polytope& p, const std::string& what) {
  require_input(p.rows() >= 4, what + ": needs at least 4 half-spaces to bound a volume");
  require_input(p.rows() <= 32, what + ": more than 32 half-spaces (sweep kernel row cap)");
  require_input(p.a.size() == p.b.size(), what + ": row/offset count mismatch");
  for (int r = 0; r < p.rows(); ++r) {
    require_input(std::abs(norm(p.a[r]) - 1.0) <= kUnitRowTol,
                  what + ": row " + std::to_string(r) + " of A is not unit length");
    require_input(std::isfinite(p.b[r]), what + ": non-finite offset b");
  }
  require_input(is_bounded(p), what + ": half-space set is unbounded");
  enumerate_vertices(p);
  require_input(!p.verts.empty(), what + ": half-space set is empty");
}

Environment parse_environment(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw InputError(std::string("environment JSON: ") + e.what());
  }
  require_input(j.is_object(), "environment JSON: top level must be an object");
  Environment env;
  if (j.contains("polytopes")) {
    require_input(j.at("polytopes").is_array(), "environment JSON: \"polytopes\" must be an array");
    int idx = 0;
    for (const json& jp : j.at("polytopes")) {
      env.polytopes.push_back(parse_polytope(jp, "polytope " + std::to_string(idx)));
      ++idx;
    }
  }
  if (j.contains("RX")) {
    require_input(j.at("RX").is_number(), "environment JSON: \"RX\" must be a number");
    env.rx = j.at("RX").get<double>();
  }
  if (j.contains("RY")) {
    require_input(j.at("RY").is_number(), "environment JSON: \"RY\" must be a number");
    env.ry = j.at("RY").get<double>();
  }
  require_input(env.rx > 0.0 && env.ry > 0.0, "environment JSON: RX and RY must be positive");
  if (j.contains("plate") && !j.at("plate").is_null()) {
    env.plate = parse_polytope(j.at("plate"), "plate");
    env.has_plate = true;
  }
  return env;
}

Environment load_environment(const std::string& path) {
  std::ifstream in(path);
  require_input(in.good(), "cannot open environment file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_environment(ss.str());
}

void save_environment(const Environment& env, const std::string& path) {
  json j;
  j["polytopes"] = json::array();
  for (const Polytope& p : env.polytopes) j["polytopes"].push_back(polytope_json(p));
  j["RX"] = env.rx;
  j["RY"] = env.ry;
  if (env.has_plate) j["plate"] = polytope_json(env.plate);
  std::ofstream out(path);
  require_input(out.good(), "cannot write environment file: " + path);
  out << j.dump(2) << "\n";
}

KernelEnv kernel_env(const Environment& env) {
  KernelEnv ke;
  ke.npoly = static_cast<int>(env.polytopes.size());
  ke.row_begin.assign(1, 0);
  for (const Polytope& p : env.polytopes) {
    for (int r = 0; r < p.rows(); ++r) {
      ke.ax.push_back(p.a[r].x);
      ke.ay.push_back(p.a[r].y);
      ke.az.push_back(p.a[r].z);
      ke.off.push_back(p.b[r]);
    }
    ke.row_begin.push_back(static_cast<int>(ke.ax.size()));
  }
  return ke;
}

}  // namespace cbs
