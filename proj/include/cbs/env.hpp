#pragma once

// Printer environment: obstacle polytopes in workspace (tank) coordinates,
// the effective projection area, and the build-plate polytope attached to
// the model frame. Polytopes are intersections of half-spaces a·x + b <= 0
// with unit-length rows; vertices are enumerated at load to prove each set
// is non-empty and bounded.

#include <string>
#include <vector>

#include "cbs/kernels.hpp"
#include "cbs/vec.hpp"

namespace cbs {

struct Polytope {
  std::vector<Vec3> a;      // unit outward normals, one per half-space
  std::vector<double> b;    // offsets in mm; inside iff max(a·x + b) < 0
  std::vector<Vec3> verts;  // vertex enumeration, filled by finalize_polytope
  int rows() const { return static_cast<int>(a.size()); }
};

// max_k (a_k·x + b_k): < 0 strictly inside, > 0 outside. Units: mm.
double polytope_margin(const Polytope& p, const Vec3& x);

inline bool point_in_polytope(const Polytope& p, const Vec3& x) {
  return polytope_margin(p, x) < 0.0;
}

// Axis-aligned box as six half-spaces (rows already unit).
Polytope box_polytope(const Vec3& lo, const Vec3& hi);

// Checks unit rows (within 1e-9), enumerates vertices, and rejects empty or
// unbounded half-space sets. `what` names the polytope in error messages.
void finalize_polytope(Polytope& p, const std::string& what);

struct Environment {
  std::vector<Polytope> polytopes;  // obstacles, workspace coordinates
  double rx = 72.0;                 // projection half-extent along n, mm
  double ry = 40.5;                 // projection half-extent along b, mm
  Polytope plate;                   // build plate, model coordinates
  bool has_plate = false;
};

// JSON schema: {"polytopes":[{"A":[[ax,ay,az],...],"b":[...]},...],
//               "RX":mm, "RY":mm, "plate":{"A":...,"b":...}}
// "plate" is optional; "polytopes" may be empty.
Environment parse_environment(const std::string& json_text);
Environment load_environment(const std::string& path);
void save_environment(const Environment& env, const std::string& path);

// Flattens the obstacle polytopes (not the plate) for the sweep kernels.
KernelEnv kernel_env(const Environment& env);

}  // namespace cbs
