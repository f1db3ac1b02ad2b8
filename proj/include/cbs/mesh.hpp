#pragma once

#include <string>
#include <vector>

#include "cbs/vec.hpp"

namespace cbs {

// Triangle mesh in mm. Loaders weld duplicate vertices and recompute
// per-triangle normals from the winding; validate() enforces the input
// contract (watertight, consistently oriented, single shell, no slivers).
struct Mesh {
  std::vector<Vec3> v;
  std::vector<std::array<int, 3>> tri;
  std::vector<Vec3> nrm;  // per-triangle unit normals

  int nv() const { return int(v.size()); }
  int nt() const { return int(tri.size()); }
};

Mesh load_mesh(const std::string& path);

// Throws InputError describing every violated invariant (boundary edge
// count, orientation conflicts, degenerate triangles, extra shells).
void validate_mesh(const Mesh& m);

void compute_normals(Mesh& m);

double mesh_area(const Mesh& m);
double mesh_volume(const Mesh& m);  // signed, positive for outward winding
void mesh_bbox(const Mesh& m, Vec3& lo, Vec3& hi);
int euler_characteristic(const Mesh& m);

// Area-weighted pseudo-normals at vertices, for interpolated sample normals.
std::vector<Vec3> vertex_normals(const Mesh& m);

// Uniform-grid triangle index for ray casts and distance queries.
class TriGrid {
 public:
  explicit TriGrid(const Mesh& m, double cell = 0.0);

  // Parity inside-test along +z with deterministic degeneracy retries.
  bool inside_parity(const Vec3& p) const;

  // Generalized winding number (Jacobson et al.); inside when > 0.5.
  double winding_number(const Vec3& p) const;
  bool inside_winding(const Vec3& p) const { return winding_number(p) > 0.5; }

  // Unsigned distance to the closest triangle, early-out above `cap`.
  double distance(const Vec3& p, double cap) const;

  const Mesh& mesh() const { return *m_; }

 private:
  const Mesh* m_;
  Vec3 lo_, hi_;
  double cell_;
  int nx_, ny_, nz_;
  std::vector<std::vector<int>> cells_;

  int cell_index(int ix, int iy, int iz) const { return (iz * ny_ + iy) * nx_ + ix; }
  void cell_of(const Vec3& p, int& ix, int& iy, int& iz) const;
};

// Closest point on triangle (a,b,c) to p (Ericson's method).
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

}  // namespace cbs
