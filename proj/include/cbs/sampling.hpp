#pragma once

#include <cstdint>
#include <vector>

#include "cbs/mesh.hpp"

namespace cbs {

// Solid sample set Ω: points strictly inside the model, MCS mm.
struct SolidSamples {
  std::vector<Vec3> p;

  int count() const { return int(p.size()); }
};

// Surface sample set Ψ with per-sample normals, k-NN graph, density weights
// and quality-region membership. rho/knn are filled by build_knn.
struct SurfaceSamples {
  std::vector<Vec3> p;
  std::vector<Vec3> n;               // unit outward normals
  std::vector<double> rho;           // mean distance to the k nearest neighbors (mm)
  std::vector<std::vector<int>> knn;
  std::vector<std::uint8_t> quality;  // sample lies on a selected triangle
  double area_ratio = 0.0;            // selected area / total surface area

  int count() const { return int(p.size()); }
};

// Jittered-grid seeding at `spacing`, filtered to the strict interior
// (>= 0.05 mm off the surface). Deterministic in (mesh, spacing, seed).
SolidSamples sample_solid(const Mesh& mesh, double spacing, std::uint64_t seed = 1);

// Per-triangle area-weighted stratified sampling, expected one sample per
// spacing^2 of area, interpolated vertex normals. quality_tris selects the
// user region (triangle indices); may be empty.
SurfaceSamples sample_surface(const Mesh& mesh, double spacing,
                              const std::vector<int>& quality_tris = {},
                              std::uint64_t seed = 2);

// Exact k-nearest-neighbor lists (grid-accelerated, ties broken by index)
// and rho = mean neighbor distance.
void build_knn(SurfaceSamples& s, int k = 15);

}  // namespace cbs
