#include "cbs/sampling.hpp"

#include <algorithm>
#include <cmath>

#include "cbs/error.hpp"
#include "cbs/rng.hpp"

namespace cbs {

namespace {

// Minimum clearance between Ω samples and the surface. Keeps the smooth
// sweep state well-conditioned right at the boundary.
constexpr double kSolidMargin = 0.05;  // mm

}  // namespace

SolidSamples sample_solid(const Mesh& mesh, double spacing, std::uint64_t seed) {
  require_input(spacing > 0, "sample_solid: spacing must be positive");
  Vec3 lo, hi;
  mesh_bbox(mesh, lo, hi);
  const TriGrid grid(mesh);

  SolidSamples out;
  // Whole cells only: a model thinner than one cell in any direction yields
  // no candidates at all. The covered block is centered in the bbox.
  const int nx = int(std::floor((hi.x - lo.x) / spacing));
  const int ny = int(std::floor((hi.y - lo.y) / spacing));
  const int nz = int(std::floor((hi.z - lo.z) / spacing));
  const Vec3 off = lo + (hi - lo - Vec3{double(nx), double(ny), double(nz)} * spacing) * 0.5;
  for (int iz = 0; iz < nz; ++iz)
    for (int iy = 0; iy < ny; ++iy)
      for (int ix = 0; ix < nx; ++ix) {
        // One candidate per cell, jittered by up to a quarter cell per axis.
        const double jx = hash_unit(hash_cell(seed * 3 + 0, ix, iy, iz)) - 0.5;
        const double jy = hash_unit(hash_cell(seed * 3 + 1, ix, iy, iz)) - 0.5;
        const double jz = hash_unit(hash_cell(seed * 3 + 2, ix, iy, iz)) - 0.5;
        const Vec3 c{off.x + (ix + 0.5 + 0.5 * jx) * spacing,
                     off.y + (iy + 0.5 + 0.5 * jy) * spacing,
                     off.z + (iz + 0.5 + 0.5 * jz) * spacing};
        if (!grid.inside_parity(c)) continue;
        if (grid.distance(c, kSolidMargin) < kSolidMargin) continue;
        out.p.push_back(c);
      }
  require_input(!out.p.empty(), "no interior samples: spacing exceeds the model thickness");
  return out;
}

SurfaceSamples sample_surface(const Mesh& mesh, double spacing,
                              const std::vector<int>& quality_tris, std::uint64_t seed) {
  require_input(spacing > 0, "sample_surface: spacing must be positive");
  std::vector<char> selected(size_t(mesh.nt()), 0);
  for (int t : quality_tris) {
    require_input(t >= 0 && t < mesh.nt(), "sample_surface: quality triangle id out of range");
    selected[size_t(t)] = 1;
  }

  const std::vector<Vec3> vn = vertex_normals(mesh);
  SurfaceSamples out;
  double total_area = 0, selected_area = 0;
  for (int t = 0; t < mesh.nt(); ++t) {
    const Vec3 a = mesh.v[size_t(mesh.tri[size_t(t)][0])];
    const Vec3 b = mesh.v[size_t(mesh.tri[size_t(t)][1])];
    const Vec3 c = mesh.v[size_t(mesh.tri[size_t(t)][2])];
    const double area = 0.5 * norm(cross(b - a, c - a));
    total_area += area;
    if (selected[size_t(t)]) selected_area += area;

    const double lambda = area / (spacing * spacing);
    int count = int(std::floor(lambda));
    if (hash_unit(hash_cell(seed, t, -1, 0)) < lambda - count) ++count;

    for (int s = 0; s < count; ++s) {
      const double r1 = hash_unit(hash_cell(seed, t, s, 1));
      const double r2 = hash_unit(hash_cell(seed, t, s, 2));
      const double su = std::sqrt(r1);
      const double b0 = 1 - su, b1 = su * (1 - r2), b2 = su * r2;
      out.p.push_back(a * b0 + b * b1 + c * b2);

      const auto& tri = mesh.tri[size_t(t)];
      Vec3 n = vn[size_t(tri[0])] * b0 + vn[size_t(tri[1])] * b1 + vn[size_t(tri[2])] * b2;
      const double len = norm(n);
      n = len > 1e-9 ? n * (1.0 / len) : mesh.nrm[size_t(t)];
      out.n.push_back(n);
      out.quality.push_back(selected[size_t(t)]);
    }
  }
  out.area_ratio = total_area > 0 ? selected_area / total_area : 0.0;
  return out;
}

void build_knn(SurfaceSamples& s, int k) {
  const int n = s.count();
  require_input(k >= 1, "build_knn: k must be positive");
  require_input(n > k, "build_knn: need more than k samples");

  Vec3 lo = s.p[0], hi = s.p[0];
  for (const Vec3& p : s.p) {
    lo = Vec3{std::fmin(lo.x, p.x), std::fmin(lo.y, p.y), std::fmin(lo.z, p.z)};
    hi = Vec3{std::fmax(hi.x, p.x), std::fmax(hi.y, p.y), std::fmax(hi.z, p.z)};
  }
  const double diag = std::fmax(norm(hi - lo), 1e-6);
  // Cell size only affects speed, not results: the ring lower bound below
  // makes the search exact for any positive cell.
  const double cell = diag / std::clamp(std::sqrt(double(n)) * 0.5, 4.0, 192.0);
  const Vec3 pad{0.5 * cell, 0.5 * cell, 0.5 * cell};
  lo -= pad;
  const int gx = std::max(1, int(std::ceil((hi.x - lo.x) / cell)) + 1);
  const int gy = std::max(1, int(std::ceil((hi.y - lo.y) / cell)) + 1);
  const int gz = std::max(1, int(std::ceil((hi.z - lo.z) / cell)) + 1);
  auto cell_of = [&](const Vec3& p, int& ix, int& iy, int& iz) {
    ix = std::clamp(int((p.x - lo.x) / cell), 0, gx - 1);
    iy = std::clamp(int((p.y - lo.y) / cell), 0, gy - 1);
    iz = std::clamp(int((p.z - lo.z) / cell), 0, gz - 1);
  };
  std::vector<std::vector<int>> buckets(size_t(gx) * gy * gz);
  for (int i = 0; i < n; ++i) {
    int ix, iy, iz;
    cell_of(s.p[size_t(i)], ix, iy, iz);
    buckets[size_t((iz * gy + iy) * gx + ix)].push_back(i);
  }

  s.knn.assign(size_t(n), {});
  s.rho.assign(size_t(n), 0.0);
  std::vector<std::pair<double, int>> best;  // (distance^2, index), ascending
  const int rmax = std::max({gx, gy, gz});
  for (int i = 0; i < n; ++i) {
    const Vec3 p = s.p[size_t(i)];
    int cx, cy, cz;
    cell_of(p, cx, cy, cz);
    best.clear();
    for (int r = 0; r <= rmax; ++r) {
      const double ring_min = (r - 1) * cell;
      if (int(best.size()) == k && ring_min > 0 && ring_min * ring_min > best.back().first) break;
      for (int dz = -r; dz <= r; ++dz)
        for (int dy = -r; dy <= r; ++dy)
          for (int dx = -r; dx <= r; ++dx) {
            if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != r) continue;
            const int ix = cx + dx, iy = cy + dy, iz = cz + dz;
            if (ix < 0 || ix >= gx || iy < 0 || iy >= gy || iz < 0 || iz >= gz) continue;
            for (int j : buckets[size_t((iz * gy + iy) * gx + ix)]) {
              if (j == i) continue;
              const std::pair<double, int> cand{norm2(s.p[size_t(j)] - p), j};
              if (int(best.size()) == k && !(cand < best.back())) continue;
              best.insert(std::lower_bound(best.begin(), best.end(), cand), cand);
              if (int(best.size()) > k) best.pop_back();
            }
          }
    }
    auto& ids = s.knn[size_t(i)];
    ids.reserve(size_t(k));
    double mean = 0;
    for (const auto& [d2, j] : best) {
      ids.push_back(j);
      mean += std::sqrt(d2);
    }
    s.rho[size_t(i)] = mean / k;
  }
}

}  // namespace cbs
