#include "cbs/meshgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <unordered_map>

#include "cbs/error.hpp"

namespace cbs {

namespace {

// Field values are pushed off zero so every edge crossing sits strictly
// inside its edge. Worst-case sliver area is ~0.5*(nudge*cell/lip)^2 with
// lip ~ 1 for distance fields; 1e-3 keeps that above the 1e-9 mm^2
// degenerate-triangle floor while moving vertices at most ~1 um.
constexpr double kFieldNudge = 1e-3;

double clamp01(double t) { return std::min(1.0, std::max(0.0, t)); }

}  // namespace

Mesh make_box(const Vec3& lo, const Vec3& hi) {
  require_input(lo.x < hi.x && lo.y < hi.y && lo.z < hi.z, "make_box: empty box");
  Mesh m;
  m.v = {{lo.x, lo.y, lo.z}, {hi.x, lo.y, lo.z}, {hi.x, hi.y, lo.z}, {lo.x, hi.y, lo.z},
         {lo.x, lo.y, hi.z}, {hi.x, lo.y, hi.z}, {hi.x, hi.y, hi.z}, {lo.x, hi.y, hi.z}};
  m.tri = {{0, 2, 1}, {0, 3, 2},   // z = lo
           {4, 5, 6}, {4, 6, 7},   // z = hi
           {0, 1, 5}, {0, 5, 4},   // y = lo
           {2, 3, 7}, {2, 7, 6},   // y = hi
           {0, 4, 7}, {0, 7, 3},   // x = lo
           {1, 2, 6}, {1, 6, 5}};  // x = hi
  compute_normals(m);
  validate_mesh(m);
  return m;
}

Mesh make_icosphere(const Vec3& center, double radius, int subdiv) {
  require_input(radius > 0 && subdiv >= 0 && subdiv <= 7, "make_icosphere: bad parameters");
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, phi, 0}, {1, phi, 0},   {-1, -phi, 0}, {1, -phi, 0},
                         {0, -1, phi}, {0, 1, phi},   {0, -1, -phi}, {0, 1, -phi},
                         {phi, 0, -1}, {phi, 0, 1},   {-phi, 0, -1}, {-phi, 0, 1}};
  std::vector<std::array<int, 3>> tri = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (auto& p : v) p = p * (radius / norm(p));

  for (int level = 0; level < subdiv; ++level) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto [it, fresh] = midpoint.try_emplace(key, int(v.size()));
      if (fresh) {
        Vec3 p = v[a] + v[b];
        v.push_back(p * (radius / norm(p)));
      }
      return it->second;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(tri.size() * 4);
    for (const auto& t : tri) {
      int ab = mid(t[0], t[1]), bc = mid(t[1], t[2]), ca = mid(t[2], t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({t[1], bc, ab});
      next.push_back({t[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    tri = std::move(next);
  }

  Mesh m;
  m.v = std::move(v);
  for (auto& p : m.v) p = p + center;
  m.tri = std::move(tri);
  compute_normals(m);
  validate_mesh(m);
  return m;
}

Mesh march_implicit(const std::function<double(const Vec3&)>& field,
                    const Vec3& lo, const Vec3& hi, double cell) {
  require_input(cell > 0 && lo.x < hi.x && lo.y < hi.y && lo.z < hi.z,
                "march_implicit: empty box or non-positive cell");
  const int nx = int(std::ceil((hi.x - lo.x) / cell)) + 1;
  const int ny = int(std::ceil((hi.y - lo.y) / cell)) + 1;
  const int nz = int(std::ceil((hi.z - lo.z) / cell)) + 1;
  const std::int64_t corners = std::int64_t(nx) * ny * nz;
  require_input(corners <= (std::int64_t(1) << 28), "march_implicit: grid too large");

  std::vector<double> val(static_cast<size_t>(corners));
  for (int iz = 0; iz < nz; ++iz)
    for (int iy = 0; iy < ny; ++iy)
      for (int ix = 0; ix < nx; ++ix) {
        double f = field({lo.x + ix * cell, lo.y + iy * cell, lo.z + iz * cell});
        require_numeric(std::isfinite(f), "march_implicit: field not finite");
        if (std::fabs(f) < kFieldNudge) f = f >= 0 ? kFieldNudge : -kFieldNudge;
        val[size_t((std::int64_t(iz) * ny + iy) * nx + ix)] = f;
      }

  auto corner_pos = [&](std::int64_t id) {
    const int ix = int(id % nx), iy = int((id / nx) % ny), iz = int(id / (std::int64_t(nx) * ny));
    return Vec3{lo.x + ix * cell, lo.y + iy * cell, lo.z + iz * cell};
  };

  Mesh m;
  std::unordered_map<std::uint64_t, int> edge_vert;
  edge_vert.reserve(4096);
  auto vert_on_edge = [&](std::int64_t ca, std::int64_t cb) {
    if (ca > cb) std::swap(ca, cb);
    const std::uint64_t key = (std::uint64_t(ca) << 32) | std::uint64_t(cb);
    auto [it, fresh] = edge_vert.try_emplace(key, int(m.v.size()));
    if (fresh) {
      const double va = val[size_t(ca)], vb = val[size_t(cb)];
      const double t = va / (va - vb);
      const Vec3 pa = corner_pos(ca), pb = corner_pos(cb);
      m.v.push_back(pa + (pb - pa) * t);
    }
    return it->second;
  };

  // 6-tetrahedra cube decomposition, all sharing the main diagonal c0-c6.
  static const int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                    {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
  static const int kTet[6][4] = {{0, 1, 2, 6}, {0, 2, 3, 6}, {0, 3, 7, 6},
                                 {0, 7, 4, 6}, {0, 4, 5, 6}, {0, 5, 1, 6}};

  auto emit = [&](int a, int b, int c, const Vec3& ref) {
    Vec3 n = cross(m.v[b] - m.v[a], m.v[c] - m.v[a]);
    if (dot(n, ref) < 0) std::swap(b, c);
    m.tri.push_back({a, b, c});
  };

  for (int cz = 0; cz + 1 < nz; ++cz)
    for (int cy = 0; cy + 1 < ny; ++cy)
      for (int cx = 0; cx + 1 < nx; ++cx) {
        std::int64_t cid[8];
        double cv[8];
        bool any_in = false, any_out = false;
        for (int k = 0; k < 8; ++k) {
          cid[k] = (std::int64_t(cz + kCorner[k][2]) * ny + (cy + kCorner[k][1])) * nx +
                   (cx + kCorner[k][0]);
          cv[k] = val[size_t(cid[k])];
          (cv[k] < 0 ? any_in : any_out) = true;
        }
        if (!any_in || !any_out) continue;

        for (const auto& tet : kTet) {
          int ins[4], outs[4], ni = 0, no = 0;
          for (int k = 0; k < 4; ++k) (cv[tet[k]] < 0 ? ins[ni++] : outs[no++]) = tet[k];
          if (ni == 0 || ni == 4) continue;

          Vec3 in_c{0, 0, 0}, out_c{0, 0, 0};
          for (int k = 0; k < ni; ++k) in_c = in_c + corner_pos(cid[ins[k]]);
          for (int k = 0; k < no; ++k) out_c = out_c + corner_pos(cid[outs[k]]);
          const Vec3 ref = out_c * (1.0 / no) - in_c * (1.0 / ni);

          if (ni == 1) {
            emit(vert_on_edge(cid[ins[0]], cid[outs[0]]),
                 vert_on_edge(cid[ins[0]], cid[outs[1]]),
                 vert_on_edge(cid[ins[0]], cid[outs[2]]), ref);
          } else if (ni == 3) {
            emit(vert_on_edge(cid[outs[0]], cid[ins[0]]),
                 vert_on_edge(cid[outs[0]], cid[ins[1]]),
                 vert_on_edge(cid[outs[0]], cid[ins[2]]), ref);
          } else {  // quad: cyclic over (i0,o0) (i0,o1) (i1,o1) (i1,o0)
            const int q0 = vert_on_edge(cid[ins[0]], cid[outs[0]]);
            const int q1 = vert_on_edge(cid[ins[0]], cid[outs[1]]);
            const int q2 = vert_on_edge(cid[ins[1]], cid[outs[1]]);
            const int q3 = vert_on_edge(cid[ins[1]], cid[outs[0]]);
            emit(q0, q1, q2, ref);
            emit(q0, q2, q3, ref);
          }
        }
      }

  require_input(!m.tri.empty(), "march_implicit: isosurface not found inside box");
  compute_normals(m);
  validate_mesh(m);
  return m;
}

double sd_sphere(const Vec3& p, const Vec3& c, double r) { return norm(p - c) - r; }

double sd_capsule(const Vec3& p, const Vec3& a, const Vec3& b, double r) {
  const Vec3 ab = b - a;
  const double h = clamp01(dot(p - a, ab) / dot(ab, ab));
  return norm(p - (a + ab * h)) - r;
}

double sd_torus(const Vec3& p, const Vec3& c, int axis, double R, double r) {
  const Vec3 q = p - c;
  const int u = (axis + 1) % 3, v = (axis + 2) % 3;
  const double ring = std::sqrt(q[u] * q[u] + q[v] * q[v]) - R;
  return std::sqrt(ring * ring + q[axis] * q[axis]) - r;
}

double smin(double a, double b, double k) {
  if (k <= 0) return std::min(a, b);
  const double h = clamp01(0.5 + 0.5 * (b - a) / k);
  return b * (1 - h) + a * h - k * h * (1 - h);
}

Mesh make_lollipop(const LollipopParams& params) {
  const LollipopParams q = params;
  require_input(q.balls >= 1 && q.stem_h > q.ball_r && q.ball_off > q.stem_r,
                "make_lollipop: bad parameters");
  const double drop =
      q.balls > 1 ? (q.stem_h - (q.ball_r + 2.0)) / (q.balls - 1) : 0.0;
  auto field = [q, drop](const Vec3& p) {
    // Stem overshoots the plate and is cut at z = 0 for a flat footprint.
    double f = sd_capsule(p, {0, 0, -q.stem_r * 2}, {0, 0, q.stem_h}, q.stem_r);
    for (int i = 0; i < q.balls; ++i) {
      const double ang = i * 2.2, h = q.stem_h - i * drop;
      const Vec3 c{q.ball_off * std::cos(ang), q.ball_off * std::sin(ang), h};
      f = smin(f, sd_capsule(p, {0, 0, h}, c, q.neck_r), 0.4);
      f = smin(f, sd_sphere(p, c, q.ball_r), 0.4);
    }
    return std::max(f, -p.z);
  };
  const double lat = q.ball_off + q.ball_r + 2.0;
  const Vec3 lo{-lat, -lat, -2 * q.cell};
  const Vec3 hi{lat, lat, q.stem_h + q.ball_r + 2.0};
  return march_implicit(field, lo, hi, q.cell);
}

Mesh make_hook(const HookParams& params) {
  const HookParams q = params;
  require_input(q.stem_h > q.bend_r && q.tail_len < q.stem_h && q.tube_r < q.bend_r,
                "make_hook: bad parameters");
  auto field = [q](const Vec3& p) {
    double f = sd_capsule(p, {0, 0, -q.tube_r * 2}, {0, 0, q.stem_h}, q.tube_r);
    // Upper half of a standing ring over the stem top.
    const double bend = std::max(sd_torus(p, {q.bend_r, 0, q.stem_h}, 1, q.bend_r, q.tube_r),
                                 q.stem_h - p.z);
    f = smin(f, bend, 0.5);
    const Vec3 tail_top{2 * q.bend_r, 0, q.stem_h};
    const Vec3 tail_tip{2 * q.bend_r, 0, q.stem_h - q.tail_len};
    f = smin(f, sd_capsule(p, tail_top, tail_tip, q.tube_r), 0.5);
    return std::max(f, -p.z);
  };
  const Vec3 lo{-q.tube_r - 2.0, -q.tube_r - 2.0, -2 * q.cell};
  const Vec3 hi{2 * q.bend_r + q.tube_r + 2.0, q.tube_r + 2.0,
                q.stem_h + q.bend_r + q.tube_r + 2.0};
  return march_implicit(field, lo, hi, q.cell);
}

std::vector<Vec3> hook_axis(const HookParams& params, int n) {
  require_input(n >= 2, "hook_axis: need at least two points");
  const double l1 = params.stem_h;
  const double l2 = std::numbers::pi * params.bend_r;
  const double total = l1 + l2 + params.tail_len;
  const Vec3 bend_c{params.bend_r, 0, params.stem_h};
  std::vector<Vec3> pts;
  pts.reserve(size_t(n));
  for (int i = 0; i < n; ++i) {
    const double s = total * i / (n - 1);
    if (s <= l1) {
      pts.push_back({0, 0, s});
    } else if (s <= l1 + l2) {
      const double phi = (s - l1) / params.bend_r;  // 0..pi over the top
      pts.push_back(bend_c + Vec3{-std::cos(phi), 0, std::sin(phi)} * params.bend_r);
    } else {
      pts.push_back({2 * params.bend_r, 0, params.stem_h - (s - l1 - l2)});
    }
  }
  return pts;
}

Mesh make_necklace(const NecklaceParams& params) {
  const NecklaceParams q = params;
  require_input(q.rings >= 1 && q.tube_r < q.ring_R && q.bar_r <= q.tube_r,
                "make_necklace: bad parameters");
  // Bottom ring sinks slightly below the plate for a flat contact patch.
  std::vector<Vec3> centers(size_t(q.rings));
  for (int k = 0; k < q.rings; ++k)
    centers[size_t(k)] = {(k % 2) * q.step_x, 0.0,
                          q.ring_R + q.tube_r - 0.3 + k * q.step_z};
  auto field = [q, centers](const Vec3& p) {
    double f = sd_torus(p, centers[0], 1, q.ring_R, q.tube_r);
    for (size_t k = 1; k < centers.size(); ++k)
      f = smin(f, sd_torus(p, centers[k], 1, q.ring_R, q.tube_r), q.blend);
    for (size_t k = 0; k + 1 < centers.size(); ++k) {
      Vec3 u = centers[k + 1] - centers[k];
      u = u * (1.0 / norm(u));
      f = smin(f, sd_capsule(p, centers[k] + u * q.ring_R,
                             centers[k + 1] - u * q.ring_R, q.bar_r),
               q.blend);
    }
    return std::max(f, -p.z);
  };
  const double lat = q.ring_R + q.tube_r + q.blend + 2.0;
  const Vec3 lo{-lat, -q.tube_r - q.blend - 2.0, -2 * q.cell};
  const Vec3 hi{q.step_x + lat, q.tube_r + q.blend + 2.0,
                centers.back().z + q.ring_R + q.tube_r + 2.0};
  return march_implicit(field, lo, hi, q.cell);
}

Curve fit_bezier(const std::vector<Vec4>& pts, int degree) {
  const int m = int(pts.size()), n = degree;
  require_input(degree >= 1 && m >= degree + 1, "fit_bezier: too few points for degree");

  Curve c;
  c.p.assign(size_t(n + 1), Vec4{});
  c.p.front() = pts.front();
  c.p.back() = pts.back();
  const int nf = n - 1;  // free interior control points
  if (nf == 0) return c;

  // Normal equations for the interior points, endpoints pinned.
  std::vector<double> B(size_t(m) * (n + 1));
  for (int i = 0; i < m; ++i)
    bernstein_row(n, double(i) / (m - 1), &B[size_t(i) * (n + 1)]);

  std::vector<double> ata(size_t(nf) * nf, 0.0);
  std::vector<Vec4> atb(size_t(nf), Vec4{});
  for (int i = 0; i < m; ++i) {
    const double* row = &B[size_t(i) * (n + 1)];
    const Vec4 rhs = pts[size_t(i)] - c.p.front() * row[0] - c.p.back() * row[n];
    for (int a = 0; a < nf; ++a) {
      for (int b = 0; b < nf; ++b) ata[size_t(a) * nf + b] += row[a + 1] * row[b + 1];
      atb[size_t(a)] = atb[size_t(a)] + rhs * row[a + 1];
    }
  }

  // Gaussian elimination with partial pivoting on the (nf x nf) system.
  for (int col = 0; col < nf; ++col) {
    int piv = col;
    for (int r = col + 1; r < nf; ++r)
      if (std::fabs(ata[size_t(r) * nf + col]) > std::fabs(ata[size_t(piv) * nf + col])) piv = r;
    require_numeric(std::fabs(ata[size_t(piv) * nf + col]) > 1e-12,
                    "fit_bezier: singular normal equations");
    if (piv != col) {
      for (int k = 0; k < nf; ++k) std::swap(ata[size_t(piv) * nf + k], ata[size_t(col) * nf + k]);
      std::swap(atb[size_t(piv)], atb[size_t(col)]);
    }
    const double d = ata[size_t(col) * nf + col];
    for (int r = 0; r < nf; ++r) {
      if (r == col) continue;
      const double f = ata[size_t(r) * nf + col] / d;
      if (f == 0) continue;
      for (int k = col; k < nf; ++k) ata[size_t(r) * nf + k] -= f * ata[size_t(col) * nf + k];
      atb[size_t(r)] = atb[size_t(r)] - atb[size_t(col)] * f;
    }
  }
  for (int k = 0; k < nf; ++k)
    c.p[size_t(k + 1)] = atb[size_t(k)] * (1.0 / ata[size_t(k) * nf + k]);
  return c;
}

}  // namespace cbs
