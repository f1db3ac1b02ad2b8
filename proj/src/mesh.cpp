#include "cbs/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "cbs/error.hpp"

namespace cbs {

namespace {

struct VertexKey {
  uint64_t x, y, z;
  bool operator==(const VertexKey& o) const { return x == o.x && y == o.y && z == o.z; }
};

struct VertexKeyHash {
  size_t operator()(const VertexKey& k) const {
    uint64_t h = k.x * 0x9e3779b97f4a7c15ull;
    h ^= k.y + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    h *= 0xbf58476d1ce4e5b9ull;
    h ^= k.z + (h >> 29);
    return size_t(h * 0x94d049bb133111ebull);
  }
};

uint64_t dbits(double d) {
  uint64_t u;
  std::memcpy(&u, &d, 8);
  return u;
}

// Welds bit-identical positions while appending triangles.
class MeshBuilder {
 public:
  int add_vertex(const Vec3& p) {
    const VertexKey key{dbits(p.x), dbits(p.y), dbits(p.z)};
    auto [it, fresh] = index_.try_emplace(key, int(mesh.v.size()));
    if (fresh) mesh.v.push_back(p);
    return it->second;
  }
  void add_triangle(int a, int b, int c) {
    if (a == b || b == c || c == a) return;  // collapsed by welding
    mesh.tri.push_back({a, b, c});
  }
  Mesh mesh;

 private:
  std::unordered_map<VertexKey, int, VertexKeyHash> index_;
};

Mesh load_stl_binary(const std::vector<char>& buf, const std::string& path) {
  require_input(buf.size() >= 84, path + ": truncated binary STL");
  uint32_t n;
  std::memcpy(&n, buf.data() + 80, 4);
  require_input(buf.size() >= 84 + size_t(n) * 50, path + ": binary STL shorter than its facet count");
  MeshBuilder b;
  for (uint32_t i = 0; i < n; ++i) {
    const char* rec = buf.data() + 84 + size_t(i) * 50;
    float f[12];
    std::memcpy(f, rec, 48);  // normal + 3 vertices
    int idx[3];
    for (int k = 0; k < 3; ++k)
      idx[k] = b.add_vertex(Vec3(f[3 + 3 * k], f[4 + 3 * k], f[5 + 3 * k]));
    b.add_triangle(idx[0], idx[1], idx[2]);
  }
  return std::move(b.mesh);
}

Mesh load_stl_ascii(const std::string& text, const std::string& path) {
  MeshBuilder b;
  std::istringstream in(text);
  std::string tok;
  std::vector<int> face;
  while (in >> tok) {
    if (tok == "vertex") {
      double x, y, z;
      require_input(bool(in >> x >> y >> z), path + ": malformed STL vertex");
      face.push_back(b.add_vertex(Vec3(x, y, z)));
    } else if (tok == "endfacet") {
      require_input(face.size() == 3, path + ": STL facet without exactly 3 vertices");
      b.add_triangle(face[0], face[1], face[2]);
      face.clear();
    }
  }
  require_input(face.empty(), path + ": unterminated STL facet");
  return std::move(b.mesh);
}

Mesh load_obj(const std::string& text, const std::string& path) {
  MeshBuilder b;
  std::vector<Vec3> raw;  // file-order positions, welded on reference
  std::istringstream in(text);
  std::string line;
  auto resolve = [&](long i) {
    const long n = long(raw.size());
    const long j = i < 0 ? n + i : i - 1;  // 1-based; negative = relative
    require_input(j >= 0 && j < n, path + ": OBJ face references missing vertex");
    return b.add_vertex(raw[j]);
  };
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind) || kind[0] == '#') continue;
    if (kind == "v") {
      double x, y, z;
      require_input(bool(ls >> x >> y >> z),
                    path + ": malformed OBJ vertex at line " + std::to_string(lineno));
      raw.push_back(Vec3(x, y, z));
    } else if (kind == "f") {
      std::vector<long> ids;
      std::string ref;
      while (ls >> ref) {
        try {
          ids.push_back(std::stol(ref.substr(0, ref.find('/'))));
        } catch (const std::exception&) {
          throw InputError(path + ": malformed OBJ face index '" + ref + "' at line " +
                           std::to_string(lineno));
        }
      }
      require_input(ids.size() == 3,
                    path + ": OBJ face with " + std::to_string(ids.size()) +
                        " vertices at line " + std::to_string(lineno) + " (triangles only)");
      b.add_triangle(resolve(ids[0]), resolve(ids[1]), resolve(ids[2]));
    }
  }
  return std::move(b.mesh);
}

double tri_area(const Mesh& m, int t) {
  const Vec3 &a = m.v[m.tri[t][0]], &b = m.v[m.tri[t][1]], &c = m.v[m.tri[t][2]];
  return 0.5 * norm(cross(b - a, c - a));
}

}  // namespace

Mesh load_mesh(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require_input(bool(f), path + ": cannot open");
  std::vector<char> buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  require_input(!buf.empty(), path + ": empty file");

  Mesh m;
  const bool is_obj = path.size() > 4 && path.substr(path.size() - 4) == ".obj";
  if (is_obj) {
    m = load_obj(std::string(buf.begin(), buf.end()), path);
  } else {
    // "solid" prefix alone does not prove ASCII; trust the record arithmetic.
    bool binary = buf.size() >= 84;
    if (binary) {
      uint32_t n;
      std::memcpy(&n, buf.data() + 80, 4);
      binary = buf.size() == 84 + size_t(n) * 50;
    }
    m = binary ? load_stl_binary(buf, path)
               : load_stl_ascii(std::string(buf.begin(), buf.end()), path);
  }
  compute_normals(m);
  validate_mesh(m);
  return m;
}

void compute_normals(Mesh& m) {
  m.nrm.resize(m.tri.size());
  for (int t = 0; t < m.nt(); ++t) {
    const Vec3 n = cross(m.v[m.tri[t][1]] - m.v[m.tri[t][0]], m.v[m.tri[t][2]] - m.v[m.tri[t][0]]);
    const double L = norm(n);
    m.nrm[t] = L > 0 ? n / L : Vec3(0, 0, 1);
  }
}

void validate_mesh(const Mesh& m) {
  require_input(m.nv() >= 4 && m.nt() >= 4, "mesh too small to bound a volume");

  int degenerate = 0;
  for (int t = 0; t < m.nt(); ++t)
    if (tri_area(m, t) <= 1e-9) ++degenerate;

  // Undirected edge -> net orientation count and total use count.
  std::map<std::pair<int, int>, std::pair<int, int>> edges;  // (fwd-rev, uses)
  for (const auto& tr : m.tri) {
    for (int e = 0; e < 3; ++e) {
      const int a = tr[e], b = tr[(e + 1) % 3];
      auto& slot = edges[{std::min(a, b), std::max(a, b)}];
      slot.first += (a < b) ? 1 : -1;
      slot.second += 1;
    }
  }
  int boundary = 0, nonmanifold = 0, misoriented = 0;
  for (const auto& [k, v] : edges) {
    if (v.second == 1) ++boundary;
    else if (v.second > 2) ++nonmanifold;
    else if (v.first != 0) ++misoriented;  // two uses, same direction
  }

  // Shell count: connected components over referenced vertices.
  std::vector<int> parent(m.nv());
  std::iota(parent.begin(), parent.end(), 0);
  std::vector<char> used(m.nv(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& tr : m.tri) {
    used[tr[0]] = used[tr[1]] = used[tr[2]] = 1;
    parent[find(tr[1])] = find(tr[0]);
    parent[find(tr[2])] = find(tr[0]);
  }
  int shells = 0;
  for (int i = 0; i < m.nv(); ++i)
    if (used[i] && find(i) == i) ++shells;

  std::string err;
  if (boundary) err += "non-watertight, " + std::to_string(boundary) + " boundary edges; ";
  if (nonmanifold) err += std::to_string(nonmanifold) + " non-manifold edges; ";
  if (misoriented) err += std::to_string(misoriented) + " inconsistently oriented edges; ";
  if (degenerate) err += std::to_string(degenerate) + " degenerate triangles; ";
  if (shells != 1) err += std::to_string(shells) + " shells (expected 1); ";
  if (!err.empty()) {
    err.resize(err.size() - 2);
    throw InputError("invalid mesh: " + err);
  }
}

double mesh_area(const Mesh& m) {
  double a = 0;
  for (int t = 0; t < m.nt(); ++t) a += tri_area(m, t);
  return a;
}

double mesh_volume(const Mesh& m) {
  double v6 = 0;
  for (const auto& tr : m.tri)
    v6 += dot(m.v[tr[0]], cross(m.v[tr[1]], m.v[tr[2]]));
  return v6 / 6.0;
}

void mesh_bbox(const Mesh& m, Vec3& lo, Vec3& hi) {
  require_input(!m.v.empty(), "bbox of empty mesh");
  lo = hi = m.v[0];
  for (const Vec3& p : m.v) {
    lo = cmin(lo, p);
    hi = cmax(hi, p);
  }
}

int euler_characteristic(const Mesh& m) {
  std::map<std::pair<int, int>, char> edges;
  for (const auto& tr : m.tri)
    for (int e = 0; e < 3; ++e) {
      const int a = tr[e], b = tr[(e + 1) % 3];
      edges[{std::min(a, b), std::max(a, b)}] = 1;
    }
  return m.nv() - int(edges.size()) + m.nt();
}

std::vector<Vec3> vertex_normals(const Mesh& m) {
  std::vector<Vec3> n(m.nv(), Vec3(0, 0, 0));
  for (int t = 0; t < m.nt(); ++t) {
    // area weighting: unnormalized cross product
    const Vec3 an = cross(m.v[m.tri[t][1]] - m.v[m.tri[t][0]], m.v[m.tri[t][2]] - m.v[m.tri[t][0]]);
    for (int k = 0; k < 3; ++k) n[m.tri[t][k]] += an;
  }
  for (auto& x : n) {
    const double L = norm(x);
    if (L > 0) x = x / L;
  }
  return n;
}

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = dot(ab, ap), d2 = dot(ac, ap);
  if (d1 <= 0 && d2 <= 0) return a;
  const Vec3 bp = p - b;
  const double d3 = dot(ab, bp), d4 = dot(ac, bp);
  if (d3 >= 0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + ab * (d1 / (d1 - d3));
  const Vec3 cp = p - c;
  const double d5 = dot(ab, cp), d6 = dot(ac, cp);
  if (d6 >= 0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + ac * (d2 / (d2 - d6));
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0)
    return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

TriGrid::TriGrid(const Mesh& m, double cell) : m_(&m) {
  mesh_bbox(m, lo_, hi_);
  const Vec3 ext = hi_ - lo_;
  const double diag = std::fmax(norm(ext), 1e-6);
  if (cell <= 0) {
    const double vol = std::fmax(ext.x, 1e-3) * std::fmax(ext.y, 1e-3) * std::fmax(ext.z, 1e-3);
    cell = std::cbrt(vol / std::fmax(double(m.nt()), 1.0));
    cell = std::clamp(cell, diag / 256.0, diag / 4.0);
  }
  cell_ = cell;
  // pad so boundary points land strictly inside the grid
  lo_ -= Vec3(cell, cell, cell) * 0.5;
  hi_ += Vec3(cell, cell, cell) * 0.5;
  nx_ = std::max(1, int(std::ceil((hi_.x - lo_.x) / cell_)));
  ny_ = std::max(1, int(std::ceil((hi_.y - lo_.y) / cell_)));
  nz_ = std::max(1, int(std::ceil((hi_.z - lo_.z) / cell_)));
  cells_.resize(size_t(nx_) * ny_ * nz_);
  for (int t = 0; t < m.nt(); ++t) {
    Vec3 tlo = m.v[m.tri[t][0]], thi = tlo;
    for (int k = 1; k < 3; ++k) {
      tlo = cmin(tlo, m.v[m.tri[t][k]]);
      thi = cmax(thi, m.v[m.tri[t][k]]);
    }
    int ix0, iy0, iz0, ix1, iy1, iz1;
    cell_of(tlo, ix0, iy0, iz0);
    cell_of(thi, ix1, iy1, iz1);
    for (int iz = iz0; iz <= iz1; ++iz)
      for (int iy = iy0; iy <= iy1; ++iy)
        for (int ix = ix0; ix <= ix1; ++ix) cells_[cell_index(ix, iy, iz)].push_back(t);
  }
}

void TriGrid::cell_of(const Vec3& p, int& ix, int& iy, int& iz) const {
  ix = std::clamp(int((p.x - lo_.x) / cell_), 0, nx_ - 1);
  iy = std::clamp(int((p.y - lo_.y) / cell_), 0, ny_ - 1);
  iz = std::clamp(int((p.z - lo_.z) / cell_), 0, nz_ - 1);
}

namespace {

// Möller–Trumbore for a +z ray from p. Returns crossing state:
// 0 = miss, 1 = crossing at *t, -1 = numerically marginal (retry).
int vertical_hit(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c, double* t) {
  const Vec3 e1 = b - a, e2 = c - a;
  // dir = (0,0,1): h = dir × e2 = (-e2.y, e2.x, 0)
  const double det = -e2.y * e1.x + e2.x * e1.y;
  const double scale = std::fabs(e1.x) + std::fabs(e1.y) + std::fabs(e2.x) + std::fabs(e2.y);
  if (std::fabs(det) < 1e-12 * std::fmax(scale * scale, 1e-12)) return 0;  // edge-on
  const double inv = 1.0 / det;
  const Vec3 s = p - a;
  const double u = (-e2.y * s.x + e2.x * s.y) * inv;
  const Vec3 q = cross(s, e1);
  const double v = q.z * inv;
  const double tt = dot(e2, q) * inv;
  const double margin = 1e-9;
  if (u < -margin || v < -margin || u + v > 1 + margin || tt < -margin) return 0;
  if (u < margin || v < margin || u + v > 1 - margin || tt < margin) return -1;
  *t = tt;
  return 1;
}

}  // namespace

bool TriGrid::inside_parity(const Vec3& p) const {
  if (p.x < lo_.x || p.x > hi_.x || p.y < lo_.y || p.y > hi_.y || p.z < lo_.z || p.z > hi_.z)
    return false;
  Vec3 origin = p;
  for (int attempt = 0; attempt < 8; ++attempt) {
    int ix, iy, iz;
    cell_of(origin, ix, iy, iz);
    int crossings = 0;
    bool marginal = false;
    std::vector<int> seen;  // triangles span several column cells
    for (int z = iz; z < nz_ && !marginal; ++z) {
      for (int t : cells_[cell_index(ix, iy, z)]) {
        if (std::find(seen.begin(), seen.end(), t) != seen.end()) continue;
        seen.push_back(t);
        double tt;
        const int h = vertical_hit(origin, m_->v[m_->tri[t][0]], m_->v[m_->tri[t][1]],
                                   m_->v[m_->tri[t][2]], &tt);
        if (h < 0) {
          marginal = true;
          break;
        }
        if (h > 0) ++crossings;
      }
    }
    if (!marginal) return (crossings & 1) != 0;
    origin = p + Vec3(1.0 + attempt, 0.7 + attempt, 0.0) * (1e-6 * (attempt + 1));
  }
  return inside_winding(p);  // pathological column; exact fallback
}

double TriGrid::winding_number(const Vec3& p) const {
  double w = 0;
  for (const auto& tr : m_->tri) {
    const Vec3 a = m_->v[tr[0]] - p, b = m_->v[tr[1]] - p, c = m_->v[tr[2]] - p;
    const double la = norm(a), lb = norm(b), lc = norm(c);
    const double num = dot(a, cross(b, c));
    const double den = la * lb * lc + dot(a, b) * lc + dot(b, c) * la + dot(c, a) * lb;
    w += std::atan2(num, den);
  }
  return w / (2.0 * 3.14159265358979323846);
}

double TriGrid::distance(const Vec3& p, double cap) const {
  double best2 = cap * cap;
  int ix, iy, iz;
  cell_of(p, ix, iy, iz);
  const int rmax = int(std::ceil(cap / cell_)) + 1;
  for (int r = 0; r <= rmax; ++r) {
    // Cells whose nearest corner is already beyond best can be skipped wholesale.
    const double ring_min = (r - 1) * cell_;
    if (r > 0 && ring_min * ring_min > best2) break;
    for (int dz = -r; dz <= r; ++dz)
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != r) continue;  // shell only
          const int cx = ix + dx, cy = iy + dy, cz = iz + dz;
          if (cx < 0 || cx >= nx_ || cy < 0 || cy >= ny_ || cz < 0 || cz >= nz_) continue;
          for (int t : cells_[cell_index(cx, cy, cz)]) {
            const Vec3 q = closest_point_on_triangle(p, m_->v[m_->tri[t][0]], m_->v[m_->tri[t][1]],
                                                     m_->v[m_->tri[t][2]]);
            best2 = std::fmin(best2, norm2(q - p));
          }
        }
  }
  return std::sqrt(best2);
}

}  // namespace cbs
