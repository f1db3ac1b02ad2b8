#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "cbs/error.hpp"
#include "cbs/frames.hpp"
#include "cbs/kernels.hpp"
#include "cbs/rng.hpp"
#include "test_util.hpp"

using namespace cbs;
using testutil::random_curve;

namespace {

bool cpu_avx2() {
#if defined(__GNUC__) && defined(__x86_64__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

// Brute-force reference sweep, written against the documented semantics with
// plain libm calls. Used as the oracle for both kernel backends.
struct RefOut {
  double w = 0, dx = 0, dy = 0, dz = 0, co = 0, copeak = 0;
};

double ref_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

RefOut ref_sweep(const KernelGrid& g, const KernelEnv* env, const StateParams& sp, WMode mode,
                 double qx, double qy, double qz) {
  RefOut o;
  const bool sweep = (mode == WMode::kSweep);
  double S = 0, uprev = 0, rprev = 0;
  for (int i = 0; i < g.n; ++i) {
    const double vx = qx - g.cx[i], vy = qy - g.cy[i], vz = qz - g.cz[i];
    const double s = vx * g.tx[i] + vy * g.ty[i] + vz * g.tz[i];
    const double a = vx * g.nx[i] + vy * g.ny[i] + vz * g.nz[i];
    const double e = vx * g.bx[i] + vy * g.by[i] + vz * g.bz[i];
    double u = 0, r = 0;
    if (sweep) {
      u = ref_sigmoid(sp.beta * s);
      r = ref_sigmoid(sp.beta * (sp.rx - std::sqrt(a * a + sp.eps_abs))) *
          ref_sigmoid(sp.beta * (sp.ry - std::sqrt(e * e + sp.eps_abs)));
      if (i > 0) {
        const double kap = std::max(uprev - u, 0.0) * 0.5 * (rprev + r);
        S += kap;
        o.dx += kap * 0.5 * (g.tx[i - 1] + g.tx[i]);
        o.dy += kap * 0.5 * (g.ty[i - 1] + g.ty[i]);
        o.dz += kap * 0.5 * (g.tz[i - 1] + g.tz[i]);
      }
    }
    if (env && env->npoly > 0) {
      const double wn = sweep ? std::fmin(S, 1.0) : 1.0;
      double C = 0;
      for (int k = 0; k < env->npoly; ++k) {
        double m = -1e300;
        for (int rr = env->row_begin[k]; rr < env->row_begin[k + 1]; ++rr)
          m = std::fmax(m, env->ax[rr] * a + env->ay[rr] * e + env->az[rr] * s + env->off[rr]);
        double sum = 0;
        for (int rr = env->row_begin[k]; rr < env->row_begin[k + 1]; ++rr)
          sum += std::exp(sp.alpha * (env->ax[rr] * a + env->ay[rr] * e + env->az[rr] * s +
                                      env->off[rr] - m));
        const double z = m + std::log(sum) / sp.alpha;
        C += ref_sigmoid(-sp.beta * z);
      }
      o.co += g.tw[i] * wn * C;
      o.copeak = std::fmax(o.copeak, wn * C);
    }
    uprev = u;
    rprev = r;
  }
  o.w = sweep ? std::fmin(S, 1.0) : 1.0;
  return o;
}

// Axis-aligned box [lo, hi] in sweep-plane coordinates (a, e, s).
KernelEnv box_env(Vec3 lo, Vec3 hi) {
  KernelEnv env;
  env.npoly = 1;
  env.row_begin = {0, 6};
  env.ax = {1, -1, 0, 0, 0, 0};
  env.ay = {0, 0, 1, -1, 0, 0};
  env.az = {0, 0, 0, 0, 1, -1};
  env.off = {-hi.x, lo.x, -hi.y, lo.y, -hi.z, lo.z};
  return env;
}

void append_box(KernelEnv& env, Vec3 lo, Vec3 hi) {
  const KernelEnv b = box_env(lo, hi);
  env.npoly += 1;
  env.row_begin.push_back(env.row_begin.back() + 6);
  env.ax.insert(env.ax.end(), b.ax.begin(), b.ax.end());
  env.ay.insert(env.ay.end(), b.ay.begin(), b.ay.end());
  env.az.insert(env.az.end(), b.az.begin(), b.az.end());
  env.off.insert(env.off.end(), b.off.begin(), b.off.end());
}

struct Scene {
  CurveFrames frames;
  std::vector<double> tw;
  KernelGrid grid;
  KernelEnv env;
  std::vector<double> px, py, pz;
};

Scene make_scene(uint64_t seed, int nodes, int count, double extent = 12.0) {
  Rng rng(seed);
  Scene sc;
  // Strongly rising curve: real crossings, no u-plateau ambiguity.
  Curve c;
  c.p.resize(6);
  for (int k = 0; k < 6; ++k)
    c.p[k] = Vec4(rng.uniform(-3, 3), rng.uniform(-3, 3), extent * k / 5.0 + rng.uniform(-0.8, 0.8),
                  rng.uniform(-0.4, 0.4));
  sc.frames = build_frames(c, nodes);
  sc.tw = trapezoid_weights(sc.frames.t);
  sc.grid = kernel_grid(sc.frames, sc.tw);
  sc.env = box_env(Vec3(-3, -3, -8), Vec3(3, 3, -2));
  append_box(sc.env, Vec3(1, -6, -12), Vec3(7, 2, -4));
  for (int i = 0; i < count; ++i) {
    sc.px.push_back(rng.uniform(-5, 5));
    sc.py.push_back(rng.uniform(-5, 5));
    sc.pz.push_back(rng.uniform(extent * 0.15, extent * 0.85));
  }
  return sc;
}

struct ForwardBufs {
  std::vector<double> w, dx, dy, dz, co, copeak;
  SweepOutputs out;
  explicit ForwardBufs(int n)
      : w(n), dx(n), dy(n), dz(n), co(n), copeak(n),
        out{w.data(), dx.data(), dy.data(), dz.data(), co.data(), copeak.data()} {}
};

}  // namespace

TEST_CASE("forward sweep matches the brute-force reference") {
  for (uint64_t seed : {101u, 102u, 103u}) {
    Scene sc = make_scene(seed, 65, 50);
    StateParams sp;
    sp.beta = 50;
    sp.alpha = 50;
    sp.rx = 6;
    sp.ry = 5;
    const int n = int(sc.px.size());
    ForwardBufs f(n);
    scalar_kernels().forward(sc.grid, &sc.env, sp, WMode::kSweep, sc.px.data(), sc.py.data(),
                             sc.pz.data(), n, f.out);
    for (int i = 0; i < n; ++i) {
      const RefOut r = ref_sweep(sc.grid, &sc.env, sp, WMode::kSweep, sc.px[i], sc.py[i], sc.pz[i]);
      CHECK(std::fabs(f.w[i] - r.w) < 5e-12);
      CHECK(std::fabs(f.dx[i] - r.dx) < 5e-12);
      CHECK(std::fabs(f.dy[i] - r.dy) < 5e-12);
      CHECK(std::fabs(f.dz[i] - r.dz) < 5e-12);
      CHECK(std::fabs(f.co[i] - r.co) < 2e-11);
      CHECK(std::fabs(f.copeak[i] - r.copeak) < 5e-12);
      CHECK(f.w[i] >= 0.0);
      CHECK(f.w[i] <= 1.0);
      CHECK(f.co[i] >= 0.0);
    }
  }
}

TEST_CASE("pinned-state mode returns w=1 and keeps the collision integral") {
  Scene sc = make_scene(104, 33, 17);
  StateParams sp;
  sp.beta = 50;
  sp.alpha = 50;
  const int n = int(sc.px.size());
  ForwardBufs f(n);
  scalar_kernels().forward(sc.grid, &sc.env, sp, WMode::kOne, sc.px.data(), sc.py.data(),
                           sc.pz.data(), n, f.out);
  for (int i = 0; i < n; ++i) {
    CHECK(f.w[i] == 1.0);
    CHECK(f.dx[i] == 0.0);
    CHECK(f.dy[i] == 0.0);
    CHECK(f.dz[i] == 0.0);
    const RefOut r = ref_sweep(sc.grid, &sc.env, sp, WMode::kOne, sc.px[i], sc.py[i], sc.pz[i]);
    CHECK(std::fabs(f.co[i] - r.co) < 1e-11);
  }
}

TEST_CASE("vertical sweep classifies printed vs unreachable points") {
  const Curve c = vertical_curve(40.0);
  const CurveFrames fr = build_frames(c, 257);
  const std::vector<double> tw = trapezoid_weights(fr.t);
  const KernelGrid g = kernel_grid(fr, tw);
  StateParams sp;  // defaults: alpha=beta=1e3, plate 144x81

  const std::vector<Vec3> pts = {
      {10, 5, 20},    // swept inside the plate -> printed
      {-60, 30, 7},   // near the plate corner, still inside -> printed
      {80, 0, 20},    // beyond the plate half-width -> not printed
      {0, 50, 20},    // beyond the plate half-height -> not printed
      {0, 0, -5},     // below the sweep start -> never crossed
      {0, 0, 45},     // above the sweep end -> never crossed
  };
  const std::vector<double> expect = {1, 1, 0, 0, 0, 0};

  std::vector<double> px, py, pz;
  for (const Vec3& p : pts) {
    px.push_back(p.x);
    py.push_back(p.y);
    pz.push_back(p.z);
  }
  const int n = int(pts.size());
  ForwardBufs f(n);
  scalar_kernels().forward(g, nullptr, sp, WMode::kSweep, px.data(), py.data(), pz.data(), n,
                           f.out);
  for (int i = 0; i < n; ++i) {
    CHECK(std::fabs(f.w[i] - expect[i]) < 1e-6);
    if (expect[i] == 1) {
      // local print direction of a vertical sweep is +z with unit mass
      CHECK(std::fabs(f.dz[i] - 1.0) < 1e-6);
      CHECK(std::fabs(f.dx[i]) < 1e-9);
      CHECK(std::fabs(f.dy[i]) < 1e-9);
    }
  }
}

TEST_CASE("collision integral fires only once the point is printed and inside the obstacle") {
  const Curve c = vertical_curve(40.0);
  const CurveFrames fr = build_frames(c, 257);
  const std::vector<double> tw = trapezoid_weights(fr.t);
  const KernelGrid g = kernel_grid(fr, tw);
  StateParams sp;
  // Obstacle spans s in [-30, -10]: planes whose origin sits 10..30 above the sample.
  KernelEnv env = box_env(Vec3(-5, -5, -30), Vec3(5, 5, -10));

  const std::vector<Vec3> pts = {
      {0, 0, 20},   // on-axis, printed at z=20, obstacle hit for c_z in [30, 40]
      {50, 0, 20},  // printed but laterally outside the obstacle
      {0, 0, 39},   // printed only at the very end; obstacle range starts past the sweep
  };
  std::vector<double> px, py, pz;
  for (const Vec3& p : pts) {
    px.push_back(p.x);
    py.push_back(p.y);
    pz.push_back(p.z);
  }
  const int n = int(pts.size());
  ForwardBufs f(n);
  scalar_kernels().forward(g, &env, sp, WMode::kSweep, px.data(), py.data(), pz.data(), n, f.out);

  CHECK(f.co[0] > 1e-3);
  CHECK(f.copeak[0] > 0.99);
  CHECK(f.co[1] < 1e-6);
  CHECK(f.co[2] < 1e-6);
  // Time-integral scale: ~1/4 of the sweep has w·C = 1.
  CHECK(f.co[0] == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("scalar and avx2 backends agree") {
  if (!(cpu_avx2() && avx2_kernels())) {
    MESSAGE("avx2 unavailable; skipping");
    return;
  }
  for (int count : {64, 61, 3}) {  // multiples of the lane width and ragged tails
    Scene sc = make_scene(200 + count, 49, count);
    StateParams sp;  // defaults, saturated regime
    ForwardBufs fs(count), fv(count);
    scalar_kernels().forward(sc.grid, &sc.env, sp, WMode::kSweep, sc.px.data(), sc.py.data(),
                             sc.pz.data(), count, fs.out);
    avx2_kernels()->forward(sc.grid, &sc.env, sp, WMode::kSweep, sc.px.data(), sc.py.data(),
                            sc.pz.data(), count, fv.out);
    for (int i = 0; i < count; ++i) {
      CHECK(fs.w[i] == fv.w[i]);
      CHECK(fs.dx[i] == fv.dx[i]);
      CHECK(fs.dy[i] == fv.dy[i]);
      CHECK(fs.dz[i] == fv.dz[i]);
      CHECK(fs.co[i] == fv.co[i]);
      CHECK(fs.copeak[i] == fv.copeak[i]);
    }

    // Adjoint: per-sample xbar is lane-exact; grid reductions may differ by
    // horizontal-sum order only.
    Rng rng(55);
    std::vector<double> wbar(count), dxbar(count), dybar(count), dzbar(count), cobar(count);
    for (int i = 0; i < count; ++i) {
      wbar[i] = rng.uniform(-1, 1);
      dxbar[i] = rng.uniform(-1, 1);
      dybar[i] = rng.uniform(-1, 1);
      dzbar[i] = rng.uniform(-1, 1);
      cobar[i] = rng.uniform(-1, 1);
    }
    const SweepSeeds seeds{wbar.data(), dxbar.data(), dybar.data(), dzbar.data(), cobar.data()};
    GridAdjoint gs, gv;
    gs.resize(sc.grid.n);
    gv.resize(sc.grid.n);
    std::vector<double> xs(count, 0), ys(count, 0), zs(count, 0);
    std::vector<double> xv(count, 0), yv(count, 0), zv(count, 0);
    scalar_kernels().adjoint(sc.grid, &sc.env, sp, WMode::kSweep, sc.px.data(), sc.py.data(),
                             sc.pz.data(), count, seeds, gs, xs.data(), ys.data(), zs.data());
    avx2_kernels()->adjoint(sc.grid, &sc.env, sp, WMode::kSweep, sc.px.data(), sc.py.data(),
                            sc.pz.data(), count, seeds, gv, xv.data(), yv.data(), zv.data());
    for (int i = 0; i < count; ++i) {
      CHECK(std::fabs(xs[i] - xv[i]) <= 1e-12 * std::fmax(1.0, std::fabs(xs[i])));
      CHECK(std::fabs(ys[i] - yv[i]) <= 1e-12 * std::fmax(1.0, std::fabs(ys[i])));
      CHECK(std::fabs(zs[i] - zv[i]) <= 1e-12 * std::fmax(1.0, std::fabs(zs[i])));
    }
    auto close = [](const std::vector<double>& a, const std::vector<double>& b) {
      double worst = 0;
      for (size_t i = 0; i < a.size(); ++i)
        worst = std::fmax(worst,
                          std::fabs(a[i] - b[i]) / std::fmax(1.0, std::fabs(a[i])));
      return worst;
    };
    CHECK(close(gs.cx, gv.cx) < 1e-11);
    CHECK(close(gs.cy, gv.cy) < 1e-11);
    CHECK(close(gs.cz, gv.cz) < 1e-11);
    CHECK(close(gs.tx, gv.tx) < 1e-11);
    CHECK(close(gs.ty, gv.ty) < 1e-11);
    CHECK(close(gs.tz, gv.tz) < 1e-11);
    CHECK(close(gs.nx, gv.nx) < 1e-11);
    CHECK(close(gs.ny, gv.ny) < 1e-11);
    CHECK(close(gs.nz, gv.nz) < 1e-11);
    CHECK(close(gs.bx, gv.bx) < 1e-11);
    CHECK(close(gs.by, gv.by) < 1e-11);
    CHECK(close(gs.bz, gv.bz) < 1e-11);
  }
}

namespace {

// Loose copy of a grid so single entries can be nudged for finite differences.
struct GridCopy {
  std::vector<double> t, cx, cy, cz, tx, ty, tz, nx, ny, nz, bx, by, bz, tw;
  explicit GridCopy(const KernelGrid& g) {
    auto cp = [&](const double* p) { return std::vector<double>(p, p + g.n); };
    t = cp(g.t);
    cx = cp(g.cx); cy = cp(g.cy); cz = cp(g.cz);
    tx = cp(g.tx); ty = cp(g.ty); tz = cp(g.tz);
    nx = cp(g.nx); ny = cp(g.ny); nz = cp(g.nz);
    bx = cp(g.bx); by = cp(g.by); bz = cp(g.bz);
    tw = cp(g.tw);
  }
  KernelGrid view() {
    KernelGrid g;
    g.n = int(t.size());
    g.t = t.data();
    g.cx = cx.data(); g.cy = cy.data(); g.cz = cz.data();
    g.tx = tx.data(); g.ty = ty.data(); g.tz = tz.data();
    g.nx = nx.data(); g.ny = ny.data(); g.nz = nz.data();
    g.bx = bx.data(); g.by = by.data(); g.bz = bz.data();
    g.tw = tw.data();
    return g;
  }
};

}  // namespace

TEST_CASE("adjoint matches central finite differences") {
  Scene sc = make_scene(301, 9, 3);
  StateParams sp;
  sp.alpha = 20;
  sp.beta = 20;
  sp.rx = 6;
  sp.ry = 5;
  const int n = int(sc.px.size());

  Rng rng(66);
  std::vector<double> wbar(n), dxbar(n), dybar(n), dzbar(n), cobar(n);
  for (int i = 0; i < n; ++i) {
    wbar[i] = rng.uniform(-1, 1);
    dxbar[i] = rng.uniform(-1, 1);
    dybar[i] = rng.uniform(-1, 1);
    dzbar[i] = rng.uniform(-1, 1);
    cobar[i] = rng.uniform(-1, 1);
  }
  const SweepSeeds seeds{wbar.data(), dxbar.data(), dybar.data(), dzbar.data(), cobar.data()};

  auto J = [&](const KernelGrid& g, const std::vector<double>& px, const std::vector<double>& py,
               const std::vector<double>& pz) {
    ForwardBufs f(n);
    scalar_kernels().forward(g, &sc.env, sp, WMode::kSweep, px.data(), py.data(), pz.data(), n,
                             f.out);
    double acc = 0;
    for (int i = 0; i < n; ++i)
      acc += wbar[i] * f.w[i] + dxbar[i] * f.dx[i] + dybar[i] * f.dy[i] + dzbar[i] * f.dz[i] +
             cobar[i] * f.co[i];
    return acc;
  };

  GridAdjoint ga;
  ga.resize(sc.grid.n);
  std::vector<double> xb(n, 0), yb(n, 0), zb(n, 0);
  scalar_kernels().adjoint(sc.grid, &sc.env, sp, WMode::kSweep, sc.px.data(), sc.py.data(),
                           sc.pz.data(), n, seeds, ga, xb.data(), yb.data(), zb.data());

  const double h = 1e-6;
  auto fd_ok = [&](double an, double fd) {
    return std::fabs(an - fd) <= 1e-5 + 1e-4 * std::fabs(fd);
  };

  // Sample-position gradients.
  for (int i = 0; i < n; ++i) {
    for (int comp = 0; comp < 3; ++comp) {
      auto px = sc.px; auto py = sc.py; auto pz = sc.pz;
      std::vector<double>* arr = comp == 0 ? &px : comp == 1 ? &py : &pz;
      (*arr)[i] += h;
      const double jp = J(sc.grid, px, py, pz);
      (*arr)[i] -= 2 * h;
      const double jm = J(sc.grid, px, py, pz);
      const double fd = (jp - jm) / (2 * h);
      const double an = comp == 0 ? xb[i] : comp == 1 ? yb[i] : zb[i];
      INFO("sample " << i << " comp " << comp << " an=" << an << " fd=" << fd);
      CHECK(fd_ok(an, fd));
    }
  }

  // Frame-grid gradients, every node and field.
  GridCopy gc(sc.grid);
  struct Field {
    std::vector<double> GridCopy::*arr;
    std::vector<double> GridAdjoint::*adj;
    const char* name;
  };
  const std::vector<Field> fields = {
      {&GridCopy::cx, &GridAdjoint::cx, "cx"}, {&GridCopy::cy, &GridAdjoint::cy, "cy"},
      {&GridCopy::cz, &GridAdjoint::cz, "cz"}, {&GridCopy::tx, &GridAdjoint::tx, "tx"},
      {&GridCopy::ty, &GridAdjoint::ty, "ty"}, {&GridCopy::tz, &GridAdjoint::tz, "tz"},
      {&GridCopy::nx, &GridAdjoint::nx, "nx"}, {&GridCopy::ny, &GridAdjoint::ny, "ny"},
      {&GridCopy::nz, &GridAdjoint::nz, "nz"}, {&GridCopy::bx, &GridAdjoint::bx, "bx"},
      {&GridCopy::by, &GridAdjoint::by, "by"}, {&GridCopy::bz, &GridAdjoint::bz, "bz"},
  };
  for (const Field& f : fields) {
    for (int i = 0; i < gc.view().n; ++i) {
      double& slot = (gc.*(f.arr))[i];
      const double keep = slot;
      slot = keep + h;
      const double jp = J(gc.view(), sc.px, sc.py, sc.pz);
      slot = keep - h;
      const double jm = J(gc.view(), sc.px, sc.py, sc.pz);
      slot = keep;
      const double fd = (jp - jm) / (2 * h);
      const double an = (ga.*(f.adj))[i];
      INFO("field " << f.name << " node " << i << " an=" << an << " fd=" << fd);
      CHECK(fd_ok(an, fd));
    }
  }
}

TEST_CASE("adjoint without collision seeds ignores the environment") {
  Scene sc = make_scene(401, 17, 5);
  StateParams sp;
  sp.alpha = 20;
  sp.beta = 20;
  const int n = int(sc.px.size());
  std::vector<double> wbar(n, 1.0);
  const SweepSeeds seeds{wbar.data(), nullptr, nullptr, nullptr, nullptr};

  GridAdjoint with_env, without_env;
  with_env.resize(sc.grid.n);
  without_env.resize(sc.grid.n);
  std::vector<double> x1(n, 0), y1(n, 0), z1(n, 0), x2(n, 0), y2(n, 0), z2(n, 0);
  scalar_kernels().adjoint(sc.grid, &sc.env, sp, WMode::kSweep, sc.px.data(), sc.py.data(),
                           sc.pz.data(), n, seeds, with_env, x1.data(), y1.data(), z1.data());
  scalar_kernels().adjoint(sc.grid, nullptr, sp, WMode::kSweep, sc.px.data(), sc.py.data(),
                           sc.pz.data(), n, seeds, without_env, x2.data(), y2.data(), z2.data());
  for (int i = 0; i < sc.grid.n; ++i) {
    CHECK(with_env.cx[i] == without_env.cx[i]);
    CHECK(with_env.tx[i] == without_env.tx[i]);
    CHECK(with_env.nx[i] == without_env.nx[i]);
  }
  for (int i = 0; i < n; ++i) CHECK(x1[i] == x2[i]);
}

TEST_CASE("backend selection honours explicit overrides") {
  set_kernel_backend("scalar");
  CHECK(kernel_backend_name() == "scalar");
  if (cpu_avx2() && avx2_kernels()) {
    set_kernel_backend("avx2");
    CHECK(kernel_backend_name() == "avx2");
  }
  set_kernel_backend("auto");
  CHECK_THROWS_AS(set_kernel_backend("neon"), InputError);
  CHECK((kernel_backend_name() == "scalar" || kernel_backend_name() == "avx2"));
}
