#include "cbs/frames.hpp"

#include <cmath>
#include <string>

#include "cbs/error.hpp"

namespace cbs {

SetupPose pose_of(const FrameSample& f) {
  return {Mat3::from_cols(f.n, f.b, f.tangent), f.c};
}

FrameSample CurveFrames::sample(int i) const {
  FrameSample s;
  s.t = t[i];
  s.c = c(i);
  s.tangent = tangent(i);
  s.bishop_n = bn[i];
  s.bishop_b = bb[i];
  s.theta = theta[i];
  s.n = n(i);
  s.b = b(i);
  return s;
}

CurveFrames build_frames_at(const Curve& curve, std::vector<double> ts) {
  require_input(curve.valid(), "invalid trajectory curve (needs >=2 control points, non-degenerate arc)");
  const int n = int(ts.size());
  require_input(n >= 2, "frame grid needs at least 2 nodes");
  for (int i = 0; i < n; ++i) {
    require_input(ts[i] >= 0.0 && ts[i] <= 1.0, "frame grid parameter out of [0,1]");
    if (i) require_input(ts[i] > ts[i - 1], "frame grid parameters must be strictly increasing");
  }

  CurveFrames f;
  f.curve = curve;
  f.t = std::move(ts);
  f.nodes = n;
  const int deg = curve.degree();
  const int np = deg + 1;
  f.B.assign(size_t(np) * n, 0.0);
  f.Bd.assign(size_t(np) * n, 0.0);
  f.cx.resize(n); f.cy.resize(n); f.cz.resize(n);
  f.tx.resize(n); f.ty.resize(n); f.tz.resize(n);
  f.nx.resize(n); f.ny.resize(n); f.nz.resize(n);
  f.bx.resize(n); f.by.resize(n); f.bz.resize(n);
  f.cdot.resize(n);
  f.speed.resize(n);
  f.theta.resize(n);
  f.bn.resize(n);
  f.bb.resize(n);

  std::vector<double> row(np), drow(np);
  for (int i = 0; i < n; ++i) {
    bernstein_row(deg, f.t[i], row.data());
    bernstein_deriv_row(deg, f.t[i], drow.data());
    Vec3 c{0, 0, 0}, cd{0, 0, 0};
    double th = 0;
    for (int k = 0; k < np; ++k) {
      f.B[size_t(k) * n + i] = row[k];
      f.Bd[size_t(k) * n + i] = drow[k];
      c += curve.p[k].xyz() * row[k];
      cd += curve.p[k].xyz() * drow[k];
      th += curve.p[k].w * row[k];
    }
    const double L = norm(cd);
    require_numeric(L > 1e-9, "degenerate tangent at t=" + std::to_string(f.t[i]));
    f.cx[i] = c.x; f.cy[i] = c.y; f.cz[i] = c.z;
    f.cdot[i] = cd;
    f.speed[i] = L;
    const Vec3 T = cd / L;
    f.tx[i] = T.x; f.ty[i] = T.y; f.tz[i] = T.z;
    f.theta[i] = th;
  }

  // Seed bishop normal: project the world axis least aligned with the first
  // tangent (deterministic tie-break on the lower axis index).
  {
    const Vec3 T0 = f.tangent(0);
    int axis = 0;
    double best = std::abs(T0.x);
    if (std::abs(T0.y) < best) { best = std::abs(T0.y); axis = 1; }
    if (std::abs(T0.z) < best) { axis = 2; }
    f.seed_axis = axis;
    Vec3 e{0, 0, 0};
    e[axis] = 1.0;
    const Vec3 u = e - T0 * dot(e, T0);
    f.bn[0] = u / norm(u);
  }

  // Double-reflection rotation-minimizing propagation.
  for (int i = 0; i + 1 < n; ++i) {
    const Vec3 v1 = f.c(i + 1) - f.c(i);
    const double c1 = norm2(v1);
    require_numeric(c1 > 1e-18, "coincident frame nodes at t=" + std::to_string(f.t[i]));
    const double f1 = 2.0 / c1;
    const Vec3 nL = f.bn[i] - v1 * (f1 * dot(v1, f.bn[i]));
    const Vec3 tL = f.tangent(i) - v1 * (f1 * dot(v1, f.tangent(i)));
    const Vec3 v2 = f.tangent(i + 1) - tL;
    const double c2 = norm2(v2);
    require_numeric(c2 > 1e-18, "tangent reversal at t=" + std::to_string(f.t[i + 1]));
    const double f2 = 2.0 / c2;
    f.bn[i + 1] = nL - v2 * (f2 * dot(v2, nL));
  }

  for (int i = 0; i < n; ++i) {
    const Vec3 T = f.tangent(i);
    f.bb[i] = cross(T, f.bn[i]);
    const double ct = std::cos(f.theta[i]), st = std::sin(f.theta[i]);
    const Vec3 nr = f.bn[i] * ct + f.bb[i] * st;
    const Vec3 br = f.bn[i] * (-st) + f.bb[i] * ct;
    f.nx[i] = nr.x; f.ny[i] = nr.y; f.nz[i] = nr.z;
    f.bx[i] = br.x; f.by[i] = br.y; f.bz[i] = br.z;
  }
  return f;
}

CurveFrames build_frames(const Curve& c, int nodes) {
  require_input(nodes >= 2, "frame grid needs at least 2 nodes");
  std::vector<double> ts(nodes);
  for (int i = 0; i < nodes; ++i) ts[i] = double(i) / double(nodes - 1);
  ts.back() = 1.0;
  return build_frames_at(c, std::move(ts));
}

void GridAdjoint::resize(int n) {
  for (auto* v : {&cx, &cy, &cz, &tx, &ty, &tz, &nx, &ny, &nz, &bx, &by, &bz})
    v->assign(n, 0.0);
}

void GridAdjoint::clear() {
  for (auto* v : {&cx, &cy, &cz, &tx, &ty, &tz, &nx, &ny, &nz, &bx, &by, &bz})
    std::fill(v->begin(), v->end(), 0.0);
}

void GridAdjoint::add(const GridAdjoint& o) {
  auto acc = [](std::vector<double>& a, const std::vector<double>& b) {
    for (size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  };
  acc(cx, o.cx); acc(cy, o.cy); acc(cz, o.cz);
  acc(tx, o.tx); acc(ty, o.ty); acc(tz, o.tz);
  acc(nx, o.nx); acc(ny, o.ny); acc(nz, o.nz);
  acc(bx, o.bx); acc(by, o.by); acc(bz, o.bz);
}

void frames_pullback(const CurveFrames& f, const GridAdjoint& a, Vec4* pbar) {
  const int n = f.nodes;
  const int np = f.curve.degree() + 1;
  std::vector<Vec3> cbar(n), Tbar(n), nbar(n), cdotbar(n);
  std::vector<double> thetabar(n, 0.0);

  // Local contributions: roll and binormal at every node.
  for (int i = 0; i < n; ++i) {
    cbar[i] = {a.cx[i], a.cy[i], a.cz[i]};
    Tbar[i] = {a.tx[i], a.ty[i], a.tz[i]};
    const Vec3 nrbar{a.nx[i], a.ny[i], a.nz[i]};
    const Vec3 brbar{a.bx[i], a.by[i], a.bz[i]};
    const Vec3 nr = f.n(i), br = f.b(i);
    const double ct = std::cos(f.theta[i]), st = std::sin(f.theta[i]);
    // nr = ct·bn + st·bb ; br = -st·bn + ct·bb
    nbar[i] = nrbar * ct - brbar * st;
    const Vec3 bbar = nrbar * st + brbar * ct;
    thetabar[i] = dot(nrbar, br) - dot(brbar, nr);
    // bb = T × bn
    Tbar[i] += cross(f.bn[i], bbar);
    nbar[i] += cross(bbar, f.tangent(i));
  }

  // Reverse the rotation-minimizing recursion.
  for (int i = n - 2; i >= 0; --i) {
    const Vec3 v1 = f.c(i + 1) - f.c(i);
    const double f1 = 2.0 / norm2(v1);
    const double d1n = dot(v1, f.bn[i]);
    const double d1t = dot(v1, f.tangent(i));
    const Vec3 nL = f.bn[i] - v1 * (f1 * d1n);
    const Vec3 tL = f.tangent(i) - v1 * (f1 * d1t);
    const Vec3 v2 = f.tangent(i + 1) - tL;
    const double f2 = 2.0 / norm2(v2);
    const double d2 = dot(v2, nL);

    const Vec3 g = nbar[i + 1];
    const double gv2 = dot(g, v2);
    const Vec3 nLbar = g - v2 * (f2 * gv2);
    const Vec3 v2bar = v2 * (f2 * f2 * d2 * gv2) - nL * (f2 * gv2) - g * (f2 * d2);
    Tbar[i + 1] += v2bar;
    const Vec3 tLbar = -v2bar;
    Tbar[i] += tLbar - v1 * (f1 * dot(tLbar, v1));
    Vec3 v1bar = v1 * (f1 * f1 * d1t * dot(tLbar, v1)) - f.tangent(i) * (f1 * dot(tLbar, v1)) -
                 tLbar * (f1 * d1t);
    nbar[i] += nLbar - v1 * (f1 * dot(nLbar, v1));
    v1bar += v1 * (f1 * f1 * d1n * dot(nLbar, v1)) - f.bn[i] * (f1 * dot(nLbar, v1)) -
             nLbar * (f1 * d1n);
    cbar[i + 1] += v1bar;
    cbar[i] -= v1bar;
  }

  // Seed normal: n0 = u/‖u‖ with u = e - (e·T0)·T0.
  {
    const Vec3 T0 = f.tangent(0);
    Vec3 e{0, 0, 0};
    e[f.seed_axis] = 1.0;
    const Vec3 u = e - T0 * dot(e, T0);
    const double ul = norm(u);
    const Vec3 n0 = f.bn[0];
    const Vec3 ubar = (nbar[0] - n0 * dot(n0, nbar[0])) / ul;
    Tbar[0] += -e * dot(ubar, T0) - ubar * dot(e, T0);
  }

  // Tangent normalization: T = ċ/‖ċ‖.
  for (int i = 0; i < n; ++i) {
    const Vec3 T = f.tangent(i);
    cdotbar[i] = (Tbar[i] - T * dot(T, Tbar[i])) / f.speed[i];
  }

  // Bernstein transpose into control points.
  for (int k = 0; k < np; ++k) {
    const double* Bk = &f.B[size_t(k) * n];
    const double* Bdk = &f.Bd[size_t(k) * n];
    Vec3 pxyz{0, 0, 0};
    double pth = 0;
    for (int i = 0; i < n; ++i) {
      pxyz += cbar[i] * Bk[i] + cdotbar[i] * Bdk[i];
      pth += thetabar[i] * Bk[i];
    }
    pbar[k].x += pxyz.x;
    pbar[k].y += pxyz.y;
    pbar[k].z += pxyz.z;
    pbar[k].w += pth;
  }
}

Mat3 rotate_point_jacobian(const Vec3& phi, const Vec3& q) {
  const auto J = rotation_jacobian(phi);
  return Mat3::from_cols(J[0] * q, J[1] * q, J[2] * q);
}

}  // namespace cbs
