#pragma once

#include <vector>

#include "cbs/curve.hpp"
#include "cbs/vec.hpp"

namespace cbs {

// One framed point on a trajectory curve. (tangent, bishop_n, bishop_b) is
// the rotation-minimizing frame; (n, b) are the bishop axes rolled by θ about
// the tangent and are the in-plane axes of the printing plane.
struct FrameSample {
  double t = 0;
  Vec3 c;        // position, mm
  Vec3 tangent;  // unit
  Vec3 bishop_n, bishop_b;
  double theta = 0;
  Vec3 n, b;  // rolled axes: n -> WCS +x, b -> WCS +y, tangent -> WCS +z
};

// MCS->WCS map of the printing plane at one t: x_W = R^T (q - c), where the
// columns of R are [n, b, tangent]. Sends c to the origin, tangent to +z.
struct SetupPose {
  Mat3 R;
  Vec3 c;
  Vec3 to_wcs(const Vec3& q) const { return R.tmul(q - c); }
  Vec3 to_mcs(const Vec3& x) const { return R * x + c; }
};

SetupPose pose_of(const FrameSample& f);

// Rigid transform applied to model points before everything else (Q).
struct SetupTransform {
  Vec3 rotation;     // axis-angle, rad
  Vec3 translation;  // mm

  Mat3 rot_matrix() const { return rotation_from_axis_angle(rotation); }
  Vec3 apply(const Vec3& q) const { return rot_matrix() * q + translation; }
};

// Frame grid over a curve, SoA layout for the state kernels plus the
// intermediates the reverse pass needs. Node parameters must be strictly
// increasing; uniform grids use t_i = i/(N-1).
struct CurveFrames {
  Curve curve;
  std::vector<double> t;
  int nodes = 0;

  // Bernstein tables, row-major [k*nodes + i] for control point k.
  std::vector<double> B, Bd;

  // Per node: position, raw derivative, speed, unit tangent, roll, bishop
  // axes, rolled axes (SoA doubles for the kernels).
  std::vector<double> cx, cy, cz;
  std::vector<double> tx, ty, tz;  // unit tangent
  std::vector<double> nx, ny, nz;  // rolled n
  std::vector<double> bx, by, bz;  // rolled b
  std::vector<Vec3> cdot;
  std::vector<double> speed;
  std::vector<double> theta;
  std::vector<Vec3> bn, bb;  // bishop n, b (unrolled)
  int seed_axis = 0;         // world axis used to seed the bishop normal

  Vec3 c(int i) const { return {cx[i], cy[i], cz[i]}; }
  Vec3 tangent(int i) const { return {tx[i], ty[i], tz[i]}; }
  Vec3 n(int i) const { return {nx[i], ny[i], nz[i]}; }
  Vec3 b(int i) const { return {bx[i], by[i], bz[i]}; }

  FrameSample sample(int i) const;
};

CurveFrames build_frames(const Curve& c, int nodes);
CurveFrames build_frames_at(const Curve& c, std::vector<double> ts);

// Adjoints accumulated against a CurveFrames grid by the state kernels.
struct GridAdjoint {
  std::vector<double> cx, cy, cz;
  std::vector<double> tx, ty, tz;
  std::vector<double> nx, ny, nz;
  std::vector<double> bx, by, bz;

  void resize(int n);
  void clear();
  void add(const GridAdjoint& o);
};

// Pull a grid adjoint back to control-point gradients. pbar must hold
// degree+1 entries; results are accumulated (+=).
void frames_pullback(const CurveFrames& f, const GridAdjoint& a, Vec4* pbar);

// d(R(phi)·q)/d(phi) columns for the Q rotation gradient.
// Returns M with M.col(j) = d(R q)/d(phi_j).
Mat3 rotate_point_jacobian(const Vec3& phi, const Vec3& q);

}  // namespace cbs
