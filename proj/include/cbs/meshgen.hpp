#pragma once

#include <functional>
#include <vector>

#include "cbs/curve.hpp"
#include "cbs/mesh.hpp"

namespace cbs {

// Procedural test models. All dimensions in mm, plate at z = 0, models rest
// on (or just touch) the plate. Implicit models are meshed with marching
// tetrahedra; fields follow the signed-distance convention (inside < 0).

Mesh make_box(const Vec3& lo, const Vec3& hi);
Mesh make_icosphere(const Vec3& center, double radius, int subdiv);

// Isosurface f = 0 of `field` over [lo,hi] sampled at grid pitch `cell`.
// The box must strictly contain the surface. Watertight by construction
// (edge-keyed vertex sharing), outward orientation (normals toward f > 0).
Mesh march_implicit(const std::function<double(const Vec3&)>& field,
                    const Vec3& lo, const Vec3& hi, double cell);

double sd_sphere(const Vec3& p, const Vec3& c, double r);
double sd_capsule(const Vec3& p, const Vec3& a, const Vec3& b, double r);
// Torus with ring plane normal along `axis` (0=x,1=y,2=z), ring radius R,
// tube radius r.
double sd_torus(const Vec3& p, const Vec3& c, int axis, double R, double r);
// Polynomial smooth minimum; k = blend radius, k = 0 gives plain min.
double smin(double a, double b, double k);

// Stem on the plate with `balls` spheres hung off the side near the top,
// each on a short horizontal neck. Every ball's bottom pole is a strict
// local minimum along z: `balls` floating points under a vertical print.
struct LollipopParams {
  double stem_h = 16.0;
  double stem_r = 2.0;
  double ball_r = 5.0;
  double ball_off = 8.0;  // stem axis -> ball center, horizontal
  double neck_r = 1.6;
  int balls = 1;          // >1: spiral of smaller balls down the stem
  double cell = 0.45;
};
Mesh make_lollipop(const LollipopParams& params = {});

// Umbrella-handle J: stem up from the plate, half-circle bend over the top,
// short tail hanging back down. The tail tip is a floating point under a
// vertical print; the medial axis is the natural slicing trajectory.
struct HookParams {
  double stem_h = 18.0;
  double bend_r = 6.0;
  double tail_len = 7.0;
  double tube_r = 2.0;
  double cell = 0.45;
};
Mesh make_hook(const HookParams& params = {});
// Medial polyline, plate end first, n >= 2 points evenly spaced along the
// stem + bend + tail chain.
std::vector<Vec3> hook_axis(const HookParams& params, int n);

// Chain of standing tori (ring planes vertical, hole axes along y) climbing
// a zigzag diagonal, consecutive tubes joined by capsule bars. Genus equals
// `rings`; every elevated ring keeps its bottom pole exposed, so rings-1
// strict local z-minima float under a vertical print.
struct NecklaceParams {
  int rings = 4;
  double ring_R = 6.0;
  double tube_r = 1.8;
  double bar_r = 1.0;
  double step_z = 12.0;
  double step_x = 6.0;  // lateral zigzag amplitude (alternating sign)
  double blend = 0.4;
  double cell = 0.45;
};
Mesh make_necklace(const NecklaceParams& params = {});

// Least-squares Bézier of the given degree through pts at uniform t.
// Endpoints are interpolated exactly; interior control points fitted.
Curve fit_bezier(const std::vector<Vec4>& pts, int degree = 5);

}  // namespace cbs
