#pragma once

// Shared kernel template instantiated once per backend TU. The sweep walks
// the frame grid once per sample block, tracking:
//   u_i   = σ_β((q-c_i)·T̂_i)        side-of-plane state
//   r_i   = σ_β(R_X-|a_i|)·σ_β(R_Y-|e_i|)   in-plane effective-area factor
//   κ_i   = ReLU(u_{i-1}-u_i)·(r_{i-1}+r_i)/2  crossing mass of interval i
//   S_i   = Σ_{j≤i} κ_j,  w_i = min(S_i, 1)
//   d     = Σ κ_i·(T̂_{i-1}+T̂_i)/2
//   co    = Σ tw_i·w_i·Σ_k σ_β(-LSE_α(A_k·(a,e,s) + b_k))
// The adjoint replays the recursion in reverse with carried interval terms.

#include <vector>

#include "cbs/kernels.hpp"
#include "cbs/packs.hpp"

namespace cbs::detail {

constexpr int kMaxPolyRows = 32;

template <class P>
inline P ind_lt(P x, P t, P one, P zero) {
  return select_ge(x, t, zero, one);
}
template <class P>
inline P ind_gt(P x, P t, P one, P zero) {
  return select_gt(x, t, one, zero);
}

template <class P>
inline void forward_block(const KernelGrid& g, const KernelEnv* env, const StateParams& sp,
                          WMode mode, const double* px, const double* py, const double* pz,
                          int base, const SweepOutputs& out) {
  using namespace cbs::simd;
  const int n = g.n;
  const P qx = P::load(px + base), qy = P::load(py + base), qz = P::load(pz + base);
  const P zero = P::zero(), one = P::bcast(1.0), half = P::bcast(0.5);
  const P beta = P::bcast(sp.beta), alpha = P::bcast(sp.alpha);
  const P inv_alpha = P::bcast(1.0 / sp.alpha);
  const P rxp = P::bcast(sp.rx), ryp = P::bcast(sp.ry), epsb = P::bcast(sp.eps_abs);
  const bool sweep = (mode == WMode::kSweep);
  const bool do_co = env && env->npoly > 0 && (out.co || out.co_peak);

  P S = zero, dxa = zero, dya = zero, dza = zero, co = zero, copeak = zero;
  P uprev = zero, rprev = zero;

  for (int i = 0; i < n; ++i) {
    const P cxi = P::bcast(g.cx[i]), cyi = P::bcast(g.cy[i]), czi = P::bcast(g.cz[i]);
    const P txi = P::bcast(g.tx[i]), tyi = P::bcast(g.ty[i]), tzi = P::bcast(g.tz[i]);
    const P vx = qx - cxi, vy = qy - cyi, vz = qz - czi;
    P s = vx * txi;
    s = fmadd(vy, tyi, s);
    s = fmadd(vz, tzi, s);
    P a = zero, e = zero;
    if (sweep || do_co) {
      const P nxi = P::bcast(g.nx[i]), nyi = P::bcast(g.ny[i]), nzi = P::bcast(g.nz[i]);
      const P bxi = P::bcast(g.bx[i]), byi = P::bcast(g.by[i]), bzi = P::bcast(g.bz[i]);
      a = vx * nxi;
      a = fmadd(vy, nyi, a);
      a = fmadd(vz, nzi, a);
      e = vx * bxi;
      e = fmadd(vy, byi, e);
      e = fmadd(vz, bzi, e);
    }
    P u = zero, r = zero;
    if (sweep) {
      u = psigmoid(beta * s);
      const P absa = sqrt(fmadd(a, a, epsb));
      const P abse = sqrt(fmadd(e, e, epsb));
      const P ra = psigmoid(beta * (rxp - absa));
      const P re = psigmoid(beta * (ryp - abse));
      r = ra * re;
      if (i > 0) {
        const P du = max(uprev - u, zero);
        const P kap = du * half * (rprev + r);
        S = S + kap;
        const P km = kap * half;
        dxa = fmadd(km, P::bcast(g.tx[i - 1]) + txi, dxa);
        dya = fmadd(km, P::bcast(g.ty[i - 1]) + tyi, dya);
        dza = fmadd(km, P::bcast(g.tz[i - 1]) + tzi, dza);
      }
    }
    if (do_co) {
      const P wn = sweep ? min(S, one) : one;
      P C = zero;
      for (int k = 0; k < env->npoly; ++k) {
        const int rb = env->row_begin[k], rend = env->row_begin[k + 1];
        P grs[kMaxPolyRows];
        P m = P::bcast(-1e300);
        for (int rr = rb; rr < rend; ++rr) {
          P gr = fmadd(P::bcast(env->ax[rr]), a, P::bcast(env->off[rr]));
          gr = fmadd(P::bcast(env->ay[rr]), e, gr);
          gr = fmadd(P::bcast(env->az[rr]), s, gr);
          grs[rr - rb] = gr;
          m = max(m, gr);
        }
        P sum = zero;
        for (int rr = 0; rr < rend - rb; ++rr) sum = sum + pexp(alpha * (grs[rr] - m));
        const P z = fmadd(inv_alpha, plog(sum), m);
        C = C + psigmoid(-(beta * z));
      }
      const P wc = wn * C;
      co = fmadd(P::bcast(g.tw[i]), wc, co);
      copeak = max(copeak, wc);
    }
    uprev = u;
    rprev = r;
  }
  if (out.w) {
    const P w = sweep ? min(S, one) : one;
    w.store(out.w + base);
  }
  if (out.dx) dxa.store(out.dx + base);
  if (out.dy) dya.store(out.dy + base);
  if (out.dz) dza.store(out.dz + base);
  if (out.co) co.store(out.co + base);
  if (out.co_peak) copeak.store(out.co_peak + base);
}

// Scratch layout: 7 arrays of n×W doubles: s, a, e, u, ra, re, S-prefix.
template <class P>
inline void adjoint_block(const KernelGrid& g, const KernelEnv* env, const StateParams& sp,
                          WMode mode, const double* px, const double* py, const double* pz,
                          int base, const SweepSeeds& seeds, GridAdjoint& ga, double* xbarx,
                          double* xbary, double* xbarz, double* scratch) {
  using namespace cbs::simd;
  const int n = g.n;
  constexpr int W = P::width;
  const size_t stride = size_t(n) * W;
  double* s_s = scratch;
  double* s_a = scratch + stride;
  double* s_e = scratch + 2 * stride;
  double* s_u = scratch + 3 * stride;
  double* s_ra = scratch + 4 * stride;
  double* s_re = scratch + 5 * stride;
  double* s_S = scratch + 6 * stride;

  const P qx = P::load(px + base), qy = P::load(py + base), qz = P::load(pz + base);
  const P zero = P::zero(), one = P::bcast(1.0), half = P::bcast(0.5);
  const P beta = P::bcast(sp.beta), alpha = P::bcast(sp.alpha);
  const P inv_alpha = P::bcast(1.0 / sp.alpha);
  const P rxp = P::bcast(sp.rx), ryp = P::bcast(sp.ry), epsb = P::bcast(sp.eps_abs);
  const bool sweep = (mode == WMode::kSweep);
  const bool do_co = env && env->npoly > 0 && seeds.cobar;

  // Forward replay, recording per-node values.
  {
    P S = zero, uprev = zero, rprev = zero;
    for (int i = 0; i < n; ++i) {
      const P cxi = P::bcast(g.cx[i]), cyi = P::bcast(g.cy[i]), czi = P::bcast(g.cz[i]);
      const P txi = P::bcast(g.tx[i]), tyi = P::bcast(g.ty[i]), tzi = P::bcast(g.tz[i]);
      const P nxi = P::bcast(g.nx[i]), nyi = P::bcast(g.ny[i]), nzi = P::bcast(g.nz[i]);
      const P bxi = P::bcast(g.bx[i]), byi = P::bcast(g.by[i]), bzi = P::bcast(g.bz[i]);
      const P vx = qx - cxi, vy = qy - cyi, vz = qz - czi;
      P s = vx * txi;
      s = fmadd(vy, tyi, s);
      s = fmadd(vz, tzi, s);
      P a = vx * nxi;
      a = fmadd(vy, nyi, a);
      a = fmadd(vz, nzi, a);
      P e = vx * bxi;
      e = fmadd(vy, byi, e);
      e = fmadd(vz, bzi, e);
      s.store(s_s + size_t(i) * W);
      a.store(s_a + size_t(i) * W);
      e.store(s_e + size_t(i) * W);
      if (sweep) {
        const P u = psigmoid(beta * s);
        const P absa = sqrt(fmadd(a, a, epsb));
        const P abse = sqrt(fmadd(e, e, epsb));
        const P ra = psigmoid(beta * (rxp - absa));
        const P re = psigmoid(beta * (ryp - abse));
        const P r = ra * re;
        if (i > 0) {
          const P du = max(uprev - u, zero);
          S = S + du * half * (rprev + r);
        }
        u.store(s_u + size_t(i) * W);
        ra.store(s_ra + size_t(i) * W);
        re.store(s_re + size_t(i) * W);
        S.store(s_S + size_t(i) * W);
        uprev = u;
        rprev = r;
      }
    }
  }

  // Reverse sweep.
  const P wbar = seeds.wbar ? P::load(seeds.wbar + base) : zero;
  const P dbx = seeds.dxbar ? P::load(seeds.dxbar + base) : zero;
  const P dby = seeds.dybar ? P::load(seeds.dybar + base) : zero;
  const P dbz = seeds.dzbar ? P::load(seeds.dzbar + base) : zero;
  const P cobar = seeds.cobar ? P::load(seeds.cobar + base) : zero;

  P Sbar_run = zero;
  if (sweep && seeds.wbar) {
    const P Sfinal = P::load(s_S + size_t(n - 1) * W);
    Sbar_run = wbar * ind_lt(Sfinal, one, one, zero);
  }
  P ubar_carry = zero, rbar_carry = zero;
  P xbx = zero, xby = zero, xbz = zero;

  for (int i = n - 1; i >= 0; --i) {
    const P cxi = P::bcast(g.cx[i]), cyi = P::bcast(g.cy[i]), czi = P::bcast(g.cz[i]);
    const P txi = P::bcast(g.tx[i]), tyi = P::bcast(g.ty[i]), tzi = P::bcast(g.tz[i]);
    const P nxi = P::bcast(g.nx[i]), nyi = P::bcast(g.ny[i]), nzi = P::bcast(g.nz[i]);
    const P bxi = P::bcast(g.bx[i]), byi = P::bcast(g.by[i]), bzi = P::bcast(g.bz[i]);
    const P s = P::load(s_s + size_t(i) * W);
    const P a = P::load(s_a + size_t(i) * W);
    const P e = P::load(s_e + size_t(i) * W);

    P abar = zero, ebar = zero, sbar = zero, wnodebar = zero;

    if (do_co) {
      const P Si = sweep ? P::load(s_S + size_t(i) * W) : zero;
      const P wn = sweep ? min(Si, one) : one;
      const P cw = cobar * P::bcast(g.tw[i]);
      P C = zero;
      for (int k = 0; k < env->npoly; ++k) {
        const int rb = env->row_begin[k], rend = env->row_begin[k + 1];
        P grs[kMaxPolyRows];
        P m = P::bcast(-1e300);
        for (int rr = rb; rr < rend; ++rr) {
          P gr = fmadd(P::bcast(env->ax[rr]), a, P::bcast(env->off[rr]));
          gr = fmadd(P::bcast(env->ay[rr]), e, gr);
          gr = fmadd(P::bcast(env->az[rr]), s, gr);
          grs[rr - rb] = gr;
          m = max(m, gr);
        }
        P sum = zero;
        for (int rr = 0; rr < rend - rb; ++rr) sum = sum + pexp(alpha * (grs[rr] - m));
        const P z = fmadd(inv_alpha, plog(sum), m);
        const P sz = psigmoid(-(beta * z));
        C = C + sz;
        const P zbar = -(beta * sz * (one - sz)) * (cw * wn);
        const P invsum = one / sum;
        for (int rr = rb; rr < rend; ++rr) {
          const P wsm = pexp(alpha * (grs[rr - rb] - m)) * invsum;
          const P gbar = zbar * wsm;
          abar = fmadd(gbar, P::bcast(env->ax[rr]), abar);
          ebar = fmadd(gbar, P::bcast(env->ay[rr]), ebar);
          sbar = fmadd(gbar, P::bcast(env->az[rr]), sbar);
        }
      }
      wnodebar = cw * C;
    }

    P ubar_local = ubar_carry, rbar_local = rbar_carry;
    ubar_carry = zero;
    rbar_carry = zero;

    if (sweep) {
      const P Si = P::load(s_S + size_t(i) * W);
      const P SbarTot = fmadd(wnodebar, ind_lt(Si, one, one, zero), Sbar_run);
      if (i > 0) {
        const P u_i = P::load(s_u + size_t(i) * W);
        const P u_p = P::load(s_u + size_t(i - 1) * W);
        const P ra_i = P::load(s_ra + size_t(i) * W);
        const P re_i = P::load(s_re + size_t(i) * W);
        const P ra_p = P::load(s_ra + size_t(i - 1) * W);
        const P re_p = P::load(s_re + size_t(i - 1) * W);
        const P r_i = ra_i * re_i, r_p = ra_p * re_p;
        const P du = u_p - u_i;
        const P dupos = ind_gt(du, zero, one, zero);
        const P durel = max(du, zero);
        const P rsum = r_p + r_i;
        const P tmx = half * (P::bcast(g.tx[i - 1]) + txi);
        const P tmy = half * (P::bcast(g.ty[i - 1]) + tyi);
        const P tmz = half * (P::bcast(g.tz[i - 1]) + tzi);
        P kapbar = SbarTot;
        kapbar = fmadd(dbx, tmx, kapbar);
        kapbar = fmadd(dby, tmy, kapbar);
        kapbar = fmadd(dbz, tmz, kapbar);
        const P km = durel * half * rsum * half;  // κ/2 for the tangent-mix adjoint
        const double gx = (km * dbx).hsum(), gy = (km * dby).hsum(), gz = (km * dbz).hsum();
        ga.tx[i] += gx;
        ga.ty[i] += gy;
        ga.tz[i] += gz;
        ga.tx[i - 1] += gx;
        ga.ty[i - 1] += gy;
        ga.tz[i - 1] += gz;
        const P dubar = kapbar * half * rsum * dupos;
        const P rbar_half = kapbar * durel * half;
        ubar_local = ubar_local - dubar;
        ubar_carry = dubar;
        rbar_local = rbar_local + rbar_half;
        rbar_carry = rbar_half;
        Sbar_run = SbarTot;
      }
      const P u_i = P::load(s_u + size_t(i) * W);
      const P ra_i = P::load(s_ra + size_t(i) * W);
      const P re_i = P::load(s_re + size_t(i) * W);
      sbar = fmadd(ubar_local, beta * u_i * (one - u_i), sbar);
      const P rabar = rbar_local * re_i;
      const P rebar = rbar_local * ra_i;
      const P absa = sqrt(fmadd(a, a, epsb));
      const P abse = sqrt(fmadd(e, e, epsb));
      abar = fmadd(-(rabar * beta * ra_i * (one - ra_i)), a / absa, abar);
      ebar = fmadd(-(rebar * beta * re_i * (one - re_i)), e / abse, ebar);
    }

    // v̄ = sbar·T̂ + abar·n + ebar·b ; accumulate sample and grid adjoints.
    P vbx = sbar * txi;
    vbx = fmadd(abar, nxi, vbx);
    vbx = fmadd(ebar, bxi, vbx);
    P vby = sbar * tyi;
    vby = fmadd(abar, nyi, vby);
    vby = fmadd(ebar, byi, vby);
    P vbz = sbar * tzi;
    vbz = fmadd(abar, nzi, vbz);
    vbz = fmadd(ebar, bzi, vbz);
    xbx = xbx + vbx;
    xby = xby + vby;
    xbz = xbz + vbz;
    const P vx = qx - cxi, vy = qy - cyi, vz = qz - czi;
    ga.cx[i] -= vbx.hsum();
    ga.cy[i] -= vby.hsum();
    ga.cz[i] -= vbz.hsum();
    ga.tx[i] += (sbar * vx).hsum();
    ga.ty[i] += (sbar * vy).hsum();
    ga.tz[i] += (sbar * vz).hsum();
    ga.nx[i] += (abar * vx).hsum();
    ga.ny[i] += (abar * vy).hsum();
    ga.nz[i] += (abar * vz).hsum();
    ga.bx[i] += (ebar * vx).hsum();
    ga.by[i] += (ebar * vy).hsum();
    ga.bz[i] += (ebar * vz).hsum();
  }

  if (xbarx) {
    (P::load(xbarx + base) + xbx).store(xbarx + base);
    (P::load(xbary + base) + xby).store(xbary + base);
    (P::load(xbarz + base) + xbz).store(xbarz + base);
  }
}

template <class P>
void sweep_forward_t(const KernelGrid& g, const KernelEnv* env, const StateParams& sp, WMode mode,
                     const double* px, const double* py, const double* pz, int count,
                     const SweepOutputs& out) {
  int base = 0;
  for (; base + P::width <= count; base += P::width)
    forward_block<P>(g, env, sp, mode, px, py, pz, base, out);
  for (; base < count; ++base)
    forward_block<simd::pack1>(g, env, sp, mode, px, py, pz, base, out);
}

template <class P>
void sweep_adjoint_t(const KernelGrid& g, const KernelEnv* env, const StateParams& sp, WMode mode,
                     const double* px, const double* py, const double* pz, int count,
                     const SweepSeeds& seeds, GridAdjoint& ga, double* xbarx, double* xbary,
                     double* xbarz) {
  std::vector<double> scratch(size_t(7) * g.n * P::width);
  int base = 0;
  for (; base + P::width <= count; base += P::width)
    adjoint_block<P>(g, env, sp, mode, px, py, pz, base, seeds, ga, xbarx, xbary, xbarz,
                     scratch.data());
  for (; base < count; ++base)
    adjoint_block<simd::pack1>(g, env, sp, mode, px, py, pz, base, seeds, ga, xbarx, xbary, xbarz,
                               scratch.data());
}

}  // namespace cbs::detail
