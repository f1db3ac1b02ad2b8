#pragma once

// SIMD value packs used by the state kernels. pack1 is the scalar reference;
// pack4 (AVX2) is compiled only in the AVX2 translation unit. Both share the
// same elementary-function implementations (pexp/plog/psigmoid below) and use
// explicit fmadd, so per-lane results are bit-identical across the two paths.

#include <cmath>
#include <cstdint>
#include <cstring>

#if defined(__AVX2__)
#include <immintrin.h>
#endif

namespace cbs::simd {

struct pack1 {
  static constexpr int width = 1;
  double v;

  pack1() = default;
  explicit pack1(double x) : v(x) {}
  static pack1 bcast(double x) { return pack1(x); }
  static pack1 zero() { return pack1(0.0); }
  static pack1 load(const double* p) { return pack1(*p); }
  void store(double* p) const { *p = v; }
  double hsum() const { return v; }
};

inline pack1 operator+(pack1 a, pack1 b) { return pack1(a.v + b.v); }
inline pack1 operator-(pack1 a, pack1 b) { return pack1(a.v - b.v); }
inline pack1 operator*(pack1 a, pack1 b) { return pack1(a.v * b.v); }
inline pack1 operator/(pack1 a, pack1 b) { return pack1(a.v / b.v); }
inline pack1 operator-(pack1 a) { return pack1(-a.v); }
inline pack1 fmadd(pack1 a, pack1 b, pack1 c) { return pack1(std::fma(a.v, b.v, c.v)); }
inline pack1 max(pack1 a, pack1 b) { return pack1(std::fmax(a.v, b.v)); }
inline pack1 min(pack1 a, pack1 b) { return pack1(std::fmin(a.v, b.v)); }
inline pack1 abs(pack1 a) { return pack1(std::fabs(a.v)); }
inline pack1 sqrt(pack1 a) { return pack1(std::sqrt(a.v)); }
inline pack1 round_nearest(pack1 a) { return pack1(std::nearbyint(a.v)); }
// x >= t ? a : b, lane-wise
inline pack1 select_ge(pack1 x, pack1 t, pack1 a, pack1 b) { return pack1(x.v >= t.v ? a.v : b.v); }
inline pack1 select_gt(pack1 x, pack1 t, pack1 a, pack1 b) { return pack1(x.v > t.v ? a.v : b.v); }
// 2^n for integral-valued n (|n| < 1000)
inline pack1 exp2_int(pack1 n) {
  const uint64_t bits = uint64_t(int64_t(n.v) + 1023) << 52;
  double r;
  std::memcpy(&r, &bits, 8);
  return pack1(r);
}
// (exponent e, mantissa m) with x = m·2^e, m ∈ [0.5, 1)
inline void frexp_parts(pack1 x, pack1& m, pack1& e) {
  uint64_t bits;
  std::memcpy(&bits, &x.v, 8);
  e = pack1(double(int64_t((bits >> 52) & 0x7ff) - 1022));
  bits = (bits & 0x800fffffffffffffull) | 0x3fe0000000000000ull;
  double mv;
  std::memcpy(&mv, &bits, 8);
  m = pack1(mv);
}

#if defined(__AVX2__)

struct pack4 {
  static constexpr int width = 4;
  __m256d v;

  pack4() = default;
  explicit pack4(__m256d x) : v(x) {}
  static pack4 bcast(double x) { return pack4(_mm256_set1_pd(x)); }
  static pack4 zero() { return pack4(_mm256_setzero_pd()); }
  static pack4 load(const double* p) { return pack4(_mm256_loadu_pd(p)); }
  void store(double* p) const { _mm256_storeu_pd(p, v); }
  double hsum() const {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    lo = _mm_add_sd(lo, _mm_unpackhi_pd(lo, lo));
    return _mm_cvtsd_f64(lo);
  }
};

inline pack4 operator+(pack4 a, pack4 b) { return pack4(_mm256_add_pd(a.v, b.v)); }
inline pack4 operator-(pack4 a, pack4 b) { return pack4(_mm256_sub_pd(a.v, b.v)); }
inline pack4 operator*(pack4 a, pack4 b) { return pack4(_mm256_mul_pd(a.v, b.v)); }
inline pack4 operator/(pack4 a, pack4 b) { return pack4(_mm256_div_pd(a.v, b.v)); }
inline pack4 operator-(pack4 a) { return pack4(_mm256_sub_pd(_mm256_setzero_pd(), a.v)); }
inline pack4 fmadd(pack4 a, pack4 b, pack4 c) { return pack4(_mm256_fmadd_pd(a.v, b.v, c.v)); }
inline pack4 max(pack4 a, pack4 b) { return pack4(_mm256_max_pd(a.v, b.v)); }
inline pack4 min(pack4 a, pack4 b) { return pack4(_mm256_min_pd(a.v, b.v)); }
inline pack4 abs(pack4 a) {
  return pack4(_mm256_andnot_pd(_mm256_set1_pd(-0.0), a.v));
}
inline pack4 sqrt(pack4 a) { return pack4(_mm256_sqrt_pd(a.v)); }
inline pack4 round_nearest(pack4 a) {
  return pack4(_mm256_round_pd(a.v, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC));
}
inline pack4 select_ge(pack4 x, pack4 t, pack4 a, pack4 b) {
  const __m256d m = _mm256_cmp_pd(x.v, t.v, _CMP_GE_OQ);
  return pack4(_mm256_blendv_pd(b.v, a.v, m));
}
inline pack4 select_gt(pack4 x, pack4 t, pack4 a, pack4 b) {
  const __m256d m = _mm256_cmp_pd(x.v, t.v, _CMP_GT_OQ);
  return pack4(_mm256_blendv_pd(b.v, a.v, m));
}
inline pack4 exp2_int(pack4 n) {
  const __m128i i32 = _mm256_cvtpd_epi32(n.v);
  __m256i i64 = _mm256_cvtepi32_epi64(i32);
  i64 = _mm256_add_epi64(i64, _mm256_set1_epi64x(1023));
  i64 = _mm256_slli_epi64(i64, 52);
  return pack4(_mm256_castsi256_pd(i64));
}
inline void frexp_parts(pack4 x, pack4& m, pack4& e) {
  const __m256i bits = _mm256_castpd_si256(x.v);
  __m256i ebits = _mm256_srli_epi64(bits, 52);
  ebits = _mm256_and_si256(ebits, _mm256_set1_epi64x(0x7ff));
  ebits = _mm256_sub_epi64(ebits, _mm256_set1_epi64x(1022));
  // int64 -> double, valid for the tiny exponent range
  __m256d ed = _mm256_setzero_pd();
  alignas(32) int64_t ei[4];
  _mm256_store_si256(reinterpret_cast<__m256i*>(ei), ebits);
  ed = _mm256_set_pd(double(ei[3]), double(ei[2]), double(ei[1]), double(ei[0]));
  e = pack4(ed);
  __m256i mbits = _mm256_and_si256(bits, _mm256_set1_epi64x(0x800fffffffffffffll));
  mbits = _mm256_or_si256(mbits, _mm256_set1_epi64x(0x3fe0000000000000ll));
  m = pack4(_mm256_castsi256_pd(mbits));
}

#endif  // __AVX2__

// e^x, Cephes-style rational approximation, |rel err| < 3e-16 on the clamped
// domain. Inputs outside ±708 are clamped (callers saturate sigmoids anyway).
template <class P>
inline P pexp(P x) {
  const P log2e = P::bcast(1.4426950408889634073599);
  const P c1 = P::bcast(6.93145751953125e-1);
  const P c2 = P::bcast(1.42860682030941723212e-6);
  x = min(max(x, P::bcast(-708.0)), P::bcast(708.0));
  const P n = round_nearest(x * log2e);
  x = fmadd(-n, c1, x);
  x = fmadd(-n, c2, x);
  const P xx = x * x;
  P px = P::bcast(1.26177193074810590878e-4);
  px = fmadd(px, xx, P::bcast(3.02994407707441961300e-2));
  px = fmadd(px, xx, P::bcast(9.99999999999999999910e-1));
  px = px * x;
  P qx = P::bcast(3.00198505138664455042e-6);
  qx = fmadd(qx, xx, P::bcast(2.52448340349684104192e-3));
  qx = fmadd(qx, xx, P::bcast(2.27265548208155028766e-1));
  qx = fmadd(qx, xx, P::bcast(2.00000000000000000005e0));
  const P e = fmadd(P::bcast(2.0), px / (qx - px), P::bcast(1.0));
  return e * exp2_int(n);
}

// ln(x) for x > 0 (Cephes). Used on LSE accumulator sums, domain [1, ~64].
template <class P>
inline P plog(P x) {
  P m, e;
  frexp_parts(x, m, e);
  // bring mantissa into [sqrt(1/2), sqrt(2)): double lanes below sqrt(1/2)
  const P sqrth = P::bcast(0.70710678118654752440);
  const P one = P::bcast(1.0);
  const P m2 = select_ge(m, sqrth, m, m + m);
  e = select_ge(m, sqrth, e, e - one);
  const P x1 = m2 - one;
  const P z = x1 * x1;
  P pp = P::bcast(1.01875663804580931796e-4);
  pp = fmadd(pp, x1, P::bcast(4.97494994976747001425e-1));
  pp = fmadd(pp, x1, P::bcast(4.70579119878881725854e0));
  pp = fmadd(pp, x1, P::bcast(1.44989225341610930846e1));
  pp = fmadd(pp, x1, P::bcast(1.79368678507819816313e1));
  pp = fmadd(pp, x1, P::bcast(7.70838733755885391666e0));
  P qq = fmadd(x1, P::bcast(1.0), P::bcast(1.12873587189167450590e1));
  qq = fmadd(qq, x1, P::bcast(4.52279145837532221105e1));
  qq = fmadd(qq, x1, P::bcast(8.29875266912776603211e1));
  qq = fmadd(qq, x1, P::bcast(7.11544750618563894466e1));
  qq = fmadd(qq, x1, P::bcast(2.31251620126765340583e1));
  P y = x1 * z * (pp / qq);
  y = fmadd(e, P::bcast(-2.121944400546905827679e-4), y);
  y = fmadd(z, P::bcast(-0.5), y);
  return fmadd(e, P::bcast(0.693359375), x1 + y);
}

// σ(x) = 1/(1+e^{-x}), overflow-safe in both directions.
template <class P>
inline P psigmoid(P x) {
  const P one = P::bcast(1.0);
  const P em = pexp(-abs(x));
  const P num = select_ge(x, P::bcast(0.0), one, em);
  return num / (one + em);
}

}  // namespace cbs::simd
