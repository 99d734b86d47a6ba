// AVX2+FMA variants of the reduction kernels. This translation unit is built
// with -mavx2 -mfma on x86-64 only; kernels.cpp selects it at runtime via
// cpuid. exp is a Cephes-style rational approximation, good to ~1 ulp over
// the double range, so results track the scalar (libm) kernels to within
// accumulation rounding.
#include "infospec/kernels.hpp"

#if defined(INFOSPEC_HAVE_AVX2)

#include <immintrin.h>

#include <cmath>

namespace infospec::kernels {
namespace {

constexpr double kExpLo = -708.396;  // below: flush to 0 (subnormal range)
constexpr double kExpHi = 709.437;   // above: +inf

inline __m256d exp4(__m256d x) {
  const __m256d vmax = _mm256_set1_pd(kExpHi);
  const __m256d vmin = _mm256_set1_pd(kExpLo);
  const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
  const __m256d half = _mm256_set1_pd(0.5);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d two = _mm256_set1_pd(2.0);
  const __m256d ln2_hi = _mm256_set1_pd(6.93145751953125e-1);
  const __m256d ln2_lo = _mm256_set1_pd(1.42860682030941723212e-6);
  const __m256d p0 = _mm256_set1_pd(1.26177193074810590878e-4);
  const __m256d p1 = _mm256_set1_pd(3.02994407707441961300e-2);
  const __m256d p2 = _mm256_set1_pd(9.99999999999999999910e-1);
  const __m256d q0 = _mm256_set1_pd(3.00198505138664455042e-6);
  const __m256d q1 = _mm256_set1_pd(2.52448340349684104192e-3);
  const __m256d q2 = _mm256_set1_pd(2.27265548208155028766e-1);
  const __m256d q3 = _mm256_set1_pd(2.00000000000000000005e0);

  __m256d lo_mask = _mm256_cmp_pd(x, vmin, _CMP_LT_OQ);  // catches -inf
  __m256d hi_mask = _mm256_cmp_pd(x, vmax, _CMP_GT_OQ);
  __m256d xc = _mm256_min_pd(_mm256_max_pd(x, vmin), vmax);

  // n = round(x / ln 2); r = x - n ln 2 via hi/lo split
  __m256d nf = _mm256_floor_pd(_mm256_fmadd_pd(xc, log2e, half));
  xc = _mm256_fnmadd_pd(nf, ln2_hi, xc);
  xc = _mm256_fnmadd_pd(nf, ln2_lo, xc);

  __m256d z = _mm256_mul_pd(xc, xc);
  __m256d px = _mm256_fmadd_pd(p0, z, p1);
  px = _mm256_fmadd_pd(px, z, p2);
  px = _mm256_mul_pd(px, xc);
  __m256d qx = _mm256_fmadd_pd(q0, z, q1);
  qx = _mm256_fmadd_pd(qx, z, q2);
  qx = _mm256_fmadd_pd(qx, z, q3);
  __m256d e =
      _mm256_fmadd_pd(two, _mm256_div_pd(px, _mm256_sub_pd(qx, px)), one);

  // scale by 2^n through the exponent bits (n within [-1074, 1025] here)
  __m128i n32 = _mm256_cvtpd_epi32(nf);
  __m256i n64 = _mm256_cvtepi32_epi64(n32);
  __m256i biased = _mm256_add_epi64(n64, _mm256_set1_epi64x(1023));
  __m256d scale = _mm256_castsi256_pd(_mm256_slli_epi64(biased, 52));
  e = _mm256_mul_pd(e, scale);

  e = _mm256_andnot_pd(lo_mask, e);
  e = _mm256_blendv_pd(e, _mm256_set1_pd(kPosInf), hi_mask);
  return e;
}

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  __m128d s2 = _mm_add_pd(lo, hi);
  __m128d s1 = _mm_add_sd(s2, _mm_unpackhi_pd(s2, s2));
  return _mm_cvtsd_f64(s1);
}

inline double hmax(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  __m128d m2 = _mm_max_pd(lo, hi);
  __m128d m1 = _mm_max_sd(m2, _mm_unpackhi_pd(m2, m2));
  return _mm_cvtsd_f64(m1);
}

double avx2_reduce_max(const double* a, std::size_t len) {
  std::size_t i = 0;
  __m256d m = _mm256_set1_pd(kNegInf);
  for (; i + 4 <= len; i += 4) m = _mm256_max_pd(m, _mm256_loadu_pd(a + i));
  double r = hmax(m);
  for (; i < len; ++i)
    if (a[i] > r) r = a[i];
  return r;
}

double avx2_sum(const double* a, std::size_t len) {
  std::size_t i = 0;
  __m256d acc = _mm256_setzero_pd();
  for (; i + 4 <= len; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
  double s = hsum(acc);
  for (; i < len; ++i) s += a[i];
  return s;
}

double avx2_sum_exp(const double* a, std::size_t len, double shift) {
  const __m256d vs = _mm256_set1_pd(shift);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= len; i += 4)
    acc = _mm256_add_pd(acc, exp4(_mm256_sub_pd(_mm256_loadu_pd(a + i), vs)));
  double s = hsum(acc);
  for (; i < len; ++i) s += std::exp(a[i] - shift);
  return s;
}

double avx2_sum_exp_scaled(const double* a, std::size_t len, double c,
                           double shift) {
  const __m256d vs = _mm256_set1_pd(shift);
  const __m256d vc = _mm256_set1_pd(c);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= len; i += 4) {
    __m256d d = _mm256_fmsub_pd(vc, _mm256_loadu_pd(a + i), vs);
    acc = _mm256_add_pd(acc, exp4(d));
  }
  double s = hsum(acc);
  for (; i < len; ++i) s += std::exp(c * a[i] - shift);
  return s;
}

double avx2_sum_exp_mul(const double* a, const double* b, std::size_t len,
                        double shift) {
  const __m256d vs = _mm256_set1_pd(shift);
  const __m256d vmin = _mm256_set1_pd(kExpLo);
  const __m256d zero = _mm256_setzero_pd();
  __m256d acc = zero;
  std::size_t i = 0;
  for (; i + 4 <= len; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), vs);
    __m256d small = _mm256_cmp_pd(d, vmin, _CMP_LT_OQ);
    __m256d prod = _mm256_mul_pd(exp4(d), _mm256_loadu_pd(b + i));
    prod = _mm256_blendv_pd(prod, zero, small);  // kills 0 * inf lanes too
    acc = _mm256_add_pd(acc, prod);
  }
  double s = hsum(acc);
  for (; i < len; ++i) {
    double e = std::exp(a[i] - shift);
    if (e != 0.0) s += e * b[i];
  }
  return s;
}

const Ops kAvx2{"avx2",        avx2_reduce_max,     avx2_sum,
                avx2_sum_exp,  avx2_sum_exp_scaled, avx2_sum_exp_mul};

}  // namespace

const Ops* avx2_ops() {
  static const Ops* v =
      (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
          ? &kAvx2
          : nullptr;
  return v;
}

}  // namespace infospec::kernels

#endif  // INFOSPEC_HAVE_AVX2
