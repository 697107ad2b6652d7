#ifdef IGEO_HAVE_AVX2

#include <immintrin.h>

#include <cmath>
#include <limits>

#include "kernels_detail.hpp"

namespace igeo::kernels::detail {

namespace {

/*
 * Vector exp for 4 doubles, Cephes-style: reduce x = n*ln2 + r with
 * |r| <= ln2/2, evaluate a rational minimax approximation of e^r, scale by
 * 2^n through the exponent bits.  Inputs are clamped to [-708, 709] so the
 * scaling stays in the normal range; accuracy is ~2 ulp.
 */
inline __m256d exp_pd(__m256d x) {
  const __m256d hi = _mm256_set1_pd(709.0);
  const __m256d lo = _mm256_set1_pd(-708.0);
  const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
  const __m256d c1 = _mm256_set1_pd(6.93145751953125e-1);
  const __m256d c2 = _mm256_set1_pd(1.42860682030941723212e-6);
  const __m256d p0 = _mm256_set1_pd(1.26177193074810590878e-4);
  const __m256d p1 = _mm256_set1_pd(3.02994407707441961300e-2);
  const __m256d p2 = _mm256_set1_pd(9.99999999999999999910e-1);
  const __m256d q0 = _mm256_set1_pd(3.00198505138664455042e-6);
  const __m256d q1 = _mm256_set1_pd(2.52448340349684104192e-3);
  const __m256d q2 = _mm256_set1_pd(2.27265548208155028766e-1);
  const __m256d q3 = _mm256_set1_pd(2.00000000000000000005e0);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d two = _mm256_set1_pd(2.0);

  x = _mm256_min_pd(_mm256_max_pd(x, lo), hi);

  __m256d n = _mm256_round_pd(_mm256_mul_pd(x, log2e),
                              _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  x = _mm256_fnmadd_pd(n, c1, x);
  x = _mm256_fnmadd_pd(n, c2, x);

  __m256d xx = _mm256_mul_pd(x, x);
  __m256d px = _mm256_fmadd_pd(p0, xx, p1);
  px = _mm256_fmadd_pd(px, xx, p2);
  px = _mm256_mul_pd(px, x);
  __m256d qx = _mm256_fmadd_pd(q0, xx, q1);
  qx = _mm256_fmadd_pd(qx, xx, q2);
  qx = _mm256_fmadd_pd(qx, xx, q3);
  __m256d e = _mm256_div_pd(px, _mm256_sub_pd(qx, px));
  e = _mm256_fmadd_pd(two, e, one);

  __m128i ni = _mm256_cvtpd_epi32(n);
  __m256i nl = _mm256_cvtepi32_epi64(ni);
  nl = _mm256_add_epi64(nl, _mm256_set1_epi64x(1023));
  nl = _mm256_slli_epi64(nl, 52);
  return _mm256_mul_pd(e, _mm256_castsi256_pd(nl));
}

struct KahanLanes {
  __m256d sum = _mm256_setzero_pd();
  __m256d comp = _mm256_setzero_pd();

  inline void add(__m256d x) {
    __m256d y = _mm256_sub_pd(x, comp);
    __m256d t = _mm256_add_pd(sum, y);
    comp = _mm256_sub_pd(_mm256_sub_pd(t, sum), y);
    sum = t;
  }

  /* Fold lanes, then continue with the scalar tail [i, n). */
  double finish(std::span<const double> tail_src, std::size_t i,
                auto&& tail_term) const {
    alignas(32) double s[4], c[4];
    _mm256_store_pd(s, sum);
    _mm256_store_pd(c, comp);
    double total = merge_compensated(s, c, 4);
    double comp2 = 0.0;
    for (; i < tail_src.size(); ++i) {
      double y = tail_term(i) - comp2;
      double t = total + y;
      comp2 = (t - total) - y;
      total = t;
    }
    return total;
  }
};

}  // namespace

double reduce_max_avx2(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n < 8) return reduce_max_scalar(v);
  __m256d m = _mm256_loadu_pd(v.data());
  std::size_t i = 4;
  for (; i + 4 <= n; i += 4) m = _mm256_max_pd(m, _mm256_loadu_pd(v.data() + i));
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, m);
  double r = lanes[0];
  for (int k = 1; k < 4; ++k) r = std::max(r, lanes[k]);
  for (; i < n; ++i) r = std::max(r, v[i]);
  return r;
}

double reduce_sum_avx2(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n < 8) return reduce_sum_scalar(v);
  KahanLanes acc;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc.add(_mm256_loadu_pd(v.data() + i));
  return acc.finish(v, i, [&](std::size_t k) { return v[k]; });
}

double dot_avx2(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  if (n < 8) return dot_scalar(a, b);
  KahanLanes acc;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc.add(_mm256_mul_pd(_mm256_loadu_pd(a.data() + i),
                          _mm256_loadu_pd(b.data() + i)));
  return acc.finish(a, i, [&](std::size_t k) { return a[k] * b[k]; });
}

void scale_avx2(std::span<double> v, double a) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= v.size(); i += 4)
    _mm256_storeu_pd(v.data() + i, _mm256_mul_pd(_mm256_loadu_pd(v.data() + i), va));
  for (; i < v.size(); ++i) v[i] *= a;
}

double exp_shifted_sum_avx2(std::span<const double> v, double shift,
                            std::span<double> out) {
  const std::size_t n = v.size();
  if (n < 8) return exp_shifted_sum_scalar(v, shift, out);
  const __m256d vshift = _mm256_set1_pd(shift);
  const bool store = !out.empty();
  KahanLanes acc;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d e = exp_pd(_mm256_sub_pd(_mm256_loadu_pd(v.data() + i), vshift));
    if (store) _mm256_storeu_pd(out.data() + i, e);
    acc.add(e);
  }
  return acc.finish(v, i, [&](std::size_t k) {
    double e = std::exp(v[k] - shift);
    if (store) out[k] = e;
    return e;
  });
}

/*
 * Butterfly passes share this helper: for each 2*stride block, add the lower
 * half into the upper (zeta over subsets) or the upper into the lower
 * (superset sums).  The per-element operations are independent, so these are
 * bit-identical to the scalar versions.
 */
template <bool UpperPlusLower>
static void butterfly(std::span<double> a, int nbits) {
  const std::size_t n = a.size();
  for (int b = 0; b < nbits; ++b) {
    const std::size_t stride = std::size_t{1} << b;
    if (stride < 4) {
      for (std::size_t base = 0; base < n; base += 2 * stride)
        for (std::size_t k = 0; k < stride; ++k) {
          if constexpr (UpperPlusLower)
            a[base + stride + k] += a[base + k];
          else
            a[base + k] += a[base + stride + k];
        }
      continue;
    }
    for (std::size_t base = 0; base < n; base += 2 * stride)
      for (std::size_t k = 0; k < stride; k += 4) {
        double* lo = a.data() + base + k;
        double* up = a.data() + base + stride + k;
        __m256d vlo = _mm256_loadu_pd(lo);
        __m256d vup = _mm256_loadu_pd(up);
        if constexpr (UpperPlusLower)
          _mm256_storeu_pd(up, _mm256_add_pd(vup, vlo));
        else
          _mm256_storeu_pd(lo, _mm256_add_pd(vlo, vup));
      }
  }
}

void subset_sum_avx2(std::span<double> a, int nbits) { butterfly<true>(a, nbits); }

void superset_sum_avx2(std::span<double> a, int nbits) { butterfly<false>(a, nbits); }

}  // namespace igeo::kernels::detail

#endif  // IGEO_HAVE_AVX2
