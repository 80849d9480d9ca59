// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "glocal/kernels.hpp"

namespace glocal::kernels::detail {
namespace {

// Reduction order shared by every dot product in this file:
// (l0 + l2) + (l1 + l3), then the scalar tail is fused in sequentially.
inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(pair) + _mm_cvtsd_f64(_mm_unpackhi_pd(pair, pair));
}

inline double finish_dot(__m256d acc, const double* a, const double* b, std::size_t k4,
                         std::size_t k) {
  double s = hsum(acc);
  for (std::size_t p = k4; p < k; ++p) s = std::fma(a[p], b[p], s);
  return s;
}

inline double dot1(const double* a, const double* b, std::size_t k) {
  const std::size_t k4 = k & ~std::size_t{3};
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t p = 0; p < k4; p += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + p), _mm256_loadu_pd(b + p), acc);
  return finish_dot(acc, a, b, k4, k);
}

void dense_nt_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                   const double* bias, double* c) {
  const std::size_t k4 = k & ~std::size_t{3};
  auto out = [&](std::size_t i, std::size_t j, double s) {
    c[i * n + j] = bias ? s + bias[j] : s;
  };

  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    const double* a0 = a + (i + 0) * k;
    const double* a1 = a + (i + 1) * k;
    const double* a2 = a + (i + 2) * k;
    const double* a3 = a + (i + 3) * k;
    std::size_t j = 0;
    for (; j + 2 <= n; j += 2) {
      const double* b0 = b + (j + 0) * k;
      const double* b1 = b + (j + 1) * k;
      __m256d c00 = _mm256_setzero_pd(), c01 = _mm256_setzero_pd();
      __m256d c10 = _mm256_setzero_pd(), c11 = _mm256_setzero_pd();
      __m256d c20 = _mm256_setzero_pd(), c21 = _mm256_setzero_pd();
      __m256d c30 = _mm256_setzero_pd(), c31 = _mm256_setzero_pd();
      for (std::size_t p = 0; p < k4; p += 4) {
        const __m256d vb0 = _mm256_loadu_pd(b0 + p);
        const __m256d vb1 = _mm256_loadu_pd(b1 + p);
        __m256d va = _mm256_loadu_pd(a0 + p);
        c00 = _mm256_fmadd_pd(va, vb0, c00);
        c01 = _mm256_fmadd_pd(va, vb1, c01);
        va = _mm256_loadu_pd(a1 + p);
        c10 = _mm256_fmadd_pd(va, vb0, c10);
        c11 = _mm256_fmadd_pd(va, vb1, c11);
        va = _mm256_loadu_pd(a2 + p);
        c20 = _mm256_fmadd_pd(va, vb0, c20);
        c21 = _mm256_fmadd_pd(va, vb1, c21);
        va = _mm256_loadu_pd(a3 + p);
        c30 = _mm256_fmadd_pd(va, vb0, c30);
        c31 = _mm256_fmadd_pd(va, vb1, c31);
      }
      out(i + 0, j + 0, finish_dot(c00, a0, b0, k4, k));
      out(i + 0, j + 1, finish_dot(c01, a0, b1, k4, k));
      out(i + 1, j + 0, finish_dot(c10, a1, b0, k4, k));
      out(i + 1, j + 1, finish_dot(c11, a1, b1, k4, k));
      out(i + 2, j + 0, finish_dot(c20, a2, b0, k4, k));
      out(i + 2, j + 1, finish_dot(c21, a2, b1, k4, k));
      out(i + 3, j + 0, finish_dot(c30, a3, b0, k4, k));
      out(i + 3, j + 1, finish_dot(c31, a3, b1, k4, k));
    }
    for (; j < n; ++j) {
      const double* bj = b + j * k;
      out(i + 0, j, dot1(a0, bj, k));
      out(i + 1, j, dot1(a1, bj, k));
      out(i + 2, j, dot1(a2, bj, k));
      out(i + 3, j, dot1(a3, bj, k));
    }
  }
  for (; i < m; ++i) {
    const double* ai = a + i * k;
    for (std::size_t j = 0; j < n; ++j) out(i, j, dot1(ai, b + j * k, k));
  }
}

// c[0..k) += s * b[0..k)
inline void axpy(double s, const double* b, double* c, std::size_t k) {
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t q = 0;
  for (; q + 16 <= k; q += 16) {
    __m256d c0 = _mm256_loadu_pd(c + q);
    __m256d c1 = _mm256_loadu_pd(c + q + 4);
    __m256d c2 = _mm256_loadu_pd(c + q + 8);
    __m256d c3 = _mm256_loadu_pd(c + q + 12);
    c0 = _mm256_fmadd_pd(vs, _mm256_loadu_pd(b + q), c0);
    c1 = _mm256_fmadd_pd(vs, _mm256_loadu_pd(b + q + 4), c1);
    c2 = _mm256_fmadd_pd(vs, _mm256_loadu_pd(b + q + 8), c2);
    c3 = _mm256_fmadd_pd(vs, _mm256_loadu_pd(b + q + 12), c3);
    _mm256_storeu_pd(c + q, c0);
    _mm256_storeu_pd(c + q + 4, c1);
    _mm256_storeu_pd(c + q + 8, c2);
    _mm256_storeu_pd(c + q + 12, c3);
  }
  for (; q + 4 <= k; q += 4)
    _mm256_storeu_pd(c + q, _mm256_fmadd_pd(vs, _mm256_loadu_pd(b + q), _mm256_loadu_pd(c + q)));
  for (; q < k; ++q) c[q] = std::fma(s, b[q], c[q]);
}

// c[0..k) += s0 * b0[0..k) + s1 * b1[0..k), applied as two sequential fused steps
inline void axpy2(double s0, const double* b0, double s1, const double* b1, double* c,
                  std::size_t k) {
  const __m256d v0 = _mm256_set1_pd(s0);
  const __m256d v1 = _mm256_set1_pd(s1);
  std::size_t q = 0;
  for (; q + 8 <= k; q += 8) {
    __m256d c0 = _mm256_loadu_pd(c + q);
    __m256d c1 = _mm256_loadu_pd(c + q + 4);
    c0 = _mm256_fmadd_pd(v0, _mm256_loadu_pd(b0 + q), c0);
    c1 = _mm256_fmadd_pd(v0, _mm256_loadu_pd(b0 + q + 4), c1);
    c0 = _mm256_fmadd_pd(v1, _mm256_loadu_pd(b1 + q), c0);
    c1 = _mm256_fmadd_pd(v1, _mm256_loadu_pd(b1 + q + 4), c1);
    _mm256_storeu_pd(c + q, c0);
    _mm256_storeu_pd(c + q + 4, c1);
  }
  for (; q < k; ++q) c[q] = std::fma(s1, b1[q], std::fma(s0, b0[q], c[q]));
}

void accum_nn_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                   double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ar = a + i * n;
    double* cr = c + i * k;
    std::size_t j = 0;
    for (; j + 2 <= n; j += 2) {
      const double s0 = ar[j], s1 = ar[j + 1];
      if (s0 == 0.0 && s1 == 0.0) continue;
      if (s1 == 0.0) {
        axpy(s0, b + j * k, cr, k);
      } else if (s0 == 0.0) {
        axpy(s1, b + (j + 1) * k, cr, k);
      } else {
        axpy2(s0, b + j * k, s1, b + (j + 1) * k, cr, k);
      }
    }
    for (; j < n; ++j)
      if (ar[j] != 0.0) axpy(ar[j], b + j * k, cr, k);
  }
}

void accum_tn_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                   double* c) {
  // Row blocks keep the slice of B hot in cache while every output row sweeps it.
  constexpr std::size_t kRowBlock = 32;
  for (std::size_t i0 = 0; i0 < m; i0 += kRowBlock) {
    const std::size_t i1 = std::min(m, i0 + kRowBlock);
    for (std::size_t j = 0; j < n; ++j) {
      double* cr = c + j * k;
      std::size_t i = i0;
      for (; i + 2 <= i1; i += 2) {
        const double s0 = a[i * n + j], s1 = a[(i + 1) * n + j];
        if (s0 == 0.0 && s1 == 0.0) continue;
        if (s1 == 0.0) {
          axpy(s0, b + i * k, cr, k);
        } else if (s0 == 0.0) {
          axpy(s1, b + (i + 1) * k, cr, k);
        } else {
          axpy2(s0, b + i * k, s1, b + (i + 1) * k, cr, k);
        }
      }
      for (; i < i1; ++i)
        if (a[i * n + j] != 0.0) axpy(a[i * n + j], b + i * k, cr, k);
    }
  }
}

void adam_avx2(std::size_t n, double* theta, const double* grad, double* m, double* v,
               const AdamCoefficients& coef) {
  const __m256d b1 = _mm256_set1_pd(coef.beta1);
  const __m256d b2 = _mm256_set1_pd(coef.beta2);
  const __m256d omb1 = _mm256_set1_pd(1.0 - coef.beta1);
  const __m256d omb2 = _mm256_set1_pd(1.0 - coef.beta2);
  const __m256d bc1 = _mm256_set1_pd(coef.bias_correction1);
  const __m256d bc2 = _mm256_set1_pd(coef.bias_correction2);
  const __m256d lr = _mm256_set1_pd(coef.lr);
  const __m256d eps = _mm256_set1_pd(coef.eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d g = _mm256_loadu_pd(grad + i);
    const __m256d mi = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(omb1, g));
    const __m256d vi = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)),
                                     _mm256_mul_pd(omb2, _mm256_mul_pd(g, g)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d m_hat = _mm256_div_pd(mi, bc1);
    const __m256d v_hat = _mm256_div_pd(vi, bc2);
    const __m256d step =
        _mm256_div_pd(_mm256_mul_pd(lr, m_hat), _mm256_add_pd(_mm256_sqrt_pd(v_hat), eps));
    _mm256_storeu_pd(theta + i, _mm256_sub_pd(_mm256_loadu_pd(theta + i), step));
  }
  const double one_minus_b1 = 1.0 - coef.beta1;
  const double one_minus_b2 = 1.0 - coef.beta2;
  for (; i < n; ++i) {
    const double g = grad[i];
    m[i] = coef.beta1 * m[i] + one_minus_b1 * g;
    v[i] = coef.beta2 * v[i] + one_minus_b2 * (g * g);
    const double m_hat = m[i] / coef.bias_correction1;
    const double v_hat = v[i] / coef.bias_correction2;
    theta[i] -= (coef.lr * m_hat) / (std::sqrt(v_hat) + coef.eps);
  }
}

}  // namespace

const KernelSet& avx2_set() {
  static const KernelSet set{"avx2", dense_nt_avx2, accum_nn_avx2, accum_tn_avx2, adam_avx2};
  return set;
}

}  // namespace glocal::kernels::detail
