// SPDX-License-Identifier: Apache-2.0
// AVX2 + FMA kernels. This translation unit is compiled with -mavx2 -mfma and
// must only be entered after a runtime CPU check.
#include <immintrin.h>

#include <cmath>

#include "emt/kernels.hpp"

namespace emt::kernels {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// Lane-wise totals of four accumulators packed into one register.
inline __m256d hsum4(__m256d a, __m256d b, __m256d c, __m256d d) {
  const __m256d ab = _mm256_hadd_pd(a, b);
  const __m256d cd = _mm256_hadd_pd(c, d);
  const __m256d lo = _mm256_permute2f128_pd(ab, cd, 0x20);
  const __m256d hi = _mm256_permute2f128_pd(ab, cd, 0x31);
  return _mm256_add_pd(lo, hi);
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void gemm_nt_avx2(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                  std::size_t k, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      const double* b0 = b + j * k;
      const double* b1 = b0 + k;
      const double* b2 = b1 + k;
      const double* b3 = b2 + k;
      __m256d s0 = _mm256_setzero_pd();
      __m256d s1 = _mm256_setzero_pd();
      __m256d s2 = _mm256_setzero_pd();
      __m256d s3 = _mm256_setzero_pd();
      std::size_t p = 0;
      for (; p + 4 <= k; p += 4) {
        const __m256d va = _mm256_loadu_pd(ai + p);
        s0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b0 + p), s0);
        s1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b1 + p), s1);
        s2 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b2 + p), s2);
        s3 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b3 + p), s3);
      }
      alignas(32) double out[4];
      _mm256_store_pd(out, hsum4(s0, s1, s2, s3));
      for (; p < k; ++p) {
        out[0] += ai[p] * b0[p];
        out[1] += ai[p] * b1[p];
        out[2] += ai[p] * b2[p];
        out[3] += ai[p] * b3[p];
      }
      for (int q = 0; q < 4; ++q) ci[j + q] = accumulate ? ci[j + q] + out[q] : out[q];
    }
    for (; j < n; ++j) {
      const double s = dot_avx2(ai, b + j * k, k);
      ci[j] = accumulate ? ci[j] + s : s;
    }
  }
}

// Shared register-blocked update: C row (n wide) += sum_p coef(p) * B row p.
template <class Coef>
inline void accumulate_rows(Coef coef, const double* b, double* ci, std::size_t n, std::size_t k) {
  std::size_t j = 0;
  for (; j + 16 <= n; j += 16) {
    __m256d c0 = _mm256_loadu_pd(ci + j);
    __m256d c1 = _mm256_loadu_pd(ci + j + 4);
    __m256d c2 = _mm256_loadu_pd(ci + j + 8);
    __m256d c3 = _mm256_loadu_pd(ci + j + 12);
    for (std::size_t p = 0; p < k; ++p) {
      const __m256d w = _mm256_set1_pd(coef(p));
      const double* bp = b + p * n + j;
      c0 = _mm256_fmadd_pd(w, _mm256_loadu_pd(bp), c0);
      c1 = _mm256_fmadd_pd(w, _mm256_loadu_pd(bp + 4), c1);
      c2 = _mm256_fmadd_pd(w, _mm256_loadu_pd(bp + 8), c2);
      c3 = _mm256_fmadd_pd(w, _mm256_loadu_pd(bp + 12), c3);
    }
    _mm256_storeu_pd(ci + j, c0);
    _mm256_storeu_pd(ci + j + 4, c1);
    _mm256_storeu_pd(ci + j + 8, c2);
    _mm256_storeu_pd(ci + j + 12, c3);
  }
  for (; j + 4 <= n; j += 4) {
    __m256d c0 = _mm256_loadu_pd(ci + j);
    for (std::size_t p = 0; p < k; ++p) {
      c0 = _mm256_fmadd_pd(_mm256_set1_pd(coef(p)), _mm256_loadu_pd(b + p * n + j), c0);
    }
    _mm256_storeu_pd(ci + j, c0);
  }
  for (; j < n; ++j) {
    double s = ci[j];
    for (std::size_t p = 0; p < k; ++p) s += coef(p) * b[p * n + j];
    ci[j] = s;
  }
}

void gemm_nn_acc_avx2(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                      std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    accumulate_rows([ai](std::size_t p) { return ai[p]; }, b, c + i * n, n, k);
  }
}

void gemm_tn_acc_avx2(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                      std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    accumulate_rows([a, i, m](std::size_t p) { return a[p * m + i]; }, b, c + i * n, n, k);
  }
}

void tanh_backward_avx2(const double* h, const double* dh, double* dz, std::size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vh = _mm256_loadu_pd(h + i);
    const __m256d d = _mm256_fnmadd_pd(vh, vh, one);
    _mm256_storeu_pd(dz + i, _mm256_mul_pd(_mm256_loadu_pd(dh + i), d));
  }
  for (; i < n; ++i) dz[i] = dh[i] * (1.0 - h[i] * h[i]);
}

void adam_update_avx2(double* param, const double* grad, double* m, double* v, std::size_t n,
                      const AdamCoeffs& c) {
  const __m256d b1 = _mm256_set1_pd(c.beta1);
  const __m256d b2 = _mm256_set1_pd(c.beta2);
  const __m256d one_b1 = _mm256_set1_pd(1.0 - c.beta1);
  const __m256d one_b2 = _mm256_set1_pd(1.0 - c.beta2);
  const __m256d inv_bias1 = _mm256_set1_pd(1.0 / c.bias1);
  const __m256d inv_bias2 = _mm256_set1_pd(1.0 / c.bias2);
  const __m256d lr = _mm256_set1_pd(c.lr);
  const __m256d eps = _mm256_set1_pd(c.eps);
  const __m256d wd = _mm256_set1_pd(c.weight_decay);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d p = _mm256_loadu_pd(param + i);
    const __m256d g = _mm256_fmadd_pd(wd, p, _mm256_loadu_pd(grad + i));
    const __m256d mi = _mm256_fmadd_pd(b1, _mm256_loadu_pd(m + i), _mm256_mul_pd(one_b1, g));
    const __m256d vi =
        _mm256_fmadd_pd(b2, _mm256_loadu_pd(v + i), _mm256_mul_pd(one_b2, _mm256_mul_pd(g, g)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(_mm256_mul_pd(vi, inv_bias2)), eps);
    const __m256d step = _mm256_div_pd(_mm256_mul_pd(lr, _mm256_mul_pd(mi, inv_bias1)), denom);
    _mm256_storeu_pd(param + i, _mm256_sub_pd(p, step));
  }
  for (; i < n; ++i) {
    const double g = grad[i] + c.weight_decay * param[i];
    m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
    v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
    param[i] -= c.lr * (m[i] / c.bias1) / (std::sqrt(v[i] / c.bias2) + c.eps);
  }
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{
      "avx2",           dot_avx2,           axpy_avx2,          gemm_nt_avx2,
      gemm_nn_acc_avx2, gemm_tn_acc_avx2,   tanh_backward_avx2, adam_update_avx2,
  };
  return table;
}

}  // namespace emt::kernels
