// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "emt/kernels.hpp"

namespace emt::kernels {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemm_nt_scalar(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                    std::size_t k, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double s = dot_scalar(ai, b + j * k, k);
      ci[j] = accumulate ? ci[j] + s : s;
    }
  }
}

void gemm_nn_acc_scalar(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                        std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      if (aip != 0.0) axpy_scalar(aip, b + p * n, ci, n);
    }
  }
}

void gemm_tn_acc_scalar(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                        std::size_t k) {
  for (std::size_t p = 0; p < k; ++p) {
    const double* ap = a + p * m;
    const double* bp = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      if (ap[i] != 0.0) axpy_scalar(ap[i], bp, c + i * n, n);
    }
  }
}

void tanh_backward_scalar(const double* h, const double* dh, double* dz, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dz[i] = dh[i] * (1.0 - h[i] * h[i]);
}

void adam_update_scalar(double* param, const double* grad, double* m, double* v, std::size_t n,
                        const AdamCoeffs& c) {
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i] + c.weight_decay * param[i];
    m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
    v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
    const double m_hat = m[i] / c.bias1;
    const double v_hat = v[i] / c.bias2;
    param[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{
      "scalar",           dot_scalar,           axpy_scalar,        gemm_nt_scalar,
      gemm_nn_acc_scalar, gemm_tn_acc_scalar,   tanh_backward_scalar, adam_update_scalar,
  };
  return table;
}

}  // namespace emt::kernels
