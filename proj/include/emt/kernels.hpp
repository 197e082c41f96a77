// SPDX-License-Identifier: Apache-2.0
//
// Inner-loop kernels for the batched RNN forward/backward passes and the
// optimizer. Every kernel has a portable scalar reference implementation;
// vector variants are selected at runtime when the CPU supports them and are
// tested for equivalence against the reference.
//
// All matrices are dense row-major with the leading dimension equal to the
// column count.
#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace emt::kernels {

struct AdamCoeffs {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double bias1;  // 1 - beta1^t
  double bias2;  // 1 - beta2^t
  double weight_decay;
};

struct KernelTable {
  std::string_view name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // C(m x n) = A(m x k) * B(n x k)^T, or += when accumulate
  void (*gemm_nt)(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                  std::size_t k, bool accumulate);
  // C(m x n) += A(m x k) * B(k x n)
  void (*gemm_nn_acc)(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                      std::size_t k);
  // C(m x n) += A(k x m)^T * B(k x n)
  void (*gemm_tn_acc)(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                      std::size_t k);
  // dz = dh * (1 - h^2)
  void (*tanh_backward)(const double* h, const double* dh, double* dz, std::size_t n);
  // In-place Adam update with optional L2 term added to the gradient.
  void (*adam_update)(double* param, const double* grad, double* m, double* v, std::size_t n,
                      const AdamCoeffs& c);
};

const KernelTable& scalar_kernels();

/// AVX2+FMA table, or nullptr when not compiled in or unsupported by the CPU.
const KernelTable* avx2_kernels();

/// Table used by the library. Chosen once: the best supported variant unless
/// the EMT_KERNELS environment variable is set to "scalar".
const KernelTable& active();

// Span-based conveniences over active().
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);

}  // namespace emt::kernels
