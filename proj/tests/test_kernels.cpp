// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "emt/kernels.hpp"

using namespace emt::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::vector<double> v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(1.0, std::abs(b[i])));
  }
  return worst;
}

// Triple-loop references.
std::vector<double> naive_nt(const std::vector<double>& a, const std::vector<double>& b, std::size_t m,
                             std::size_t n, std::size_t k) {
  std::vector<double> c(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t p = 0; p < k; ++p) c[i * n + j] += a[i * k + p] * b[j * k + p];
  return c;
}

std::vector<const KernelTable*> tables() {
  std::vector<const KernelTable*> t{&scalar_kernels()};
  if (avx2_kernels() != nullptr) t.push_back(avx2_kernels());
  return t;
}

}  // namespace

TEST_CASE("dispatch picks a known table") {
  const auto name = active().name;
  CHECK((name == "scalar" || name == "avx2"));
}

TEST_CASE("gemm variants match the triple loop for awkward shapes") {
  std::mt19937_64 rng(1);
  for (const KernelTable* t : tables()) {
    CAPTURE(t->name);
    for (std::size_t m : {1, 3, 8, 13}) {
      for (std::size_t n : {1, 4, 7, 17}) {
        for (std::size_t k : {1, 2, 5, 16, 33}) {
          const auto a = random_vec(m * k, rng);
          const auto b = random_vec(n * k, rng);
          const auto ref = naive_nt(a, b, m, n, k);
          std::vector<double> c(m * n, 123.0);
          t->gemm_nt(a.data(), b.data(), c.data(), m, n, k, false);
          CHECK(max_rel(c, ref) < 1e-13);

          // B^T laid out as k x n for the nn variant.
          std::vector<double> bt(k * n);
          for (std::size_t j = 0; j < n; ++j)
            for (std::size_t p = 0; p < k; ++p) bt[p * n + j] = b[j * k + p];
          std::vector<double> c2(m * n, 0.0);
          t->gemm_nn_acc(a.data(), bt.data(), c2.data(), m, n, k);
          CHECK(max_rel(c2, ref) < 1e-13);

          // A^T laid out as k x m for the tn variant.
          std::vector<double> at(k * m);
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) at[p * m + i] = a[i * k + p];
          std::vector<double> c3(m * n, 0.0);
          t->gemm_tn_acc(at.data(), bt.data(), c3.data(), m, n, k);
          CHECK(max_rel(c3, ref) < 1e-13);
        }
      }
    }
  }
}

TEST_CASE("vector variants agree with the scalar reference") {
  const KernelTable* simd = avx2_kernels();
  if (simd == nullptr) {
    MESSAGE("no AVX2 on this machine; equivalence not exercised");
    return;
  }
  const KernelTable& ref = scalar_kernels();
  std::mt19937_64 rng(7);
  for (std::size_t n = 0; n < 70; ++n) {
    const auto x = random_vec(n, rng);
    const auto y = random_vec(n, rng);
    CHECK(std::abs(simd->dot(x.data(), y.data(), n) - ref.dot(x.data(), y.data(), n)) < 1e-12 * (1.0 + n));

    auto y1 = y, y2 = y;
    simd->axpy(0.37, x.data(), y1.data(), n);
    ref.axpy(0.37, x.data(), y2.data(), n);
    CHECK(max_rel(y1, y2) < 1e-15);

    std::vector<double> h(n);
    for (std::size_t i = 0; i < n; ++i) h[i] = std::tanh(x[i]);
    std::vector<double> dz1(n), dz2(n);
    simd->tanh_backward(h.data(), y.data(), dz1.data(), n);
    ref.tanh_backward(h.data(), y.data(), dz2.data(), n);
    CHECK(max_rel(dz1, dz2) < 1e-15);

    const AdamCoeffs c{1e-3, 0.9, 0.999, 1e-8, 0.1, 0.001, 0.01};
    auto p1 = x, p2 = x;
    std::vector<double> m1(n, 0.1), m2(n, 0.1), v1(n, 0.2), v2(n, 0.2);
    simd->adam_update(p1.data(), y.data(), m1.data(), v1.data(), n, c);
    ref.adam_update(p2.data(), y.data(), m2.data(), v2.data(), n, c);
    CHECK(max_rel(p1, p2) < 1e-14);
    CHECK(max_rel(m1, m2) < 1e-15);
    CHECK(max_rel(v1, v2) < 1e-15);
  }
}

TEST_CASE("accumulating gemm adds onto existing values") {
  for (const KernelTable* t : tables()) {
    const std::vector<double> a{1, 2, 3, 4};  // 2x2
    const std::vector<double> b{1, 0, 0, 1};  // 2x2
    std::vector<double> c{10, 10, 10, 10};
    t->gemm_nt(a.data(), b.data(), c.data(), 2, 2, 2, true);
    CHECK(c == std::vector<double>{11, 12, 13, 14});
  }
}
