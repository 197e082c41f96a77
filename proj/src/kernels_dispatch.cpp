// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <string_view>

#include "emt/error.hpp"
#include "emt/kernels.hpp"

namespace emt::kernels {

#if defined(EMT_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

const KernelTable* avx2_kernels() {
#if defined(EMT_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() {
  static const KernelTable* chosen = [] {
    const char* env = std::getenv("EMT_KERNELS");
    if (env != nullptr && std::string_view(env) == "scalar") return &scalar_kernels();
    if (const KernelTable* t = avx2_kernels()) return t;
    return &scalar_kernels();
  }();
  return *chosen;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("kernels::dot: length mismatch");
  return active().dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw InvalidArgument("kernels::axpy: length mismatch");
  active().axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace emt::kernels
