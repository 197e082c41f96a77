// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <complex>
#include <random>
#include <vector>

#include "emt/numerics.hpp"
#include "emt/tasks.hpp"

namespace emt::test {

inline RealMatrix random_matrix(int rows, int cols, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  RealMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

// Product of two Gaussian factors: rank min(rank, rows, cols) almost surely.
inline RealMatrix random_rank(int rows, int cols, int rank, Rng& rng) {
  if (rank == 0) return RealMatrix::Zero(rows, cols);
  return random_matrix(rows, rank, rng) * random_matrix(rank, cols, rng);
}

// Greedy nearest matching of two complex multisets; largest pair distance.
inline double multiset_distance(std::vector<Complex> a, std::vector<Complex> b) {
  if (a.size() != b.size()) return 1e300;
  double worst = 0.0;
  for (const auto& z : a) {
    auto best = std::min_element(b.begin(), b.end(),
                                 [&](const Complex& x, const Complex& y) { return std::abs(x - z) < std::abs(y - z); });
    worst = std::max(worst, std::abs(*best - z));
    b.erase(best);
  }
  return worst;
}

}  // namespace emt::test
