// SPDX-License-Identifier: Apache-2.0
#include "emt/circuit.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>

namespace emt {

namespace {

std::vector<int> reachable_set(const RealMatrix& phi, const std::vector<bool>& readout) {
  const auto n = static_cast<std::size_t>(phi.rows());
  std::vector<int> seen(n, 0);
  std::vector<std::size_t> frontier;
  for (std::size_t i = 0; i < n; ++i) {
    if (readout[i]) {
      seen[i] = 1;
      frontier.push_back(i);
    }
  }
  // j feeds i when phi(i, j) != 0; walk edges backwards from the readout.
  while (!frontier.empty()) {
    const std::size_t i = frontier.back();
    frontier.pop_back();
    for (std::size_t j = 0; j < n; ++j) {
      if (!seen[j] && phi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) != 0.0) {
        seen[j] = 1;
        frontier.push_back(j);
      }
    }
  }
  return seen;
}

std::vector<int> mask_from_bits(std::uint32_t bits, int n) {
  std::vector<int> m(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) m[static_cast<std::size_t>(i)] = (bits >> i) & 1U;
  return m;
}

}  // namespace

std::vector<bool> circuit_readout(int s, int d) {
  std::vector<bool> r(static_cast<std::size_t>(s * d), false);
  for (int i = (s - 1) * d; i < s * d; ++i) r[static_cast<std::size_t>(i)] = true;
  return r;
}

std::size_t masked_rank(const RealMatrix& phi, const std::vector<int>& mask, double tol) {
  if (mask.size() != static_cast<std::size_t>(phi.rows())) throw InvalidArgument("masked_rank: mask size mismatch");
  RealMatrix m = phi;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (!mask[static_cast<std::size_t>(i)]) {
      m.row(i).setZero();
      m.col(i).setZero();
    }
  }
  return numerical_rank(m, tol);
}

MaskResult optimize_mask(const RealMatrix& phi, const std::vector<bool>& readout, double tol) {
  if (phi.rows() != phi.cols() || phi.rows() == 0) throw InvalidArgument("optimize_mask: phi must be square");
  if (readout.size() != static_cast<std::size_t>(phi.rows())) {
    throw InvalidArgument("optimize_mask: readout pattern size mismatch");
  }
  const int n = static_cast<int>(phi.rows());
  MaskResult r;
  r.rank_phi = numerical_rank(phi, tol);
  r.reachable = reachable_set(phi, readout);
  const std::size_t candidate_rank = masked_rank(phi, r.reachable, tol);
  const bool candidate_ok = candidate_rank == r.rank_phi;

  if (n > kExhaustiveMaskLimit) {
    if (!candidate_ok) {
      throw MaskVerificationError("optimize_mask: reachability mask has rank " + std::to_string(candidate_rank) +
                                      ", expected " + std::to_string(r.rank_phi),
                                  r.reachable);
    }
    r.mask = r.reachable;
    r.rank_masked = candidate_rank;
    return r;
  }

  // Every feasible mask keeps at least rank(phi) coordinates, so search
  // cardinalities upward from there. Prefer the reachable set on ties.
  r.exhaustive = true;
  const int candidate_size = static_cast<int>(std::count(r.reachable.begin(), r.reachable.end(), 1));
  const std::uint32_t full = (n == 32) ? ~0U : ((1U << n) - 1U);
  for (int k = static_cast<int>(r.rank_phi); k <= n; ++k) {
    if (candidate_ok && k == candidate_size) {
      r.mask = r.reachable;
      r.rank_masked = candidate_rank;
      return r;
    }
    for (std::uint32_t bits = 0; bits <= full; ++bits) {
      if (std::popcount(bits) != k) continue;
      auto m = mask_from_bits(bits, n);
      const std::size_t rk = masked_rank(phi, m, tol);
      if (rk == r.rank_phi) {
        r.mask = std::move(m);
        r.rank_masked = rk;
        return r;
      }
    }
  }
  r.mask.assign(static_cast<std::size_t>(n), 1);
  r.rank_masked = r.rank_phi;
  return r;
}

}  // namespace emt
