// SPDX-License-Identifier: Apache-2.0
#include "emt/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "emt/error.hpp"

namespace emt {

namespace {

double effective_tol(const RealMatrix& a, double tol) {
  if (tol < 0.0) return kDefaultRankFactor * static_cast<double>(std::max(a.rows(), a.cols()));
  return tol;
}

// Indices ordered by descending magnitude; runs of (numerically) equal
// magnitude are ordered by ascending argument.
std::vector<std::size_t> spectral_order(const std::vector<Complex>& values) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) {
    return std::abs(values[i]) > std::abs(values[j]);
  });
  std::size_t begin = 0;
  while (begin < idx.size()) {
    std::size_t end = begin + 1;
    while (end < idx.size()) {
      const double prev = std::abs(values[idx[end - 1]]);
      const double cur = std::abs(values[idx[end]]);
      if (prev - cur > 1e-9 * std::max(1.0, prev)) break;
      ++end;
    }
    std::stable_sort(idx.begin() + static_cast<std::ptrdiff_t>(begin),
                     idx.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t i, std::size_t j) {
                       return argument(values[i]) < argument(values[j]);
                     });
    begin = end;
  }
  return idx;
}

}  // namespace

bool all_finite(const RealMatrix& a) { return a.allFinite(); }

double wrap_angle(double theta) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(theta + std::numbers::pi, two_pi);
  if (w < 0.0) w += two_pi;
  w -= std::numbers::pi;
  if (w >= std::numbers::pi) w -= two_pi;
  return w;
}

double argument(Complex z) {
  const double a = std::arg(z);
  return a >= std::numbers::pi ? a - 2.0 * std::numbers::pi : a;
}

ComplexSpectrum eig_general(const RealMatrix& a) {
  if (a.rows() != a.cols()) {
    throw InvalidArgument("eig_general: matrix is " + std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + ", expected square");
  }
  if (!a.allFinite()) throw InvalidArgument("eig_general: non-finite entries");
  const Eigen::Index n = a.rows();
  ComplexSpectrum out;
  if (n == 0) {
    out.right_eigenvectors = ComplexMatrix(0, 0);
    out.inverse_eigenvectors = ComplexMatrix(0, 0);
    return out;
  }

  Eigen::EigenSolver<Eigen::MatrixXd> solver;
  solver.setMaxIterations(static_cast<Eigen::Index>(100 * n));
  solver.compute(Eigen::MatrixXd(a), /*computeEigenvectors=*/true);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eig_general: QR iteration did not converge within " +
                         std::to_string(100 * n) + " sweeps");
  }
  const Eigen::VectorXcd values = solver.eigenvalues();
  const Eigen::MatrixXcd vectors = solver.eigenvectors();

  std::vector<Complex> raw(values.data(), values.data() + n);
  const auto order = spectral_order(raw);
  out.eigenvalues.reserve(static_cast<std::size_t>(n));
  out.right_eigenvectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto src = static_cast<Eigen::Index>(order[static_cast<std::size_t>(k)]);
    out.eigenvalues.push_back(raw[static_cast<std::size_t>(src)]);
    out.right_eigenvectors.col(k) = vectors.col(src);
  }

  const Eigen::MatrixXcd ac = a.cast<Complex>();
  const double a_norm = a.norm();
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto v = out.right_eigenvectors.col(k);
    const double residual = (ac * v - out.eigenvalues[static_cast<std::size_t>(k)] * v).norm();
    if (residual > 1e-8 * a_norm * v.norm() + 1e-300) {
      throw NumericalError("eig_general: residual certificate failed for eigenvalue " +
                           std::to_string(k) + " (residual " + std::to_string(residual) + ")");
    }
  }

  Eigen::FullPivLU<Eigen::MatrixXcd> lu(out.right_eigenvectors);
  if (lu.isInvertible()) {
    Eigen::MatrixXcd inv = lu.inverse();
    const double dev =
        (inv * out.right_eigenvectors - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();
    if (inv.allFinite() && dev <= 1e-6) out.inverse_eigenvectors = std::move(inv);
  }
  return out;
}

RealVector singular_values(const RealMatrix& a) {
  if (a.size() == 0) return RealVector(0);
  const Eigen::MatrixXd dense = a;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(dense);
  return svd.singularValues();
}

RealMatrix pinv(const RealMatrix& a, double tol) {
  if (!a.allFinite()) throw InvalidArgument("pinv: non-finite entries");
  RealMatrix out = RealMatrix::Zero(a.cols(), a.rows());
  if (a.size() == 0) return out;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(a), Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RealVector& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return out;
  const double cutoff = effective_tol(a, tol) * sv(0);
  RealVector inv_sv = RealVector::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) inv_sv(i) = 1.0 / sv(i);
  }
  out = svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose();
  return out;
}

std::size_t numerical_rank(const RealMatrix& a, double tol) {
  if (!a.allFinite()) throw InvalidArgument("numerical_rank: non-finite entries");
  const RealVector sv = singular_values(a);
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double cutoff = effective_tol(a, tol) * sv(0);
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) ++rank;
  }
  return rank;
}

double condition_number(const RealMatrix& a) {
  const RealVector sv = singular_values(a);
  if (sv.size() == 0 || sv(sv.size() - 1) == 0.0) return std::numeric_limits<double>::infinity();
  return sv(0) / sv(sv.size() - 1);
}

double operator_norm(const RealMatrix& a) {
  const RealVector sv = singular_values(a);
  return sv.size() == 0 ? 0.0 : sv(0);
}

RealMatrix pca_columns(const RealMatrix& samples, double var_threshold) {
  if (!(var_threshold > 0.0 && var_threshold <= 1.0)) {
    throw InvalidArgument("pca: var_threshold must lie in (0, 1]");
  }
  const Eigen::Index dim = samples.rows();
  const Eigen::Index count = samples.cols();
  if (count < 2) throw InvalidArgument("pca: need at least 2 samples");
  if (!samples.allFinite()) throw InvalidArgument("pca: non-finite samples");

  const RealVector mean = samples.rowwise().mean();
  const Eigen::MatrixXd centred = samples.colwise() - mean;
  const Eigen::MatrixXd cov = centred * centred.transpose() / static_cast<double>(count - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericalError("pca: covariance eigensolver failed");

  // Eigen returns ascending eigenvalues.
  const RealVector values = eig.eigenvalues().reverse();
  const Eigen::MatrixXd vectors = eig.eigenvectors().rowwise().reverse();
  const double top = values.size() > 0 ? values(0) : 0.0;
  if (!(top > 0.0)) return RealMatrix(dim, 0);

  const double floor = 1e-12 * top;
  double total = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) > floor) total += values(i);
  }
  Eigen::Index keep = 0;
  double cumulative = 0.0;
  while (keep < values.size() && values(keep) > floor) {
    cumulative += values(keep);
    ++keep;
    if (cumulative >= var_threshold * total * (1.0 - 1e-12)) break;
  }

  RealMatrix basis = vectors.leftCols(keep);
  for (Eigen::Index c = 0; c < keep; ++c) {
    Eigen::Index arg_max = 0;
    for (Eigen::Index r = 1; r < dim; ++r) {
      if (std::abs(basis(r, c)) > std::abs(basis(arg_max, c))) arg_max = r;
    }
    if (basis(arg_max, c) < 0.0) basis.col(c) *= -1.0;
  }
  return basis;
}

RealMatrix pca(std::span<const RealVector> samples, double var_threshold) {
  if (samples.size() < 2) throw InvalidArgument("pca: need at least 2 samples");
  const Eigen::Index dim = samples.front().size();
  RealMatrix m(dim, static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].size() != dim) throw InvalidArgument("pca: samples differ in dimension");
    m.col(static_cast<Eigen::Index>(i)) = samples[i];
  }
  return pca_columns(m, var_threshold);
}

}  // namespace emt
