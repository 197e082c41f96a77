// SPDX-License-Identifier: Apache-2.0
//
// Dense real linear algebra shared by every other module: general
// eigendecomposition, Moore-Penrose pseudoinverse, numerical rank and PCA.
#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace emt {

/// Row-major double matrix. Row-major so kernels and file formats can walk
/// rows contiguously.
using RealMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RealVector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using Complex = std::complex<double>;

/// Eigenvalues of a real square matrix with right eigenvectors (columns) and,
/// when the eigenvector matrix is numerically invertible, its inverse (rows
/// are the left-dual covectors).
struct ComplexSpectrum {
  std::vector<Complex> eigenvalues;
  ComplexMatrix right_eigenvectors;
  std::optional<ComplexMatrix> inverse_eigenvectors;
};

/// Default relative tolerance factor for rank decisions; the effective
/// cutoff is `factor * sigma_max * max(rows, cols)`.
inline constexpr double kDefaultRankFactor = 1e-10;

/// Full spectrum of `a`, sorted by descending magnitude, ties broken by
/// ascending argument in [-pi, pi). Throws InvalidArgument for non-square or
/// non-finite input and NumericalError when the QR iteration does not converge
/// or the residual certificate fails.
ComplexSpectrum eig_general(const RealMatrix& a);

/// Moore-Penrose pseudoinverse. Singular values <= tol * sigma_max are zeroed;
/// tol < 0 selects the default `kDefaultRankFactor * max(rows, cols)`.
RealMatrix pinv(const RealMatrix& a, double tol = -1.0);

/// Number of singular values > tol * sigma_max (same default as pinv).
std::size_t numerical_rank(const RealMatrix& a, double tol = -1.0);

/// Singular values in descending order.
RealVector singular_values(const RealMatrix& a);

/// 2-norm condition number; infinity for rank-deficient or empty input.
double condition_number(const RealMatrix& a);

/// Spectral norm.
double operator_norm(const RealMatrix& a);

/// Principal directions of the mean-centred samples as orthonormal columns:
/// the smallest leading set whose explained variance reaches var_threshold.
/// Each column's largest-magnitude entry is positive. Identical samples give
/// a basis with zero columns.
RealMatrix pca(std::span<const RealVector> samples, double var_threshold);

/// Same as above with samples as the columns of a matrix.
RealMatrix pca_columns(const RealMatrix& samples, double var_threshold);

/// Wrap an angle into [-pi, pi).
double wrap_angle(double theta);

/// Argument of z in [-pi, pi).
double argument(Complex z);

bool all_finite(const RealMatrix& a);

}  // namespace emt
