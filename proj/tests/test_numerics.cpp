// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "emt/error.hpp"
#include "emt/numerics.hpp"
#include "test_support.hpp"

using namespace emt;
using emt::test::random_matrix;
using emt::test::random_rank;

namespace {

double residual(const RealMatrix& a, const ComplexSpectrum& s, std::size_t k) {
  const Eigen::VectorXcd v = s.right_eigenvectors.col(static_cast<Eigen::Index>(k));
  const Eigen::VectorXcd av = a.cast<Complex>() * v;
  return (av - s.eigenvalues[k] * v).norm() / v.norm();
}

}  // namespace

TEST_CASE("eig_general: identity has all eigenvalues one") {
  const auto s = eig_general(RealMatrix::Identity(4, 4));
  REQUIRE(s.eigenvalues.size() == 4);
  for (const auto& z : s.eigenvalues) CHECK(std::abs(z - Complex(1, 0)) < 1e-14);
  CHECK(s.inverse_eigenvectors.has_value());
}

TEST_CASE("eig_general: quarter rotation") {
  RealMatrix r(2, 2);
  r << 0, -1, 1, 0;
  const auto s = eig_general(r);
  REQUIRE(s.eigenvalues.size() == 2);
  // Equal magnitude, so ordered by argument: -i first.
  CHECK(std::abs(s.eigenvalues[0] - Complex(0, -1)) < 1e-12);
  CHECK(std::abs(s.eigenvalues[1] - Complex(0, 1)) < 1e-12);
}

TEST_CASE("eig_general: cyclic shift gives fourth roots of unity") {
  RealMatrix p = RealMatrix::Zero(4, 4);
  for (int i = 0; i < 4; ++i) p(i, (i + 1) % 4) = 1.0;
  const auto s = eig_general(p);
  REQUIRE(s.eigenvalues.size() == 4);
  // Root check: each eigenvalue solves x^4 = 1 and makes p - x I singular.
  for (const auto& z : s.eigenvalues) {
    CHECK(std::abs(std::pow(z, 4) - Complex(1, 0)) < 1e-12);
    const Eigen::MatrixXcd shifted = p.cast<Complex>() - z * Eigen::MatrixXcd::Identity(4, 4);
    CHECK(std::abs(shifted.determinant()) < 1e-12);
  }
  const std::vector<Complex> expected{{0, -1}, {-1, 0}, {0, 1}, {1, 0}};
  CHECK(test::multiset_distance(s.eigenvalues, expected) < 1e-12);
  // Arguments ascend within the unit-magnitude tie group, starting at -pi.
  CHECK(argument(s.eigenvalues[0]) == doctest::Approx(-std::numbers::pi));
}

TEST_CASE("eig_general: rejects bad input") {
  CHECK_THROWS_AS(eig_general(RealMatrix::Zero(2, 3)), InvalidArgument);
  RealMatrix bad = RealMatrix::Identity(2, 2);
  bad(0, 1) = std::nan("");
  CHECK_THROWS_AS(eig_general(bad), InvalidArgument);
}

TEST_CASE("eig_general: residual certificate and conjugate pairs on random matrices") {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 12);
    const RealMatrix a = random_matrix(n, n, rng);
    const auto s = eig_general(a);
    for (std::size_t k = 0; k < s.eigenvalues.size(); ++k) CHECK(residual(a, s, k) <= 1e-8 * a.norm());
    std::vector<Complex> conj;
    for (const auto& z : s.eigenvalues) conj.push_back(std::conj(z));
    CHECK(test::multiset_distance(s.eigenvalues, conj) < 1e-8);
    for (std::size_t k = 1; k < s.eigenvalues.size(); ++k) {
      CHECK(std::abs(s.eigenvalues[k]) <= std::abs(s.eigenvalues[k - 1]) * (1 + 1e-9) + 1e-12);
    }
  }
}

TEST_CASE("pinv: examples") {
  RealMatrix d(2, 2);
  d << 2, 0, 0, 4;
  RealMatrix d_inv(2, 2);
  d_inv << 0.5, 0, 0, 0.25;
  CHECK((pinv(d) - d_inv).norm() < 1e-15);

  const RealMatrix z = pinv(RealMatrix::Zero(3, 2));
  CHECK(z.rows() == 2);
  CHECK(z.cols() == 3);
  CHECK(z.norm() == 0.0);

  const RealMatrix ones = RealMatrix::Ones(2, 2);
  const RealMatrix p = pinv(ones);
  CHECK((p - RealMatrix::Constant(2, 2, 0.25)).norm() < 1e-15);
  // Substitution into the four conditions.
  CHECK((ones * p * ones - ones).norm() < 1e-14);
  CHECK((p * ones * p - p).norm() < 1e-14);
  CHECK((ones * p - (ones * p).transpose()).norm() < 1e-14);
  CHECK((p * ones - (p * ones).transpose()).norm() < 1e-14);
}

TEST_CASE("pinv: Moore-Penrose conditions across ranks") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = 1 + static_cast<int>(rng() % 9);
    const int n = 1 + static_cast<int>(rng() % 9);
    const int r = static_cast<int>(rng() % (std::min(m, n) + 1));
    const RealMatrix a = random_rank(m, n, r, rng);
    const RealMatrix p = pinv(a);
    const double sa = std::max(1.0, a.norm());
    const double sp = std::max(1.0, p.norm());
    CHECK((a * p * a - a).norm() <= 1e-8 * sa);
    CHECK((p * a * p - p).norm() <= 1e-8 * sp);
    CHECK(((a * p) - (a * p).transpose()).norm() <= 1e-8 * sa * sp);
    CHECK(((p * a) - (p * a).transpose()).norm() <= 1e-8 * sa * sp);
    CHECK(numerical_rank(a) == static_cast<std::size_t>(r));
  }
}

TEST_CASE("numerical_rank: examples and transpose symmetry") {
  CHECK(numerical_rank(RealMatrix::Identity(5, 5)) == 5);
  CHECK(numerical_rank(RealMatrix::Zero(3, 4)) == 0);
  Rng rng(2);
  const RealMatrix u = random_matrix(6, 1, rng);
  const RealMatrix v = random_matrix(1, 4, rng);
  CHECK(numerical_rank(u * v) == 1);
  for (int trial = 0; trial < 100; ++trial) {
    const RealMatrix a = random_rank(7, 5, static_cast<int>(rng() % 6), rng);
    CHECK(numerical_rank(a) == numerical_rank(RealMatrix(a.transpose())));
  }
}

TEST_CASE("condition number and operator norm") {
  RealMatrix d(2, 2);
  d << 3, 0, 0, -0.5;
  CHECK(operator_norm(d) == doctest::Approx(3.0));
  CHECK(condition_number(d) == doctest::Approx(6.0));
  CHECK(std::isinf(condition_number(RealMatrix::Zero(2, 2))));
}

TEST_CASE("pca: line through the origin") {
  RealVector dir(3);
  dir << 1, -3, 2;
  dir.normalize();
  std::vector<RealVector> samples;
  for (int i = -5; i <= 5; ++i) samples.push_back(0.3 * i * dir);
  const RealMatrix basis = pca(samples, 0.99);
  REQUIRE(basis.cols() == 1);
  // Sign convention: largest-magnitude entry positive, so basis = -dir here.
  CHECK((basis.col(0) + dir).norm() < 1e-12);
}

TEST_CASE("pca: isotropic cloud keeps both directions at threshold one") {
  Rng rng(3);
  std::normal_distribution<double> normal;
  std::vector<RealVector> samples;
  for (int i = 0; i < 500; ++i) samples.push_back(RealVector{{normal(rng), normal(rng)}});
  // Oracle: closed-form eigenvalues of the 2x2 sample covariance.
  RealVector mean = RealVector::Zero(2);
  for (const auto& x : samples) mean += x;
  mean /= samples.size();
  double sxx = 0, syy = 0, sxy = 0;
  for (const auto& x : samples) {
    sxx += (x(0) - mean(0)) * (x(0) - mean(0));
    syy += (x(1) - mean(1)) * (x(1) - mean(1));
    sxy += (x(0) - mean(0)) * (x(1) - mean(1));
  }
  const double tr = sxx + syy;
  const double disc = std::sqrt((sxx - syy) * (sxx - syy) + 4 * sxy * sxy);
  const double l1 = 0.5 * (tr + disc);
  REQUIRE(l1 / tr < 0.99);  // a single direction cannot reach the threshold
  const RealMatrix basis = pca(samples, 1.0);
  CHECK(basis.cols() == 2);
  CHECK((basis.transpose() * basis - RealMatrix::Identity(2, 2)).norm() < 1e-10);
}

TEST_CASE("pca: identical samples give an empty basis") {
  std::vector<RealVector> samples(5, RealVector::Ones(4));
  const RealMatrix basis = pca(samples, 0.9);
  CHECK(basis.rows() == 4);
  CHECK(basis.cols() == 0);
}

TEST_CASE("wrap_angle stays in [-pi, pi)") {
  CHECK(wrap_angle(std::numbers::pi) == doctest::Approx(-std::numbers::pi));
  CHECK(wrap_angle(-std::numbers::pi) == doctest::Approx(-std::numbers::pi));
  CHECK(wrap_angle(3 * std::numbers::pi / 2) == doctest::Approx(-std::numbers::pi / 2));
  CHECK(wrap_angle(0.25) == doctest::Approx(0.25));
}
