#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "atelab/linalg.hpp"
#include "oracle_utils.hpp"

using atelab::pinv_solve;

TEST_CASE("matches Gaussian-elimination oracle on a well-conditioned SPD system") {
  Eigen::MatrixXd a(3, 3);
  a << 4.0, 1.0, 0.5,
       1.0, 3.0, -0.25,
       0.5, -0.25, 2.0;
  Eigen::VectorXd b(3);
  b << 1.0, -2.0, 0.75;
  const Eigen::VectorXd x = pinv_solve(a, b);
  const std::vector<double> ref = oracle::solve(
      {{4.0, 1.0, 0.5}, {1.0, 3.0, -0.25}, {0.5, -0.25, 2.0}}, {1.0, -2.0, 0.75});
  for (int i = 0; i < 3; ++i)
    CHECK(x[i] == doctest::Approx(ref[static_cast<std::size_t>(i)]).epsilon(1e-10));
}

TEST_CASE("singular direction contributes zero (minimum-norm solution)") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
  a(0, 0) = 1.0;
  Eigen::VectorXd b(2);
  b << 2.0, 3.0;
  const Eigen::VectorXd x = pinv_solve(a, b);
  CHECK(x[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(x[1] == doctest::Approx(0.0).scale(1).epsilon(1e-12));
}

TEST_CASE("zero matrix yields the zero vector") {
  const Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 3);
  Eigen::VectorXd b(3);
  b << 1.0, 2.0, 3.0;
  const Eigen::VectorXd x = pinv_solve(a, b);
  CHECK(x.norm() == 0.0);
}

TEST_CASE("residual is orthogonal to the range on a rank-deficient system") {
  // A = B B^T has rank 2 in 3 dimensions.
  Eigen::MatrixXd basis(3, 2);
  basis << 1.0, 0.5,
           -0.25, 2.0,
           0.75, -1.0;
  const Eigen::MatrixXd a = basis * basis.transpose();
  Eigen::VectorXd b(3);
  b << 1.0, 1.0, 1.0;
  const Eigen::VectorXd x = pinv_solve(a, b);
  const Eigen::VectorXd residual = b - a * x;
  // Orthogonality to range(A): A * residual vanishes (A symmetric).
  CHECK((a * residual).norm() < 1e-8);
}

TEST_CASE("tiny eigenvalues below the relative cutoff are treated as zero") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = 1e-14;  // below 1e-10 * max eigenvalue
  Eigen::VectorXd b(2);
  b << 1.0, 1.0;
  const Eigen::VectorXd x = pinv_solve(a, b);
  CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(x[1] == 0.0);
}
