#include "atelab/quadrature.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace atelab {

namespace {

// Golub-Welsch: nodes are eigenvalues of the symmetric tridiagonal Jacobi
// matrix of the orthogonal-polynomial recurrence; weight_i = mu0 * q_i(0)^2
// with q the normalized eigenvector.
GaussRule golub_welsch(const std::vector<double>& offdiag, double mu0) {
  const int n = static_cast<int>(offdiag.size()) + 1;
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k + 1 < n; ++k) {
    jacobi(k, k + 1) = offdiag[static_cast<std::size_t>(k)];
    jacobi(k + 1, k) = offdiag[static_cast<std::size_t>(k)];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("quadrature: Jacobi eigendecomposition failed");
  GaussRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    rule.nodes[static_cast<std::size_t>(i)] = solver.eigenvalues()(i);
    const double q0 = solver.eigenvectors()(0, i);
    rule.weights[static_cast<std::size_t>(i)] = mu0 * q0 * q0;
  }
  return rule;
}

}  // namespace

GaussRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
  // Legendre recurrence: b_k = k / sqrt(4k^2 - 1); total mass mu0 = 2.
  std::vector<double> offdiag;
  for (int k = 1; k < n; ++k)
    offdiag.push_back(k / std::sqrt(4.0 * k * k - 1.0));
  return golub_welsch(offdiag, 2.0);
}

GaussRule gauss_hermite_standard_normal(int n) {
  if (n < 1)
    throw std::invalid_argument("gauss_hermite_standard_normal: order must be >= 1");
  // Physicists' Hermite recurrence: b_k = sqrt(k / 2); total mass sqrt(pi).
  std::vector<double> offdiag;
  for (int k = 1; k < n; ++k) offdiag.push_back(std::sqrt(k / 2.0));
  GaussRule rule = golub_welsch(offdiag, std::sqrt(M_PI));
  // E[f(Z)] = (1/sqrt(pi)) sum w_i f(sqrt(2) x_i) for Z ~ N(0,1).
  const double inv_sqrt_pi = 1.0 / std::sqrt(M_PI);
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    rule.nodes[i] *= std::sqrt(2.0);
    rule.weights[i] *= inv_sqrt_pi;
  }
  return rule;
}

}  // namespace atelab
