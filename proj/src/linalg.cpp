#include "atelab/linalg.hpp"

#include <stdexcept>

namespace atelab {

Eigen::VectorXd pinv_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                           double rel_cutoff) {
  if (a.rows() != a.cols() || a.rows() != b.size())
    throw std::invalid_argument("pinv_solve: dimension mismatch");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("pinv_solve: eigendecomposition failed");
  const Eigen::VectorXd& lambda = solver.eigenvalues();
  const double lambda_max = lambda.maxCoeff();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
  if (lambda_max <= 0.0) return x;
  const double cutoff = rel_cutoff * lambda_max;
  for (int i = 0; i < lambda.size(); ++i) {
    if (lambda(i) > cutoff) {
      const Eigen::VectorXd v = solver.eigenvectors().col(i);
      x += v * (v.dot(b) / lambda(i));
    }
  }
  return x;
}

}  // namespace atelab
