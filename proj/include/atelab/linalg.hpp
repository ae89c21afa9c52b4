#pragma once

#include <Eigen/Dense>

namespace atelab {

// Minimum-norm solution of A x = b for symmetric PSD A via eigendecomposition
// pseudo-inverse: directions with eigenvalue <= rel_cutoff * max-eigenvalue
// contribute zero.  A zero (or negative-semidefinite) matrix yields x = 0.
Eigen::VectorXd pinv_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                           double rel_cutoff = 1e-10);

}  // namespace atelab
