#pragma once

#include <vector>

namespace atelab {

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Legendre rule on [-1, 1] with weight function 1 (weights sum to 2).
// Exact for polynomials of degree <= 2n - 1.
GaussRule gauss_legendre(int n);

// Rule such that sum_i w_i f(x_i) approximates E[f(Z)] for Z ~ N(0, 1)
// (Gauss-Hermite nodes rescaled by sqrt(2), weights normalized to 1).
// Exact for polynomials of degree <= 2n - 1.
GaussRule gauss_hermite_standard_normal(int n);

}  // namespace atelab
