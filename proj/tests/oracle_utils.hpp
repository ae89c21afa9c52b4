// Independent oracles for the test suite.  Everything here is deliberately
// implemented with different algorithms than the library under test:
// Gaussian elimination instead of eigendecomposition, Newton iteration on the
// three-term recurrence instead of the Golub-Welsch eigenproblem, closed-form
// moments instead of quadrature.
#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace oracle {

// Solve A x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> solve(std::vector<std::vector<double>> a,
                                 std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
    if (std::fabs(a[pivot][col]) < 1e-300)
      throw std::runtime_error("oracle::solve: singular matrix");
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
    x[i] = s / a[i][i];
  }
  return x;
}

// Legendre polynomial P_n(x) and its derivative via the three-term
// recurrence (k+1) P_{k+1} = (2k+1) x P_k - k P_{k-1}.
inline std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0, p1 = x;
  if (n == 0) return {1.0, 0.0};
  for (int k = 1; k < n; ++k) {
    const double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
    p0 = p1;
    p1 = p2;
  }
  const double deriv = n * (x * p1 - p0) / (x * x - 1.0);
  return {p1, deriv};
}

struct NodesWeights {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration from the
// Chebyshev initial guess; weights w = 2 / ((1 - x^2) P_n'(x)^2).
inline NodesWeights legendre_rule(int n) {
  NodesWeights out;
  out.nodes.resize(n);
  out.weights.resize(n);
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < n; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, dp] = legendre(n, x);
      const double step = p / dp;
      x -= step;
      if (std::fabs(step) < 1e-15) break;
    }
    const auto [p, dp] = legendre(n, x);
    (void)p;
    out.nodes[i] = x;
    out.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return out;
}

// E[Z^k] for Z ~ N(0,1): (k-1)!! for even k, 0 for odd k.
inline double standard_normal_moment(int k) {
  if (k % 2 == 1) return 0.0;
  double m = 1.0;
  for (int j = k - 1; j >= 2; j -= 2) m *= j;
  return m;
}

// E[U^k] for U ~ Uniform[-1, 1]: 1/(k+1) for even k, 0 for odd k.
inline double uniform_pm1_moment(int k) {
  return (k % 2 == 1) ? 0.0 : 1.0 / (k + 1.0);
}

}  // namespace oracle
