#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "atelab/quadrature.hpp"
#include "oracle_utils.hpp"

using atelab::GaussRule;
using atelab::gauss_hermite_standard_normal;
using atelab::gauss_legendre;

namespace {
double apply(const GaussRule& rule, int power) {
  double s = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i)
    s += rule.weights[i] * std::pow(rule.nodes[i], power);
  return s;
}
}  // namespace

TEST_CASE("low-order Gauss-Legendre rules match closed forms") {
  const GaussRule r1 = gauss_legendre(1);
  REQUIRE(r1.nodes.size() == 1);
  CHECK(r1.nodes[0] == doctest::Approx(0.0).scale(1).epsilon(1e-15));
  CHECK(r1.weights[0] == doctest::Approx(2.0).epsilon(1e-15));

  const GaussRule r2 = gauss_legendre(2);
  const double inv_sqrt3 = 1.0 / std::sqrt(3.0);
  CHECK(std::min(r2.nodes[0], r2.nodes[1]) == doctest::Approx(-inv_sqrt3).epsilon(1e-14));
  CHECK(std::max(r2.nodes[0], r2.nodes[1]) == doctest::Approx(inv_sqrt3).epsilon(1e-14));
  CHECK(r2.weights[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(r2.weights[1] == doctest::Approx(1.0).epsilon(1e-14));

  const GaussRule r3 = gauss_legendre(3);
  std::vector<double> nodes = r3.nodes;
  std::sort(nodes.begin(), nodes.end());
  const double root = std::sqrt(3.0 / 5.0);
  CHECK(nodes[0] == doctest::Approx(-root).epsilon(1e-14));
  CHECK(nodes[1] == doctest::Approx(0.0).scale(1).epsilon(1e-14));
  CHECK(nodes[2] == doctest::Approx(root).epsilon(1e-14));
}

TEST_CASE("Gauss-Legendre nodes match an independent Newton-iteration oracle") {
  for (int n : {4, 8, 16, 32, 64}) {
    const GaussRule rule = gauss_legendre(n);
    oracle::NodesWeights ref = oracle::legendre_rule(n);
    std::vector<double> got_nodes = rule.nodes, got_w = rule.weights;
    // Sort both ascending by node for comparison.
    std::vector<std::size_t> order_got(got_nodes.size()), order_ref(ref.nodes.size());
    for (std::size_t i = 0; i < order_got.size(); ++i) order_got[i] = i;
    for (std::size_t i = 0; i < order_ref.size(); ++i) order_ref[i] = i;
    std::sort(order_got.begin(), order_got.end(),
              [&](std::size_t a, std::size_t b) { return got_nodes[a] < got_nodes[b]; });
    std::sort(order_ref.begin(), order_ref.end(),
              [&](std::size_t a, std::size_t b) { return ref.nodes[a] < ref.nodes[b]; });
    for (int i = 0; i < n; ++i) {
      CHECK(got_nodes[order_got[i]] ==
            doctest::Approx(ref.nodes[order_ref[i]]).scale(1).epsilon(1e-12));
      CHECK(got_w[order_got[i]] ==
            doctest::Approx(ref.weights[order_ref[i]]).scale(1).epsilon(1e-12));
    }
  }
}

TEST_CASE("Gauss-Legendre integrates monomials exactly up to degree 2n-1") {
  const GaussRule rule = gauss_legendre(16);
  double wsum = 0.0;
  for (double w : rule.weights) {
    CHECK(w > 0.0);
    wsum += w;
  }
  CHECK(wsum == doctest::Approx(2.0).epsilon(1e-14));
  for (int k = 0; k <= 31; ++k) {
    // Rule weights sum to 2, so divide by 2 for the mean over [-1, 1].
    const double got = apply(rule, k) / 2.0;
    CHECK(got == doctest::Approx(oracle::uniform_pm1_moment(k)).scale(1).epsilon(1e-13));
  }
}

TEST_CASE("standard-normal Gauss-Hermite rule: closed forms and moments") {
  const GaussRule r1 = gauss_hermite_standard_normal(1);
  CHECK(r1.nodes[0] == doctest::Approx(0.0).scale(1).epsilon(1e-14));
  CHECK(r1.weights[0] == doctest::Approx(1.0).epsilon(1e-14));

  const GaussRule r2 = gauss_hermite_standard_normal(2);
  CHECK(std::min(r2.nodes[0], r2.nodes[1]) == doctest::Approx(-1.0).epsilon(1e-13));
  CHECK(std::max(r2.nodes[0], r2.nodes[1]) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(r2.weights[0] == doctest::Approx(0.5).epsilon(1e-13));

  const GaussRule rule = gauss_hermite_standard_normal(20);
  double wsum = 0.0;
  for (double w : rule.weights) {
    CHECK(w > 0.0);
    wsum += w;
  }
  CHECK(wsum == doctest::Approx(1.0).epsilon(1e-13));
  for (int k = 0; k <= 38; ++k) {
    const double want = oracle::standard_normal_moment(k);
    const double got = apply(rule, k);
    // The terms being summed grow like the next even moment, so roundoff must
    // be judged at that scale (odd moments cancel exactly in real arithmetic
    // but only to relative roundoff in floating point).
    const double scale =
        std::max(1.0, oracle::standard_normal_moment(k % 2 == 0 ? k : k + 1));
    CHECK(std::fabs(got - want) <= 1e-9 * scale);
  }
}

TEST_CASE("node symmetry about zero") {
  for (int n : {5, 12}) {
    for (const GaussRule& rule : {gauss_legendre(n), gauss_hermite_standard_normal(n)}) {
      std::vector<double> nodes = rule.nodes;
      std::sort(nodes.begin(), nodes.end());
      for (int i = 0; i < n; ++i)
        CHECK(nodes[i] == doctest::Approx(-nodes[n - 1 - i]).scale(1).epsilon(1e-11));
    }
  }
}
