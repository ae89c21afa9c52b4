#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "atelab/quadrature.hpp"
#include "atelab/rng.hpp"

namespace atelab {

// Monte Carlo moment with its standard error (std_error ~ draws^{-1/2}).
struct MomentEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::uint64_t draws = 0;
};

// Marginal law of one covariate coordinate, for models whose coordinates are
// independent.  Supplies sampling, the coordinate mean, and a fixed-node
// expectation rule (weights summing to 1) used to integrate the coordinate out.
struct CoordinateMarginal {
  enum class Kind { UniformMinus1To1, StandardNormal, FiniteUniform };
  Kind kind = Kind::UniformMinus1To1;
  std::vector<double> support;  // FiniteUniform only

  double draw(Rng& rng) const;
  double mean() const;
  // E[f(coord)] = sum_i weights[i] * f(nodes[i]); exact for FiniteUniform,
  // Gauss rules of the requested order otherwise.
  GaussRule expectation_rule(int order) const;
};

// Analytic population: covariate sampler, propensity, per-arm conditional
// means beta_T(x), beta_C(x) and variances sigma_T^2(x), sigma_C^2(x), plus
// Monte Carlo caches of the population means (computed once, from their own
// stream, by cache_population_means).
struct PopulationModel {
  int dim = 0;
  std::function<void(Rng&, std::vector<double>&)> sample_x;  // fills dim values
  std::function<double(const std::vector<double>&)> p;
  std::function<double(const std::vector<double>&)> beta_t;
  std::function<double(const std::vector<double>&)> beta_c;
  std::function<double(const std::vector<double>&)> var_t;
  std::function<double(const std::vector<double>&)> var_c;
  // Present iff the coordinates are independent (required by marginalize).
  std::optional<std::vector<CoordinateMarginal>> coordinate_marginals;

  // Cached population means; cache_draws == 0 means "not yet cached".
  MomentEstimate beta_t_bar, beta_c_bar, beta;
  std::vector<double> mean_x, mean_x_se;
  double cov_beta_bars = 0.0;  // sampling covariance of the two mean caches
  std::uint64_t cache_draws = 0;
};

// Populates the model's mean caches by one Monte Carlo pass on a stream
// derived from `seed`.  Every moment operation below requires this.
void cache_population_means(PopulationModel& model, std::uint64_t draws,
                            std::uint64_t seed);

// Semi-parametric efficiency bound
//   E[ sigma_T^2(X)/p(X) + sigma_C^2(X)/(1-p(X)) + (beta(X) - beta)^2 ].
MomentEstimate efficiency_bound(const PopulationModel& model, std::uint64_t draws,
                                std::uint64_t seed);

// Asymptotic variance of the known-propensity imputation estimator:
//   E[ (sigma_T^2(X)+beta_T(X)^2)/p(X) + (sigma_C^2(X)+beta_C(X)^2)/(1-p(X)) ] - beta^2.
MomentEstimate asyvar_imp_known(const PopulationModel& model, std::uint64_t draws,
                                std::uint64_t seed);

// Asymptotic variance of the known-propensity weighting estimator:
//   E[ (sigma_T^2(X)+(beta_T(X)-beta_T)^2)/p(X)
//      + (sigma_C^2(X)+(beta_C(X)-beta_C)^2)/(1-p(X)) ].
MomentEstimate asyvar_ipw_known(const PopulationModel& model, std::uint64_t draws,
                                std::uint64_t seed);

// Variance removed by the linear modification: b^T A^{-1} b with
//   A = E[(X-EX)(X-EX)^T / (p(X)(1-p(X)))]
//   b = E[(X-EX)((beta_T(X)-beta_T)/p(X) + (beta_C(X)-beta_C)/(1-p(X)))],
// solved by the same eigendecomposition pseudo-inverse as the estimator.
// Standard error via block means with a delta-method linearization, plus the
// propagated uncertainty of the cached means.
MomentEstimate lm_gain(const PopulationModel& model, std::uint64_t draws,
                       std::uint64_t seed);

// Model over a subset of coordinates: p', beta', var' obtained by integrating
// the dropped coordinates out with fixed-node rules (law of total variance
// for var').  Mean caches carry over (population means are projection-
// invariant; the covariate cache is subset).  Requires independent
// coordinates; throws UnsupportedModel otherwise.
struct CovariateProjection {
  std::vector<int> kept_indices;
  PopulationModel model;
};

CovariateProjection marginalize(const PopulationModel& model,
                                const std::vector<int>& kept_indices,
                                int quadrature_nodes = 64);

// Which covariates a comparison set keeps, for the three-coordinate
// (instrument, confounder, outcome-predictor) layout.
enum class CovariateSet {
  Full = 0,                 // (I, U, C)
  DropOutcomePredictor = 1, // (I, U)
  DropInstrument = 2,       // (U, C)
};

struct ComparisonFlag {
  std::string name;
  double difference = 0.0;  // reduced-set value minus full-set value
  double tolerance = 0.0;   // 3 * combined MC standard error
  bool pass = false;
};

// Bound and known-propensity variances under the full covariate set and the
// two reduced sets, with directional/equality flags:
//   dropping C: bound never shrinks; imp/ipw variances unchanged
//   dropping I: bound, imp and ipw variances never grow.
struct CovariateSetComparison {
  std::array<MomentEstimate, 3> bound;      // indexed by CovariateSet
  std::array<MomentEstimate, 3> asyvar_imp;
  std::array<MomentEstimate, 3> asyvar_ipw;
  std::vector<ComparisonFlag> flags;

  bool all_pass() const {
    for (const auto& f : flags)
      if (!f.pass) return false;
    return true;
  }
};

CovariateSetComparison compare_covariate_sets(const PopulationModel& model,
                                              std::uint64_t draws, std::uint64_t seed);

}  // namespace atelab
