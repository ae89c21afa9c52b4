#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "atelab/asymptotics.hpp"
#include "atelab/core_model.hpp"

namespace atelab {

// Covariate law for the three iid coordinates (instrument, confounder,
// outcome predictor).  FiniteSupport3 (uniform on {-1,0,1}^3) exists for the
// finite-support estimators, which continuous draws cannot exercise.
enum class CovariateDist { UniformMinus1To1, StandardNormal, FiniteSupport3 };

enum class NoiseDist { Gaussian };

// Simulation design: potential outcomes linear in X with slope vectors
//   c1 = (0, 0, 1),  c0(theta) = (0, sin theta, cos theta),
// treatment assignment logistic with coefficients gamma = (t, t, 0) and the
// given intercept.  gamma_override replaces (t, t, 0) for designs that need a
// different propensity (e.g. an inert instrument), leaving everything else
// unchanged.
struct DgpConfig {
  CovariateDist covariate_dist = CovariateDist::UniformMinus1To1;
  double a0 = 0.0, a1 = 0.0;                 // arm intercepts
  std::array<double, 3> c1{0.0, 0.0, 1.0};   // treated slope vector
  double theta = 0.0;                        // control slope angle
  double t = 1.0;                            // propensity strength
  double logit_intercept = 1.0;
  double sigma_t = 1.0, sigma_c = 1.0;       // noise standard deviations
  NoiseDist noise_dist = NoiseDist::Gaussian;
  std::optional<std::array<double, 3>> gamma_override;
};

std::array<double, 3> dgp_c0(const DgpConfig& config);     // (0, sin, cos)
std::array<double, 3> dgp_gamma(const DgpConfig& config);  // (t, t, 0) or override
double dgp_true_ate(const DgpConfig& config);              // a1 - a0 (mean-zero X)

// Analytic population induced by the design, with mean caches precomputed
// (cache stream derived from `seed`).
PopulationModel make_population_model(const DgpConfig& config,
                                      std::uint64_t cache_draws, std::uint64_t seed);

// Draws n units: X iid per coordinate, D ~ Bernoulli(p(X)), both potential
// outcomes with independent Gaussian noise, Y the realized one.  Returns the
// sample together with the true propensity function.  One unit consumes, in
// order: 3 coordinate draws, 1 uniform for D, 2 normals for the noises.
std::pair<Sample, PropensityFunction> generate_sample(const DgpConfig& config,
                                                      std::size_t n,
                                                      std::uint64_t seed);

// Variance-reduction ratio at one angle:
//   R(theta, t) = lm_gain / (asyvar_ipw_known - efficiency_bound),
// with all three moments evaluated on the induced population model.  Throws
// DegenerateDenominator when the denominator is within 3 combined standard
// errors of zero.
struct RThetaPoint {
  double theta = 0.0;
  double r = 0.0;
  double std_error = 0.0;
  MomentEstimate gain, asyvar_ipw, bound;
};

RThetaPoint r_theta_detail(const DgpConfig& config, std::uint64_t draws,
                           std::uint64_t seed);
double r_theta_asymptotic(const DgpConfig& config, std::uint64_t draws,
                          std::uint64_t seed);

enum class RMethod { Asymptotic, FiniteSample };

struct RCurve {
  double t = 0.0;
  std::vector<double> thetas;
  std::vector<double> r_values;   // NaN at excluded grid points
  std::vector<double> std_errors;
  std::vector<std::size_t> excluded_points;  // degenerate-denominator indices
  double r_average = 0.0;         // mean over included points
  double r_average_se = 0.0;
  RMethod method = RMethod::Asymptotic;
};

// R(theta, t) over a uniform theta grid on [0, 2pi) plus its average
// (periodic rectangle rule, equal to the trapezoid rule on this grid).
RCurve r_average(const DgpConfig& config_without_theta, double t,
                 int theta_grid_size, std::uint64_t draws, std::uint64_t seed);

// Finite-sample cross-check of the same ratio from replication variances:
//   (n var_ipw - n var_lm) / (n var_ipw - bound).
RCurve r_curve_finite_sample(const DgpConfig& config_without_theta, double t,
                             int theta_grid_size, std::size_t n, std::size_t reps,
                             std::uint64_t bound_draws, std::uint64_t seed);

struct ReplicationResult {
  std::string estimator_name;
  std::size_t n = 0;
  std::vector<double> estimates;  // successes, in replication order
  std::uint64_t seed_base = 0;
  std::size_t failure_count = 0;
  std::vector<std::size_t> failed_reps;  // replication indices that failed
  std::string first_failure;

  double mean() const;
  double variance() const;  // unbiased, over successes
};

// Runs each named estimator on `reps` independently generated samples.
// Replication r uses its own derived stream; numerical failures inside one
// replication are recorded and skipped, never aborting the sweep.
std::vector<ReplicationResult> run_replications(
    const DgpConfig& config, const std::vector<std::string>& estimator_names,
    std::size_t n, std::size_t reps, std::uint64_t seed);

// Ratio of n * replication variance to the matching asymptotic variance
// (ipw_known -> asyvar_ipw_known, lm -> asyvar_ipw_known - lm_gain,
// imputation_known -> asyvar_imp_known); approaches 1 as n grows.
struct VarianceCheck {
  std::string estimator_name;
  double ratio = 0.0;
  double replication_variance = 0.0;
  double n_times_variance = 0.0;
  double asymptotic_variance = 0.0;
  double asymptotic_se = 0.0;
  std::size_t n = 0, reps = 0, failures = 0;
};

VarianceCheck finite_sample_variance_check(const DgpConfig& config,
                                           const std::string& estimator_name,
                                           std::size_t n, std::size_t reps,
                                           std::uint64_t seed,
                                           std::uint64_t asymptotic_draws = 1000000);

}  // namespace atelab
