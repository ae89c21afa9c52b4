#include "atelab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "atelab/errors.hpp"
#include "atelab/estimators.hpp"

namespace atelab {

namespace {

// Stream keys local to this module (the asymptotics module keys its own
// substreams per moment operation, so sharing one seed across operations is
// already collision-free).
constexpr std::uint64_t kStreamThetaGrid = 1000;
constexpr std::uint64_t kStreamReplications = 3000;

constexpr double kPi = 3.14159265358979323846;

CoordinateMarginal marginal_for(CovariateDist dist) {
  CoordinateMarginal marginal;
  switch (dist) {
    case CovariateDist::UniformMinus1To1:
      marginal.kind = CoordinateMarginal::Kind::UniformMinus1To1;
      break;
    case CovariateDist::StandardNormal:
      marginal.kind = CoordinateMarginal::Kind::StandardNormal;
      break;
    case CovariateDist::FiniteSupport3:
      marginal.kind = CoordinateMarginal::Kind::FiniteUniform;
      marginal.support = {-1.0, 0.0, 1.0};
      break;
  }
  return marginal;
}

double logistic(double eta) { return 1.0 / (1.0 + std::exp(-eta)); }

double dot3(const std::array<double, 3>& a, const std::vector<double>& x) {
  return a[0] * x[0] + a[1] * x[1] + a[2] * x[2];
}

}  // namespace

std::array<double, 3> dgp_c0(const DgpConfig& config) {
  return {0.0, std::sin(config.theta), std::cos(config.theta)};
}

std::array<double, 3> dgp_gamma(const DgpConfig& config) {
  if (config.gamma_override) return *config.gamma_override;
  return {config.t, config.t, 0.0};
}

double dgp_true_ate(const DgpConfig& config) {
  // Every supported coordinate law has mean zero, so E[c.X] = 0 per arm.
  return config.a1 - config.a0;
}

PopulationModel make_population_model(const DgpConfig& config,
                                      std::uint64_t cache_draws, std::uint64_t seed) {
  const std::array<double, 3> c0 = dgp_c0(config);
  const std::array<double, 3> c1 = config.c1;
  const std::array<double, 3> gamma = dgp_gamma(config);
  const double intercept = config.logit_intercept;
  const double var_treated = config.sigma_t * config.sigma_t;
  const double var_control = config.sigma_c * config.sigma_c;
  const double a0 = config.a0, a1 = config.a1;
  const CoordinateMarginal marginal = marginal_for(config.covariate_dist);

  PopulationModel model;
  model.dim = 3;
  model.sample_x = [marginal](Rng& rng, std::vector<double>& x) {
    x[0] = marginal.draw(rng);
    x[1] = marginal.draw(rng);
    x[2] = marginal.draw(rng);
  };
  model.p = [gamma, intercept](const std::vector<double>& x) {
    return logistic(dot3(gamma, x) + intercept);
  };
  model.beta_t = [a1, c1](const std::vector<double>& x) { return a1 + dot3(c1, x); };
  model.beta_c = [a0, c0](const std::vector<double>& x) { return a0 + dot3(c0, x); };
  model.var_t = [var_treated](const std::vector<double>&) { return var_treated; };
  model.var_c = [var_control](const std::vector<double>&) { return var_control; };
  model.coordinate_marginals = std::vector<CoordinateMarginal>(3, marginal);
  cache_population_means(model, cache_draws, seed);
  return model;
}

std::pair<Sample, PropensityFunction> generate_sample(const DgpConfig& config,
                                                      std::size_t n,
                                                      std::uint64_t seed) {
  if (n < 2) throw ValidationError("generate_sample: n must be >= 2");
  const std::array<double, 3> c0 = dgp_c0(config);
  const std::array<double, 3> c1 = config.c1;
  const std::array<double, 3> gamma = dgp_gamma(config);
  const double intercept = config.logit_intercept;
  const CoordinateMarginal marginal = marginal_for(config.covariate_dist);

  Rng rng(seed);
  Sample sample;
  sample.units.reserve(n);
  std::vector<double> x(3);
  for (std::size_t i = 0; i < n; ++i) {
    Unit u;
    x[0] = marginal.draw(rng);
    x[1] = marginal.draw(rng);
    x[2] = marginal.draw(rng);
    const double p = logistic(dot3(gamma, x) + intercept);
    u.d = rng.bernoulli(p) ? 1 : 0;
    const double y_treated = config.a1 + dot3(c1, x) + config.sigma_t * rng.normal();
    const double y_control = config.a0 + dot3(c0, x) + config.sigma_c * rng.normal();
    u.y = u.d == 1 ? y_treated : y_control;
    u.x.values = x;
    u.x.roles = std::vector<CovariateRole>{CovariateRole::Instrument,
                                           CovariateRole::Confounder,
                                           CovariateRole::OutcomePredictor};
    sample.units.push_back(std::move(u));
  }

  PropensityFunction ps;
  ps.eval = [gamma, intercept](const CovariateVector& x_obs) {
    return logistic(gamma[0] * x_obs.values[0] + gamma[1] * x_obs.values[1] +
                    gamma[2] * x_obs.values[2] + intercept);
  };
  return {std::move(sample), std::move(ps)};
}

RThetaPoint r_theta_detail(const DgpConfig& config, std::uint64_t draws,
                           std::uint64_t seed) {
  PopulationModel model = make_population_model(config, draws, seed);
  RThetaPoint point;
  point.theta = config.theta;
  point.gain = lm_gain(model, draws, seed);
  point.asyvar_ipw = asyvar_ipw_known(model, draws, seed);
  point.bound = efficiency_bound(model, draws, seed);
  const double denom = point.asyvar_ipw.value - point.bound.value;
  const double denom_se = std::sqrt(point.asyvar_ipw.std_error * point.asyvar_ipw.std_error +
                                    point.bound.std_error * point.bound.std_error);
  if (denom <= 3.0 * denom_se)
    throw DegenerateDenominator(
        "weighting-over-bound excess is statistically indistinguishable from zero");
  point.r = point.gain.value / denom;
  point.std_error = std::sqrt(
      std::pow(point.gain.std_error / denom, 2) +
      std::pow(point.gain.value * denom_se / (denom * denom), 2));
  return point;
}

double r_theta_asymptotic(const DgpConfig& config, std::uint64_t draws,
                          std::uint64_t seed) {
  return r_theta_detail(config, draws, seed).r;
}

RCurve r_average(const DgpConfig& config_without_theta, double t,
                 int theta_grid_size, std::uint64_t draws, std::uint64_t seed) {
  if (theta_grid_size < 8)
    throw ValidationError("r_average: theta grid must have at least 8 points");
  RCurve curve;
  curve.t = t;
  curve.method = RMethod::Asymptotic;
  double sum = 0.0, se2_sum = 0.0;
  std::size_t included = 0;
  for (int j = 0; j < theta_grid_size; ++j) {
    DgpConfig config = config_without_theta;
    config.t = t;
    config.theta = 2.0 * kPi * j / theta_grid_size;
    curve.thetas.push_back(config.theta);
    try {
      const RThetaPoint point = r_theta_detail(
          config, draws, derive_stream(seed, kStreamThetaGrid + static_cast<std::uint64_t>(j)));
      curve.r_values.push_back(point.r);
      curve.std_errors.push_back(point.std_error);
      sum += point.r;
      se2_sum += point.std_error * point.std_error;
      ++included;
    } catch (const DegenerateDenominator&) {
      curve.r_values.push_back(std::numeric_limits<double>::quiet_NaN());
      curve.std_errors.push_back(std::numeric_limits<double>::quiet_NaN());
      curve.excluded_points.push_back(static_cast<std::size_t>(j));
    }
  }
  if (included == 0)
    throw DegenerateDenominator("r_average: every theta grid point was degenerate");
  curve.r_average = sum / static_cast<double>(included);
  curve.r_average_se = std::sqrt(se2_sum) / static_cast<double>(included);
  return curve;
}

double ReplicationResult::mean() const {
  double s = 0.0;
  for (double v : estimates) s += v;
  return estimates.empty() ? 0.0 : s / static_cast<double>(estimates.size());
}

double ReplicationResult::variance() const {
  if (estimates.size() < 2) return 0.0;
  const double m = mean();
  double s = 0.0;
  for (double v : estimates) s += (v - m) * (v - m);
  return s / static_cast<double>(estimates.size() - 1);
}

std::vector<ReplicationResult> run_replications(
    const DgpConfig& config, const std::vector<std::string>& estimator_names,
    std::size_t n, std::size_t reps, std::uint64_t seed) {
  if (reps < 2) throw ValidationError("run_replications: reps must be >= 2");
  static const std::vector<std::string> known = {
      "ipw_known", "ipw_estimated", "imputation_known",
      "imputation_estimated", "kps", "lm"};
  for (const auto& name : estimator_names)
    if (std::find(known.begin(), known.end(), name) == known.end())
      throw ValidationError("unknown estimator '" + name + "'");

  const std::uint64_t rep_base = derive_stream(seed, kStreamReplications);
  std::vector<ReplicationResult> results(estimator_names.size());
  for (std::size_t e = 0; e < estimator_names.size(); ++e) {
    results[e].estimator_name = estimator_names[e];
    results[e].n = n;
    results[e].seed_base = rep_base;
  }
  for (std::size_t r = 0; r < reps; ++r) {
    const auto [sample, ps] = generate_sample(config, n, derive_stream(rep_base, r));
    for (std::size_t e = 0; e < estimator_names.size(); ++e) {
      try {
        results[e].estimates.push_back(
            run_estimator(estimator_names[e], sample, ps).estimate);
      } catch (const NumericalError& err) {
        ++results[e].failure_count;
        results[e].failed_reps.push_back(r);
        if (results[e].first_failure.empty()) results[e].first_failure = err.what();
      }
    }
  }
  return results;
}

VarianceCheck finite_sample_variance_check(const DgpConfig& config,
                                           const std::string& estimator_name,
                                           std::size_t n, std::size_t reps,
                                           std::uint64_t seed,
                                           std::uint64_t asymptotic_draws) {
  double asym = 0.0, asym_se = 0.0;
  PopulationModel model = make_population_model(config, asymptotic_draws, seed);
  if (estimator_name == "ipw_known") {
    const MomentEstimate v = asyvar_ipw_known(model, asymptotic_draws, seed);
    asym = v.value;
    asym_se = v.std_error;
  } else if (estimator_name == "lm") {
    const MomentEstimate v = asyvar_ipw_known(model, asymptotic_draws, seed);
    const MomentEstimate g = lm_gain(model, asymptotic_draws, seed);
    asym = v.value - g.value;
    asym_se = std::sqrt(v.std_error * v.std_error + g.std_error * g.std_error);
  } else if (estimator_name == "imputation_known") {
    const MomentEstimate v = asyvar_imp_known(model, asymptotic_draws, seed);
    asym = v.value;
    asym_se = v.std_error;
  } else {
    throw ValidationError(
        "finite_sample_variance_check supports ipw_known, lm, imputation_known");
  }
  if (!(asym > 0.0))
    throw DegenerateDenominator("asymptotic variance is not positive");

  const auto results = run_replications(config, {estimator_name}, n, reps, seed);
  const ReplicationResult& rep = results.front();
  if (rep.estimates.size() < 2)
    throw DegenerateDesign("too few successful replications to form a variance");

  VarianceCheck check;
  check.estimator_name = estimator_name;
  check.replication_variance = rep.variance();
  check.n_times_variance = static_cast<double>(n) * check.replication_variance;
  check.asymptotic_variance = asym;
  check.asymptotic_se = asym_se;
  check.ratio = check.n_times_variance / asym;
  check.n = n;
  check.reps = reps;
  check.failures = rep.failure_count;
  return check;
}

RCurve r_curve_finite_sample(const DgpConfig& config_without_theta, double t,
                             int theta_grid_size, std::size_t n, std::size_t reps,
                             std::uint64_t bound_draws, std::uint64_t seed) {
  if (theta_grid_size < 1)
    throw ValidationError("r_curve_finite_sample: grid must have at least 1 point");
  RCurve curve;
  curve.t = t;
  curve.method = RMethod::FiniteSample;
  double sum = 0.0, se2_sum = 0.0;
  std::size_t included = 0;
  for (int j = 0; j < theta_grid_size; ++j) {
    DgpConfig config = config_without_theta;
    config.t = t;
    config.theta = 2.0 * kPi * j / theta_grid_size;
    curve.thetas.push_back(config.theta);
    const std::uint64_t point_seed =
        derive_stream(seed, kStreamThetaGrid + static_cast<std::uint64_t>(j));
    PopulationModel model = make_population_model(config, bound_draws, point_seed);
    const MomentEstimate bound = efficiency_bound(model, bound_draws, point_seed);
    const auto results =
        run_replications(config, {"ipw_known", "lm"}, n, reps, point_seed);
    const double var_ipw = results[0].variance();
    const double var_lm = results[1].variance();
    const double nd = static_cast<double>(n);
    const double denom = nd * var_ipw - bound.value;
    // Spread of a replication variance: var * sqrt(2 / (reps - 1)) under
    // approximate normality of the estimates.
    const double m = static_cast<double>(std::min(results[0].estimates.size(),
                                                  results[1].estimates.size()));
    const double rel = std::sqrt(2.0 / std::max(1.0, m - 1.0));
    const double denom_se = std::hypot(nd * var_ipw * rel, bound.std_error);
    if (denom <= 3.0 * denom_se) {
      curve.r_values.push_back(std::numeric_limits<double>::quiet_NaN());
      curve.std_errors.push_back(std::numeric_limits<double>::quiet_NaN());
      curve.excluded_points.push_back(static_cast<std::size_t>(j));
      continue;
    }
    const double numer = nd * (var_ipw - var_lm);
    const double numer_se = nd * rel * std::hypot(var_ipw, var_lm);
    const double r = numer / denom;
    curve.r_values.push_back(r);
    const double se = std::sqrt(std::pow(numer_se / denom, 2) +
                                std::pow(numer * denom_se / (denom * denom), 2));
    curve.std_errors.push_back(se);
    sum += r;
    se2_sum += se * se;
    ++included;
  }
  if (included == 0)
    throw DegenerateDenominator("r_curve_finite_sample: every grid point was degenerate");
  curve.r_average = sum / static_cast<double>(included);
  curve.r_average_se = std::sqrt(se2_sum) / static_cast<double>(included);
  return curve;
}

}  // namespace atelab
