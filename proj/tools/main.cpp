// atelab: average-treatment-effect estimator lab.
//
// Subcommands: estimate, asymptotics, reproduce-tables, reproduce-curves,
// covariate-effects, replications.  All randomness flows from one 64-bit
// seed (default 20260816, overridable by ATE_LAB_SEED or --seed), so every
// subcommand is byte-deterministic in its outputs.
//
// Exit codes: 0 success; 1 validation/parse failure; 2 numerical failure.

#include <CLI11.hpp>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "atelab/asymptotics.hpp"
#include "atelab/core_model.hpp"
#include "atelab/errors.hpp"
#include "atelab/estimators.hpp"
#include "atelab/experiments.hpp"
#include "atelab/format.hpp"
#include "atelab/rng.hpp"
#include "atelab/sample_io.hpp"
#include "atelab/svg.hpp"

namespace fs = std::filesystem;
using namespace atelab;

namespace {

constexpr std::uint64_t kDefaultSeed = 20260816;

struct Options {
  std::uint64_t seed = kDefaultSeed;
  std::string output_dir = ".";
  // Design
  std::string dist = "uniform";
  double t = 1.0;
  double theta = 0.0;
  double a0 = 0.0, a1 = 0.0;
  double sigma_t = 1.0, sigma_c = 1.0;
  double logit_intercept = 1.0;
  std::vector<double> gamma;  // empty or 3 values replacing (t, t, 0)
  // Budgets
  std::uint64_t draws = 1000000;
  std::size_t reps = 2000;
  std::size_t n = 4000;
  int theta_grid = 64;
  // estimate
  std::string input_path;
  std::string estimator;
  std::string propensity_spec = "none";
  std::string regression = "linear_least_squares";
  // reproduce-tables / reproduce-curves
  std::string family = "both";
  bool emit_svg = true;
  // replications
  std::string estimators_csv = "ipw_known,lm";
};

CovariateDist parse_dist(const std::string& name) {
  if (name == "uniform") return CovariateDist::UniformMinus1To1;
  if (name == "normal") return CovariateDist::StandardNormal;
  if (name == "finite3") return CovariateDist::FiniteSupport3;
  throw ValidationError("unknown covariate distribution '" + name + "'");
}

DgpConfig config_from(const Options& opt) {
  DgpConfig config;
  config.covariate_dist = parse_dist(opt.dist);
  config.t = opt.t;
  config.theta = opt.theta;
  config.a0 = opt.a0;
  config.a1 = opt.a1;
  config.sigma_t = opt.sigma_t;
  config.sigma_c = opt.sigma_c;
  config.logit_intercept = opt.logit_intercept;
  if (!opt.gamma.empty()) {
    if (opt.gamma.size() != 3)
      throw ValidationError("--gamma requires exactly 3 values");
    config.gamma_override = std::array<double, 3>{opt.gamma[0], opt.gamma[1], opt.gamma[2]};
  }
  return config;
}

void write_file(const std::string& dir, const std::string& name,
                const std::string& content) {
  fs::create_directories(dir);
  const fs::path path = fs::path(dir) / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open output file '" + path.string() + "'");
  out << content;
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> items;
  std::string item;
  for (char c : csv) {
    if (c == ',') {
      if (!item.empty()) items.push_back(item);
      item.clear();
    } else {
      item += c;
    }
  }
  if (!item.empty()) items.push_back(item);
  return items;
}

// --- estimate ---------------------------------------------------------------

int cmd_estimate(const Options& opt) {
  const Sample sample = read_sample_csv_file(opt.input_path);
  const std::size_t dim = sample.dim();

  const bool known_spec = opt.propensity_spec.rfind("logistic:", 0) == 0;
  const bool fit_spec = opt.propensity_spec.rfind("fit:", 0) == 0;

  PropensityFunction known_ps;
  if (known_spec) {
    std::vector<double> coef;
    for (const std::string& field : split_list(opt.propensity_spec.substr(9))) {
      try {
        coef.push_back(std::stod(field));
      } catch (const std::exception&) {
        throw ValidationError("bad propensity coefficient '" + field + "'");
      }
    }
    if (coef.size() != dim + 1)
      throw ValidationError("logistic propensity needs " + std::to_string(dim + 1) +
                            " coefficients (intercept first), got " +
                            std::to_string(coef.size()));
    known_ps.eval = [coef](const CovariateVector& x) {
      double eta = coef[0];
      for (std::size_t k = 0; k < x.values.size(); ++k) eta += coef[k + 1] * x.values[k];
      return 1.0 / (1.0 + std::exp(-eta));
    };
  }

  auto fit_strategy = [&]() {
    const std::string name = opt.propensity_spec.substr(4);
    if (name == "logistic_mle") return fit_propensity(sample, PropensityFitKind::LogisticMLE);
    if (name == "cell_frequencies")
      return fit_propensity(sample, PropensityFitKind::CellFrequencies);
    throw ValidationError("unknown propensity fit strategy '" + name + "'");
  };
  auto require_known = [&]() {
    if (!known_spec)
      throw ValidationError("estimator '" + opt.estimator +
                            "' requires --propensity logistic:c0,c1,...,cK");
  };

  EstimateResult result;
  if (opt.estimator == "ipw_known") {
    require_known();
    result = ipw_known(sample, known_ps);
  } else if (opt.estimator == "lm") {
    require_known();
    result = lm(sample, known_ps);
  } else if (opt.estimator == "imputation_known") {
    require_known();
    result = imputation_known(sample, known_ps);
  } else if (opt.estimator == "kps") {
    require_known();
    OutcomeRegressionKind kind;
    if (opt.regression == "linear_least_squares")
      kind = OutcomeRegressionKind::LinearLeastSquares;
    else if (opt.regression == "cell_means")
      kind = OutcomeRegressionKind::CellMeans;
    else
      throw ValidationError("unknown regression strategy '" + opt.regression + "'");
    result = kps(sample, known_ps, fit_outcome_regression(sample, kind));
  } else if (opt.estimator == "ipw_estimated") {
    if (!fit_spec)
      throw ValidationError(
          "ipw_estimated requires --propensity fit:logistic_mle or fit:cell_frequencies");
    result = ipw_estimated(sample, fit_strategy());
  } else if (opt.estimator == "imputation_estimated") {
    result = imputation_estimated(sample);
  } else {
    throw ValidationError("unknown estimator '" + opt.estimator + "'");
  }

  std::string header = "estimator,estimate,n,n_treated,n_control";
  std::string row = result.estimator_name + "," + fmt_g17(result.estimate) + "," +
                    std::to_string(sample.n()) + "," + std::to_string(result.n_treated) +
                    "," + std::to_string(result.n_control);
  if (result.alpha_hat) {
    for (std::size_t k = 0; k < result.alpha_hat->size(); ++k) {
      header += ",alpha" + std::to_string(k + 1);
      row += "," + fmt_g17((*result.alpha_hat)[k]);
    }
  }
  std::cout << header << "\n" << row << "\n";
  return 0;
}

// --- asymptotics ------------------------------------------------------------

int cmd_asymptotics(const Options& opt) {
  const DgpConfig config = config_from(opt);
  const PopulationModel model = make_population_model(config, opt.draws, opt.seed);
  const MomentEstimate bound = efficiency_bound(model, opt.draws, opt.seed);
  const MomentEstimate imp = asyvar_imp_known(model, opt.draws, opt.seed);
  const MomentEstimate ipw = asyvar_ipw_known(model, opt.draws, opt.seed);
  const MomentEstimate gain = lm_gain(model, opt.draws, opt.seed);

  std::string csv = "quantity,value,std_error,draws\n";
  auto add = [&](const std::string& name, double value, double se, std::uint64_t draws) {
    csv += name + "," + fmt_g17(value) + "," + fmt_g17(se) + "," + std::to_string(draws) + "\n";
  };
  add("efficiency_bound", bound.value, bound.std_error, bound.draws);
  add("asyvar_imp_known", imp.value, imp.std_error, imp.draws);
  add("asyvar_ipw_known", ipw.value, ipw.std_error, ipw.draws);
  add("lm_gain", gain.value, gain.std_error, gain.draws);
  add("asyvar_lm", ipw.value - gain.value,
      std::sqrt(ipw.std_error * ipw.std_error + gain.std_error * gain.std_error),
      gain.draws);
  const RThetaPoint point = r_theta_detail(config, opt.draws, opt.seed);
  add("r_theta", point.r, point.std_error, opt.draws);
  write_file(opt.output_dir, "asymptotics.csv", csv);
  std::cout << csv;
  return 0;
}

// --- reproduce-tables / reproduce-curves ------------------------------------

struct Family {
  std::string name;
  CovariateDist dist;
  std::vector<double> t_grid;
};

std::vector<Family> selected_families(const std::string& family) {
  const Family uniform{"uniform", CovariateDist::UniformMinus1To1, {2.0, 1.0, 0.5}};
  const Family normal{"normal", CovariateDist::StandardNormal, {1.0, 0.5, 0.25}};
  if (family == "uniform") return {uniform};
  if (family == "normal") return {normal};
  if (family == "both") return {uniform, normal};
  throw ValidationError("--family must be uniform, normal, or both");
}

int cmd_reproduce_tables(const Options& opt) {
  const DgpConfig base = config_from(opt);
  for (const Family& family : selected_families(opt.family)) {
    DgpConfig config = base;
    config.covariate_dist = family.dist;
    std::string csv = "t,r_avg,mc_se_estimate\n";
    for (std::size_t ti = 0; ti < family.t_grid.size(); ++ti) {
      const double t = family.t_grid[ti];
      const std::uint64_t seed = derive_stream(
          opt.seed, 100 + (family.dist == CovariateDist::StandardNormal ? 10 : 0) + ti);
      const RCurve curve = r_average(config, t, opt.theta_grid, opt.draws, seed);
      csv += fmt_g17(t) + "," + fmt_g17(curve.r_average) + "," +
             fmt_g17(curve.r_average_se) + "\n";
      std::cout << family.name << " t=" << fmt_g6(t)
                << " r_avg=" << fmt_g6(curve.r_average)
                << " se=" << fmt_g6(curve.r_average_se) << "\n";
    }
    write_file(opt.output_dir, "table_" + family.name + ".csv", csv);
  }
  return 0;
}

int cmd_reproduce_curves(const Options& opt) {
  const DgpConfig base = config_from(opt);
  for (const Family& family : selected_families(opt.family)) {
    DgpConfig config = base;
    config.covariate_dist = family.dist;
    for (std::size_t ti = 0; ti < family.t_grid.size(); ++ti) {
      const double t = family.t_grid[ti];
      const std::uint64_t seed = derive_stream(
          opt.seed, 200 + (family.dist == CovariateDist::StandardNormal ? 10 : 0) + ti);
      const RCurve curve = r_average(config, t, opt.theta_grid, opt.draws, seed);
      std::string csv = "theta,r_theta,std_error\n";
      for (std::size_t j = 0; j < curve.thetas.size(); ++j) {
        csv += fmt_g17(curve.thetas[j]) + ",";
        if (std::isfinite(curve.r_values[j]))
          csv += fmt_g17(curve.r_values[j]) + "," + fmt_g17(curve.std_errors[j]);
        else
          csv += ",";
        csv += "\n";
      }
      csv += "# excluded," + std::to_string(curve.excluded_points.size()) + "\n";
      const std::string stem = "curve_" + family.name + "_t" + fmt_g6(t);
      write_file(opt.output_dir, stem + ".csv", csv);
      if (opt.emit_svg) {
        const std::string title =
            "R(theta, t) for the " + family.name + " design, t = " + fmt_g6(t);
        write_file(opt.output_dir, stem + ".svg",
                   render_curve_svg(curve.thetas, curve.r_values, title));
      }
      std::cout << stem << " r_avg=" << fmt_g6(curve.r_average)
                << " excluded=" << curve.excluded_points.size() << "\n";
    }
  }
  return 0;
}

// --- covariate-effects -------------------------------------------------------

int cmd_covariate_effects(const Options& opt) {
  const DgpConfig config = config_from(opt);
  const PopulationModel model = make_population_model(config, opt.draws, opt.seed);
  const CovariateSetComparison cmp = compare_covariate_sets(model, opt.draws, opt.seed);

  const char* set_names[3] = {"full", "iu", "uc"};
  std::string csv = "record,name,value,std_error,pass\n";
  for (int s = 0; s < 3; ++s) {
    const auto i = static_cast<std::size_t>(s);
    csv += std::string("quantity,bound_") + set_names[s] + "," +
           fmt_g17(cmp.bound[i].value) + "," + fmt_g17(cmp.bound[i].std_error) + ",\n";
    csv += std::string("quantity,asyvar_imp_") + set_names[s] + "," +
           fmt_g17(cmp.asyvar_imp[i].value) + "," + fmt_g17(cmp.asyvar_imp[i].std_error) + ",\n";
    csv += std::string("quantity,asyvar_ipw_") + set_names[s] + "," +
           fmt_g17(cmp.asyvar_ipw[i].value) + "," + fmt_g17(cmp.asyvar_ipw[i].std_error) + ",\n";
  }
  for (const ComparisonFlag& flag : cmp.flags) {
    csv += "flag," + flag.name + "," + fmt_g17(flag.difference) + "," +
           fmt_g17(flag.tolerance) + "," + (flag.pass ? "1" : "0") + "\n";
    std::cout << flag.name << " " << (flag.pass ? "pass" : "FAIL")
              << " difference=" << fmt_g6(flag.difference)
              << " tolerance=" << fmt_g6(flag.tolerance) << "\n";
  }
  write_file(opt.output_dir, "covariate_effects.csv", csv);
  if (!cmp.all_pass()) {
    std::cerr << "error: a covariate-set comparison flag failed\n";
    return 2;
  }
  return 0;
}

// --- replications -------------------------------------------------------------

int cmd_replications(const Options& opt) {
  const DgpConfig config = config_from(opt);
  const std::vector<std::string> names = split_list(opt.estimators_csv);
  if (names.empty()) throw ValidationError("--estimators must name at least one estimator");
  const auto results = run_replications(config, names, opt.n, opt.reps, opt.seed);

  std::string csv = "estimator,rep,estimate\n";
  for (const ReplicationResult& result : results) {
    std::size_t next_success = 0, next_failure = 0;
    for (std::size_t r = 0; r < opt.reps; ++r) {
      csv += result.estimator_name + "," + std::to_string(r) + ",";
      if (next_failure < result.failed_reps.size() &&
          result.failed_reps[next_failure] == r) {
        ++next_failure;
      } else {
        csv += fmt_g17(result.estimates[next_success]);
        ++next_success;
      }
      csv += "\n";
    }
    std::cout << result.estimator_name << " n=" << result.n
              << " reps=" << opt.reps << " failures=" << result.failure_count
              << " mean=" << fmt_g6(result.mean())
              << " n_times_variance=" << fmt_g6(static_cast<double>(result.n) * result.variance())
              << "\n";
  }
  write_file(opt.output_dir, "replications.csv", csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  CLI::App app{
      "atelab: average-treatment-effect estimators, asymptotic variances and "
      "simulation-study reproduction"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value config file ('#' comments; flags override)");
  app.add_option("--seed", opt.seed,
                 "64-bit RNG seed (default 20260816; env ATE_LAB_SEED overrides the "
                 "default, an explicit flag overrides both)")
      ->envname("ATE_LAB_SEED");
  app.add_option("--output-dir", opt.output_dir, "directory for output files");

  auto add_dgp_options = [&](CLI::App* cmd) {
    cmd->add_option("--dist", opt.dist, "covariate law: uniform | normal | finite3");
    cmd->add_option("--t", opt.t, "propensity strength");
    cmd->add_option("--theta", opt.theta, "control-arm slope angle");
    cmd->add_option("--a0", opt.a0, "control intercept");
    cmd->add_option("--a1", opt.a1, "treated intercept");
    cmd->add_option("--sigma-t", opt.sigma_t, "treated noise standard deviation");
    cmd->add_option("--sigma-c", opt.sigma_c, "control noise standard deviation");
    cmd->add_option("--logit-intercept", opt.logit_intercept, "propensity intercept");
    cmd->add_option("--gamma", opt.gamma,
                    "3 comma-separated propensity slopes replacing (t, t, 0)")
        ->delimiter(',')
        ->expected(3);
  };
  auto add_draws = [&](CLI::App* cmd) {
    cmd->add_option("--draws", opt.draws, "Monte Carlo draws per moment")
        ->check(CLI::PositiveNumber);
  };
  auto add_grid = [&](CLI::App* cmd) {
    cmd->add_option("--theta-grid", opt.theta_grid, "theta grid size (>= 8)")
        ->check(CLI::Range(8, 100000));
  };

  CLI::App* estimate = app.add_subcommand("estimate", "run one estimator on a CSV sample");
  estimate->add_option("--input", opt.input_path, "sample CSV (d,y,x1..xK)")->required();
  estimate->add_option("--estimator", opt.estimator,
                       "ipw_known | ipw_estimated | imputation_known | "
                       "imputation_estimated | kps | lm")
      ->required();
  estimate->add_option("--propensity", opt.propensity_spec,
                       "logistic:c0,c1,...,cK (known) or fit:logistic_mle | "
                       "fit:cell_frequencies");
  estimate->add_option("--regression", opt.regression,
                       "kps outcome regression: linear_least_squares | cell_means");

  CLI::App* asymptotics = app.add_subcommand(
      "asymptotics", "efficiency bound, asymptotic variances and the variance-"
                     "reduction ratio for one design");
  add_dgp_options(asymptotics);
  add_draws(asymptotics);

  CLI::App* tables = app.add_subcommand(
      "reproduce-tables", "average variance-reduction ratio R(t) per design family");
  add_dgp_options(tables);
  add_draws(tables);
  add_grid(tables);
  tables->add_option("--family", opt.family, "uniform | normal | both");

  CLI::App* curves = app.add_subcommand(
      "reproduce-curves", "R(theta, t) curves as CSV (and SVG) per design family");
  add_dgp_options(curves);
  add_draws(curves);
  add_grid(curves);
  curves->add_option("--family", opt.family, "uniform | normal | both");
  curves->add_flag("--svg,!--no-svg", opt.emit_svg, "also write SVG plots");

  CLI::App* effects = app.add_subcommand(
      "covariate-effects",
      "bound and variances under full/reduced covariate sets, with checks");
  add_dgp_options(effects);
  add_draws(effects);

  CLI::App* replications = app.add_subcommand(
      "replications", "repeated finite-sample estimates on generated samples");
  add_dgp_options(replications);
  replications->add_option("--estimators", opt.estimators_csv,
                           "comma-separated estimator names");
  replications->add_option("--n", opt.n, "sample size per replication")
      ->check(CLI::PositiveNumber);
  replications->add_option("--reps", opt.reps, "replication count")
      ->check(CLI::Range(2, 10000000));

  for (CLI::App* sub : {estimate, asymptotics, tables, curves, effects, replications})
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (estimate->parsed()) return cmd_estimate(opt);
    if (asymptotics->parsed()) return cmd_asymptotics(opt);
    if (tables->parsed()) return cmd_reproduce_tables(opt);
    if (curves->parsed()) return cmd_reproduce_curves(opt);
    if (effects->parsed()) return cmd_covariate_effects(opt);
    if (replications->parsed()) return cmd_replications(opt);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
