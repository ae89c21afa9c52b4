#include "atelab/estimators.hpp"

#include <cmath>
#include <cstring>
#include <map>
#include <memory>
#include <string>

#include "atelab/errors.hpp"
#include "atelab/linalg.hpp"

namespace atelab {

namespace {

// Finite-support cells are keyed on exact bit patterns: values differing in
// any bit are distinct cells (the shipped finite-support samples emit exact
// repeats, so no tolerance bucketing is wanted).
using CellKey = std::vector<std::uint64_t>;

CellKey cell_key(const CovariateVector& x) {
  CellKey key(x.values.size());
  static_assert(sizeof(double) == sizeof(std::uint64_t));
  std::memcpy(key.data(), x.values.data(), x.values.size() * sizeof(double));
  return key;
}

struct CellCounts {
  std::size_t n = 0, n_treated = 0, n_control = 0;
  double sum_dy = 0.0;        // sum of D * Y
  double sum_cy = 0.0;        // sum of (1 - D) * Y
  double sum_y = 0.0;
};

std::map<CellKey, CellCounts> collect_cells(const Sample& sample) {
  std::map<CellKey, CellCounts> cells;
  for (const Unit& u : sample.units) {
    CellCounts& c = cells[cell_key(u.x)];
    ++c.n;
    if (u.d == 1) {
      ++c.n_treated;
      c.sum_dy += u.y;
    } else {
      ++c.n_control;
      c.sum_cy += u.y;
    }
    c.sum_y += u.y;
  }
  return cells;
}

std::pair<std::size_t, std::size_t> arm_counts(const Sample& sample) {
  std::size_t n_treated = 0;
  for (const Unit& u : sample.units) n_treated += (u.d == 1);
  return {n_treated, sample.n() - n_treated};
}

EstimateResult ipw_core(const Sample& sample, const PropensityFunction& ps,
                        const std::string& name) {
  std::vector<std::vector<double>> y(sample.n());
  for (std::size_t i = 0; i < sample.n(); ++i) y[i] = {sample.units[i].y};
  const auto [treated, control] = weighted_group_means(sample, ps, y);
  const auto [n_treated, n_control] = arm_counts(sample);
  EstimateResult result;
  result.estimate = treated[0] - control[0];
  result.estimator_name = name;
  result.n_treated = n_treated;
  result.n_control = n_control;
  return result;
}

EstimateResult imputation_core(const Sample& sample, const std::vector<double>& q,
                               const std::string& name) {
  const auto cells = collect_cells(sample);
  double acc = 0.0;
  for (std::size_t i = 0; i < sample.n(); ++i) {
    const CellCounts& c = cells.at(cell_key(sample.units[i].x));
    const double e_dy = c.sum_dy / static_cast<double>(c.n);
    const double e_cy = c.sum_cy / static_cast<double>(c.n);
    acc += e_dy / q[i] - e_cy / (1.0 - q[i]);
  }
  const auto [n_treated, n_control] = arm_counts(sample);
  EstimateResult result;
  result.estimate = acc / static_cast<double>(sample.n());
  result.estimator_name = name;
  result.n_treated = n_treated;
  result.n_control = n_control;
  result.diagnostics["cells"] = static_cast<double>(cells.size());
  return result;
}

double logistic(double eta) { return 1.0 / (1.0 + std::exp(-eta)); }

}  // namespace

EstimateResult ipw_known(const Sample& sample, const PropensityFunction& ps) {
  return ipw_core(sample, ps, "ipw_known");
}

EstimateResult ipw_estimated(const Sample& sample, const PropensityFitStrategy& fit) {
  if (fit.kind == PropensityFitKind::LogisticMLE && !fit.converged)
    throw FitFailure("ipw_estimated: propensity fit did not converge");
  // Fitted values are clipped/interior by construction, so the fit's own
  // range is trusted (margin 0 = open-interval check only).
  PropensityFunction fitted{fit.evaluate, 0.0};
  return ipw_core(sample, fitted, "ipw_estimated");
}

EstimateResult imputation_known(const Sample& sample, const PropensityFunction& ps) {
  require_well_formed(sample);
  const std::vector<double> p = propensities_checked(sample, ps);
  return imputation_core(sample, p, "imputation_known");
}

EstimateResult imputation_estimated(const Sample& sample) {
  require_well_formed(sample);
  const auto cells = collect_cells(sample);
  std::vector<double> q(sample.n());
  for (std::size_t i = 0; i < sample.n(); ++i) {
    const CellCounts& c = cells.at(cell_key(sample.units[i].x));
    if (c.n_treated == 0 || c.n_control == 0)
      throw EmptyCellArm("imputation_estimated: covariate cell of unit " +
                         std::to_string(i) + " lacks a " +
                         (c.n_treated == 0 ? std::string("treated")
                                           : std::string("control")) +
                         " unit");
    q[i] = static_cast<double>(c.n_treated) / static_cast<double>(c.n);
  }
  return imputation_core(sample, q, "imputation_estimated");
}

OutcomeRegressionStrategy fit_outcome_regression(const Sample& sample,
                                                 OutcomeRegressionKind kind) {
  require_well_formed(sample);
  const auto [n_treated, n_control] = arm_counts(sample);
  if (n_treated == 0) throw DegenerateDesign("outcome regression: no treated units");
  if (n_control == 0) throw DegenerateDesign("outcome regression: no control units");

  OutcomeRegressionStrategy strategy;
  strategy.kind = kind;

  if (kind == OutcomeRegressionKind::CellMeans) {
    auto means = std::make_shared<std::map<CellKey, std::pair<double, double>>>();
    std::size_t pooled_treated = 0, pooled_control = 0;
    for (const auto& [key, c] : collect_cells(sample)) {
      const double pooled = c.sum_y / static_cast<double>(c.n);
      double treated = pooled, control = pooled;
      if (c.n_treated > 0)
        treated = c.sum_dy / static_cast<double>(c.n_treated);
      else
        ++pooled_treated;
      if (c.n_control > 0)
        control = c.sum_cy / static_cast<double>(c.n_control);
      else
        ++pooled_control;
      (*means)[key] = {treated, control};
    }
    auto lookup = [means](const CovariateVector& x, bool treated_arm) {
      const auto it = means->find(cell_key(x));
      if (it == means->end())
        throw EmptySupport("cell-mean regression: covariate value never seen in fit");
      return treated_arm ? it->second.first : it->second.second;
    };
    strategy.predict_treated = [lookup](const CovariateVector& x) {
      return lookup(x, true);
    };
    strategy.predict_control = [lookup](const CovariateVector& x) {
      return lookup(x, false);
    };
    strategy.diagnostics["pooled_treated_cells"] = static_cast<double>(pooled_treated);
    strategy.diagnostics["pooled_control_cells"] = static_cast<double>(pooled_control);
    return strategy;
  }

  // LinearLeastSquares: per-arm affine fit on [1, x].  If the moment matrix
  // condition exceeds 1e12 (or it is not positive definite), add
  // 1e-8 * trace / (K+1) to the diagonal; well-conditioned fits are
  // unaffected beyond ~1e-6 relative.
  const int dim = static_cast<int>(sample.dim());
  auto fit_arm = [&](int arm) {
    Eigen::MatrixXd moment = Eigen::MatrixXd::Zero(dim + 1, dim + 1);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim + 1);
    Eigen::VectorXd z(dim + 1);
    for (const Unit& u : sample.units) {
      if (u.d != arm) continue;
      z(0) = 1.0;
      for (int k = 0; k < dim; ++k) z(k + 1) = u.x.values[static_cast<std::size_t>(k)];
      moment.noalias() += z * z.transpose();
      rhs.noalias() += z * u.y;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(moment);
    const double lambda_max = eig.eigenvalues().maxCoeff();
    const double lambda_min = eig.eigenvalues().minCoeff();
    if (!(lambda_min > 0.0) || lambda_max / lambda_min > 1e12)
      moment.diagonal().array() += 1e-8 * moment.trace() / (dim + 1);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(moment);
    if (ldlt.info() != Eigen::Success)
      throw SingularDesign("linear least squares: moment matrix singular beyond ridge rescue");
    Eigen::VectorXd coef = ldlt.solve(rhs);
    if (!coef.allFinite())
      throw SingularDesign("linear least squares: non-finite coefficients");
    return coef;
  };
  const auto treated_coef = std::make_shared<Eigen::VectorXd>(fit_arm(1));
  const auto control_coef = std::make_shared<Eigen::VectorXd>(fit_arm(0));
  auto predict = [dim](const std::shared_ptr<Eigen::VectorXd>& coef,
                       const CovariateVector& x) {
    double value = (*coef)(0);
    for (int k = 0; k < dim; ++k)
      value += (*coef)(k + 1) * x.values[static_cast<std::size_t>(k)];
    return value;
  };
  strategy.predict_treated = [=](const CovariateVector& x) {
    return predict(treated_coef, x);
  };
  strategy.predict_control = [=](const CovariateVector& x) {
    return predict(control_coef, x);
  };
  return strategy;
}

EstimateResult kps(const Sample& sample, const PropensityFunction& ps,
                   const OutcomeRegressionStrategy& reg) {
  require_well_formed(sample);
  const std::vector<double> p = propensities_checked(sample, ps);
  double acc = 0.0;
  for (std::size_t i = 0; i < sample.n(); ++i) {
    const Unit& u = sample.units[i];
    const double d = static_cast<double>(u.d);
    const double correction = reg.predict_treated(u.x) / p[i] -
                              reg.predict_control(u.x) / (1.0 - p[i]);
    acc += d * u.y / p[i] - (1.0 - d) * u.y / (1.0 - p[i]) - (d - p[i]) * correction;
  }
  const auto [n_treated, n_control] = arm_counts(sample);
  EstimateResult result;
  result.estimate = acc / static_cast<double>(sample.n());
  result.estimator_name = "kps";
  result.n_treated = n_treated;
  result.n_control = n_control;
  return result;
}

std::vector<double> x_ipw(const Sample& sample, const PropensityFunction& ps) {
  std::vector<std::vector<double>> values(sample.n());
  for (std::size_t i = 0; i < sample.n(); ++i) values[i] = sample.units[i].x.values;
  const auto [treated, control] = weighted_group_means(sample, ps, values);
  std::vector<double> diff(treated.size());
  for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = treated[k] - control[k];
  return diff;
}

Eigen::MatrixXd asycov_xx_hat(const Sample& sample, const PropensityFunction& ps) {
  require_well_formed(sample);
  const std::vector<double> p = propensities_checked(sample, ps);
  const int dim = static_cast<int>(sample.dim());
  const double n = static_cast<double>(sample.n());
  Eigen::VectorXd xbar = Eigen::VectorXd::Zero(dim);
  for (const Unit& u : sample.units)
    for (int k = 0; k < dim; ++k) xbar(k) += u.x.values[static_cast<std::size_t>(k)];
  xbar /= n;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd dev(dim);
  for (std::size_t i = 0; i < sample.n(); ++i) {
    for (int k = 0; k < dim; ++k)
      dev(k) = sample.units[i].x.values[static_cast<std::size_t>(k)] - xbar(k);
    cov.noalias() += dev * dev.transpose() / (p[i] * (1.0 - p[i]));
  }
  return cov / n;
}

Eigen::VectorXd asycov_xb_hat(const Sample& sample, const PropensityFunction& ps) {
  require_well_formed(sample);
  const std::vector<double> p = propensities_checked(sample, ps);
  const int dim = static_cast<int>(sample.dim());
  const double n = static_cast<double>(sample.n());
  Eigen::VectorXd xbar = Eigen::VectorXd::Zero(dim);
  double m_treated = 0.0, m_control = 0.0;  // unnormalized weighted outcome means
  for (std::size_t i = 0; i < sample.n(); ++i) {
    const Unit& u = sample.units[i];
    for (int k = 0; k < dim; ++k) xbar(k) += u.x.values[static_cast<std::size_t>(k)];
    if (u.d == 1)
      m_treated += u.y / p[i];
    else
      m_control += u.y / (1.0 - p[i]);
  }
  xbar /= n;
  m_treated /= n;
  m_control /= n;
  Eigen::VectorXd cov = Eigen::VectorXd::Zero(dim);
  for (std::size_t j = 0; j < sample.n(); ++j) {
    const Unit& u = sample.units[j];
    const double resid = u.d == 1 ? (u.y - m_treated) / (p[j] * p[j])
                                  : (u.y - m_control) / ((1.0 - p[j]) * (1.0 - p[j]));
    for (int k = 0; k < dim; ++k)
      cov(k) += (u.x.values[static_cast<std::size_t>(k)] - xbar(k)) * resid;
  }
  return cov / n;
}

EstimateResult lm(const Sample& sample, const PropensityFunction& ps) {
  require_well_formed(sample);
  const std::size_t dim = sample.dim();
  // One weighted-means pass for [Y, X] gives both contrasts.
  std::vector<std::vector<double>> values(sample.n());
  for (std::size_t i = 0; i < sample.n(); ++i) {
    values[i].reserve(dim + 1);
    values[i].push_back(sample.units[i].y);
    for (double v : sample.units[i].x.values) values[i].push_back(v);
  }
  const auto [treated, control] = weighted_group_means(sample, ps, values);
  const double ipw_contrast = treated[0] - control[0];
  Eigen::VectorXd x_contrast(static_cast<int>(dim));
  for (std::size_t k = 0; k < dim; ++k)
    x_contrast(static_cast<int>(k)) = treated[k + 1] - control[k + 1];

  const Eigen::MatrixXd cov_xx = asycov_xx_hat(sample, ps);
  const Eigen::VectorXd cov_xb = asycov_xb_hat(sample, ps);
  const Eigen::VectorXd alpha = pinv_solve(cov_xx, cov_xb);

  const auto [n_treated, n_control] = arm_counts(sample);
  EstimateResult result;
  result.estimate = ipw_contrast - alpha.dot(x_contrast);
  result.estimator_name = "lm";
  result.n_treated = n_treated;
  result.n_control = n_control;
  result.alpha_hat = std::vector<double>(alpha.data(), alpha.data() + alpha.size());
  return result;
}

PropensityFitStrategy fit_propensity(const Sample& sample, PropensityFitKind kind) {
  require_well_formed(sample);
  PropensityFitStrategy strategy;
  strategy.kind = kind;

  if (kind == PropensityFitKind::CellFrequencies) {
    const double margin = strategy.clip_margin;
    auto table = std::make_shared<std::map<CellKey, double>>();
    for (const auto& [key, c] : collect_cells(sample)) {
      const double frac = static_cast<double>(c.n_treated) / static_cast<double>(c.n);
      (*table)[key] = std::min(1.0 - margin, std::max(margin, frac));
    }
    strategy.evaluate = [table](const CovariateVector& x) {
      const auto it = table->find(cell_key(x));
      if (it == table->end())
        throw EmptySupport("cell-frequency propensity: covariate value never seen in fit");
      return it->second;
    };
    strategy.converged = true;
    return strategy;
  }

  // LogisticMLE: Newton-Raphson on the log-likelihood with intercept.
  const int dim = static_cast<int>(sample.dim());
  const std::size_t n = sample.n();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(dim + 1);
  Eigen::VectorXd z(dim + 1);
  const double tol = 1e-10;  // on the mean-gradient sup-norm
  const int max_iterations = 100;
  bool converged = false;
  int iterations = 0;
  for (; iterations < max_iterations; ++iterations) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(dim + 1);
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(dim + 1, dim + 1);
    double max_eta = 0.0;
    bool separated = true;
    for (const Unit& u : sample.units) {
      z(0) = 1.0;
      for (int k = 0; k < dim; ++k) z(k + 1) = u.x.values[static_cast<std::size_t>(k)];
      const double eta = beta.dot(z);
      const double mu = logistic(eta);
      grad.noalias() += z * (static_cast<double>(u.d) - mu);
      hess.noalias() += z * z.transpose() * (mu * (1.0 - mu));
      max_eta = std::max(max_eta, std::abs(eta));
      if ((u.d == 1) != (eta > 0.0)) separated = false;
    }
    grad /= static_cast<double>(n);
    if (grad.lpNorm<Eigen::Infinity>() < tol) {
      converged = true;
      break;
    }
    if (max_eta > 30.0 && separated)
      throw FitFailure("logistic MLE: perfect separation, estimate diverges");
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hess / static_cast<double>(n));
    if (ldlt.info() != Eigen::Success)
      throw FitFailure("logistic MLE: singular Hessian");
    const Eigen::VectorXd step = ldlt.solve(grad);
    if (!step.allFinite())
      throw FitFailure("logistic MLE: non-finite Newton step");
    beta += step;
  }
  if (!converged)
    throw FitFailure("logistic MLE: no convergence in " +
                     std::to_string(max_iterations) + " iterations");
  strategy.coefficients.assign(beta.data(), beta.data() + beta.size());
  strategy.converged = true;
  strategy.iterations = iterations;
  strategy.evaluate = [coef = beta, dim](const CovariateVector& x) {
    double eta = coef(0);
    for (int k = 0; k < dim; ++k)
      eta += coef(k + 1) * x.values[static_cast<std::size_t>(k)];
    return logistic(eta);
  };
  return strategy;
}

EstimateResult run_estimator(const std::string& name, const Sample& sample,
                             const PropensityFunction& ps) {
  if (name == "ipw_known") return ipw_known(sample, ps);
  if (name == "lm") return lm(sample, ps);
  if (name == "kps")
    return kps(sample, ps,
               fit_outcome_regression(sample, OutcomeRegressionKind::LinearLeastSquares));
  if (name == "imputation_known") return imputation_known(sample, ps);
  if (name == "imputation_estimated") return imputation_estimated(sample);
  if (name == "ipw_estimated")
    return ipw_estimated(sample, fit_propensity(sample, PropensityFitKind::LogisticMLE));
  throw ValidationError("unknown estimator '" + name + "'");
}

}  // namespace atelab
