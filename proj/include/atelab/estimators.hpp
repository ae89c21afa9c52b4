#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "atelab/core_model.hpp"

namespace atelab {

// Per-arm conditional-mean predictors fitted on a sample.
enum class OutcomeRegressionKind { CellMeans, LinearLeastSquares };

struct OutcomeRegressionStrategy {
  OutcomeRegressionKind kind = OutcomeRegressionKind::CellMeans;
  std::function<double(const CovariateVector&)> predict_treated;  // beta_T_hat(x)
  std::function<double(const CovariateVector&)> predict_control;  // beta_C_hat(x)
  std::map<std::string, double> diagnostics;
};

enum class PropensityFitKind { CellFrequencies, LogisticMLE };

struct PropensityFitStrategy {
  PropensityFitKind kind = PropensityFitKind::CellFrequencies;
  std::function<double(const CovariateVector&)> evaluate;  // p_hat(x)
  // LogisticMLE only: intercept first, then one slope per covariate.
  std::vector<double> coefficients;
  bool converged = false;
  int iterations = 0;
  double clip_margin = 1e-6;  // CellFrequencies outputs clipped to [m, 1-m]
};

// Normalized inverse-propensity-weighting contrast with the known propensity:
// treated weighted mean of Y minus control weighted mean of Y.
EstimateResult ipw_known(const Sample& sample, const PropensityFunction& ps);

// Same contrast with the fitted propensity substituted.
EstimateResult ipw_estimated(const Sample& sample, const PropensityFitStrategy& fit);

// Finite-support imputation estimators:
//   (1/n) sum_i [ E_hat[DY | X_i] / q(X_i)  -  E_hat[(1-D)Y | X_i] / (1 - q(X_i)) ]
// with within-cell empirical means; q = p (known) or E_hat[D | X_i] (estimated).
EstimateResult imputation_known(const Sample& sample, const PropensityFunction& ps);
EstimateResult imputation_estimated(const Sample& sample);

// Fits per-arm predictors.  CellMeans substitutes the arm-pooled cell mean
// where a cell lacks an arm (count surfaced in diagnostics).
// LinearLeastSquares applies a ridge fallback on ill-conditioned designs.
OutcomeRegressionStrategy fit_outcome_regression(const Sample& sample,
                                                 OutcomeRegressionKind kind);

// Weighting estimator with an outcome-regression correction:
//   (1/n) sum_i [ D_i Y_i / p_i - (1-D_i) Y_i / (1-p_i)
//                 - (D_i - p_i) (beta_T_hat(X_i)/p_i - beta_C_hat(X_i)/(1-p_i)) ].
EstimateResult kps(const Sample& sample, const PropensityFunction& ps,
                   const OutcomeRegressionStrategy& reg);

// Weighted covariate-mean contrast: treated weighted mean of X minus control
// weighted mean of X (componentwise).
std::vector<double> x_ipw(const Sample& sample, const PropensityFunction& ps);

// Sample asymptotic covariance of the covariate contrast with itself:
//   (1/n) sum_i (X_i - Xbar)(X_i - Xbar)^T / (p_i (1 - p_i)).
Eigen::MatrixXd asycov_xx_hat(const Sample& sample, const PropensityFunction& ps);

// Sample asymptotic covariance of the covariate contrast with the outcome
// contrast:
//   (1/n) sum_j (X_j - Xbar) [ D_j/p_j^2 (Y_j - m_T) + (1-D_j)/(1-p_j)^2 (Y_j - m_C) ]
// with m_T = (1/n) sum_i D_i Y_i / p_i and m_C = (1/n) sum_i (1-D_i) Y_i / (1-p_i).
Eigen::VectorXd asycov_xb_hat(const Sample& sample, const PropensityFunction& ps);

// Linearly modified weighting estimator: ipw_known - alpha_hat^T x_ipw with
// alpha_hat the pseudo-inverse solution of asycov_xx_hat * alpha = asycov_xb_hat.
EstimateResult lm(const Sample& sample, const PropensityFunction& ps);

// Fits a propensity map.  CellFrequencies: within-cell treated fraction,
// clipped to [margin, 1-margin].  LogisticMLE: Newton-Raphson with intercept,
// tolerance 1e-10 on the mean-gradient sup-norm, at most 100 iterations;
// throws FitFailure on separation or non-convergence.
PropensityFitStrategy fit_propensity(const Sample& sample, PropensityFitKind kind);

// Dispatch by estimator identifier:
//   ipw_known | ipw_estimated | imputation_known | imputation_estimated | kps | lm
// ipw_estimated fits LogisticMLE; kps fits LinearLeastSquares regressions.
EstimateResult run_estimator(const std::string& name, const Sample& sample,
                             const PropensityFunction& ps);

}  // namespace atelab
