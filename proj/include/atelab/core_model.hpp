#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace atelab {

enum class CovariateRole { Instrument, Confounder, OutcomePredictor };

// X = (x_1, ..., x_K).  Roles are optional metadata; no operation branches on
// them — which coordinates are present is what matters, and callers control
// that by projecting columns.
struct CovariateVector {
  std::vector<double> values;
  std::optional<std::vector<CovariateRole>> roles;

  std::size_t dim() const { return values.size(); }
};

// One observation (D_i, Y_i, X_i).  Potential outcomes are latent and never
// stored; y is the realized outcome for the realized arm.
struct Unit {
  int d = 0;  // treatment indicator, 0 or 1
  double y = 0.0;
  CovariateVector x;
};

struct Sample {
  std::vector<Unit> units;

  std::size_t n() const { return units.size(); }
  std::size_t dim() const { return units.empty() ? 0 : units.front().x.dim(); }
};

// p(x) = P(D = 1 | X = x).  Values must stay inside the open band
// (overlap_margin, 1 - overlap_margin) for every x an operation touches.
struct PropensityFunction {
  std::function<double(const CovariateVector&)> eval;
  double overlap_margin = 1e-6;
};

struct EstimateResult {
  double estimate = 0.0;
  std::string estimator_name;
  std::size_t n_treated = 0;
  std::size_t n_control = 0;
  std::optional<std::vector<double>> alpha_hat;  // present iff estimator_name == "lm"
  std::map<std::string, double> diagnostics;
};

struct ValidationIssue {
  enum class Kind { Structural, DegenerateDesign, OverlapViolation };
  Kind kind = Kind::Structural;
  // Unit index for per-unit issues; npos for sample-level issues.
  std::size_t unit_index = static_cast<std::size_t>(-1);
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool valid() const { return issues.empty(); }
};

// Throws ValidationError unless every unit has d in {0,1}, finite y and x,
// and the same covariate dimension, with n >= 2.
void require_well_formed(const Sample& sample);

// Advisory checks: never throws for overlap/degeneracy findings; reports
// every unit whose propensity leaves the margin band and flags empty arms.
// Structural defects are reported too (and would make estimators throw).
ValidationReport validate_sample(const Sample& sample, const PropensityFunction& ps);

// Normalized inverse-propensity-weighted group means of per-unit vectors:
//   treated  component:  (sum_i D_i v_i / p(X_i))       / (sum_i D_i / p(X_i))
//   control  component:  (sum_i (1-D_i) v_i / (1-p(X_i))) / (sum_i (1-D_i)/(1-p(X_i)))
// Shared kernel of the weighting estimators.  Throws DegenerateDesign when an
// arm's weight sum vanishes, OverlapViolation when p leaves the margin band.
std::pair<std::vector<double>, std::vector<double>> weighted_group_means(
    const Sample& sample, const PropensityFunction& ps,
    const std::vector<std::vector<double>>& values);

// Propensity evaluated per unit with the margin band enforced
// (throws OverlapViolation naming the first offending unit).
std::vector<double> propensities_checked(const Sample& sample,
                                         const PropensityFunction& ps);

}  // namespace atelab
