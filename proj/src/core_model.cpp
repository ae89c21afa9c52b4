#include "atelab/core_model.hpp"

#include <cmath>
#include <string>

#include "atelab/errors.hpp"

namespace atelab {

void require_well_formed(const Sample& sample) {
  if (sample.n() < 2)
    throw ValidationError("sample must contain at least 2 units, has " +
                          std::to_string(sample.n()));
  const std::size_t dim = sample.units.front().x.dim();
  for (std::size_t i = 0; i < sample.n(); ++i) {
    const Unit& u = sample.units[i];
    if (u.d != 0 && u.d != 1)
      throw ValidationError("unit " + std::to_string(i) + ": d must be 0 or 1");
    if (!std::isfinite(u.y))
      throw ValidationError("unit " + std::to_string(i) + ": non-finite outcome");
    if (u.x.dim() != dim)
      throw ValidationError("unit " + std::to_string(i) +
                            ": covariate dimension differs from unit 0");
    for (double v : u.x.values)
      if (!std::isfinite(v))
        throw ValidationError("unit " + std::to_string(i) + ": non-finite covariate");
    if (u.x.roles && u.x.roles->size() != dim)
      throw ValidationError("unit " + std::to_string(i) +
                            ": role list length differs from covariate dimension");
  }
}

ValidationReport validate_sample(const Sample& sample, const PropensityFunction& ps) {
  ValidationReport report;
  std::size_t n_treated = 0, n_control = 0;
  for (std::size_t i = 0; i < sample.n(); ++i) {
    const Unit& u = sample.units[i];
    if (u.d == 1)
      ++n_treated;
    else if (u.d == 0)
      ++n_control;
    else
      report.issues.push_back({ValidationIssue::Kind::Structural, i,
                               "d must be 0 or 1, got " + std::to_string(u.d)});
    if (!std::isfinite(u.y))
      report.issues.push_back(
          {ValidationIssue::Kind::Structural, i, "non-finite outcome"});
    const double p = ps.eval(u.x);
    if (!(p > ps.overlap_margin) || !(p < 1.0 - ps.overlap_margin))
      report.issues.push_back({ValidationIssue::Kind::OverlapViolation, i,
                               "propensity " + std::to_string(p) +
                                   " outside (margin, 1-margin) band"});
  }
  const std::size_t npos = static_cast<std::size_t>(-1);
  if (n_treated == 0)
    report.issues.push_back(
        {ValidationIssue::Kind::DegenerateDesign, npos, "no treated units"});
  if (n_control == 0)
    report.issues.push_back(
        {ValidationIssue::Kind::DegenerateDesign, npos, "no control units"});
  if (sample.n() < 2)
    report.issues.push_back(
        {ValidationIssue::Kind::Structural, npos, "fewer than 2 units"});
  return report;
}

std::vector<double> propensities_checked(const Sample& sample,
                                         const PropensityFunction& ps) {
  std::vector<double> p(sample.n());
  for (std::size_t i = 0; i < sample.n(); ++i) {
    p[i] = ps.eval(sample.units[i].x);
    if (!(p[i] > ps.overlap_margin) || !(p[i] < 1.0 - ps.overlap_margin))
      throw OverlapViolation("unit " + std::to_string(i) + ": propensity " +
                             std::to_string(p[i]) + " outside overlap band");
  }
  return p;
}

std::pair<std::vector<double>, std::vector<double>> weighted_group_means(
    const Sample& sample, const PropensityFunction& ps,
    const std::vector<std::vector<double>>& values) {
  require_well_formed(sample);
  if (values.size() != sample.n())
    throw ValidationError("weighted_group_means: one value vector per unit required");
  const std::size_t m = values.front().size();
  for (const auto& v : values)
    if (v.size() != m)
      throw ValidationError("weighted_group_means: value vectors must share dimension");

  const std::vector<double> p = propensities_checked(sample, ps);
  std::vector<double> treated_sum(m, 0.0), control_sum(m, 0.0);
  double treated_weight = 0.0, control_weight = 0.0;
  for (std::size_t i = 0; i < sample.n(); ++i) {
    const Unit& u = sample.units[i];
    if (u.d == 1) {
      const double w = 1.0 / p[i];
      treated_weight += w;
      for (std::size_t j = 0; j < m; ++j) treated_sum[j] += w * values[i][j];
    } else {
      const double w = 1.0 / (1.0 - p[i]);
      control_weight += w;
      for (std::size_t j = 0; j < m; ++j) control_sum[j] += w * values[i][j];
    }
  }
  if (!(treated_weight > 0.0))
    throw DegenerateDesign("treated arm weight sum is zero");
  if (!(control_weight > 0.0))
    throw DegenerateDesign("control arm weight sum is zero");
  for (std::size_t j = 0; j < m; ++j) {
    treated_sum[j] /= treated_weight;
    control_sum[j] /= control_weight;
  }
  return {treated_sum, control_sum};
}

}  // namespace atelab
