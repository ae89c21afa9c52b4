#pragma once

#include <stdexcept>
#include <string>

namespace atelab {

// Two exception families, mapped to process exit codes by the CLI:
//   ValidationError -> exit 1  (bad input: parse failures, invalid samples or
//                               configs, models outside the supported class)
//   NumericalError  -> exit 2  (computation failed: degenerate designs,
//                               overlap violations, non-convergence, ...)

struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ParseError : ValidationError {
  explicit ParseError(const std::string& msg) : ValidationError(msg) {}
};

// Operation requires structure the given model does not declare
// (e.g. marginalizing a model without independent coordinates).
struct UnsupportedModel : ValidationError {
  explicit UnsupportedModel(const std::string& msg) : ValidationError(msg) {}
};

struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// An arm (treated or control) is empty, or its weight sum vanishes.
struct DegenerateDesign : NumericalError {
  explicit DegenerateDesign(const std::string& msg) : NumericalError(msg) {}
};

// A propensity value fell outside the (margin, 1 - margin) band.
struct OverlapViolation : NumericalError {
  explicit OverlapViolation(const std::string& msg) : NumericalError(msg) {}
};

// A nuisance fit did not converge (e.g. logistic MLE under separation).
struct FitFailure : NumericalError {
  explicit FitFailure(const std::string& msg) : NumericalError(msg) {}
};

// A least-squares design matrix is singular beyond the ridge rescue.
struct SingularDesign : NumericalError {
  explicit SingularDesign(const std::string& msg) : NumericalError(msg) {}
};

// Cell lookup for a covariate value never seen while fitting.
struct EmptySupport : NumericalError {
  explicit EmptySupport(const std::string& msg) : NumericalError(msg) {}
};

// A covariate cell lacks one arm where the estimator requires both.
struct EmptyCellArm : NumericalError {
  explicit EmptyCellArm(const std::string& msg) : NumericalError(msg) {}
};

// A ratio's denominator is statistically indistinguishable from zero.
struct DegenerateDenominator : NumericalError {
  explicit DegenerateDenominator(const std::string& msg) : NumericalError(msg) {}
};

}  // namespace atelab
