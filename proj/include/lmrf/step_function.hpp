#pragma once

#include <vector>

namespace lmrf {

/// Right-continuous piecewise-constant function of time. Before the first
/// knot it takes `initial` (1 for survival curves, 0 for hazards and CIFs).
class StepFunction {
 public:
  StepFunction() = default;
  StepFunction(std::vector<double> knots, std::vector<double> values, double initial);

  static StepFunction constant(double value) { return StepFunction({}, {}, value); }

  double operator()(double t) const;

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& values() const { return values_; }
  double initial() const { return initial_; }
  bool empty() const { return knots_.empty(); }

  bool is_nonincreasing() const;
  bool is_nondecreasing() const;

  friend bool operator==(const StepFunction&, const StepFunction&) = default;

 private:
  std::vector<double> knots_;
  std::vector<double> values_;
  double initial_ = 0.0;
};

}  // namespace lmrf
