#include "lmrf/step_function.hpp"

#include <algorithm>

#include "lmrf/common.hpp"

namespace lmrf {

StepFunction::StepFunction(std::vector<double> knots, std::vector<double> values, double initial)
    : knots_(std::move(knots)), values_(std::move(values)), initial_(initial) {
  if (knots_.size() != values_.size()) {
    throw InvalidInput("StepFunction: knots and values differ in length");
  }
  if (!std::is_sorted(knots_.begin(), knots_.end()) ||
      std::adjacent_find(knots_.begin(), knots_.end()) != knots_.end()) {
    throw InvalidInput("StepFunction: knots must be strictly increasing");
  }
}

double StepFunction::operator()(double t) const {
  auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  if (it == knots_.begin()) return initial_;
  return values_[static_cast<std::size_t>(it - knots_.begin()) - 1];
}

bool StepFunction::is_nonincreasing() const {
  double prev = initial_;
  for (double v : values_) {
    if (v > prev) return false;
    prev = v;
  }
  return true;
}

bool StepFunction::is_nondecreasing() const {
  double prev = initial_;
  for (double v : values_) {
    if (v < prev) return false;
    prev = v;
  }
  return true;
}

}  // namespace lmrf
