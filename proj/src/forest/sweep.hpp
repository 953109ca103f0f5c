#pragma once

// Incremental split-statistic evaluators. A node's sample is addressed by
// local position 0..n-1; the tree grower moves positions to the left
// daughter in feature order and asks for the statistic at each boundary.

#include <cstdint>
#include <span>
#include <vector>

#include "lmrf/cohort.hpp"
#include "lmrf/forest/split_rules.hpp"

namespace lmrf::forest::detail {

/// Gini impurity 1 - sum_c (count_c / n)^2.
inline double gini_impurity(std::span<const double> counts, double n) {
  double sum_sq = 0.0;
  for (double c : counts) {
    const double p = c / n;
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

class ClassSweep {
 public:
  explicit ClassSweep(int n_classes);

  void prepare(std::span<const int> labels);
  bool degenerate() const;  // pure node
  void reset();
  void move_left(std::uint32_t pos);
  double evaluate(std::size_t n_left) const;

  const std::vector<double>& totals() const { return total_; }

 private:
  int n_classes_;
  std::span<const int> labels_;
  std::vector<double> total_;
  std::vector<double> left_;
  mutable std::vector<double> right_;
  double parent_impurity_ = 0.0;
  double n_ = 0.0;
};

class LogrankSweep {
 public:
  explicit LogrankSweep(const SplitRule& rule);

  void prepare(std::span<const TimeToEvent> node);
  bool degenerate() const;  // no events of any weighted type
  void reset();
  void move_left(std::uint32_t pos);
  double evaluate(std::size_t n_left) const;

  /// Per-channel sums at the current left set (channels in cause order).
  std::vector<LogrankTerms> terms() const;

 private:
  struct Channel {
    int cause = 0;  // 0: any nonzero status
    double weight = 1.0;
    std::size_t n_times = 0;          // distinct event times
    std::vector<std::uint32_t> level;  // # event times at which the subject is at risk
    std::vector<std::int32_t> event;   // event-time index, -1 if not an event
    std::vector<double> at_risk;
    std::vector<double> deaths;
    std::vector<double> left_level;
    std::vector<double> left_deaths;
  };

  LogrankTerms channel_terms(const Channel& ch) const;

  SplitRule rule_;
  bool gray_ = false;
  bool score_ = false;
  std::vector<Channel> channels_;
  std::vector<double> scratch_times_;
};

}  // namespace lmrf::forest::detail
