#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>

#include "lmrf/cohort.hpp"

namespace lmrf::forest {

enum class SplitRuleKind {
  Gini,          // class impurity decrease
  Logrank,       // two-sample logrank on a survival outcome
  CrLogrank,     // weighted sum of cause-specific logrank chi-squares
  CrLogrankCif,  // weighted sum of Gray-type (subdistribution) chi-squares
};

struct SplitRule {
  SplitRuleKind kind = SplitRuleKind::Gini;
  std::array<double, 3> weights{1.0, 1.0, 1.0};  // causes 1..3, CR rules only

  static SplitRule gini() { return {SplitRuleKind::Gini, {1.0, 1.0, 1.0}}; }
  static SplitRule logrank() { return {SplitRuleKind::Logrank, {1.0, 1.0, 1.0}}; }
  static SplitRule cr_logrank(std::array<double, 3> w) { return {SplitRuleKind::CrLogrank, w}; }
  static SplitRule cr_logrank_cif(std::array<double, 3> w) { return {SplitRuleKind::CrLogrankCif, w}; }

  bool is_competing_risks() const {
    return kind == SplitRuleKind::CrLogrank || kind == SplitRuleKind::CrLogrankCif;
  }
  void validate() const;

  friend bool operator==(const SplitRule&, const SplitRule&) = default;
};

std::string_view to_string(SplitRuleKind kind);
SplitRuleKind parse_split_rule_kind(std::string_view text);

/// Sums entering a two-sample logrank test for one event type.
struct LogrankTerms {
  double observed_minus_expected = 0.0;  // O - E for the left daughter
  double variance = 0.0;

  double score() const;       // |O - E| / sqrt(V), 0 when V = 0
  double chi_square() const;  // (O - E)^2 / V, 0 when V = 0
};

// Split statistics for an explicit left/right partition of a node. Larger is
// better. These share the sweep code used during tree growth.

/// Gini impurity decrease G(parent) - sum_side (n_side / n) G(side).
double split_gini(std::span<const int> left_labels, std::span<const int> right_labels,
                  int n_classes);

/// Standardized logrank |O - E| / sqrt(V); any nonzero status is an event.
double split_logrank(std::span<const TimeToEvent> left, std::span<const TimeToEvent> right);
LogrankTerms logrank_terms(std::span<const TimeToEvent> left, std::span<const TimeToEvent> right);

/// sum_k w_k chi_k^2 with cause-k events as events and everything else
/// censored at its own time.
double split_cr_logrank(std::span<const TimeToEvent> left, std::span<const TimeToEvent> right,
                        const std::array<double, 3>& weights);

/// sum_k w_k chi_k^2 on subdistribution risk sets: subjects with a competing
/// event stay at risk until the node's largest observed time. Valid only
/// when the data carry no random censoring.
double split_cr_logrank_cif(std::span<const TimeToEvent> left, std::span<const TimeToEvent> right,
                            const std::array<double, 3>& weights);

}  // namespace lmrf::forest
