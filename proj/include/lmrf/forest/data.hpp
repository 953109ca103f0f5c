#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "lmrf/cohort.hpp"

namespace lmrf::forest {

/// Dense column-major feature matrix. Values must be finite.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t n_rows, std::vector<std::string> names);

  /// Covariates of every row, optionally followed by the landmark index as
  /// a feature named "lm". Throws InvalidInput on missing values.
  static FeatureMatrix from_table(const LandmarkTable& table, bool include_landmark = false);

  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_features() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

  double operator()(std::size_t row, std::size_t feature) const {
    return data_[feature * n_rows_ + row];
  }
  double& at(std::size_t row, std::size_t feature) { return data_[feature * n_rows_ + row]; }
  std::span<const double> column(std::size_t feature) const {
    return {data_.data() + feature * n_rows_, n_rows_};
  }

 private:
  std::size_t n_rows_ = 0;
  std::vector<std::string> names_;
  std::vector<double> data_;
};

enum class OutcomeKind { Binary, Multinomial, Survival, CompetingRisks };

std::string_view to_string(OutcomeKind kind);
OutcomeKind parse_outcome_kind(std::string_view text);

/// Training targets, one entry per matrix row. Class index 1 is CLABSI for
/// both classification kinds.
struct Outcome {
  OutcomeKind kind = OutcomeKind::Binary;
  std::vector<int> labels;
  int n_classes = 2;
  std::vector<TimeToEvent> times;
  double label_horizon = kDefaultHorizon;  // classification only
  /// Largest horizon a time-to-event model may be queried at. Infinity
  /// means "largest observed time".
  double time_support = std::numeric_limits<double>::infinity();

  static Outcome binary(std::vector<int> labels, double horizon = kDefaultHorizon);
  static Outcome multinomial(std::vector<int> labels, double horizon = kDefaultHorizon);
  static Outcome survival(std::vector<TimeToEvent> times,
                          double support = std::numeric_limits<double>::infinity());
  static Outcome competing_risks(std::vector<TimeToEvent> times,
                                 double support = std::numeric_limits<double>::infinity());

  bool is_classification() const {
    return kind == OutcomeKind::Binary || kind == OutcomeKind::Multinomial;
  }
  std::size_t size() const { return is_classification() ? labels.size() : times.size(); }
  void validate() const;
};

enum class InBagMode { BootstrapByAdmission, SubsampleByAdmission };

struct Hyperparams {
  int n_trees = 1000;
  int mtry = 2;
  int nodesize = 1;
  InBagMode inbag = InBagMode::BootstrapByAdmission;
  double subsample_fraction = 1.0;  // subsample mode only
  std::uint64_t seed = 1;
  std::size_t jobs = 1;  // tree-growth threads; results do not depend on it

  void validate(std::size_t n_features) const;
};

/// Dense 0..G-1 group index per row from admission ids, in order of first
/// appearance.
std::vector<std::uint32_t> admission_groups(const LandmarkTable& table);

}  // namespace lmrf::forest
