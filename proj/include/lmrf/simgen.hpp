#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lmrf/cohort.hpp"
#include "lmrf/step_function.hpp"
#include "json.hpp"

namespace lmrf::sim {

inline constexpr int kCauses = 3;

/// Cause-specific exponential hazards: rate_k(x) = baseline_k * exp(beta_k . x).
/// Causes are indexed 0..2 for CLABSI, Death, Discharge.
struct HazardSpec {
  std::array<double, kCauses> baseline{};
  std::array<std::vector<double>, kCauses> beta;

  double rate(int cause, std::span<const double> x) const;
  std::array<double, kCauses> rates(std::span<const double> x) const;
  void validate(std::size_t n_features) const;
};

struct BinaryFeature {
  std::string name;
  double prevalence = 0.5;
};

struct ContinuousFeature {
  std::string name;
  double mean = 0.0;
  double sd = 1.0;
};

/// Feature order in generated rows: all binary features, then all continuous.
struct SimCohortConfig {
  int n_admissions = 2000;
  double mean_episodes_per_admission = 1.12;
  std::vector<BinaryFeature> binary;
  std::vector<ContinuousFeature> continuous;
  HazardSpec hazards;
  double max_followup = 60.0;
  std::vector<double> missingness;  // per feature; empty means none
  std::uint64_t seed = 1;
  std::size_t jobs = 1;

  std::size_t n_features() const { return binary.size() + continuous.size(); }
  std::vector<std::string> feature_names() const;
  void validate() const;

  /// Cohort with roughly 3% CLABSI / 5% Death / 92% Discharge episodes and
  /// covariates that act on all three causes.
  static SimCohortConfig defaults();
};

void to_json(nlohmann::json& j, const SimCohortConfig& c);
void from_json(const nlohmann::json& j, SimCohortConfig& c);

struct SimCohort {
  LandmarkTable table;
  /// Closed-form 7-day CLABSI risk per row, same order as table.rows.
  std::vector<double> true_risk;
};

SimCohort simulate_cohort(const SimCohortConfig& config, double horizon = kDefaultHorizon);

/// Closed-form cumulative incidence of each cause by time t.
std::array<double, kCauses> true_cif(std::span<const double> covariates, const HazardSpec& spec,
                                     double t);
double true_binary_risk(std::span<const double> covariates, const HazardSpec& spec,
                        double horizon = kDefaultHorizon);

/// Aalen-Johansen CIF per cause over the episodes (LM0 rows) of a cohort.
std::array<StepFunction, kCauses> empirical_cif(const LandmarkTable& cohort);

/// Truth CSV: admission_id,episode_id,lm,true_risk_7d
void write_truth_csv(const std::string& path, const SimCohort& cohort);

}  // namespace lmrf::sim
