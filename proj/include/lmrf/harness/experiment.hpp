#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lmrf/cohort.hpp"
#include "lmrf/forest/forest.hpp"
#include "lmrf/harness/config.hpp"
#include "lmrf/harness/variants.hpp"
#include "lmrf/metrics.hpp"
#include "lmrf/tuning/mbo.hpp"

namespace lmrf::harness {

/// Train/test rows of one split, imputed with constants learned on train.
/// Baseline mode keeps only landmark 0.
struct PreparedSplit {
  int split_id = 0;
  LandmarkTable train;
  LandmarkTable test;
  SimpleImputer imputer;
};

PreparedSplit prepare_split(const LandmarkTable& cohort, int split_id, const ExperimentConfig& config);

struct CellSettings {
  Mode mode = Mode::Baseline;
  double horizon = kDefaultHorizon;
  ForestSettings forest;
  TuningSettings tuning;
  std::uint64_t seed = 1;
};

CellSettings cell_settings(const ExperimentConfig& config, int split_id, std::string_view variant);

struct PhaseTiming {
  double tune = 0.0;
  double build = 0.0;
  double predict = 0.0;
};

struct VariantOutput {
  std::vector<double> risk;  // per test row
  std::vector<int> outcome;  // 7-day CLABSI label per test row
  PhaseTiming timing;
  forest::Hyperparams hyperparams;
  bool tuned = false;
  std::vector<tuning::TracePoint> trace;
  std::vector<forest::FeatureImportance> importance;
};

/// Feature matrix for a mode (dynamic mode appends the landmark index).
forest::FeatureMatrix features_for(const LandmarkTable& table, Mode mode);

forest::Hyperparams hyperparams_from_point(std::span<const double> x, Mode mode, int n_trees,
                                           std::uint64_t seed, std::size_t tree_jobs);
tuning::SearchSpace search_space(Mode mode, std::size_t n_features, const TuningSettings& tuning);

/// Out-of-bag binary logloss at the horizon for one hyperparameter setting.
double tuning_objective(const VariantSpec& variant, const LandmarkTable& train,
                        const forest::Hyperparams& hp, Mode mode, double horizon);

/// Fit the variant on train (tuning first if enabled) and predict test.
VariantOutput variant_pipeline(const VariantSpec& variant, const LandmarkTable& train,
                               const LandmarkTable& test, const CellSettings& settings);

struct CellResult {
  int split_id = 0;
  std::string model;
  std::optional<std::string> error;
  VariantOutput output;
  std::vector<metrics::StratumReport> metrics;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<PreparedSplit> splits;  // splits[k].split_id == k + 1
  std::vector<CellResult> cells;      // split-major, variants in table order
};

/// Runs every split x variant cell. Cell failures are recorded, not thrown.
ExperimentResult run_experiment(const ExperimentConfig& config);
ExperimentResult run_experiment(const ExperimentConfig& config, const LandmarkTable& cohort);

/// Cohort named by the config: the CSV file, or a fresh simulation.
LandmarkTable load_cohort(const ExperimentConfig& config);

}  // namespace lmrf::harness
