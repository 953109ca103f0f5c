#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lmrf/harness/variants.hpp"
#include "lmrf/simgen.hpp"

namespace lmrf::harness {

inline constexpr int kSchemaVersion = 1;

/// Forest settings used when tuning is off (and n_trees always).
struct ForestSettings {
  int n_trees = 1000;
  int mtry = 3;
  int nodesize = 500;
  double subsample_fraction = 0.5;  // dynamic mode
  std::size_t tree_jobs = 1;
};

struct TuningSettings {
  bool enabled = false;
  int design_points = 20;
  int iterations = 30;
  int candidates = 1024;
  std::optional<int> n_trees;  // trees per objective evaluation; default = forest n_trees
  double nodesize_min = 50;
  double nodesize_max = 4000;
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  std::optional<std::string> cohort_csv;
  sim::SimCohortConfig simulation = sim::SimCohortConfig::defaults();
  int n_splits = 100;
  double train_fraction = 2.0 / 3.0;
  double horizon = kDefaultHorizon;
  Mode mode = Mode::Baseline;
  std::vector<std::string> variants;  // empty = every variant of the mode
  ForestSettings forest;
  TuningSettings tuning;
  std::uint64_t seed = 1;
  std::string out_dir = "results";
  std::size_t jobs = 1;
  bool write_curves = true;
  bool write_importance = true;

  void validate() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
/// Unknown keys are rejected; a missing schema_version is an error.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

/// LMRF_OUT_DIR and LMRF_JOBS, when set, override the file's values.
void apply_environment(ExperimentConfig& c);

}  // namespace lmrf::harness
