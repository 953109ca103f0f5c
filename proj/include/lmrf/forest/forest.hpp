#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lmrf/forest/data.hpp"
#include "lmrf/forest/inbag.hpp"
#include "lmrf/forest/split_rules.hpp"
#include "lmrf/forest/tree.hpp"

namespace lmrf::forest {

struct Forest {
  OutcomeKind kind = OutcomeKind::Binary;
  SplitRule rule;
  Hyperparams hyperparams;
  std::vector<std::string> feature_names;
  int n_classes = 2;
  double label_horizon = kDefaultHorizon;
  double time_support = 0.0;
  std::vector<Tree> trees;

  // Training-only state; not serialized.
  InBagPlan plan;
  double fit_seconds = 0.0;
};

/// Grows hp.n_trees trees over an admission-level in-bag plan. `groups`
/// gives the admission index of every row (see admission_groups).
Forest fit(const FeatureMatrix& x, const Outcome& y, std::span<const std::uint32_t> groups,
           const SplitRule& rule, const Hyperparams& hp);

/// CLABSI risk by `horizon` for every row of x: class-1 probability for
/// classification forests, 1 - exp(-mean H(horizon)) for survival forests,
/// mean CIF_1(horizon) for competing-risks forests.
std::vector<double> predict_risk(const Forest& forest, const FeatureMatrix& x,
                                 double horizon = kDefaultHorizon, std::size_t jobs = 1);

/// Per-tree CIF_1 averaged over trees at each time in `times` for one row.
std::vector<double> predict_cif(const Forest& forest, const FeatureMatrix& x, std::size_t row,
                                std::span<const double> times);

/// Out-of-bag risk for the training rows the forest was fitted on; absent for
/// rows that were in every tree's in-bag.
std::vector<std::optional<double>> oob_predict(const Forest& forest, const FeatureMatrix& x,
                                               double horizon = kDefaultHorizon);

struct FeatureImportance {
  std::string feature;
  double mean_min_depth = 0.0;
  double usage = 0.0;  // fraction of trees splitting on the feature
};

/// Minimal depth of the shallowest split on each feature (root = 0),
/// averaged over trees; trees that never use a feature count their maximum
/// depth + 1.
std::vector<FeatureImportance> minimal_depth_importance(const Forest& forest);

nlohmann::json to_json(const Forest& forest);
Forest forest_from_json(const nlohmann::json& j);

}  // namespace lmrf::forest
