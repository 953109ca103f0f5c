#include "lmrf/harness/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "lmrf/common.hpp"

namespace lmrf::harness {

namespace {

constexpr std::uint64_t kSplitStream = 0x73706c6974ULL;
constexpr std::uint64_t kTuneStream = 1;
constexpr std::uint64_t kObjectiveStream = 2;
constexpr std::uint64_t kFinalStream = 3;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

}  // namespace

PreparedSplit prepare_split(const LandmarkTable& cohort, int split_id, const ExperimentConfig& config) {
  const auto split = split_by_admission(cohort.rows, config.train_fraction,
                                        derive_seed(derive_seed(config.seed, kSplitStream),
                                                    static_cast<std::uint64_t>(split_id)));
  PreparedSplit out;
  out.split_id = split_id;
  out.train = subset(cohort, split.train);
  out.test = subset(cohort, split.test);
  if (config.mode == Mode::Baseline) {
    out.train = filter_landmark(out.train, 0);
    out.test = filter_landmark(out.test, 0);
  }
  if (out.train.rows.empty() || out.test.rows.empty()) {
    throw InvalidInput("split " + std::to_string(split_id) + " left an empty train or test set");
  }
  const bool dynamic = config.mode == Mode::Dynamic;
  out.imputer = SimpleImputer::fit(out.train, default_impute_policies(out.train, dynamic));
  out.imputer.apply(out.train);
  out.imputer.apply(out.test);
  return out;
}

CellSettings cell_settings(const ExperimentConfig& config, int split_id, std::string_view variant) {
  CellSettings s;
  s.mode = config.mode;
  s.horizon = config.horizon;
  s.forest = config.forest;
  s.tuning = config.tuning;
  s.seed = derive_seed(derive_seed(config.seed, static_cast<std::uint64_t>(split_id)), fnv1a(variant));
  return s;
}

forest::FeatureMatrix features_for(const LandmarkTable& table, Mode mode) {
  return forest::FeatureMatrix::from_table(table, mode == Mode::Dynamic);
}

forest::Hyperparams hyperparams_from_point(std::span<const double> x, Mode mode, int n_trees,
                                           std::uint64_t seed, std::size_t tree_jobs) {
  forest::Hyperparams hp;
  hp.n_trees = n_trees;
  hp.mtry = static_cast<int>(std::lround(x[0]));
  hp.nodesize = static_cast<int>(std::lround(x[1]));
  if (mode == Mode::Dynamic) {
    hp.inbag = forest::InBagMode::SubsampleByAdmission;
    hp.subsample_fraction = x[2];
  }
  hp.seed = seed;
  hp.jobs = tree_jobs;
  return hp;
}

tuning::SearchSpace search_space(Mode mode, std::size_t n_features, const TuningSettings& tuning) {
  auto space = tuning::SearchSpace::forest(mode == Mode::Dynamic, n_features);
  space.dims[1].lower = tuning.nodesize_min;
  space.dims[1].upper = tuning.nodesize_max;
  space.validate();
  return space;
}

double tuning_objective(const VariantSpec& variant, const LandmarkTable& train,
                        const forest::Hyperparams& hp, Mode mode, double horizon) {
  const auto x = features_for(train, mode);
  const auto groups = forest::admission_groups(train);
  const auto model = forest::fit(x, encode_outcome(variant, train, horizon), groups, variant.rule, hp);
  const auto oob = forest::oob_predict(model, x, horizon);
  std::vector<double> p;
  std::vector<int> y;
  for (std::size_t i = 0; i < oob.size(); ++i) {
    if (!oob[i]) continue;
    p.push_back(*oob[i]);
    y.push_back(label_binary(train.rows[i], horizon));
  }
  if (p.empty()) throw InvalidInput("no row has an out-of-bag prediction");
  return metrics::logloss(p, y);
}

VariantOutput variant_pipeline(const VariantSpec& variant, const LandmarkTable& train,
                               const LandmarkTable& test, const CellSettings& settings) {
  VariantOutput out;
  const auto x_train = features_for(train, settings.mode);
  const std::size_t p = x_train.n_features();

  auto hp = hyperparams_from_point(
      std::vector<double>{static_cast<double>(std::min<std::size_t>(static_cast<std::size_t>(settings.forest.mtry), p)),
                          static_cast<double>(settings.forest.nodesize), settings.forest.subsample_fraction},
      settings.mode, settings.forest.n_trees, derive_seed(settings.seed, kFinalStream), settings.forest.tree_jobs);

  auto started = Clock::now();
  if (settings.tuning.enabled) {
    const auto space = search_space(settings.mode, p, settings.tuning);
    const int tune_trees = settings.tuning.n_trees.value_or(settings.forest.n_trees);
    const std::uint64_t objective_seed = derive_seed(settings.seed, kObjectiveStream);
    const tuning::Objective objective = [&](std::span<const double> point) {
      return tuning_objective(variant, train,
                              hyperparams_from_point(point, settings.mode, tune_trees, objective_seed,
                                                     settings.forest.tree_jobs),
                              settings.mode, settings.horizon);
    };
    tuning::TuneOptions opts;
    opts.design_points = settings.tuning.design_points;
    opts.iterations = settings.tuning.iterations;
    opts.candidates = settings.tuning.candidates;
    opts.seed = derive_seed(settings.seed, kTuneStream);
    const auto tuned = tuning::tune(objective, space, opts);
    out.trace = tuned.trace;
    if (!std::isfinite(tuned.best_objective)) throw InvalidInput("every tuning evaluation failed");
    hp = hyperparams_from_point(tuned.best, settings.mode, settings.forest.n_trees,
                                derive_seed(settings.seed, kFinalStream), settings.forest.tree_jobs);
    out.tuned = true;
  }
  out.timing.tune = seconds_since(started);

  started = Clock::now();
  const auto model = forest::fit(x_train, encode_outcome(variant, train, settings.horizon),
                                 forest::admission_groups(train), variant.rule, hp);
  out.timing.build = seconds_since(started);

  started = Clock::now();
  const auto x_test = features_for(test, settings.mode);
  out.risk = forest::predict_risk(model, x_test, settings.horizon, settings.forest.tree_jobs);
  out.timing.predict = seconds_since(started);

  out.outcome.reserve(test.rows.size());
  for (const auto& r : test.rows) out.outcome.push_back(label_binary(r, settings.horizon));
  out.hyperparams = hp;
  out.importance = forest::minimal_depth_importance(model);
  return out;
}

LandmarkTable load_cohort(const ExperimentConfig& config) {
  if (config.cohort_csv) return read_landmark_csv(*config.cohort_csv);
  auto sim = config.simulation;
  sim.jobs = config.jobs;
  return sim::simulate_cohort(sim, config.horizon).table;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  return run_experiment(config, load_cohort(config));
}

ExperimentResult run_experiment(const ExperimentConfig& config, const LandmarkTable& cohort) {
  config.validate();
  const auto variants = resolve_variants(config.variants, config.mode);
  ExperimentResult result;
  result.config = config;
  result.splits.resize(static_cast<std::size_t>(config.n_splits));
  parallel_for(result.splits.size(), config.jobs, [&](std::size_t k) {
    result.splits[k] = prepare_split(cohort, static_cast<int>(k) + 1, config);
  });

  result.cells.resize(result.splits.size() * variants.size());
  parallel_for(result.cells.size(), config.jobs, [&](std::size_t c) {
    const auto& split = result.splits[c / variants.size()];
    const auto& variant = variants[c % variants.size()];
    auto& cell = result.cells[c];
    cell.split_id = split.split_id;
    cell.model = variant.name;
    try {
      cell.output = variant_pipeline(variant, split.train, split.test,
                                     cell_settings(config, split.split_id, variant.name));
      std::vector<int> lm;
      for (const auto& r : split.test.rows) lm.push_back(r.lm);
      cell.metrics = metrics::per_landmark(cell.output.risk, cell.output.outcome, lm);
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
  });
  return result;
}

}  // namespace lmrf::harness
