#include "lmrf/harness/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "lmrf/common.hpp"

namespace lmrf::harness {

void ExperimentConfig::validate() const {
  if (schema_version != kSchemaVersion) {
    throw InvalidInput("unsupported config schema_version " + std::to_string(schema_version));
  }
  if (n_splits < 1) throw InvalidInput("n_splits must be at least 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw InvalidInput("train_fraction must lie in (0,1)");
  if (!(horizon > 0.0)) throw InvalidInput("horizon must be positive");
  if (forest.n_trees < 1) throw InvalidInput("forest.n_trees must be at least 1");
  if (forest.mtry < 1) throw InvalidInput("forest.mtry must be at least 1");
  if (forest.nodesize < 1) throw InvalidInput("forest.nodesize must be at least 1");
  if (!(forest.subsample_fraction > 0.0 && forest.subsample_fraction <= 1.0)) {
    throw InvalidInput("forest.subsample_fraction must lie in (0,1]");
  }
  if (tuning.enabled) {
    if (tuning.design_points < 1 || tuning.iterations < 0 || tuning.candidates < 1) {
      throw InvalidInput("invalid tuning budget");
    }
    if (!(tuning.nodesize_min >= 1 && tuning.nodesize_min < tuning.nodesize_max)) {
      throw InvalidInput("tuning nodesize bounds must satisfy 1 <= min < max");
    }
  }
  if (jobs < 1) throw InvalidInput("jobs must be at least 1");
  resolve_variants(variants, mode);
  if (!cohort_csv) simulation.validate();
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = nlohmann::json::object();
  j["schema_version"] = c.schema_version;
  if (c.cohort_csv) {
    j["cohort_csv"] = *c.cohort_csv;
  } else {
    j["simulation"] = c.simulation;
  }
  j["n_splits"] = c.n_splits;
  j["train_fraction"] = c.train_fraction;
  j["horizon"] = c.horizon;
  j["mode"] = to_string(c.mode);
  j["variants"] = c.variants;
  j["forest"] = {{"n_trees", c.forest.n_trees},
                 {"mtry", c.forest.mtry},
                 {"nodesize", c.forest.nodesize},
                 {"subsample_fraction", c.forest.subsample_fraction},
                 {"tree_jobs", c.forest.tree_jobs}};
  nlohmann::json t = {{"enabled", c.tuning.enabled},
                      {"design_points", c.tuning.design_points},
                      {"iterations", c.tuning.iterations},
                      {"candidates", c.tuning.candidates},
                      {"nodesize_min", c.tuning.nodesize_min},
                      {"nodesize_max", c.tuning.nodesize_max}};
  if (c.tuning.n_trees) t["n_trees"] = *c.tuning.n_trees;
  j["tuning"] = std::move(t);
  j["seed"] = c.seed;
  j["out_dir"] = c.out_dir;
  j["jobs"] = c.jobs;
  j["write_curves"] = c.write_curves;
  j["write_importance"] = c.write_importance;
}

namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw InvalidInput("unknown config key '" + where + key + "'");
  }
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object()) throw InvalidInput("config must be a JSON object");
    reject_unknown(j,
                   {"schema_version", "cohort_csv", "simulation", "n_splits", "train_fraction", "horizon",
                    "mode", "variants", "forest", "tuning", "seed", "out_dir", "jobs", "write_curves",
                    "write_importance", "description"},
                   "");
    if (!j.contains("schema_version")) throw InvalidInput("config lacks schema_version");
    ExperimentConfig c;
    c.schema_version = j.at("schema_version");
    if (j.contains("cohort_csv")) c.cohort_csv = j.at("cohort_csv").get<std::string>();
    if (j.contains("simulation")) c.simulation = j.at("simulation").get<sim::SimCohortConfig>();
    c.n_splits = j.value("n_splits", c.n_splits);
    c.train_fraction = j.value("train_fraction", c.train_fraction);
    c.horizon = j.value("horizon", c.horizon);
    if (j.contains("mode")) c.mode = parse_mode(j.at("mode").get<std::string>());
    if (j.contains("variants")) c.variants = j.at("variants").get<std::vector<std::string>>();
    if (j.contains("forest")) {
      const auto& f = j.at("forest");
      reject_unknown(f, {"n_trees", "mtry", "nodesize", "subsample_fraction", "tree_jobs"}, "forest.");
      c.forest.n_trees = f.value("n_trees", c.forest.n_trees);
      c.forest.mtry = f.value("mtry", c.forest.mtry);
      c.forest.nodesize = f.value("nodesize", c.forest.nodesize);
      c.forest.subsample_fraction = f.value("subsample_fraction", c.forest.subsample_fraction);
      c.forest.tree_jobs = f.value("tree_jobs", c.forest.tree_jobs);
    }
    if (j.contains("tuning")) {
      const auto& t = j.at("tuning");
      reject_unknown(t, {"enabled", "design_points", "iterations", "candidates", "n_trees", "nodesize_min",
                         "nodesize_max"},
                     "tuning.");
      c.tuning.enabled = t.value("enabled", c.tuning.enabled);
      c.tuning.design_points = t.value("design_points", c.tuning.design_points);
      c.tuning.iterations = t.value("iterations", c.tuning.iterations);
      c.tuning.candidates = t.value("candidates", c.tuning.candidates);
      if (t.contains("n_trees")) c.tuning.n_trees = t.at("n_trees").get<int>();
      c.tuning.nodesize_min = t.value("nodesize_min", c.tuning.nodesize_min);
      c.tuning.nodesize_max = t.value("nodesize_max", c.tuning.nodesize_max);
    }
    c.seed = j.value("seed", c.seed);
    c.out_dir = j.value("out_dir", c.out_dir);
    c.jobs = j.value("jobs", c.jobs);
    c.write_curves = j.value("write_curves", c.write_curves);
    c.write_importance = j.value("write_importance", c.write_importance);
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed config: ") + e.what());
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("config file " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

void apply_environment(ExperimentConfig& c) {
  if (const char* dir = std::getenv("LMRF_OUT_DIR"); dir && *dir) c.out_dir = dir;
  if (const char* jobs = std::getenv("LMRF_JOBS"); jobs && *jobs) {
    char* end = nullptr;
    const long v = std::strtol(jobs, &end, 10);
    if (*end != '\0' || v < 1) throw InvalidInput("LMRF_JOBS must be a positive integer");
    c.jobs = static_cast<std::size_t>(v);
  }
}

}  // namespace lmrf::harness
