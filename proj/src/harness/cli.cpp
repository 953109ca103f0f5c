#include "lmrf/harness/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <tuple>

#include "CLI11.hpp"
#include "lmrf/common.hpp"
#include "lmrf/csv.hpp"
#include "lmrf/harness/config.hpp"
#include "lmrf/harness/experiment.hpp"
#include "lmrf/harness/reports.hpp"
#include "lmrf/simgen.hpp"

namespace lmrf::harness {

namespace fs = std::filesystem;

namespace {

struct CommonFlags {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> variants;
  std::optional<std::string> mode;
  std::optional<std::size_t> jobs;
  std::optional<std::string> input;
  std::optional<std::string> model;
  std::optional<std::string> data;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON config file");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--variants", f.variants, "comma-separated model variants");
  cmd->add_option("--mode", f.mode, "baseline or dynamic");
  cmd->add_option("--jobs", f.jobs, "worker threads")->check(CLI::PositiveNumber);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto item = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + " is not valid JSON: " + e.what());
  }
}

ExperimentConfig resolve_config(const CommonFlags& f) {
  ExperimentConfig c = f.config ? load_config(*f.config) : ExperimentConfig{};
  apply_environment(c);
  if (f.seed) c.seed = *f.seed;
  if (f.out) c.out_dir = *f.out;
  if (f.jobs) c.jobs = *f.jobs;
  if (f.mode) c.mode = parse_mode(*f.mode);
  if (f.variants) c.variants = split_list(*f.variants);
  c.validate();
  return c;
}

std::string require(const std::optional<std::string>& v, const char* flag) {
  if (!v) throw InvalidInput(std::string("missing required option ") + flag);
  return *v;
}

LandmarkTable prepare_table(const std::string& path, Mode mode) {
  auto table = read_landmark_csv(path);
  if (mode == Mode::Baseline) table = filter_landmark(table, 0);
  if (table.rows.empty()) throw DataError(path + " has no usable rows");
  return table;
}

// ---------------------------------------------------------------------------

int cmd_simulate(const CommonFlags& f, std::ostream& out) {
  sim::SimCohortConfig sim = sim::SimCohortConfig::defaults();
  double horizon = kDefaultHorizon;
  std::string dir = "results";
  if (f.config) {
    const auto j = read_json(*f.config);
    if (j.contains("schema_version")) {
      const auto c = config_from_json(j);
      sim = c.simulation;
      horizon = c.horizon;
      dir = c.out_dir;
    } else {
      try {
        sim = j.get<sim::SimCohortConfig>();
      } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed simulation config: ") + e.what());
      }
    }
  }
  if (const char* env = std::getenv("LMRF_OUT_DIR"); env && *env) dir = env;
  if (f.out) dir = *f.out;
  if (f.seed) sim.seed = *f.seed;
  if (f.jobs) sim.jobs = *f.jobs;
  const auto cohort = sim::simulate_cohort(sim, horizon);
  fs::create_directories(dir);
  write_landmark_csv((fs::path(dir) / "cohort.csv").string(), cohort.table);
  sim::write_truth_csv((fs::path(dir) / "truth.csv").string(), cohort);
  out << "wrote " << cohort.table.rows.size() << " landmark rows to " << (fs::path(dir) / "cohort.csv").string()
      << '\n';
  return kExitOk;
}

int cmd_split(const CommonFlags& f, std::ostream& out) {
  const auto c = resolve_config(f);
  const std::string input = f.input ? *f.input : c.cohort_csv.value_or("");
  if (input.empty()) throw InvalidInput("split needs --input or cohort_csv in the config");
  const auto cohort = read_landmark_csv(input);
  const auto split = split_by_admission(cohort.rows, c.train_fraction, c.seed);
  fs::create_directories(c.out_dir);
  write_landmark_csv((fs::path(c.out_dir) / "train.csv").string(), subset(cohort, split.train));
  write_landmark_csv((fs::path(c.out_dir) / "test.csv").string(), subset(cohort, split.test));
  out << "train rows " << split.train.size() << ", test rows " << split.test.size() << '\n';
  return kExitOk;
}

nlohmann::json imputer_json(const SimpleImputer& imp) {
  std::vector<std::string> policies;
  for (const auto& p : imp.policies()) policies.push_back(to_string(p));
  return {{"policies", policies}, {"constants", imp.constants()}};
}

SimpleImputer imputer_from_json(const nlohmann::json& j) {
  std::vector<ImputePolicy> policies;
  for (const auto& p : j.at("policies")) policies.push_back(parse_impute_policy(p.get<std::string>()));
  return SimpleImputer(std::move(policies), j.at("constants").get<std::vector<double>>());
}

int cmd_train(const CommonFlags& f, std::ostream& out) {
  const auto c = resolve_config(f);
  auto train = prepare_table(require(f.input, "--input"), c.mode);
  const auto imputer = SimpleImputer::fit(train, default_impute_policies(train, c.mode == Mode::Dynamic));
  imputer.apply(train);
  const auto x = features_for(train, c.mode);
  fs::create_directories(c.out_dir);
  for (const auto& variant : resolve_variants(c.variants, c.mode)) {
    const auto settings = cell_settings(c, 0, variant.name);
    const std::vector<double> point{
        static_cast<double>(std::min<std::size_t>(static_cast<std::size_t>(c.forest.mtry), x.n_features())),
        static_cast<double>(c.forest.nodesize), c.forest.subsample_fraction};
    const auto hp = hyperparams_from_point(point, c.mode, c.forest.n_trees, settings.seed, c.jobs);
    const auto model = forest::fit(x, encode_outcome(variant, train, c.horizon), forest::admission_groups(train),
                                   variant.rule, hp);
    nlohmann::json j = {{"format", "lmrf-model"},
                        {"variant", variant.name},
                        {"mode", to_string(c.mode)},
                        {"horizon", c.horizon},
                        {"imputer", imputer_json(imputer)},
                        {"forest", forest::to_json(model)}};
    const auto path = fs::path(c.out_dir) / ("model_" + variant.name + ".json");
    csv::write_atomically(path, [&](std::ostream& o) { o << j.dump() << '\n'; });
    out << "wrote " << path.string() << '\n';
  }
  return kExitOk;
}

struct LoadedModel {
  std::string variant;
  Mode mode = Mode::Baseline;
  double horizon = kDefaultHorizon;
  SimpleImputer imputer;
  forest::Forest forest;
};

LoadedModel load_model(const std::string& path) {
  const auto j = read_json(path);
  try {
    if (j.value("format", "") != "lmrf-model") throw DataError(path + " is not a model file");
    LoadedModel m;
    m.variant = j.at("variant").get<std::string>();
    m.mode = parse_mode(j.at("mode").get<std::string>());
    m.horizon = j.at("horizon").get<double>();
    m.imputer = imputer_from_json(j.at("imputer"));
    m.forest = forest::forest_from_json(j.at("forest"));
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": malformed model file: " + e.what());
  } catch (const InvalidInput& e) {
    throw DataError(path + ": malformed model file: " + e.what());
  }
}

int cmd_predict(const CommonFlags& f, std::ostream& out) {
  const auto m = load_model(require(f.model, "--model"));
  auto table = prepare_table(require(f.input, "--input"), m.mode);
  m.imputer.apply(table);
  const auto risk = forest::predict_risk(m.forest, features_for(table, m.mode), m.horizon, f.jobs.value_or(1));
  std::string dir = f.out.value_or("results");
  fs::create_directories(dir);
  const auto path = fs::path(dir) / "predictions.csv";
  csv::write_atomically(path, [&](std::ostream& o) {
    o << "split_id,model,admission_id,episode_id,lm,risk\n";
    for (std::size_t i = 0; i < risk.size(); ++i) {
      const auto& r = table.rows[i];
      o << 0 << ',' << m.variant << ',' << r.admission_id << ',' << r.episode_id << ',' << r.lm << ','
        << csv::format_double(risk[i]) << '\n';
    }
  });
  out << "wrote " << risk.size() << " predictions to " << path.string() << '\n';
  return kExitOk;
}

int cmd_evaluate(const CommonFlags& f, std::ostream& out) {
  const auto c = resolve_config(f);
  const auto cohort = read_landmark_csv(require(f.data, "--data"));
  std::map<std::tuple<std::string, int, int>, const LandmarkRow*> rows;
  for (const auto& r : cohort.rows) rows[{r.admission_id, r.episode_id, r.lm}] = &r;

  const std::string input = require(f.input, "--input");
  std::ifstream in(input);
  if (!in) throw DataError("cannot open " + input);
  std::string line;
  if (!std::getline(in, line) || line != "split_id,model,admission_id,episode_id,lm,risk") {
    throw DataError(input + " lacks the predictions header");
  }
  struct Group {
    std::vector<double> p;
    std::vector<int> y;
    std::vector<int> lm;
  };
  std::map<std::pair<long long, std::string>, Group> groups;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = csv::split_fields(line);
    if (fields.size() != 6) throw DataError(input + ":" + std::to_string(line_no) + ": expected 6 fields");
    const auto key = std::make_tuple(std::string(fields[2]), static_cast<int>(csv::parse_int(fields[3])),
                                     static_cast<int>(csv::parse_int(fields[4])));
    const auto it = rows.find(key);
    if (it == rows.end()) throw DataError(input + ":" + std::to_string(line_no) + ": row not found in --data");
    auto& g = groups[{csv::parse_int(fields[0]), std::string(fields[1])}];
    g.p.push_back(csv::parse_double(fields[5]));
    g.y.push_back(label_binary(*it->second, c.horizon));
    g.lm.push_back(std::get<2>(key));
  }
  fs::create_directories(c.out_dir);
  const auto path = fs::path(c.out_dir) / "metrics.csv";
  csv::write_atomically(path, [&](std::ostream& o) {
    o << "split_id,model,scope,lm,metric,value\n";
    for (const auto& [key, g] : groups) {
      for (const auto& stratum : metrics::per_landmark(g.p, g.y, g.lm)) {
        for (const auto& v : stratum.values) {
          o << key.first << ',' << key.second << ',' << (stratum.lm ? "per-lm" : "pooled") << ','
            << (stratum.lm ? std::to_string(*stratum.lm) : "") << ',' << v.metric << ','
            << csv::format_optional(v.value) << '\n';
        }
      }
    }
  });
  out << "wrote " << path.string() << '\n';
  return kExitOk;
}

int cmd_tune(const CommonFlags& f, std::ostream& out) {
  auto c = resolve_config(f);
  auto train = prepare_table(require(f.input, "--input"), c.mode);
  const auto imputer = SimpleImputer::fit(train, default_impute_policies(train, c.mode == Mode::Dynamic));
  imputer.apply(train);
  const std::size_t p = features_for(train, c.mode).n_features();
  fs::create_directories(c.out_dir);
  nlohmann::json best = nlohmann::json::object();
  const auto variants = resolve_variants(c.variants, c.mode);
  for (const auto& variant : variants) {
    const auto settings = cell_settings(c, 0, variant.name);
    const int trees = c.tuning.n_trees.value_or(c.forest.n_trees);
    const std::uint64_t objective_seed = derive_seed(settings.seed, 2);
    const tuning::Objective objective = [&](std::span<const double> x) {
      return tuning_objective(variant, train, hyperparams_from_point(x, c.mode, trees, objective_seed, c.jobs),
                              c.mode, c.horizon);
    };
    tuning::TuneOptions opts;
    opts.design_points = c.tuning.design_points;
    opts.iterations = c.tuning.iterations;
    opts.candidates = c.tuning.candidates;
    opts.seed = derive_seed(settings.seed, 1);
    const auto result = tuning::tune(objective, search_space(c.mode, p, c.tuning), opts);
    const auto name = variants.size() == 1 ? std::string("tuning_trace.csv") : "tuning_trace_" + variant.name + ".csv";
    csv::write_atomically(fs::path(c.out_dir) / name,
                          [&](std::ostream& o) { write_trace_csv(o, result.trace); });
    nlohmann::json b = {{"mtry", result.best[0]}, {"nodesize", result.best[1]}, {"objective", result.best_objective}};
    if (result.best.size() > 2) b["subsample_fraction"] = result.best[2];
    best[variant.name] = b;
    out << variant.name << ": best logloss " << csv::format_double(result.best_objective) << " at mtry "
        << result.best[0] << ", nodesize " << result.best[1] << '\n';
  }
  csv::write_atomically(fs::path(c.out_dir) / "best_hyperparams.json",
                        [&](std::ostream& o) { o << best.dump(2) << '\n'; });
  return kExitOk;
}

int cmd_run_experiment(const CommonFlags& f, std::ostream& out, std::ostream& err) {
  const auto c = resolve_config(f);
  const auto result = run_experiment(c);
  emit_reports(result, c.out_dir);
  std::size_t failed = 0;
  for (const auto& cell : result.cells) {
    if (cell.error) {
      ++failed;
      err << "split " << cell.split_id << ", " << cell.model << ": " << *cell.error << '\n';
    }
  }
  out << result.cells.size() - failed << " of " << result.cells.size() << " cells succeeded; reports in "
      << c.out_dir << '\n';
  return failed == result.cells.size() ? kExitData : kExitOk;
}

int cmd_importance(const CommonFlags& f, std::ostream& out) {
  const auto m = load_model(require(f.model, "--model"));
  std::string dir = f.out.value_or("results");
  fs::create_directories(dir);
  const auto path = fs::path(dir) / "importance.csv";
  csv::write_atomically(path, [&](std::ostream& o) {
    o << "split_id,model,feature,mean_min_depth,usage\n";
    for (const auto& imp : forest::minimal_depth_importance(m.forest)) {
      o << 0 << ',' << m.variant << ',' << imp.feature << ',' << csv::format_double(imp.mean_min_depth) << ','
        << csv::format_double(imp.usage) << '\n';
    }
  });
  out << "wrote " << path.string() << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Landmark random forests for 7-day CLABSI risk"};
  app.require_subcommand(1);
  CommonFlags flags;

  auto* simulate = app.add_subcommand("simulate", "simulate a landmark cohort");
  auto* split = app.add_subcommand("split", "split a cohort into train and test by admission");
  auto* train = app.add_subcommand("train", "fit model variants and save them as JSON");
  auto* predict = app.add_subcommand("predict", "predict 7-day risk with a saved model");
  auto* evaluate = app.add_subcommand("evaluate", "compute metrics for a predictions file");
  auto* tune = app.add_subcommand("tune", "tune mtry/nodesize on out-of-bag logloss");
  auto* run = app.add_subcommand("run-experiment", "run the full split x variant experiment");
  auto* importance = app.add_subcommand("importance", "minimal-depth importance of a saved model");
  for (auto* cmd : {simulate, split, train, predict, evaluate, tune, run, importance}) add_common(cmd, flags);
  for (auto* cmd : {split, train, predict, evaluate, tune}) cmd->add_option("--input", flags.input, "input CSV");
  for (auto* cmd : {predict, importance}) cmd->add_option("--model", flags.model, "model JSON");
  evaluate->add_option("--data", flags.data, "landmark CSV holding the outcomes");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(flags, out);
    if (split->parsed()) return cmd_split(flags, out);
    if (train->parsed()) return cmd_train(flags, out);
    if (predict->parsed()) return cmd_predict(flags, out);
    if (evaluate->parsed()) return cmd_evaluate(flags, out);
    if (tune->parsed()) return cmd_tune(flags, out);
    if (run->parsed()) return cmd_run_experiment(flags, out, err);
    if (importance->parsed()) return cmd_importance(flags, out);
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace lmrf::harness
