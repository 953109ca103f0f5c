#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "lmrf/common.hpp"
#include "lmrf/csv.hpp"
#include "lmrf/harness/cli.hpp"
#include "lmrf/harness/config.hpp"
#include "lmrf/harness/experiment.hpp"
#include "lmrf/harness/reports.hpp"
#include "lmrf/harness/variants.hpp"

using namespace lmrf;
using namespace lmrf::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("lmrf_harness_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    for (auto f : csv::split_fields(line)) fields.emplace_back(f);
    rows.push_back(std::move(fields));
  }
  return rows;
}

ExperimentConfig small_config(const fs::path& out) {
  ExperimentConfig c;
  c.simulation.n_admissions = 400;
  c.n_splits = 2;
  c.forest.n_trees = 10;
  c.forest.nodesize = 20;
  c.out_dir = out.string();
  return c;
}

int cli(std::vector<std::string> args, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  if (err_text) *err_text = err.str();
  return code;
}

LandmarkRow row(EventType type, double time) {
  LandmarkRow r;
  r.admission_id = "a";
  r.event_type = type;
  r.event_time = time;
  return r;
}

}  // namespace

TEST_CASE("variant table") {
  const auto& all = all_variants();
  REQUIRE(all.size() == 14);
  std::set<std::string> names;
  for (const auto& v : all) names.insert(v.name);
  CHECK(names.size() == 14);
  const auto dyn = variant_names(Mode::Dynamic);
  CHECK(dyn == std::vector<std::string>{"bin", "multinom", "surv7d", "surv7d_cens7", "CR7d_LRCR_c_1", "CR7d_LR_c_1",
                                        "CR7d_LRCR_c_all", "CR7d_LR_c_all"});
  for (const auto& v : variants_for(Mode::Dynamic)) CHECK((!v.tau || *v.tau == 7.0));

  const auto& lrcr = find_variant("CR30d_LRCR_c_all", Mode::Baseline);
  CHECK(lrcr.rule.kind == forest::SplitRuleKind::CrLogrankCif);
  CHECK(*lrcr.tau == 30.0);
  CHECK(find_variant("CR7d_LR_c_1", Mode::Baseline).rule.weights == std::array<double, 3>{1, 0, 0});
  CHECK(find_variant("surv7d_cens7", Mode::Baseline).scheme == CensorScheme::AtHorizon);

  try {
    find_variant("surv30d", Mode::Dynamic);
    FAIL("expected InvalidInput");
  } catch (const InvalidInput& e) {
    CHECK(std::string(e.what()).find("CR7d_LR_c_all") != std::string::npos);
  }
}

TEST_CASE("variant time transforms") {
  const auto& surv7d = find_variant("surv7d", Mode::Baseline);
  const auto& cens7 = find_variant("surv7d_cens7", Mode::Baseline);
  const auto& cr30 = find_variant("CR30d_LR_c_all", Mode::Baseline);
  CHECK(transform_time(surv7d, row(EventType::Discharge, 6.1)) == TimeToEvent{7, 0});
  CHECK(transform_time(cens7, row(EventType::Discharge, 5.0)) == TimeToEvent{7, 0});
  CHECK(transform_time(surv7d, row(EventType::Clabsi, 6.1)) == TimeToEvent{7, 1});
  CHECK(transform_time(surv7d, row(EventType::Clabsi, 9.5)) == TimeToEvent{7, 0});
  CHECK(transform_time(cr30, row(EventType::Death, 12.2)) == TimeToEvent{13, 2});

  LandmarkTable t;
  t.rows = {row(EventType::Clabsi, 6.1), row(EventType::Death, 2.0)};
  const auto bin = encode_outcome(find_variant("bin", Mode::Baseline), t);
  CHECK(bin.labels == std::vector<int>{1, 0});
  CHECK(bin.times.empty());
  const auto multi = encode_outcome(find_variant("multinom", Mode::Baseline), t);
  CHECK(multi.labels == std::vector<int>{1, 2});
}

TEST_CASE("config JSON") {
  ExperimentConfig c;
  c.n_splits = 7;
  c.variants = {"bin"};
  c.tuning.enabled = true;
  nlohmann::json j = c;
  const auto back = config_from_json(j);
  CHECK(back.n_splits == 7);
  CHECK(back.variants == c.variants);
  CHECK(back.tuning.enabled);

  j["bogus"] = 1;
  CHECK_THROWS_AS(config_from_json(j), InvalidInput);
  nlohmann::json missing = c;
  missing.erase("schema_version");
  CHECK_THROWS_AS(config_from_json(missing), InvalidInput);
  nlohmann::json bad = c;
  bad["n_splits"] = 0;
  CHECK_THROWS_AS(config_from_json(bad), InvalidInput);
  bad = c;
  bad["horizon"] = -1;
  CHECK_THROWS_AS(config_from_json(bad), InvalidInput);
}

TEST_CASE("median and IQR") {
  const auto s = median_iqr({5, 1, 3, 2, 4});
  CHECK(s.median == 3);
  CHECK(s.q1 == 2);
  CHECK(s.q3 == 4);
  CHECK_THROWS_AS(median_iqr({}), InvalidInput);
}

TEST_CASE("splits share row membership and baseline keeps landmark 0") {
  auto c = small_config(scratch("splits"));
  const auto cohort = load_cohort(c);
  const auto s = prepare_split(cohort, 1, c);
  for (const auto& r : s.train.rows) CHECK(r.lm == 0);
  for (const auto& r : s.test.rows) CHECK(r.lm == 0);
  const auto again = prepare_split(cohort, 1, c);
  std::ostringstream a, b;
  write_landmark_csv(a, s.test);
  write_landmark_csv(b, again.test);
  CHECK(a.str() == b.str());

  c.mode = Mode::Dynamic;
  const auto d = prepare_split(cohort, 1, c);
  std::set<int> lms;
  for (const auto& r : d.train.rows) lms.insert(r.lm);
  CHECK(lms.size() > 1);
  for (const auto& r : d.train.rows) {
    for (double v : r.covariates) CHECK(!is_missing(v));
  }
}

TEST_CASE("two splits by two variants") {
  const auto out = scratch("grid");
  auto c = small_config(out);
  c.variants = {"bin", "CR7d_LR_c_1"};
  const auto result = run_experiment(c);
  REQUIRE(result.cells.size() == 4);
  for (const auto& cell : result.cells) CHECK(!cell.error.has_value());
  emit_reports(result, out);

  std::size_t scopes = 0, test_rows = 0;
  for (const auto& cell : result.cells) scopes += cell.metrics.size();
  for (const auto& s : result.splits) test_rows += s.test.rows.size();
  const auto metrics = read_csv(out / "metrics.csv");
  CHECK(metrics[0] == std::vector<std::string>{"split_id", "model", "scope", "lm", "metric", "value"});
  CHECK(metrics.size() - 1 == scopes * 8);
  const auto predictions = read_csv(out / "predictions.csv");
  CHECK(predictions.size() - 1 == test_rows * 2);
  const auto timings = read_csv(out / "timings.csv");
  CHECK(timings.size() - 1 == 4 * 3);
  for (std::size_t i = 1; i < timings.size(); ++i) CHECK(std::stod(timings[i][3]) >= 0);
  CHECK(fs::exists(out / "importance.csv"));
  CHECK(fs::exists(out / "curves" / "net_benefit.csv"));
  CHECK(fs::exists(out / "config.json"));
}

TEST_CASE("summary medians match the metrics file") {
  const auto out = scratch("summary");
  auto c = small_config(out);
  c.n_splits = 3;
  c.variants = {"bin"};
  emit_reports(run_experiment(c), out);
  std::map<std::string, std::vector<double>> pooled;
  for (const auto& r : read_csv(out / "metrics.csv")) {
    if (r[2] == "pooled" && r[5] != "NA") pooled[r[4]].push_back(std::stod(r[5]));
  }
  int checked = 0;
  for (const auto& r : read_csv(out / "summary.csv")) {
    if (r[1] != "pooled" || r[5] == "NA") continue;
    auto v = pooled.at(r[3]);
    REQUIRE(v.size() == 3);
    std::sort(v.begin(), v.end());
    CHECK(std::stod(r[5]) == doctest::Approx(v[1]).epsilon(1e-12));
    CHECK(std::stod(r[6]) == doctest::Approx(0.5 * (v[0] + v[1])).epsilon(1e-12));
    CHECK(std::stod(r[7]) == doctest::Approx(0.5 * (v[1] + v[2])).epsilon(1e-12));
    ++checked;
  }
  CHECK(checked >= 6);
}

TEST_CASE("cell failures are isolated") {
  auto c = small_config(scratch("failure"));
  c.n_splits = 1;
  c.mode = Mode::Dynamic;
  c.forest.subsample_fraction = 1e-6;  // selects no admission, so the fit throws
  c.variants = {"bin"};
  const auto result = run_experiment(c);
  REQUIRE(result.cells.size() == 1);
  CHECK(result.cells[0].error.has_value());
}

TEST_CASE("CLI usage errors") {
  std::string err;
  CHECK(cli({"run-experiment", "--variants", "bin,nope"}, &err) == kExitUsage);
  CHECK(err.find("surv7d_cens7") != std::string::npos);
  CHECK(cli({"frobnicate"}) == kExitUsage);
  CHECK(cli({}) == kExitUsage);
  CHECK(cli({"predict", "--model", "/nonexistent/model.json", "--input", "/nonexistent.csv"}) == kExitData);
}

TEST_CASE("CLI simulate is reproducible") {
  const auto a = scratch("sim_a"), b = scratch("sim_b");
  REQUIRE(cli({"simulate", "--seed", "7", "--out", a.string()}) == kExitOk);
  REQUIRE(cli({"simulate", "--seed", "7", "--out", b.string()}) == kExitOk);
  CHECK(slurp(a / "cohort.csv") == slurp(b / "cohort.csv"));
  CHECK(slurp(a / "truth.csv") == slurp(b / "truth.csv"));
  CHECK(!slurp(a / "cohort.csv").empty());
}

TEST_CASE("CLI split, train, predict, evaluate, importance") {
  const auto dir = scratch("flow");
  const auto cfg = dir / "config.json";
  {
    auto c = small_config(dir);
    c.forest.n_trees = 5;
    std::ofstream(cfg) << nlohmann::json(c).dump();
  }
  REQUIRE(cli({"simulate", "--config", cfg.string(), "--out", dir.string()}) == kExitOk);
  REQUIRE(cli({"split", "--config", cfg.string(), "--input", (dir / "cohort.csv").string(), "--out",
               dir.string()}) == kExitOk);
  REQUIRE(cli({"train", "--config", cfg.string(), "--input", (dir / "train.csv").string(), "--variants",
               "bin,surv7d", "--out", dir.string()}) == kExitOk);
  REQUIRE(fs::exists(dir / "model_surv7d.json"));
  REQUIRE(cli({"predict", "--model", (dir / "model_surv7d.json").string(), "--input",
               (dir / "test.csv").string(), "--out", dir.string()}) == kExitOk);
  const auto preds = read_csv(dir / "predictions.csv");
  CHECK(preds.size() > 1);
  CHECK(preds[1][1] == "surv7d");
  REQUIRE(cli({"evaluate", "--config", cfg.string(), "--input", (dir / "predictions.csv").string(), "--data",
               (dir / "test.csv").string(), "--out", dir.string()}) == kExitOk);
  CHECK(read_csv(dir / "metrics.csv").size() > 8);
  REQUIRE(cli({"importance", "--model", (dir / "model_bin.json").string(), "--out", dir.string()}) == kExitOk);
  CHECK(read_csv(dir / "importance.csv").size() == 9);
}

TEST_CASE("CLI tune writes a trace") {
  const auto dir = scratch("tune");
  const auto cfg = dir / "config.json";
  {
    auto c = small_config(dir);
    c.tuning.design_points = 4;
    c.tuning.iterations = 2;
    c.tuning.candidates = 64;
    c.tuning.n_trees = 5;
    std::ofstream(cfg) << nlohmann::json(c).dump();
  }
  REQUIRE(cli({"simulate", "--config", cfg.string(), "--out", dir.string()}) == kExitOk);
  REQUIRE(cli({"tune", "--config", cfg.string(), "--input", (dir / "cohort.csv").string(), "--variants", "bin"}) ==
          kExitOk);
  const auto trace = read_csv(dir / "tuning_trace.csv");
  CHECK(trace.size() == 7);
  CHECK(trace[0][0] == "step");
  CHECK(fs::exists(dir / "best_hyperparams.json"));
}

TEST_CASE("CLI run-experiment on the bundled example config") {
  const auto dir = scratch("example");
  REQUIRE(cli({"run-experiment", "--config", LMRF_SOURCE_DIR "/configs/example.json", "--out", dir.string()}) ==
          kExitOk);
  CHECK(read_csv(dir / "metrics.csv").size() > 1);
}
