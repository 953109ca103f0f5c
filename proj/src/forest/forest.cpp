#include "lmrf/forest/forest.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "lmrf/common.hpp"

namespace lmrf::forest {

namespace {

constexpr std::uint64_t kTreeStream = 0x74726565ULL;
constexpr int kFormatVersion = 1;

void check_rule(OutcomeKind kind, const SplitRule& rule) {
  const bool classification = kind == OutcomeKind::Binary || kind == OutcomeKind::Multinomial;
  const bool ok = (classification && rule.kind == SplitRuleKind::Gini) ||
                  (kind == OutcomeKind::Survival && rule.kind == SplitRuleKind::Logrank) ||
                  (kind == OutcomeKind::CompetingRisks && rule.is_competing_risks());
  if (!ok) {
    throw InvalidInput("split rule " + std::string(to_string(rule.kind)) + " does not fit a " +
                       std::string(to_string(kind)) + " outcome");
  }
  rule.validate();
}

bool is_classification(const Forest& f) {
  return f.kind == OutcomeKind::Binary || f.kind == OutcomeKind::Multinomial;
}

void check_query(const Forest& forest, const FeatureMatrix& x, double horizon) {
  if (forest.trees.empty()) throw InvalidInput("forest has no trees");
  if (x.names() != forest.feature_names) {
    throw InvalidInput("feature columns do not match the ones the forest was trained on");
  }
  if (is_classification(forest)) {
    if (horizon != forest.label_horizon) {
      throw InvalidInput("classification forest was trained for horizon " +
                         std::to_string(forest.label_horizon) + " only");
    }
  } else if (!(horizon >= 0.0) || horizon > forest.time_support) {
    throw InvalidInput("horizon " + std::to_string(horizon) + " lies beyond the model's support of " +
                       std::to_string(forest.time_support) + " days");
  }
}

double tree_value(const Forest& forest, const TerminalEstimate& est, double horizon) {
  switch (forest.kind) {
    case OutcomeKind::Binary:
    case OutcomeKind::Multinomial: return est.class_probs[1];
    case OutcomeKind::Survival: return est.hazard(horizon);
    case OutcomeKind::CompetingRisks: return est.cif[0](horizon);
  }
  return 0.0;
}

double aggregate(const Forest& forest, std::span<const double> values) {
  const double m = pairwise_sum(values) / static_cast<double>(values.size());
  if (forest.kind == OutcomeKind::Survival) return -std::expm1(-m);
  return std::clamp(m, 0.0, 1.0);
}

}  // namespace

Forest fit(const FeatureMatrix& x, const Outcome& y, std::span<const std::uint32_t> groups,
           const SplitRule& rule, const Hyperparams& hp) {
  const auto started = std::chrono::steady_clock::now();
  y.validate();
  if (x.n_rows() == 0) throw InvalidInput("training set is empty");
  if (y.size() != x.n_rows()) throw InvalidInput("outcome and feature matrix differ in length");
  if (groups.size() != x.n_rows()) throw InvalidInput("need one admission group per row");
  hp.validate(x.n_features());
  check_rule(y.kind, rule);

  Forest forest;
  forest.kind = y.kind;
  forest.rule = rule;
  forest.hyperparams = hp;
  forest.feature_names = x.names();
  forest.n_classes = y.is_classification() ? y.n_classes : 0;
  forest.label_horizon = y.label_horizon;
  if (!y.is_classification()) {
    double max_time = 0.0;
    for (const auto& t : y.times) max_time = std::max(max_time, t.time);
    forest.time_support = std::isfinite(y.time_support) ? y.time_support : max_time;
  }
  forest.plan = plan_inbags(groups, hp);
  forest.trees.resize(static_cast<std::size_t>(hp.n_trees));
  const std::uint64_t tree_seed = derive_seed(hp.seed, kTreeStream);
  parallel_for(forest.trees.size(), hp.jobs, [&](std::size_t t) {
    std::mt19937_64 rng(derive_seed(tree_seed, t));
    forest.trees[t] = grow_tree(x, y, forest.plan.inbag[t], rule, hp.mtry, hp.nodesize, rng);
  });
  forest.fit_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return forest;
}

std::vector<double> predict_risk(const Forest& forest, const FeatureMatrix& x, double horizon,
                                 std::size_t jobs) {
  check_query(forest, x, horizon);
  std::vector<double> risk(x.n_rows());
  constexpr std::size_t kBlock = 256;
  const std::size_t n_blocks = (x.n_rows() + kBlock - 1) / kBlock;
  parallel_for(n_blocks, jobs, [&](std::size_t b) {
    std::vector<double> values(forest.trees.size());
    const std::size_t end = std::min(x.n_rows(), (b + 1) * kBlock);
    for (std::size_t i = b * kBlock; i < end; ++i) {
      for (std::size_t t = 0; t < forest.trees.size(); ++t) {
        values[t] = tree_value(forest, forest.trees[t].find(x, i), horizon);
      }
      risk[i] = aggregate(forest, values);
    }
  });
  return risk;
}

std::vector<double> predict_cif(const Forest& forest, const FeatureMatrix& x, std::size_t row,
                                std::span<const double> times) {
  if (forest.kind != OutcomeKind::CompetingRisks) throw InvalidInput("predict_cif needs a competing-risks forest");
  if (forest.trees.empty()) throw InvalidInput("forest has no trees");
  std::vector<const TerminalEstimate*> leaves;
  for (const auto& tree : forest.trees) leaves.push_back(&tree.find(x, row));
  std::vector<double> out, values(leaves.size());
  for (double t : times) {
    for (std::size_t k = 0; k < leaves.size(); ++k) values[k] = leaves[k]->cif[0](t);
    out.push_back(pairwise_sum(values) / static_cast<double>(values.size()));
  }
  return out;
}

std::vector<std::optional<double>> oob_predict(const Forest& forest, const FeatureMatrix& x,
                                               double horizon) {
  check_query(forest, x, horizon);
  if (forest.plan.n_trees() != forest.trees.size() || forest.plan.n_rows != x.n_rows()) {
    throw InvalidInput("out-of-bag prediction needs the forest's own training rows");
  }
  std::vector<std::vector<std::uint8_t>> masks;
  masks.reserve(forest.trees.size());
  for (std::size_t t = 0; t < forest.trees.size(); ++t) masks.push_back(forest.plan.mask(t));

  std::vector<std::optional<double>> out(x.n_rows());
  std::vector<double> values;
  for (std::size_t i = 0; i < x.n_rows(); ++i) {
    values.clear();
    for (std::size_t t = 0; t < forest.trees.size(); ++t) {
      if (masks[t][i]) continue;
      values.push_back(tree_value(forest, forest.trees[t].find(x, i), horizon));
    }
    if (!values.empty()) out[i] = aggregate(forest, values);
  }
  return out;
}

std::vector<FeatureImportance> minimal_depth_importance(const Forest& forest) {
  const std::size_t p = forest.feature_names.size();
  std::vector<double> depth_sum(p, 0.0), used(p, 0.0);
  for (const auto& tree : forest.trees) {
    std::vector<int> shallowest(p, std::numeric_limits<int>::max());
    for (const auto& node : tree.nodes) {
      if (node.is_terminal()) continue;
      auto& d = shallowest[static_cast<std::size_t>(node.feature)];
      d = std::min(d, node.depth);
    }
    const int unused = tree.max_depth() + 1;
    for (std::size_t j = 0; j < p; ++j) {
      if (shallowest[j] == std::numeric_limits<int>::max()) {
        depth_sum[j] += unused;
      } else {
        depth_sum[j] += shallowest[j];
        used[j] += 1.0;
      }
    }
  }
  const double n = static_cast<double>(std::max<std::size_t>(1, forest.trees.size()));
  std::vector<FeatureImportance> out;
  for (std::size_t j = 0; j < p; ++j) {
    out.push_back({forest.feature_names[j], depth_sum[j] / n, used[j] / n});
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::json step_json(const StepFunction& f) {
  return {{"t", f.knots()}, {"v", f.values()}, {"i", f.initial()}};
}

StepFunction step_from_json(const nlohmann::json& j) {
  return StepFunction(j.at("t").get<std::vector<double>>(), j.at("v").get<std::vector<double>>(),
                      j.at("i").get<double>());
}

std::string_view to_string(InBagMode m) {
  return m == InBagMode::BootstrapByAdmission ? "bootstrap" : "subsample";
}

}  // namespace

nlohmann::json to_json(const Forest& forest) {
  using nlohmann::json;
  json j;
  j["format"] = "lmrf-forest";
  j["version"] = kFormatVersion;
  j["outcome"] = to_string(forest.kind);
  j["split_rule"] = {{"kind", to_string(forest.rule.kind)}, {"weights", forest.rule.weights}};
  const auto& hp = forest.hyperparams;
  j["hyperparams"] = {{"n_trees", hp.n_trees},
                      {"mtry", hp.mtry},
                      {"nodesize", hp.nodesize},
                      {"inbag", to_string(hp.inbag)},
                      {"subsample_fraction", hp.subsample_fraction},
                      {"seed", hp.seed}};
  j["feature_names"] = forest.feature_names;
  j["n_classes"] = forest.n_classes;
  j["label_horizon"] = forest.label_horizon;
  j["time_support"] = forest.time_support;
  json trees = json::array();
  for (const auto& tree : forest.trees) {
    json nodes = json::array();
    for (const auto& n : tree.nodes) {
      nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right, n.depth, n.terminal}));
    }
    json terminals = json::array();
    for (const auto& t : tree.terminals) {
      json e = {{"n", t.size}};
      switch (forest.kind) {
        case OutcomeKind::Binary:
        case OutcomeKind::Multinomial: e["p"] = t.class_probs; break;
        case OutcomeKind::Survival: e["hazard"] = step_json(t.hazard); break;
        case OutcomeKind::CompetingRisks:
          e["cif"] = json::array({step_json(t.cif[0]), step_json(t.cif[1]), step_json(t.cif[2])});
          break;
      }
      terminals.push_back(std::move(e));
    }
    trees.push_back({{"nodes", std::move(nodes)}, {"terminals", std::move(terminals)}});
  }
  j["trees"] = std::move(trees);
  return j;
}

Forest forest_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", "") != "lmrf-forest") throw DataError("not a forest model file");
    if (j.at("version").get<int>() != kFormatVersion) throw DataError("unsupported model version");
    Forest f;
    f.kind = parse_outcome_kind(j.at("outcome").get<std::string>());
    f.rule.kind = parse_split_rule_kind(j.at("split_rule").at("kind").get<std::string>());
    f.rule.weights = j.at("split_rule").at("weights").get<std::array<double, 3>>();
    const auto& h = j.at("hyperparams");
    f.hyperparams.n_trees = h.at("n_trees");
    f.hyperparams.mtry = h.at("mtry");
    f.hyperparams.nodesize = h.at("nodesize");
    f.hyperparams.inbag = h.at("inbag").get<std::string>() == "subsample"
                              ? InBagMode::SubsampleByAdmission
                              : InBagMode::BootstrapByAdmission;
    f.hyperparams.subsample_fraction = h.at("subsample_fraction");
    f.hyperparams.seed = h.at("seed");
    f.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    f.n_classes = j.at("n_classes");
    f.label_horizon = j.at("label_horizon");
    f.time_support = j.at("time_support");
    for (const auto& jt : j.at("trees")) {
      Tree tree;
      for (const auto& n : jt.at("nodes")) {
        tree.nodes.push_back(TreeNode{n.at(0), n.at(1), n.at(2), n.at(3), n.at(4), n.at(5)});
      }
      for (const auto& e : jt.at("terminals")) {
        TerminalEstimate t;
        t.size = e.at("n");
        if (e.contains("p")) t.class_probs = e.at("p").get<std::vector<double>>();
        if (e.contains("hazard")) t.hazard = step_from_json(e.at("hazard"));
        if (e.contains("cif")) {
          for (std::size_t k = 0; k < kCauses; ++k) t.cif[k] = step_from_json(e.at("cif").at(k));
        }
        tree.terminals.push_back(std::move(t));
      }
      const auto n_nodes = static_cast<int>(tree.nodes.size());
      const auto n_terminals = static_cast<int>(tree.terminals.size());
      for (const auto& n : tree.nodes) {
        const bool bad = n.is_terminal()
                             ? (n.terminal < 0 || n.terminal >= n_terminals)
                             : (n.left <= 0 || n.left >= n_nodes || n.right <= 0 || n.right >= n_nodes ||
                                static_cast<std::size_t>(n.feature) >= f.feature_names.size());
        if (bad) throw DataError("corrupt tree structure in model file");
      }
      f.trees.push_back(std::move(tree));
    }
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  } catch (const InvalidInput& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
}

}  // namespace lmrf::forest
