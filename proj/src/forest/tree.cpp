#include "lmrf/forest/tree.hpp"

#include <algorithm>
#include <numeric>

#include "lmrf/common.hpp"
#include "sweep.hpp"

namespace lmrf::forest {

const TerminalEstimate& Tree::find(const FeatureMatrix& x, std::size_t row) const {
  int k = 0;
  while (!nodes[static_cast<std::size_t>(k)].is_terminal()) {
    const auto& node = nodes[static_cast<std::size_t>(k)];
    k = x(row, static_cast<std::size_t>(node.feature)) <= node.threshold ? node.left : node.right;
  }
  return terminals[static_cast<std::size_t>(nodes[static_cast<std::size_t>(k)].terminal)];
}

int Tree::max_depth() const {
  int d = 0;
  for (const auto& n : nodes) d = std::max(d, n.depth);
  return d;
}

TerminalEstimate make_terminal(const Outcome& y, std::span<const std::uint32_t> rows) {
  TerminalEstimate est;
  est.size = static_cast<std::uint32_t>(rows.size());
  if (y.is_classification()) {
    est.class_probs.assign(static_cast<std::size_t>(y.n_classes), 0.0);
    for (auto r : rows) est.class_probs[static_cast<std::size_t>(y.labels[r])] += 1.0;
    for (auto& p : est.class_probs) p /= static_cast<double>(rows.size());
    return est;
  }
  std::vector<TimeToEvent> sample;
  sample.reserve(rows.size());
  for (auto r : rows) sample.push_back(y.times[r]);
  if (y.kind == OutcomeKind::Survival) {
    est.hazard = nelson_aalen(sample);
  } else {
    est.cif = aalen_johansen(sample).cif;
  }
  return est;
}

namespace {

struct Task {
  int node;
  std::size_t begin;
  std::size_t end;
};

template <typename Sweep, typename T>
class Grower {
 public:
  Grower(const FeatureMatrix& x, const Outcome& y, std::span<const T> target, Sweep sweep,
         int mtry, int nodesize, std::mt19937_64& rng)
      : x_(x), y_(y), target_(target), sweep_(std::move(sweep)), mtry_(mtry),
        nodesize_(static_cast<std::size_t>(nodesize)), rng_(rng) {}

  Tree grow(std::span<const std::uint32_t> inbag) {
    idx_.assign(inbag.begin(), inbag.end());
    tree_.nodes.push_back(TreeNode{});
    std::vector<Task> stack{{0, 0, idx_.size()}};
    while (!stack.empty()) {
      const Task task = stack.back();
      stack.pop_back();
      if (!try_split(task, stack)) make_leaf(task);
    }
    return std::move(tree_);
  }

 private:
  bool try_split(const Task& task, std::vector<Task>& stack) {
    const std::size_t n = task.end - task.begin;
    if (n < 2 * nodesize_) return false;
    local_.resize(n);
    for (std::size_t k = 0; k < n; ++k) local_[k] = target_[idx_[task.begin + k]];
    sweep_.prepare(std::span<const T>(local_));
    if (sweep_.degenerate()) return false;

    const std::size_t p = x_.n_features();
    features_.resize(p);
    std::iota(features_.begin(), features_.end(), 0);
    double best = 0.0;
    int best_feature = -1;
    double best_threshold = 0.0;
    for (std::size_t m = 0; m < static_cast<std::size_t>(mtry_); ++m) {
      std::swap(features_[m],
                features_[m + std::uniform_int_distribution<std::size_t>(0, p - m - 1)(rng_)]);
      const std::size_t f = features_[m];
      const auto column = x_.column(f);
      order_.resize(n);
      for (std::size_t k = 0; k < n; ++k) {
        order_[k] = {column[idx_[task.begin + k]], static_cast<std::uint32_t>(k)};
      }
      std::sort(order_.begin(), order_.end());
      if (order_.front().first == order_.back().first) continue;
      sweep_.reset();
      for (std::size_t k = 0; k + 1 < n; ++k) {
        sweep_.move_left(order_[k].second);
        const std::size_t n_left = k + 1;
        if (n_left < nodesize_) continue;
        if (n - n_left < nodesize_) break;
        const double a = order_[k].first;
        const double b = order_[k + 1].first;
        if (a == b) continue;
        const double stat = sweep_.evaluate(n_left);
        if (stat > best) {
          best = stat;
          best_feature = static_cast<int>(f);
          const double mid = a + (b - a) / 2.0;
          best_threshold = mid < b ? mid : a;
        }
      }
    }
    if (best_feature < 0) return false;

    const auto column = x_.column(static_cast<std::size_t>(best_feature));
    const auto first = idx_.begin() + static_cast<std::ptrdiff_t>(task.begin);
    const auto last = idx_.begin() + static_cast<std::ptrdiff_t>(task.end);
    const auto mid = std::stable_partition(
        first, last, [&](std::uint32_t r) { return column[r] <= best_threshold; });
    const std::size_t split = static_cast<std::size_t>(mid - idx_.begin());

    const int depth = tree_.nodes[static_cast<std::size_t>(task.node)].depth;
    const int left = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back(TreeNode{.depth = depth + 1});
    tree_.nodes.push_back(TreeNode{.depth = depth + 1});
    auto& node = tree_.nodes[static_cast<std::size_t>(task.node)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = left;
    node.right = left + 1;
    stack.push_back({left + 1, split, task.end});
    stack.push_back({left, task.begin, split});
    return true;
  }

  void make_leaf(const Task& task) {
    tree_.nodes[static_cast<std::size_t>(task.node)].terminal = static_cast<int>(tree_.terminals.size());
    tree_.terminals.push_back(make_terminal(
        y_, std::span<const std::uint32_t>(idx_.data() + task.begin, task.end - task.begin)));
  }

  const FeatureMatrix& x_;
  const Outcome& y_;
  std::span<const T> target_;
  Sweep sweep_;
  int mtry_;
  std::size_t nodesize_;
  std::mt19937_64& rng_;
  Tree tree_;
  std::vector<std::uint32_t> idx_;
  std::vector<T> local_;
  std::vector<std::size_t> features_;
  std::vector<std::pair<double, std::uint32_t>> order_;
};

void check_rule(const Outcome& y, const SplitRule& rule) {
  const bool ok = (y.is_classification() && rule.kind == SplitRuleKind::Gini) ||
                  (y.kind == OutcomeKind::Survival && rule.kind == SplitRuleKind::Logrank) ||
                  (y.kind == OutcomeKind::CompetingRisks && rule.is_competing_risks());
  if (!ok) {
    throw InvalidInput("split rule " + std::string(to_string(rule.kind)) +
                       " does not fit a " + std::string(to_string(y.kind)) + " outcome");
  }
  rule.validate();
}

}  // namespace

Tree grow_tree(const FeatureMatrix& x, const Outcome& y, std::span<const std::uint32_t> inbag,
               const SplitRule& rule, int mtry, int nodesize, std::mt19937_64& rng) {
  if (inbag.empty()) throw InvalidInput("in-bag sample is empty");
  if (y.size() != x.n_rows()) throw InvalidInput("outcome and feature matrix differ in length");
  if (mtry < 1 || static_cast<std::size_t>(mtry) > x.n_features()) throw InvalidInput("mtry out of range");
  if (nodesize < 1) throw InvalidInput("nodesize must be at least 1");
  check_rule(y, rule);
  if (y.is_classification()) {
    Grower<detail::ClassSweep, int> g(x, y, std::span<const int>(y.labels),
                                      detail::ClassSweep(y.n_classes), mtry, nodesize, rng);
    return g.grow(inbag);
  }
  Grower<detail::LogrankSweep, TimeToEvent> g(x, y, std::span<const TimeToEvent>(y.times),
                                              detail::LogrankSweep(rule), mtry, nodesize, rng);
  return g.grow(inbag);
}

}  // namespace lmrf::forest
