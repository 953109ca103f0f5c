#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "lmrf/forest/data.hpp"
#include "lmrf/forest/estimators.hpp"
#include "lmrf/forest/split_rules.hpp"
#include "lmrf/step_function.hpp"

namespace lmrf::forest {

/// Estimate stored at a terminal node; only the member matching the forest's
/// outcome kind is filled.
struct TerminalEstimate {
  std::vector<double> class_probs;
  StepFunction hazard;                 // survival: Nelson-Aalen, all events
  std::array<StepFunction, kCauses> cif;  // competing risks: Aalen-Johansen
  std::uint32_t size = 0;

  friend bool operator==(const TerminalEstimate&, const TerminalEstimate&) = default;
};

struct TreeNode {
  int feature = -1;  // -1 for terminals
  double threshold = 0.0;  // x <= threshold goes left
  int left = -1;
  int right = -1;
  int depth = 0;
  int terminal = -1;  // index into Tree::terminals

  bool is_terminal() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  std::vector<TerminalEstimate> terminals;

  const TerminalEstimate& find(const FeatureMatrix& x, std::size_t row) const;
  int max_depth() const;

  friend bool operator==(const Tree&, const Tree&) = default;
};

/// Grows one tree on the in-bag multiset. Deterministic given the rng state.
Tree grow_tree(const FeatureMatrix& x, const Outcome& y, std::span<const std::uint32_t> inbag,
               const SplitRule& rule, int mtry, int nodesize, std::mt19937_64& rng);

/// Terminal estimate over a set of training rows (with repeats).
TerminalEstimate make_terminal(const Outcome& y, std::span<const std::uint32_t> rows);

}  // namespace lmrf::forest
