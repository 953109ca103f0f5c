#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lmrf/forest/data.hpp"

namespace lmrf::forest {

/// Per-tree in-bag row multisets of a common size.
struct InBagPlan {
  std::size_t minsize = 0;
  std::size_t n_rows = 0;
  std::vector<std::vector<std::uint32_t>> inbag;  // sorted, with repeats

  std::size_t n_trees() const { return inbag.size(); }
  /// Rows not in tree t's in-bag, ascending.
  std::vector<std::uint32_t> oob(std::size_t tree) const;
  /// Membership mask of tree t's in-bag (1 = in-bag).
  std::vector<std::uint8_t> mask(std::size_t tree) const;
};

/// Samples whole admissions per tree (with replacement for bootstrap,
/// round(fraction * G) without replacement for subsampling), expands them to
/// their rows, then trims every in-bag uniformly at random down to the
/// smallest one. `groups` holds a 0-based admission index per row.
InBagPlan plan_inbags(std::span<const std::uint32_t> groups, const Hyperparams& hp);

}  // namespace lmrf::forest
