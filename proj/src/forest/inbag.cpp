#include "lmrf/forest/inbag.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "lmrf/common.hpp"

namespace lmrf::forest {

namespace {

constexpr std::uint64_t kDrawStream = 0x696e626167ULL;
constexpr std::uint64_t kTrimStream = 0x7472696dULL;

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace

std::vector<std::uint32_t> InBagPlan::oob(std::size_t tree) const {
  const auto m = mask(tree);
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < n_rows; ++i) {
    if (!m[i]) out.push_back(static_cast<std::uint32_t>(i));
  }
  return out;
}

std::vector<std::uint8_t> InBagPlan::mask(std::size_t tree) const {
  std::vector<std::uint8_t> m(n_rows, 0);
  for (auto r : inbag.at(tree)) m[r] = 1;
  return m;
}

InBagPlan plan_inbags(std::span<const std::uint32_t> groups, const Hyperparams& hp) {
  if (groups.empty()) throw InvalidInput("cannot plan in-bags for an empty training set");
  if (hp.n_trees < 1) throw InvalidInput("n_trees must be at least 1");
  std::uint32_t n_groups = 0;
  for (auto g : groups) n_groups = std::max(n_groups, g + 1);
  std::vector<std::vector<std::uint32_t>> rows_of(n_groups);
  for (std::size_t i = 0; i < groups.size(); ++i) rows_of[groups[i]].push_back(static_cast<std::uint32_t>(i));

  std::size_t draws = n_groups;
  if (hp.inbag == InBagMode::SubsampleByAdmission) {
    if (!(hp.subsample_fraction > 0.0 && hp.subsample_fraction <= 1.0)) {
      throw InvalidInput("subsample_fraction must lie in (0, 1]");
    }
    draws = static_cast<std::size_t>(std::llround(hp.subsample_fraction * n_groups));
    if (draws == 0) throw InvalidInput("subsample fraction selects no admissions");
  }

  InBagPlan plan;
  plan.n_rows = groups.size();
  plan.inbag.resize(static_cast<std::size_t>(hp.n_trees));
  const std::uint64_t draw_seed = derive_seed(hp.seed, kDrawStream);
  const std::uint64_t trim_seed = derive_seed(hp.seed, kTrimStream);

  std::vector<std::uint32_t> pool(n_groups);
  for (std::size_t t = 0; t < plan.inbag.size(); ++t) {
    std::mt19937_64 rng(derive_seed(draw_seed, t));
    auto& bag = plan.inbag[t];
    if (hp.inbag == InBagMode::BootstrapByAdmission) {
      for (std::size_t k = 0; k < draws; ++k) {
        const auto& r = rows_of[uniform_index(rng, n_groups)];
        bag.insert(bag.end(), r.begin(), r.end());
      }
    } else {
      for (std::uint32_t g = 0; g < n_groups; ++g) pool[g] = g;
      for (std::size_t k = 0; k < draws; ++k) {
        std::swap(pool[k], pool[k + uniform_index(rng, n_groups - k)]);
        const auto& r = rows_of[pool[k]];
        bag.insert(bag.end(), r.begin(), r.end());
      }
    }
  }

  plan.minsize = plan.inbag.front().size();
  for (const auto& bag : plan.inbag) plan.minsize = std::min(plan.minsize, bag.size());

  for (std::size_t t = 0; t < plan.inbag.size(); ++t) {
    auto& bag = plan.inbag[t];
    if (bag.size() > plan.minsize) {
      std::mt19937_64 rng(derive_seed(trim_seed, t));
      for (std::size_t k = 0; k < plan.minsize; ++k) {
        std::swap(bag[k], bag[k + uniform_index(rng, bag.size() - k)]);
      }
      bag.resize(plan.minsize);
    }
    std::sort(bag.begin(), bag.end());
  }
  return plan;
}

}  // namespace lmrf::forest
