#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lmrf/cohort.hpp"
#include "lmrf/forest/data.hpp"
#include "lmrf/forest/split_rules.hpp"

namespace lmrf::harness {

enum class Mode { Baseline, Dynamic };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view text);

struct VariantSpec {
  std::string name;
  forest::OutcomeKind outcome = forest::OutcomeKind::Binary;
  forest::SplitRule rule;
  std::optional<double> tau;  // administrative censoring; none for classification
  CensorScheme scheme = CensorScheme::AtEventTime;  // survival only
  bool dynamic = false;       // available in dynamic mode
};

/// The 14 baseline variants in table order.
const std::vector<VariantSpec>& all_variants();
std::vector<VariantSpec> variants_for(Mode mode);
std::vector<std::string> variant_names(Mode mode);

/// Throws InvalidInput naming the valid variants when `name` is unknown or
/// unavailable in `mode`.
const VariantSpec& find_variant(std::string_view name, Mode mode);
std::vector<VariantSpec> resolve_variants(const std::vector<std::string>& names, Mode mode);

/// Time-to-event record of one row after the variant's transforms:
/// discretize, administrative censoring at tau, then the censor scheme.
TimeToEvent transform_time(const VariantSpec& variant, const LandmarkRow& row,
                           double horizon = kDefaultHorizon);

/// Training outcome for a variant over a table's rows.
forest::Outcome encode_outcome(const VariantSpec& variant, const LandmarkTable& table,
                               double horizon = kDefaultHorizon);

}  // namespace lmrf::harness
