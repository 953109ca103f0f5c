#include "lmrf/harness/variants.hpp"

#include <algorithm>
#include <array>

#include "lmrf/common.hpp"

namespace lmrf::harness {

using forest::OutcomeKind;
using forest::SplitRule;

std::string_view to_string(Mode mode) { return mode == Mode::Baseline ? "baseline" : "dynamic"; }

Mode parse_mode(std::string_view text) {
  if (text == "baseline") return Mode::Baseline;
  if (text == "dynamic") return Mode::Dynamic;
  throw InvalidInput("mode must be 'baseline' or 'dynamic'");
}

namespace {

std::vector<VariantSpec> build_table() {
  std::vector<VariantSpec> v;
  v.push_back({"bin", OutcomeKind::Binary, SplitRule::gini(), std::nullopt, CensorScheme::AtEventTime, true});
  v.push_back({"multinom", OutcomeKind::Multinomial, SplitRule::gini(), std::nullopt, CensorScheme::AtEventTime, true});
  v.push_back({"surv7d", OutcomeKind::Survival, SplitRule::logrank(), 7.0, CensorScheme::AtEventTime, true});
  v.push_back({"surv7d_cens7", OutcomeKind::Survival, SplitRule::logrank(), 7.0, CensorScheme::AtHorizon, true});
  v.push_back({"surv30d", OutcomeKind::Survival, SplitRule::logrank(), 30.0, CensorScheme::AtEventTime, false});
  v.push_back({"surv30d_cens7", OutcomeKind::Survival, SplitRule::logrank(), 30.0, CensorScheme::AtHorizon, false});
  const std::array<double, 3> c1{1.0, 0.0, 0.0};
  const std::array<double, 3> call{1.0, 1.0, 1.0};
  for (double tau : {7.0, 30.0}) {
    const std::string prefix = tau == 7.0 ? "CR7d_" : "CR30d_";
    const bool dyn = tau == 7.0;
    v.push_back({prefix + "LRCR_c_1", OutcomeKind::CompetingRisks, SplitRule::cr_logrank_cif(c1), tau, CensorScheme::AtEventTime, dyn});
    v.push_back({prefix + "LR_c_1", OutcomeKind::CompetingRisks, SplitRule::cr_logrank(c1), tau, CensorScheme::AtEventTime, dyn});
    v.push_back({prefix + "LRCR_c_all", OutcomeKind::CompetingRisks, SplitRule::cr_logrank_cif(call), tau, CensorScheme::AtEventTime, dyn});
    v.push_back({prefix + "LR_c_all", OutcomeKind::CompetingRisks, SplitRule::cr_logrank(call), tau, CensorScheme::AtEventTime, dyn});
  }
  return v;
}

std::string join_names(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) out += (out.empty() ? "" : ", ") + n;
  return out;
}

}  // namespace

const std::vector<VariantSpec>& all_variants() {
  static const std::vector<VariantSpec> table = build_table();
  return table;
}

std::vector<VariantSpec> variants_for(Mode mode) {
  std::vector<VariantSpec> out;
  for (const auto& v : all_variants()) {
    if (mode == Mode::Baseline || v.dynamic) out.push_back(v);
  }
  return out;
}

std::vector<std::string> variant_names(Mode mode) {
  std::vector<std::string> out;
  for (const auto& v : variants_for(mode)) out.push_back(v.name);
  return out;
}

const VariantSpec& find_variant(std::string_view name, Mode mode) {
  for (const auto& v : all_variants()) {
    if (v.name == name && (mode == Mode::Baseline || v.dynamic)) return v;
  }
  throw InvalidInput("unknown variant '" + std::string(name) + "' for " + std::string(to_string(mode)) +
                     " mode; valid names: " + join_names(variant_names(mode)));
}

std::vector<VariantSpec> resolve_variants(const std::vector<std::string>& names, Mode mode) {
  if (names.empty()) return variants_for(mode);
  std::vector<VariantSpec> out;
  for (const auto& n : names) {
    const auto& v = find_variant(n, mode);
    if (std::none_of(out.begin(), out.end(), [&](const VariantSpec& s) { return s.name == v.name; })) {
      out.push_back(v);
    }
  }
  return out;
}

TimeToEvent transform_time(const VariantSpec& variant, const LandmarkRow& row, double horizon) {
  if (!variant.tau) throw InvalidInput("variant '" + variant.name + "' has no time-to-event outcome");
  TimeToEvent t = to_competing_risks(row);
  t = discretize_time(t);
  t = administrative_censor(t, *variant.tau);
  if (variant.outcome == OutcomeKind::Survival) t = censor_competing(t, variant.scheme, horizon);
  return t;
}

forest::Outcome encode_outcome(const VariantSpec& variant, const LandmarkTable& table, double horizon) {
  switch (variant.outcome) {
    case OutcomeKind::Binary: {
      std::vector<int> labels;
      for (const auto& r : table.rows) labels.push_back(label_binary(r, horizon));
      return forest::Outcome::binary(std::move(labels), horizon);
    }
    case OutcomeKind::Multinomial: {
      std::vector<int> labels;
      for (const auto& r : table.rows) labels.push_back(static_cast<int>(label_multinomial(r, horizon)));
      return forest::Outcome::multinomial(std::move(labels), horizon);
    }
    case OutcomeKind::Survival:
    case OutcomeKind::CompetingRisks: {
      std::vector<TimeToEvent> times;
      for (const auto& r : table.rows) times.push_back(transform_time(variant, r, horizon));
      return variant.outcome == OutcomeKind::Survival
                 ? forest::Outcome::survival(std::move(times), *variant.tau)
                 : forest::Outcome::competing_risks(std::move(times), *variant.tau);
    }
  }
  throw InvalidInput("unknown outcome kind");
}

}  // namespace lmrf::harness
