#include "lmrf/forest/data.hpp"

#include <cmath>
#include <unordered_map>

#include "lmrf/common.hpp"

namespace lmrf::forest {

FeatureMatrix::FeatureMatrix(std::size_t n_rows, std::vector<std::string> names)
    : n_rows_(n_rows), names_(std::move(names)), data_(n_rows_ * names_.size(), 0.0) {}

FeatureMatrix FeatureMatrix::from_table(const LandmarkTable& table, bool include_landmark) {
  auto names = table.feature_names;
  if (include_landmark) names.emplace_back("lm");
  const std::size_t p = table.feature_names.size();
  FeatureMatrix m(table.rows.size(), std::move(names));
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    if (row.covariates.size() != p) throw InvalidInput("row has the wrong number of covariates");
    for (std::size_t j = 0; j < p; ++j) {
      const double v = row.covariates[j];
      if (!std::isfinite(v)) {
        throw InvalidInput("feature '" + table.feature_names[j] + "' has a missing value in row " +
                           std::to_string(i) + "; impute before fitting");
      }
      m.at(i, j) = v;
    }
    if (include_landmark) m.at(i, p) = static_cast<double>(row.lm);
  }
  return m;
}

std::string_view to_string(OutcomeKind kind) {
  switch (kind) {
    case OutcomeKind::Binary: return "binary";
    case OutcomeKind::Multinomial: return "multinomial";
    case OutcomeKind::Survival: return "survival";
    case OutcomeKind::CompetingRisks: return "competing_risks";
  }
  return "?";
}

OutcomeKind parse_outcome_kind(std::string_view text) {
  for (auto k : {OutcomeKind::Binary, OutcomeKind::Multinomial, OutcomeKind::Survival,
                 OutcomeKind::CompetingRisks}) {
    if (to_string(k) == text) return k;
  }
  throw InvalidInput("unknown outcome kind '" + std::string(text) + "'");
}

Outcome Outcome::binary(std::vector<int> labels, double horizon) {
  Outcome o;
  o.kind = OutcomeKind::Binary;
  o.labels = std::move(labels);
  o.n_classes = 2;
  o.label_horizon = horizon;
  return o;
}

Outcome Outcome::multinomial(std::vector<int> labels, double horizon) {
  Outcome o;
  o.kind = OutcomeKind::Multinomial;
  o.labels = std::move(labels);
  o.n_classes = 4;
  o.label_horizon = horizon;
  return o;
}

Outcome Outcome::survival(std::vector<TimeToEvent> times, double support) {
  Outcome o;
  o.kind = OutcomeKind::Survival;
  o.times = std::move(times);
  o.time_support = support;
  return o;
}

Outcome Outcome::competing_risks(std::vector<TimeToEvent> times, double support) {
  Outcome o;
  o.kind = OutcomeKind::CompetingRisks;
  o.times = std::move(times);
  o.time_support = support;
  return o;
}

void Outcome::validate() const {
  if (is_classification()) {
    for (int c : labels) {
      if (c < 0 || c >= n_classes) throw InvalidInput("class label out of range");
    }
    return;
  }
  const int max_status = kind == OutcomeKind::Survival ? 1 : 3;
  for (const auto& t : times) {
    if (!(t.time >= 0.0) || !std::isfinite(t.time)) throw InvalidInput("event times must be finite and >= 0");
    if (t.status < 0 || t.status > max_status) {
      throw InvalidInput(kind == OutcomeKind::Survival ? "survival status must be 0 or 1"
                                                       : "competing-risks status must be in 0..3");
    }
  }
  if (!(time_support > 0.0)) throw InvalidInput("time support must be positive");
}

void Hyperparams::validate(std::size_t n_features) const {
  if (n_trees < 1) throw InvalidInput("n_trees must be at least 1");
  if (mtry < 1 || static_cast<std::size_t>(mtry) > n_features) {
    throw InvalidInput("mtry must lie in [1, n_features] (got " + std::to_string(mtry) + ")");
  }
  if (nodesize < 1) throw InvalidInput("nodesize must be at least 1");
  if (!(subsample_fraction > 0.0 && subsample_fraction <= 1.0)) {
    throw InvalidInput("subsample_fraction must lie in (0, 1]");
  }
}

std::vector<std::uint32_t> admission_groups(const LandmarkTable& table) {
  std::unordered_map<std::string, std::uint32_t> index;
  std::vector<std::uint32_t> groups;
  groups.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    auto [it, inserted] = index.try_emplace(row.admission_id, static_cast<std::uint32_t>(index.size()));
    groups.push_back(it->second);
  }
  return groups;
}

}  // namespace lmrf::forest
