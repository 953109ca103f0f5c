#include "lmrf/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <tuple>

#include "lmrf/common.hpp"
#include "lmrf/csv.hpp"

namespace lmrf {

std::string_view to_string(EventType type) {
  switch (type) {
    case EventType::Censored: return "Censored";
    case EventType::Clabsi: return "CLABSI";
    case EventType::Death: return "Death";
    case EventType::Discharge: return "Discharge";
  }
  return "?";
}

EventType parse_event_type(std::string_view text) {
  if (text == "CLABSI") return EventType::Clabsi;
  if (text == "Death") return EventType::Death;
  if (text == "Discharge") return EventType::Discharge;
  throw DataError("unknown event type '" + std::string(text) + "'");
}

std::size_t LandmarkTable::feature_index(std::string_view name) const {
  auto it = std::find(feature_names.begin(), feature_names.end(), name);
  if (it == feature_names.end()) throw InvalidInput("no feature named '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - feature_names.begin());
}

std::vector<CatheterEpisode> assemble_episodes(
    std::span<const CatheterInterval> intervals,
    const std::map<std::string, AdmissionEvent>& admission_events, double gap_days) {
  std::map<std::string, std::vector<CatheterInterval>> by_admission;
  for (const auto& iv : intervals) {
    if (!(iv.start >= 0.0) || !(iv.end > iv.start)) {
      throw InvalidInput("catheter interval of admission " + iv.admission_id +
                         " must satisfy 0 <= start < end");
    }
    by_admission[iv.admission_id].push_back(iv);
  }

  std::vector<CatheterEpisode> episodes;
  for (auto& [admission, list] : by_admission) {
    std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) {
      return std::tie(a.start, a.end) < std::tie(b.start, b.end);
    });

    const AdmissionEvent* terminal = nullptr;
    if (auto it = admission_events.find(admission); it != admission_events.end()) {
      if (it->second.type == EventType::Censored) {
        throw InvalidInput("admission " + admission + " has a censored terminal event");
      }
      terminal = &it->second;
    }

    // Merged [start, last removal] windows.
    std::vector<std::pair<double, double>> merged;
    for (const auto& iv : list) {
      if (!merged.empty() && iv.start - merged.back().second < gap_days) {
        merged.back().second = std::max(merged.back().second, iv.end);
      } else {
        merged.emplace_back(iv.start, iv.end);
      }
    }

    int next_id = 1;
    for (const auto& [start, removal] : merged) {
      if (terminal && terminal->time <= start) break;
      const double window_end = removal + gap_days;
      CatheterEpisode ep;
      ep.admission_id = admission;
      ep.episode_id = next_id++;
      ep.start = start;
      if (terminal && terminal->time <= window_end) {
        ep.event_type = terminal->type;
        ep.event_time = terminal->time - start;
      } else {
        ep.event_type = EventType::Discharge;
        ep.event_time = window_end - start;
      }
      episodes.push_back(std::move(ep));
      if (terminal && terminal->time <= window_end) break;
    }
  }
  return episodes;
}

std::vector<LandmarkRow> build_landmarks(const CatheterEpisode& episode,
                                         const CovariateSource& covariates) {
  if (!(episode.event_time > 0.0)) throw InvalidInput("episode event_time must be positive");
  std::vector<LandmarkRow> rows;
  for (int lm = 0; static_cast<double>(lm) < episode.event_time; ++lm) {
    LandmarkRow row;
    row.admission_id = episode.admission_id;
    row.episode_id = episode.episode_id;
    row.lm = lm;
    if (covariates) row.covariates = covariates(episode, lm);
    row.event_type = episode.event_type;
    row.event_time = episode.event_time;
    rows.push_back(std::move(row));
  }
  return rows;
}

int label_binary(const LandmarkRow& row, double horizon) {
  if (!(horizon > 0.0)) throw InvalidInput("horizon must be positive");
  return row.event_type == EventType::Clabsi && row.residual() <= horizon ? 1 : 0;
}

HorizonClass label_multinomial(const LandmarkRow& row, double horizon) {
  if (!(horizon > 0.0)) throw InvalidInput("horizon must be positive");
  if (row.residual() > horizon || row.event_type == EventType::Censored) {
    return HorizonClass::NoEvent;
  }
  return static_cast<HorizonClass>(static_cast<int>(row.event_type));
}

TimeToEvent to_competing_risks(const LandmarkRow& row) {
  const double residual = row.residual();
  if (!(residual > 0.0)) throw InvalidInput("landmark at or after the event (nonpositive residual time)");
  return {residual, static_cast<int>(row.event_type)};
}

TimeToEvent censor_competing(TimeToEvent t, CensorScheme scheme, double horizon) {
  if (t.status <= 1) return t;
  if (scheme == CensorScheme::AtHorizon && t.time < horizon) return {horizon, 0};
  return {t.time, 0};
}

TimeToEvent to_survival(const LandmarkRow& row, CensorScheme scheme, double horizon) {
  return censor_competing(to_competing_risks(row), scheme, horizon);
}

TimeToEvent discretize_time(TimeToEvent t) { return {std::ceil(t.time), t.status}; }

TimeToEvent administrative_censor(TimeToEvent t, double tau) {
  if (t.time > tau) return {tau, 0};
  return t;
}

AdmissionSplit split_by_admission(std::span<const LandmarkRow> rows, double train_fraction,
                                  std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidInput("train fraction must lie strictly between 0 and 1");
  }
  std::vector<std::string> admissions;
  admissions.reserve(rows.size());
  for (const auto& r : rows) admissions.push_back(r.admission_id);
  std::sort(admissions.begin(), admissions.end());
  admissions.erase(std::unique(admissions.begin(), admissions.end()), admissions.end());
  if (admissions.size() < 2) throw InvalidInput("need at least two admissions to split");

  std::mt19937_64 rng(seed);
  std::shuffle(admissions.begin(), admissions.end(), rng);
  const auto n = static_cast<long>(admissions.size());
  const long n_train = std::clamp(std::lround(train_fraction * static_cast<double>(n)), 1L, n - 1);
  std::sort(admissions.begin(), admissions.begin() + n_train);

  AdmissionSplit split;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const bool in_train =
        std::binary_search(admissions.begin(), admissions.begin() + n_train, rows[i].admission_id);
    (in_train ? split.train : split.test).push_back(i);
  }
  return split;
}

LandmarkTable subset(const LandmarkTable& table, std::span<const std::size_t> indices) {
  LandmarkTable out;
  out.feature_names = table.feature_names;
  out.rows.reserve(indices.size());
  for (std::size_t i : indices) out.rows.push_back(table.rows.at(i));
  return out;
}

LandmarkTable filter_landmark(const LandmarkTable& table, int lm) {
  LandmarkTable out;
  out.feature_names = table.feature_names;
  for (const auto& r : table.rows) {
    if (r.lm == lm) out.rows.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------

ImputePolicy parse_impute_policy(std::string_view text) {
  if (text == "mean") return ImputePolicy::mean();
  if (text == "mode") return ImputePolicy::mode();
  if (text == "locf") return ImputePolicy::locf();
  if (text.starts_with("fixed:")) {
    const double v = csv::parse_double(text.substr(6));
    if (std::isnan(v)) throw InvalidInput("fixed imputation value must be a number");
    return ImputePolicy::fixed(v);
  }
  throw InvalidInput("unknown imputation policy '" + std::string(text) +
                     "' (expected mean, mode, locf or fixed:<value>)");
}

std::string to_string(const ImputePolicy& policy) {
  switch (policy.kind) {
    case ImputeKind::Mean: return "mean";
    case ImputeKind::Mode: return "mode";
    case ImputeKind::Locf: return "locf";
    case ImputeKind::Fixed: return "fixed:" + csv::format_double(policy.fixed_value);
  }
  return "?";
}

SimpleImputer::SimpleImputer(std::vector<ImputePolicy> policies, std::vector<double> constants)
    : policies_(std::move(policies)), constants_(std::move(constants)) {
  if (policies_.size() != constants_.size()) {
    throw InvalidInput("imputer: one constant per policy required");
  }
}

SimpleImputer SimpleImputer::fit(const LandmarkTable& train, std::vector<ImputePolicy> policies) {
  const std::size_t p = train.feature_names.size();
  if (policies.size() != p) throw InvalidInput("imputer: one policy per feature required");
  std::vector<double> constants(p, 0.0);
  std::vector<double> observed;
  for (std::size_t j = 0; j < p; ++j) {
    const auto& policy = policies[j];
    if (policy.kind == ImputeKind::Fixed) {
      constants[j] = policy.fixed_value;
      continue;
    }
    observed.clear();
    for (const auto& r : train.rows) {
      if (!is_missing(r.covariates[j])) observed.push_back(r.covariates[j]);
    }
    if (observed.empty()) {
      throw InvalidInput("feature '" + train.feature_names[j] +
                         "' is entirely missing in the training data");
    }
    if (policy.kind == ImputeKind::Mode) {
      std::sort(observed.begin(), observed.end());
      double best = observed.front();
      std::size_t best_count = 0;
      for (std::size_t i = 0; i < observed.size();) {
        std::size_t k = i;
        while (k < observed.size() && observed[k] == observed[i]) ++k;
        if (k - i > best_count) {
          best_count = k - i;
          best = observed[i];
        }
        i = k;
      }
      constants[j] = best;
    } else {
      constants[j] = mean(observed);
    }
  }
  return SimpleImputer(std::move(policies), std::move(constants));
}

void SimpleImputer::apply(LandmarkTable& table) const {
  const std::size_t p = policies_.size();
  if (table.feature_names.size() != p) throw InvalidInput("imputer: feature count mismatch");

  const bool any_locf = std::any_of(policies_.begin(), policies_.end(),
                                    [](const auto& pol) { return pol.kind == ImputeKind::Locf; });
  if (any_locf) {
    std::vector<std::size_t> order(table.rows.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const auto& ra = table.rows[a];
      const auto& rb = table.rows[b];
      return std::tie(ra.admission_id, ra.episode_id, ra.lm) <
             std::tie(rb.admission_id, rb.episode_id, rb.lm);
    });
    std::vector<double> last(p, kMissing);
    const LandmarkRow* prev = nullptr;
    for (std::size_t idx : order) {
      auto& row = table.rows[idx];
      if (!prev || prev->admission_id != row.admission_id || prev->episode_id != row.episode_id) {
        std::fill(last.begin(), last.end(), kMissing);
      }
      for (std::size_t j = 0; j < p; ++j) {
        if (policies_[j].kind != ImputeKind::Locf) continue;
        double& v = row.covariates[j];
        if (!is_missing(v)) {
          last[j] = v;
        } else if (!is_missing(last[j])) {
          v = last[j];
        }
      }
      prev = &row;
    }
  }

  for (auto& row : table.rows) {
    for (std::size_t j = 0; j < p; ++j) {
      if (is_missing(row.covariates[j])) row.covariates[j] = constants_[j];
    }
  }
}

std::vector<ImputePolicy> default_impute_policies(const LandmarkTable& train, bool dynamic) {
  std::vector<ImputePolicy> out;
  for (std::size_t j = 0; j < train.feature_names.size(); ++j) {
    if (dynamic) {
      out.push_back(ImputePolicy::locf());
      continue;
    }
    bool binary = true;
    for (const auto& r : train.rows) {
      const double v = r.covariates[j];
      if (!is_missing(v) && v != 0.0 && v != 1.0) {
        binary = false;
        break;
      }
    }
    out.push_back(binary ? ImputePolicy::mode() : ImputePolicy::mean());
  }
  return out;
}

// ---------------------------------------------------------------------------

LandmarkTable read_landmark_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("landmark CSV is empty");
  const auto header = csv::split_fields(line);
  if (header.size() < 5 || header[0] != "admission_id" || header[1] != "episode_id" ||
      header[2] != "lm" || header[header.size() - 2] != "event_type" ||
      header.back() != "event_time") {
    throw DataError(
        "landmark CSV header must be admission_id,episode_id,lm,<features...>,event_type,event_time");
  }
  LandmarkTable table;
  for (std::size_t j = 3; j + 2 < header.size(); ++j) table.feature_names.emplace_back(header[j]);
  const std::size_t p = table.feature_names.size();

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = csv::split_fields(line);
    if (fields.size() != header.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, found " +
                      std::to_string(fields.size()));
    }
    try {
      LandmarkRow row;
      row.admission_id = std::string(fields[0]);
      row.episode_id = static_cast<int>(csv::parse_int(fields[1]));
      row.lm = static_cast<int>(csv::parse_int(fields[2]));
      row.covariates.resize(p);
      for (std::size_t j = 0; j < p; ++j) row.covariates[j] = csv::parse_double(fields[3 + j]);
      row.event_type = parse_event_type(fields[3 + p]);
      row.event_time = csv::parse_double(fields[4 + p]);
      if (!(row.event_time > 0.0)) throw DataError("event_time must be positive");
      if (row.lm < 0 || !(static_cast<double>(row.lm) < row.event_time)) {
        throw DataError("landmark must satisfy 0 <= lm < event_time");
      }
      table.rows.push_back(std::move(row));
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return table;
}

LandmarkTable read_landmark_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return read_landmark_csv(in);
}

void write_landmark_csv(std::ostream& out, const LandmarkTable& table) {
  out << "admission_id,episode_id,lm";
  for (const auto& f : table.feature_names) out << ',' << f;
  out << ",event_type,event_time\n";
  for (const auto& r : table.rows) {
    out << r.admission_id << ',' << r.episode_id << ',' << r.lm;
    for (double v : r.covariates) out << ',' << csv::format_double(v);
    out << ',' << to_string(r.event_type) << ',' << csv::format_double(r.event_time) << '\n';
  }
}

void write_landmark_csv(const std::string& path, const LandmarkTable& table) {
  csv::write_atomically(path, [&](std::ostream& out) { write_landmark_csv(out, table); });
}

}  // namespace lmrf
