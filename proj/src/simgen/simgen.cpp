#include "lmrf/simgen.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "lmrf/common.hpp"
#include "lmrf/csv.hpp"
#include "lmrf/forest/estimators.hpp"

namespace lmrf::sim {

double HazardSpec::rate(int cause, std::span<const double> x) const {
  const auto k = static_cast<std::size_t>(cause);
  const auto& b = beta[k];
  double lp = 0.0;
  for (std::size_t j = 0; j < b.size() && j < x.size(); ++j) lp += b[j] * x[j];
  return baseline[k] * std::exp(lp);
}

std::array<double, kCauses> HazardSpec::rates(std::span<const double> x) const {
  return {rate(0, x), rate(1, x), rate(2, x)};
}

void HazardSpec::validate(std::size_t n_features) const {
  bool any_positive = false;
  for (int k = 0; k < kCauses; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    if (!(baseline[idx] >= 0.0) || !std::isfinite(baseline[idx])) {
      throw InvalidInput("baseline hazards must be finite and nonnegative");
    }
    any_positive = any_positive || baseline[idx] > 0.0;
    if (!beta[idx].empty() && beta[idx].size() != n_features) {
      throw InvalidInput("hazard coefficient vector length must equal the number of features");
    }
  }
  if (!any_positive) throw InvalidInput("degenerate hazards: every baseline rate is zero");
}

std::vector<std::string> SimCohortConfig::feature_names() const {
  std::vector<std::string> names;
  for (const auto& f : binary) names.push_back(f.name);
  for (const auto& f : continuous) names.push_back(f.name);
  return names;
}

void SimCohortConfig::validate() const {
  if (n_admissions < 1) throw InvalidInput("n_admissions must be positive");
  if (!(mean_episodes_per_admission >= 1.0)) {
    throw InvalidInput("mean episodes per admission must be at least 1");
  }
  if (!(max_followup > 0.0)) throw InvalidInput("max follow-up must be positive");
  for (const auto& f : binary) {
    if (!(f.prevalence >= 0.0 && f.prevalence <= 1.0)) {
      throw InvalidInput("prevalence of '" + f.name + "' must lie in [0,1]");
    }
  }
  for (const auto& f : continuous) {
    if (!(f.sd >= 0.0)) throw InvalidInput("sd of '" + f.name + "' must be nonnegative");
  }
  if (!missingness.empty() && missingness.size() != n_features()) {
    throw InvalidInput("missingness needs one rate per feature");
  }
  for (double r : missingness) {
    if (!(r >= 0.0 && r <= 1.0)) throw InvalidInput("missingness rates must lie in [0,1]");
  }
  hazards.validate(n_features());
}

SimCohortConfig SimCohortConfig::defaults() {
  SimCohortConfig c;
  c.binary = {{"tpn", 0.10}, {"icu", 0.20}, {"chemo", 0.25}, {"port", 0.45}, {"ab", 0.55}};
  c.continuous = {{"crp", 0.0, 1.0}, {"temperature", 0.0, 1.0}, {"wbc", 0.0, 1.0}};
  //                    tpn   icu  chemo  port   ab    crp  temp   wbc
  c.hazards.baseline = {0.0010, 0.0027, 0.128};
  c.hazards.beta[0] = {1.20, 0.80, 0.00, -0.60, 0.80, 0.60, 0.60, 0.00};
  c.hazards.beta[1] = {0.20, 1.20, -0.70, 0.30, 0.20, 0.50, 0.00, 0.30};
  c.hazards.beta[2] = {-0.30, -0.30, 1.50, 0.00, -0.20, -0.20, -0.10, 1.00};
  c.missingness = {0.0, 0.0, 0.0, 0.0, 0.0, 0.02, 0.01, 0.02};
  return c;
}

void to_json(nlohmann::json& j, const SimCohortConfig& c) {
  j = nlohmann::json::object();
  j["n_admissions"] = c.n_admissions;
  j["mean_episodes_per_admission"] = c.mean_episodes_per_admission;
  j["binary"] = nlohmann::json::array();
  for (const auto& f : c.binary) j["binary"].push_back({{"name", f.name}, {"prevalence", f.prevalence}});
  j["continuous"] = nlohmann::json::array();
  for (const auto& f : c.continuous) {
    j["continuous"].push_back({{"name", f.name}, {"mean", f.mean}, {"sd", f.sd}});
  }
  j["baseline_hazards"] = c.hazards.baseline;
  j["coefficients"] = c.hazards.beta;
  j["max_followup"] = c.max_followup;
  j["missingness"] = c.missingness;
  j["seed"] = c.seed;
}

void from_json(const nlohmann::json& j, SimCohortConfig& c) {
  c = SimCohortConfig::defaults();
  if (j.contains("binary")) {
    c.binary.clear();
    for (const auto& f : j.at("binary")) c.binary.push_back({f.at("name"), f.value("prevalence", 0.5)});
  }
  if (j.contains("continuous")) {
    c.continuous.clear();
    for (const auto& f : j.at("continuous")) {
      c.continuous.push_back({f.at("name"), f.value("mean", 0.0), f.value("sd", 1.0)});
    }
  }
  c.n_admissions = j.value("n_admissions", c.n_admissions);
  c.mean_episodes_per_admission = j.value("mean_episodes_per_admission", c.mean_episodes_per_admission);
  if (j.contains("baseline_hazards")) j.at("baseline_hazards").get_to(c.hazards.baseline);
  if (j.contains("coefficients")) j.at("coefficients").get_to(c.hazards.beta);
  c.max_followup = j.value("max_followup", c.max_followup);
  if (j.contains("missingness")) j.at("missingness").get_to(c.missingness);
  c.seed = j.value("seed", c.seed);
}

std::array<double, kCauses> true_cif(std::span<const double> covariates, const HazardSpec& spec,
                                     double t) {
  if (!(t >= 0.0)) throw InvalidInput("true_cif: time must be nonnegative");
  const auto rates = spec.rates(covariates);
  const double total = rates[0] + rates[1] + rates[2];
  if (!(total > 0.0)) throw InvalidInput("true_cif: degenerate hazards");
  const double reached = std::isinf(t) ? 1.0 : -std::expm1(-total * t);
  return {rates[0] / total * reached, rates[1] / total * reached, rates[2] / total * reached};
}

double true_binary_risk(std::span<const double> covariates, const HazardSpec& spec,
                        double horizon) {
  return true_cif(covariates, spec, horizon)[0];
}

namespace {

struct AdmissionDraw {
  std::vector<LandmarkRow> rows;
  std::vector<double> truth;
};

AdmissionDraw simulate_admission(const SimCohortConfig& config, int index, double horizon) {
  std::mt19937_64 rng(derive_seed(config.seed, static_cast<std::uint64_t>(index)));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::geometric_distribution<int> extra_episodes(1.0 / config.mean_episodes_per_admission);
  const int n_episodes = 1 + extra_episodes(rng);
  const std::size_t p = config.n_features();

  AdmissionDraw out;
  double start = 0.0;
  for (int e = 1; e <= n_episodes; ++e) {
    std::vector<double> x;
    x.reserve(p);
    for (const auto& f : config.binary) x.push_back(unif(rng) < f.prevalence ? 1.0 : 0.0);
    for (const auto& f : config.continuous) {
      std::normal_distribution<double> normal(f.mean, f.sd);
      x.push_back(normal(rng));
    }

    const auto rates = config.hazards.rates(x);
    double time = std::numeric_limits<double>::infinity();
    int cause = 2;
    for (int k = 0; k < kCauses; ++k) {
      const double r = rates[static_cast<std::size_t>(k)];
      if (r <= 0.0) continue;
      const double draw = std::exponential_distribution<double>(r)(rng);
      if (draw < time) {
        time = draw;
        cause = k;
      }
    }
    if (time > config.max_followup) {
      time = config.max_followup;
      cause = 2;
    }

    CatheterEpisode episode;
    episode.admission_id = std::to_string(index + 1);
    episode.episode_id = e;
    episode.start = start;
    episode.event_type = static_cast<EventType>(cause + 1);
    episode.event_time = time;
    start += time + kEpisodeGapDays;

    auto rows = build_landmarks(episode, [&](const CatheterEpisode&, int) { return x; });
    for (auto& row : rows) {
      const double window = std::min(horizon, config.max_followup - row.lm);
      out.truth.push_back(true_cif(x, config.hazards, std::max(window, 0.0))[0]);
      if (!config.missingness.empty()) {
        for (std::size_t j = 0; j < p; ++j) {
          if (unif(rng) < config.missingness[j]) row.covariates[j] = kMissing;
        }
      }
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

}  // namespace

SimCohort simulate_cohort(const SimCohortConfig& config, double horizon) {
  config.validate();
  std::vector<AdmissionDraw> draws(static_cast<std::size_t>(config.n_admissions));
  parallel_for(draws.size(), config.jobs, [&](std::size_t a) {
    draws[a] = simulate_admission(config, static_cast<int>(a), horizon);
  });

  SimCohort cohort;
  cohort.table.feature_names = config.feature_names();
  for (auto& d : draws) {
    for (auto& r : d.rows) cohort.table.rows.push_back(std::move(r));
    cohort.true_risk.insert(cohort.true_risk.end(), d.truth.begin(), d.truth.end());
  }
  return cohort;
}

std::array<StepFunction, kCauses> empirical_cif(const LandmarkTable& cohort) {
  std::vector<TimeToEvent> episodes;
  for (const auto& r : cohort.rows) {
    if (r.lm == 0) episodes.push_back({r.event_time, static_cast<int>(r.event_type)});
  }
  return forest::aalen_johansen(episodes).cif;
}

void write_truth_csv(const std::string& path, const SimCohort& cohort) {
  csv::write_atomically(path, [&](std::ostream& out) {
    out << "admission_id,episode_id,lm,true_risk_7d\n";
    for (std::size_t i = 0; i < cohort.table.rows.size(); ++i) {
      const auto& r = cohort.table.rows[i];
      out << r.admission_id << ',' << r.episode_id << ',' << r.lm << ','
          << csv::format_double(cohort.true_risk[i]) << '\n';
    }
  });
}

}  // namespace lmrf::sim
