#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "lmrf/simgen.hpp"

using namespace lmrf;
using namespace lmrf::sim;

namespace {

SimCohortConfig bare(std::array<double, 3> lambda, int n_admissions) {
  SimCohortConfig c;
  c.binary.clear();
  c.continuous.clear();
  c.hazards.baseline = lambda;
  c.hazards.beta = {std::vector<double>{}, {}, {}};
  c.missingness.clear();
  c.n_admissions = n_admissions;
  c.mean_episodes_per_admission = 1.0;
  return c;
}

std::array<double, 3> episode_shares(const LandmarkTable& t) {
  std::array<double, 3> n{};
  double total = 0;
  for (const auto& r : t.rows) {
    if (r.lm != 0) continue;
    n[static_cast<int>(r.event_type) - 1] += 1;
    total += 1;
  }
  for (auto& v : n) v /= total;
  return n;
}

}  // namespace

TEST_CASE("closed-form cumulative incidence") {
  HazardSpec spec;
  spec.baseline = {0.1, 0.2, 0.7};
  spec.beta = {std::vector<double>{}, {}, {}};
  const auto cif = true_cif({}, spec, 7);
  CHECK(cif[0] == doctest::Approx(0.1 * (1 - std::exp(-7.0))).epsilon(1e-12));
  CHECK(cif[0] == doctest::Approx(0.099909).epsilon(1e-5));
  const auto zero = true_cif({}, spec, 0);
  CHECK(zero[0] == 0.0);
  CHECK(zero[2] == 0.0);
  const auto inf = true_cif({}, spec, std::numeric_limits<double>::infinity());
  CHECK(inf[1] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(true_binary_risk({}, spec, 7) == cif[0]);
}

TEST_CASE("discharge-only hazards give only discharges") {
  const auto cohort = simulate_cohort(bare({0, 0, 1}, 200));
  for (const auto& r : cohort.table.rows) CHECK(r.event_type == EventType::Discharge);
}

TEST_CASE("empirical cause share matches the hazard ratio") {
  const auto cohort = simulate_cohort(bare({0.01, 0.02, 0.12}, 50000));
  const auto shares = episode_shares(cohort.table);
  CHECK(std::abs(shares[0] - 0.01 / 0.15) < 0.005);
  CHECK(std::abs(shares[1] - 0.02 / 0.15) < 0.005);
}

TEST_CASE("default cohort has roughly 3/5/92 percent cause shares") {
  auto c = SimCohortConfig::defaults();
  c.n_admissions = 20000;
  const auto shares = episode_shares(simulate_cohort(c).table);
  CHECK(shares[0] == doctest::Approx(0.03).epsilon(0.25));
  CHECK(shares[1] == doctest::Approx(0.05).epsilon(0.25));
  CHECK(shares[2] == doctest::Approx(0.92).epsilon(0.03));
}

TEST_CASE("Aalen-Johansen on a large simulation tracks the closed form") {
  const std::array<double, 3> lambda{0.02, 0.03, 0.15};
  const auto cohort = simulate_cohort(bare(lambda, 30000));
  const auto cif = empirical_cif(cohort.table);
  HazardSpec spec;
  spec.baseline = lambda;
  spec.beta = {std::vector<double>{}, {}, {}};
  double sup = 0;
  for (double t = 0; t <= 40; t += 0.25) {
    const auto truth = true_cif({}, spec, t);
    for (int k = 0; k < 3; ++k) sup = std::max(sup, std::abs(cif[k](t) - truth[k]));
  }
  CHECK(sup <= 0.01);
}

TEST_CASE("true risk column matches the covariates of each row") {
  auto c = SimCohortConfig::defaults();
  c.n_admissions = 50;
  c.missingness.clear();
  const auto cohort = simulate_cohort(c);
  REQUIRE(cohort.true_risk.size() == cohort.table.rows.size());
  for (std::size_t i = 0; i < cohort.true_risk.size(); ++i) {
    // Follow-up ends at max_followup, which shortens the window of late landmarks.
    const double window = std::min(7.0, c.max_followup - cohort.table.rows[i].lm);
    CHECK(cohort.true_risk[i] == true_binary_risk(cohort.table.rows[i].covariates, c.hazards, window));
  }
}

TEST_CASE("fixed seed reproduces the CSV bytes") {
  auto c = SimCohortConfig::defaults();
  c.n_admissions = 300;
  std::stringstream a, b;
  write_landmark_csv(a, simulate_cohort(c).table);
  write_landmark_csv(b, simulate_cohort(c).table);
  CHECK(a.str() == b.str());
  c.seed = 2;
  std::stringstream d;
  write_landmark_csv(d, simulate_cohort(c).table);
  CHECK(a.str() != d.str());
}

TEST_CASE("config JSON round trip") {
  auto c = SimCohortConfig::defaults();
  c.seed = 99;
  nlohmann::json j = c;
  const auto back = j.get<SimCohortConfig>();
  CHECK(back.seed == 99);
  CHECK(back.hazards.baseline == c.hazards.baseline);
  CHECK(back.feature_names() == c.feature_names());
}
