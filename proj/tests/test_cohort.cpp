#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "lmrf/cohort.hpp"
#include "lmrf/common.hpp"
#include "lmrf/csv.hpp"

using namespace lmrf;

namespace {

LandmarkRow row(EventType type, double event_time, int lm = 0, std::string adm = "a", int episode = 1) {
  LandmarkRow r;
  r.admission_id = std::move(adm);
  r.episode_id = episode;
  r.lm = lm;
  r.event_type = type;
  r.event_time = event_time;
  return r;
}

std::vector<double> no_covariates(const CatheterEpisode&, int) { return {}; }

}  // namespace

TEST_CASE("episodes merge across gaps shorter than two days") {
  std::vector<CatheterInterval> iv{{"a", 0, 3}, {"a", 3.5, 6}};
  std::map<std::string, AdmissionEvent> ev{{"a", {EventType::Discharge, 20}}};
  const auto eps = assemble_episodes(iv, ev);
  REQUIRE(eps.size() == 1);
  CHECK(eps[0].start == 0.0);
  CHECK(eps[0].event_type == EventType::Discharge);
  CHECK(eps[0].event_time == doctest::Approx(8.0));
}

TEST_CASE("a three-day gap starts a new episode") {
  std::vector<CatheterInterval> iv{{"a", 0, 3}, {"a", 6, 9}};
  std::map<std::string, AdmissionEvent> ev{{"a", {EventType::Discharge, 30}}};
  const auto eps = assemble_episodes(iv, ev);
  REQUIRE(eps.size() == 2);
  CHECK(eps[0].event_time == 5.0);
  CHECK(eps[0].event_type == EventType::Discharge);
  CHECK(eps[1].episode_id == 2);
  CHECK(eps[1].start == 6.0);
}

TEST_CASE("admission death inside the window ends the episode") {
  std::vector<CatheterInterval> iv{{"a", 0, 4}};
  std::map<std::string, AdmissionEvent> ev{{"a", {EventType::Death, 3}}};
  const auto eps = assemble_episodes(iv, ev);
  REQUIRE(eps.size() == 1);
  CHECK(eps[0].event_type == EventType::Death);
  CHECK(eps[0].event_time == 3.0);
}

TEST_CASE("landmarks lie strictly before the event") {
  auto lms = [](double t) {
    CatheterEpisode e{"a", 1, 0.0, EventType::Clabsi, t};
    std::vector<int> out;
    for (const auto& r : build_landmarks(e, no_covariates)) out.push_back(r.lm);
    return out;
  };
  CHECK(lms(2.5) == std::vector<int>{0, 1, 2});
  CHECK(lms(0.8) == std::vector<int>{0});
  CHECK(lms(9.7).size() == 10);
  CHECK(lms(3.0) == std::vector<int>{0, 1, 2});
}

TEST_CASE("binary and multinomial labels") {
  CHECK(label_binary(row(EventType::Clabsi, 5)) == 1);
  CHECK(label_binary(row(EventType::Clabsi, 9.7, 0)) == 0);
  CHECK(label_binary(row(EventType::Clabsi, 9.7, 3)) == 1);
  CHECK(label_binary(row(EventType::Discharge, 3)) == 0);
  CHECK(label_multinomial(row(EventType::Death, 1.2)) == HorizonClass::Death);
  CHECK(label_multinomial(row(EventType::Discharge, 10)) == HorizonClass::NoEvent);
  CHECK(label_multinomial(row(EventType::Clabsi, 7)) == HorizonClass::Clabsi);
}

TEST_CASE("survival encodings") {
  CHECK(to_survival(row(EventType::Discharge, 5), CensorScheme::AtEventTime) == TimeToEvent{5, 0});
  CHECK(to_survival(row(EventType::Discharge, 5), CensorScheme::AtHorizon, 7) == TimeToEvent{7, 0});
  CHECK(to_survival(row(EventType::Clabsi, 3), CensorScheme::AtEventTime) == TimeToEvent{3, 1});
  CHECK(to_survival(row(EventType::Clabsi, 3), CensorScheme::AtHorizon) == TimeToEvent{3, 1});
  CHECK(to_survival(row(EventType::Death, 12), CensorScheme::AtHorizon, 7) == TimeToEvent{12, 0});
}

TEST_CASE("competing-risks encoding, discretization and administrative censoring") {
  CHECK(to_competing_risks(row(EventType::Death, 1.2)) == TimeToEvent{1.2, 2});
  CHECK(to_competing_risks(row(EventType::Clabsi, 9.7)) == TimeToEvent{9.7, 1});
  CHECK(to_competing_risks(row(EventType::Discharge, 3.5)) == TimeToEvent{3.5, 3});
  CHECK(to_competing_risks(row(EventType::Discharge, 5.5, 2)) == TimeToEvent{3.5, 3});

  CHECK(discretize_time({6.1, 1}) == TimeToEvent{7, 1});
  CHECK(discretize_time({7.0, 1}) == TimeToEvent{7, 1});
  CHECK(discretize_time({0.3, 3}) == TimeToEvent{1, 3});

  CHECK(administrative_censor({10, 1}, 7) == TimeToEvent{7, 0});
  CHECK(administrative_censor({7, 1}, 7) == TimeToEvent{7, 1});
  CHECK(administrative_censor({25, 2}, 30) == TimeToEvent{25, 2});
}

TEST_CASE("split by admission keeps admissions whole and is reproducible") {
  std::vector<LandmarkRow> rows;
  for (int a = 0; a < 9; ++a) {
    for (int lm = 0; lm < 1 + a % 3; ++lm) rows.push_back(row(EventType::Discharge, 5, lm, std::to_string(a)));
  }
  const auto s1 = split_by_admission(rows, 2.0 / 3.0, 11);
  const auto s2 = split_by_admission(rows, 2.0 / 3.0, 11);
  CHECK(s1.train == s2.train);
  CHECK(s1.test == s2.test);
  std::set<std::string> train_adm, test_adm;
  for (auto i : s1.train) train_adm.insert(rows[i].admission_id);
  for (auto i : s1.test) test_adm.insert(rows[i].admission_id);
  CHECK(train_adm.size() == 6);
  CHECK(test_adm.size() == 3);
  for (const auto& a : test_adm) CHECK(train_adm.count(a) == 0);
  CHECK(s1.train.size() + s1.test.size() == rows.size());
}

TEST_CASE("mean, LOCF and fixed imputation") {
  LandmarkTable t;
  t.feature_names = {"x", "lumens"};
  for (int lm = 0; lm < 3; ++lm) t.rows.push_back(row(EventType::Discharge, 5, lm));
  t.rows[0].covariates = {1, kMissing};
  t.rows[1].covariates = {kMissing, 3};
  t.rows[2].covariates = {3, kMissing};

  SUBCASE("mean") {
    auto copy = t;
    SimpleImputer::fit(t, {ImputePolicy::mean(), ImputePolicy::fixed(2)}).apply(copy);
    CHECK(copy.rows[1].covariates[0] == 2.0);
    CHECK(copy.rows[0].covariates[1] == 2.0);
    CHECK(copy.rows[2].covariates[1] == 2.0);
  }
  SUBCASE("locf with mean fallback") {
    LandmarkTable u = t;
    u.rows[0].covariates[0] = kMissing;
    u.rows[1].covariates[0] = 5;
    u.rows[2].covariates[0] = kMissing;
    LandmarkTable train = u;
    train.rows.push_back(row(EventType::Discharge, 5, 0, "b"));
    train.rows.back().covariates = {1, 1};
    auto copy = u;
    SimpleImputer::fit(train, {ImputePolicy::locf(), ImputePolicy::locf()}).apply(copy);
    CHECK(copy.rows[0].covariates[0] == 3.0);
    CHECK(copy.rows[1].covariates[0] == 5.0);
    CHECK(copy.rows[2].covariates[0] == 5.0);
  }
}

TEST_CASE("impute policy text round trip") {
  for (const auto& p : {ImputePolicy::mean(), ImputePolicy::mode(), ImputePolicy::locf(), ImputePolicy::fixed(2.5)}) {
    const auto back = parse_impute_policy(to_string(p));
    CHECK(back.kind == p.kind);
    CHECK(back.fixed_value == p.fixed_value);
  }
  CHECK_THROWS_AS(parse_impute_policy("median"), InvalidInput);
}

TEST_CASE("landmark CSV round trip") {
  LandmarkTable t;
  t.feature_names = {"x", "y"};
  t.rows.push_back(row(EventType::Clabsi, 9.7, 0, "adm1"));
  t.rows.back().covariates = {0.1, kMissing};
  t.rows.push_back(row(EventType::Clabsi, 9.7, 1, "adm1"));
  t.rows.back().covariates = {1.0 / 3.0, 2};
  std::stringstream ss;
  write_landmark_csv(ss, t);
  const auto back = read_landmark_csv(ss);
  REQUIRE(back.rows.size() == 2);
  CHECK(back.feature_names == t.feature_names);
  CHECK(back.rows[1].covariates[0] == 1.0 / 3.0);
  CHECK(std::isnan(back.rows[0].covariates[1]));
  CHECK(back.rows[1].event_type == EventType::Clabsi);
  CHECK(back.rows[1].event_time == 9.7);
}

TEST_CASE("malformed CSV is a data error") {
  std::stringstream ss("admission_id,episode_id,lm,x,event_type,event_time\na,1,0,zz,Discharge,3\n");
  CHECK_THROWS_AS(read_landmark_csv(ss), DataError);
}
