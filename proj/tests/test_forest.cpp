#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>
#include <random>

#include "lmrf/common.hpp"
#include "lmrf/forest/estimators.hpp"
#include "lmrf/forest/forest.hpp"
#include "lmrf/forest/inbag.hpp"
#include "lmrf/forest/split_rules.hpp"
#include "lmrf/forest/tree.hpp"
#include "oracles.hpp"

using namespace lmrf;
using namespace lmrf::forest;

namespace {

std::vector<std::uint32_t> iota_groups(std::size_t n) {
  std::vector<std::uint32_t> g(n);
  std::iota(g.begin(), g.end(), 0u);
  return g;
}

// Feature 0 drives the outcome; the rest are noise.
struct Toy {
  FeatureMatrix x;
  std::vector<int> labels;
  std::vector<TimeToEvent> times;
};

Toy make_toy(std::size_t n, std::size_t p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u;
  std::vector<std::string> names;
  for (std::size_t j = 0; j < p; ++j) names.push_back("f" + std::to_string(j));
  Toy t{FeatureMatrix(n, names), {}, {}};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) t.x.at(i, j) = z(rng);
    const double risk = 1.0 / (1.0 + std::exp(-2.5 * t.x(i, 0)));
    t.labels.push_back(u(rng) < risk ? 1 : 0);
    const double rate = 0.1 * std::exp(1.2 * t.x(i, 0));
    const double time = std::exponential_distribution<double>(rate)(rng);
    const int cause = 1 + static_cast<int>(u(rng) * 3);
    t.times.push_back({std::ceil(std::min(time, 30.0)), time > 30 ? 0 : cause});
  }
  return t;
}

}  // namespace

TEST_CASE("Kaplan-Meier hand fixture") {
  const std::vector<TimeToEvent> s{{1, 1}, {1.5, 0}, {2, 1}};
  const auto km = kaplan_meier(s);
  CHECK(km(0.5) == 1.0);
  CHECK(std::abs(km(1) - 2.0 / 3.0) <= 1e-12);
  CHECK(std::abs(km(1.7) - 2.0 / 3.0) <= 1e-12);
  CHECK(km(2) == 0.0);
  CHECK(kaplan_meier(std::vector<TimeToEvent>{{1, 0}, {2, 0}})(5) == 1.0);
}

TEST_CASE("Nelson-Aalen hand fixture") {
  const std::vector<TimeToEvent> s{{1, 1}, {1.5, 0}, {2, 2}};
  const auto h = nelson_aalen(s);
  CHECK(std::abs(h(1) - 1.0 / 3.0) <= 1e-12);
  CHECK(std::abs(h(2) - 4.0 / 3.0) <= 1e-12);
  const auto h1 = nelson_aalen(s, 1);
  CHECK(std::abs(h1(3) - 1.0 / 3.0) <= 1e-12);
}

TEST_CASE("Aalen-Johansen hand fixture") {
  const std::vector<TimeToEvent> s{{1, 1}, {2, 2}, {3, 0}};
  const auto aj = aalen_johansen(s);
  CHECK(std::abs(aj.cif[0](1) - 1.0 / 3.0) <= 1e-12);
  CHECK(std::abs(aj.cif[1](2) - 1.0 / 3.0) <= 1e-12);
  CHECK(aj.cif[2](3) == 0.0);
  CHECK(std::abs(aj.survival(2) - 1.0 / 3.0) <= 1e-12);

  const std::vector<TimeToEvent> full{{1, 1}, {2, 3}, {2, 2}, {4, 1}, {5, 3}};
  const auto a = aalen_johansen(full);
  const double total = a.cif[0](5) + a.cif[1](5) + a.cif[2](5) + a.survival(5);
  CHECK(std::abs(total - 1.0) <= 1e-12);
}

TEST_CASE("single-cause CIF is one minus Kaplan-Meier") {
  const std::vector<TimeToEvent> s{{1, 1}, {2, 0}, {3, 1}, {3, 1}, {4, 0}, {6, 1}};
  const auto aj = aalen_johansen(s);
  const auto km = kaplan_meier(s);
  for (double t : {0.5, 1.0, 2.5, 3.0, 5.0, 6.0}) CHECK(std::abs(aj.cif[0](t) - (1 - km(t))) <= 1e-12);
}

TEST_CASE("gini split fixtures") {
  CHECK(split_gini(std::vector<int>{0, 0}, std::vector<int>{1, 1}, 2) == 0.5);
  CHECK(split_gini(std::vector<int>{0, 1}, std::vector<int>{0, 1}, 2) == 0.0);
}

TEST_CASE("logrank hand fixture") {
  const std::vector<TimeToEvent> l{{1, 1}, {3, 0}}, r{{2, 1}, {4, 0}};
  const auto terms = logrank_terms(l, r);
  CHECK(std::abs(terms.observed_minus_expected - 1.0 / 6.0) <= 1e-12);
  CHECK(std::abs(terms.variance - 17.0 / 36.0) <= 1e-12);
  CHECK(std::abs(split_logrank(l, r) - 1.0 / std::sqrt(17.0)) <= 1e-12);
  CHECK(split_logrank(l, l) == 0.0);
}

TEST_CASE("competing-risks statistics") {
  const std::vector<TimeToEvent> l{{1, 2}, {2, 3}, {3, 1}, {5, 1}}, r{{1, 3}, {2, 1}, {4, 2}, {6, 3}};
  SUBCASE("sum of cause-specific chi-squares") {
    const double s = split_cr_logrank(l, r, {1, 1, 1});
    CHECK(std::abs(s - oracle::cr_statistic({l.begin(), l.end()}, {r.begin(), r.end()}, {1, 1, 1}, false)) <=
          1e-12);
  }
  SUBCASE("weights (1,0,0) reduce to a recoded logrank") {
    std::vector<TimeToEvent> lr = l, rr = r;
    for (auto* v : {&lr, &rr}) {
      for (auto& t : *v) t.status = t.status == 1 ? 1 : 0;
    }
    CHECK(split_cr_logrank(l, r, {1, 0, 0}) == logrank_terms(lr, rr).chi_square());
    CHECK(std::abs(split_cr_logrank(l, r, {1, 0, 0}) - std::pow(split_logrank(lr, rr), 2)) <= 1e-12);
  }
  SUBCASE("symmetric daughters give zero") {
    CHECK(split_cr_logrank(l, l, {1, 1, 1}) == doctest::Approx(0.0));
    CHECK(split_cr_logrank_cif(l, l, {1, 1, 1}) == doctest::Approx(0.0));
  }
  SUBCASE("retained risk sets change the cause-1 statistic") {
    const std::vector<TimeToEvent> a{{1, 2}, {2, 3}, {4, 1}}, b{{3, 1}, {5, 2}, {6, 1}};
    const double cs = split_cr_logrank(a, b, {1, 0, 0});
    const double gray = split_cr_logrank_cif(a, b, {1, 0, 0});
    CHECK(cs != doctest::Approx(gray));
    CHECK(std::abs(gray - oracle::cr_statistic({a.begin(), a.end()}, {b.begin(), b.end()}, {1, 0, 0}, true)) <=
          1e-12);
  }
  SUBCASE("a single cause makes the Gray statistic a squared logrank") {
    const std::vector<TimeToEvent> a{{1, 1}, {2, 0}, {4, 1}}, b{{3, 1}, {5, 1}, {6, 0}};
    CHECK(std::abs(split_cr_logrank_cif(a, b, {1, 1, 1}) - std::pow(split_logrank(a, b), 2)) <= 1e-12);
  }
}

TEST_CASE("random nodes agree with brute-force statistics") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> size(2, 12), status(0, 3), cls(0, 2), t(1, 6);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = size(rng);
    std::vector<TimeToEvent> times;
    std::vector<int> labels;
    for (int i = 0; i < n; ++i) {
      times.push_back({static_cast<double>(t(rng)), status(rng)});
      labels.push_back(cls(rng));
    }
    std::vector<bool> mask(static_cast<std::size_t>(n));
    for (auto&& m : mask) m = rng() & 1;
    std::vector<TimeToEvent> l, r;
    std::vector<int> ll, rl;
    oracle::partition(times, mask, l, r);
    oracle::partition(labels, mask, ll, rl);
    if (l.empty() || r.empty()) continue;
    CHECK(std::abs(split_gini(ll, rl, 3) - oracle::gini_decrease(ll, rl, 3).value()) <= 1e-15);
    CHECK(std::abs(split_logrank(l, r) - oracle::score(oracle::logrank(l, r, 0, false))) <= 1e-10);
    CHECK(std::abs(split_cr_logrank(l, r, {1, 0.5, 2}) - oracle::cr_statistic(l, r, {1, 0.5, 2}, false)) <= 1e-10);
    CHECK(std::abs(split_cr_logrank_cif(l, r, {1, 0.5, 2}) - oracle::cr_statistic(l, r, {1, 0.5, 2}, true)) <=
          1e-10);
  }
}

TEST_CASE("split rule validation and names") {
  CHECK_THROWS_AS(SplitRule::cr_logrank({0, 0, 0}).validate(), InvalidInput);
  CHECK_THROWS_AS(SplitRule::cr_logrank({-1, 1, 1}).validate(), InvalidInput);
  for (auto k : {SplitRuleKind::Gini, SplitRuleKind::Logrank, SplitRuleKind::CrLogrank, SplitRuleKind::CrLogrankCif}) {
    CHECK(parse_split_rule_kind(to_string(k)) == k);
  }
}

TEST_CASE("in-bag plans") {
  // Admissions of sizes 1..5.
  std::vector<std::uint32_t> groups;
  for (std::uint32_t g = 0; g < 5; ++g) groups.insert(groups.end(), g + 1, g);
  Hyperparams hp;
  hp.n_trees = 20;
  hp.seed = 3;
  const auto plan = plan_inbags(groups, hp);
  REQUIRE(plan.n_trees() == 20);
  for (std::size_t t = 0; t < plan.n_trees(); ++t) {
    CHECK(plan.inbag[t].size() == plan.minsize);
    CHECK(std::is_sorted(plan.inbag[t].begin(), plan.inbag[t].end()));
    const auto mask = plan.mask(t);
    const auto oob = plan.oob(t);
    CHECK(oob.size() + static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1)) == groups.size());
    for (auto r : oob) CHECK(mask[r] == 0);
  }
  const auto again = plan_inbags(groups, hp);
  CHECK(again.inbag == plan.inbag);

  hp.inbag = InBagMode::SubsampleByAdmission;
  hp.subsample_fraction = 1.0;
  const auto all = plan_inbags(groups, hp);
  CHECK(all.minsize == groups.size());
  for (std::size_t t = 0; t < all.n_trees(); ++t) CHECK(all.oob(t).empty());
}

TEST_CASE("in-bags respect admission boundaries before trimming") {
  // Two admissions of 3 rows: an untrimmed bootstrap holds whole admissions.
  std::vector<std::uint32_t> groups{0, 0, 0, 1, 1, 1};
  Hyperparams hp;
  hp.n_trees = 30;
  const auto plan = plan_inbags(groups, hp);
  CHECK(plan.minsize == 6);
  for (const auto& bag : plan.inbag) {
    std::array<int, 6> count{};
    for (auto r : bag) ++count[r];
    CHECK(count[0] == count[1]);
    CHECK(count[1] == count[2]);
    CHECK(count[3] == count[4]);
  }
}

TEST_CASE("tree growth edge cases") {
  const auto toy = make_toy(40, 3, 1);
  const auto y = Outcome::binary(toy.labels);
  std::vector<std::uint32_t> all(40);
  std::iota(all.begin(), all.end(), 0u);
  std::mt19937_64 rng(1);
  SUBCASE("nodesize at least n gives a root-only tree") {
    const auto tree = grow_tree(toy.x, y, all, SplitRule::gini(), 3, 40, rng);
    CHECK(tree.nodes.size() == 1);
    CHECK(tree.max_depth() == 0);
  }
  SUBCASE("a perfectly separating feature gives a depth-1 tree") {
    FeatureMatrix x(40, {"sep"});
    std::vector<int> labels(40);
    for (std::size_t i = 0; i < 40; ++i) {
      x.at(i, 0) = i < 20 ? 0.0 : 1.0;
      labels[i] = i < 20 ? 0 : 1;
    }
    const auto tree = grow_tree(x, Outcome::binary(labels), all, SplitRule::gini(), 1, 1, rng);
    CHECK(tree.nodes.size() == 3);
    CHECK(tree.max_depth() == 1);
    CHECK(tree.nodes[0].threshold == 0.5);
  }
  SUBCASE("rule and outcome must match") {
    CHECK_THROWS_AS(grow_tree(toy.x, y, all, SplitRule::logrank(), 3, 1, rng), InvalidInput);
  }
}

TEST_CASE("signal feature is chosen at the root") {
  const auto toy = make_toy(600, 5, 2);
  Hyperparams hp;
  hp.n_trees = 50;
  hp.mtry = 5;
  hp.nodesize = 10;
  const auto f = fit(toy.x, Outcome::binary(toy.labels), iota_groups(600), SplitRule::gini(), hp);
  int root_signal = 0;
  for (const auto& t : f.trees) root_signal += t.nodes[0].feature == 0;
  CHECK(root_signal > 40);
  const auto imp = minimal_depth_importance(f);
  CHECK(imp[0].mean_min_depth == 0.0);
  for (std::size_t j = 1; j < imp.size(); ++j) CHECK(imp[j].mean_min_depth > imp[0].mean_min_depth);
}

TEST_CASE("unused features get max depth plus one") {
  const auto toy = make_toy(300, 2, 3);
  FeatureMatrix x(300, {"signal", "constant"});
  for (std::size_t i = 0; i < 300; ++i) {
    x.at(i, 0) = toy.x(i, 0);
    x.at(i, 1) = 1.0;
  }
  Hyperparams hp;
  hp.n_trees = 10;
  hp.mtry = 2;
  hp.nodesize = 20;
  const auto f = fit(x, Outcome::binary(toy.labels), iota_groups(300), SplitRule::gini(), hp);
  const auto imp = minimal_depth_importance(f);
  double expected = 0;
  for (const auto& t : f.trees) expected += t.max_depth() + 1;
  CHECK(imp[1].usage == 0.0);
  CHECK(imp[1].mean_min_depth == doctest::Approx(expected / 10).epsilon(1e-12));
  CHECK(imp[0].usage == 1.0);
}

TEST_CASE("root-only forests predict the marginal estimate") {
  const auto toy = make_toy(200, 2, 4);
  Hyperparams hp;
  hp.n_trees = 5;
  hp.nodesize = 200;
  hp.inbag = InBagMode::SubsampleByAdmission;
  hp.subsample_fraction = 1.0;
  SUBCASE("classification") {
    std::vector<int> labels(200, 0);
    for (int i = 0; i < 60; ++i) labels[static_cast<std::size_t>(i)] = 1;
    const auto f = fit(toy.x, Outcome::binary(labels), iota_groups(200), SplitRule::gini(), hp);
    for (double p : predict_risk(f, toy.x)) CHECK(p == doctest::Approx(0.3).epsilon(1e-12));
    for (const auto& o : oob_predict(f, toy.x)) CHECK(!o.has_value());
  }
  SUBCASE("competing risks") {
    const auto f = fit(toy.x, Outcome::competing_risks(toy.times), iota_groups(200),
                       SplitRule::cr_logrank({1, 1, 1}), hp);
    const double expected = aalen_johansen(toy.times).cif[0](7);
    for (double p : predict_risk(f, toy.x)) CHECK(std::abs(p - expected) <= 1e-12);
  }
  SUBCASE("survival") {
    std::vector<TimeToEvent> surv;
    for (const auto& t : toy.times) surv.push_back({t.time, t.status == 1 ? 1 : 0});
    const auto f = fit(toy.x, Outcome::survival(surv), iota_groups(200), SplitRule::logrank(), hp);
    const double expected = -std::expm1(-nelson_aalen(surv)(7));
    for (double p : predict_risk(f, toy.x)) CHECK(std::abs(p - expected) <= 1e-12);
  }
}

TEST_CASE("out-of-bag predictions average the trees that left a row out") {
  const auto toy = make_toy(30, 2, 5);
  Hyperparams hp;
  hp.n_trees = 2;
  hp.mtry = 2;
  hp.nodesize = 3;
  hp.seed = 9;
  const auto f = fit(toy.x, Outcome::binary(toy.labels), iota_groups(30), SplitRule::gini(), hp);
  const auto oob = oob_predict(f, toy.x);
  REQUIRE(oob.size() == 30);
  for (std::size_t i = 0; i < 30; ++i) {
    double sum = 0;
    int count = 0;
    for (std::size_t t = 0; t < 2; ++t) {
      if (f.plan.mask(t)[i]) continue;
      sum += f.trees[t].find(toy.x, i).class_probs[1];
      ++count;
    }
    if (count == 0) {
      CHECK(!oob[i].has_value());
    } else {
      REQUIRE(oob[i].has_value());
      CHECK(*oob[i] == doctest::Approx(sum / count).epsilon(1e-15));
    }
  }
}

TEST_CASE("fits are reproducible and independent of thread count") {
  const auto toy = make_toy(300, 4, 6);
  Hyperparams hp;
  hp.n_trees = 12;
  hp.mtry = 2;
  hp.nodesize = 5;
  hp.seed = 77;
  const auto a = fit(toy.x, Outcome::competing_risks(toy.times), iota_groups(300),
                     SplitRule::cr_logrank_cif({1, 1, 1}), hp);
  hp.jobs = 3;
  const auto b = fit(toy.x, Outcome::competing_risks(toy.times), iota_groups(300),
                     SplitRule::cr_logrank_cif({1, 1, 1}), hp);
  CHECK(to_json(a).dump() == to_json(b).dump());
  CHECK(predict_risk(a, toy.x, 7, 1) == predict_risk(a, toy.x, 7, 4));
}

TEST_CASE("JSON round trip preserves predictions") {
  const auto toy = make_toy(200, 3, 7);
  Hyperparams hp;
  hp.n_trees = 8;
  hp.mtry = 2;
  hp.nodesize = 5;
  std::vector<int> labels;
  for (std::size_t i = 0; i < 200; ++i) labels.push_back(static_cast<int>(i % 4));
  for (const auto& [y, rule] : std::vector<std::pair<Outcome, SplitRule>>{
           {Outcome::binary(toy.labels), SplitRule::gini()},
           {Outcome::multinomial(labels), SplitRule::gini()},
           {Outcome::competing_risks(toy.times, 30), SplitRule::cr_logrank({1, 0, 0})}}) {
    const auto f = fit(toy.x, y, iota_groups(200), rule, hp);
    const auto back = forest_from_json(nlohmann::json::parse(to_json(f).dump()));
    CHECK(predict_risk(back, toy.x) == predict_risk(f, toy.x));
    CHECK(to_json(back).dump() == to_json(f).dump());
  }
  CHECK_THROWS_AS(forest_from_json(nlohmann::json{{"format", "other"}}), DataError);
}

TEST_CASE("horizon checks") {
  const auto toy = make_toy(100, 2, 8);
  Hyperparams hp;
  hp.n_trees = 2;
  const auto f = fit(toy.x, Outcome::binary(toy.labels), iota_groups(100), SplitRule::gini(), hp);
  CHECK_THROWS_AS(predict_risk(f, toy.x, 5), InvalidInput);
  const auto g = fit(toy.x, Outcome::competing_risks(toy.times, 7), iota_groups(100), SplitRule::cr_logrank({1, 1, 1}),
                     hp);
  CHECK_NOTHROW(predict_risk(g, toy.x, 7));
  CHECK_THROWS_AS(predict_risk(g, toy.x, 8), InvalidInput);
}
