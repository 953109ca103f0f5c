#include "lmrf/forest/estimators.hpp"

#include <algorithm>
#include <vector>

#include "lmrf/common.hpp"

namespace lmrf::forest {

namespace {

// Distinct observed times with the number leaving the risk set and the
// number of events per cause at each.
struct RiskTable {
  std::vector<double> time;
  std::vector<double> at_risk;
  std::vector<double> events;                          // any cause
  std::vector<std::array<double, kCauses>> by_cause;  // causes 1..3
};

RiskTable risk_table(std::span<const TimeToEvent> sample) {
  std::vector<TimeToEvent> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const TimeToEvent& a, const TimeToEvent& b) { return a.time < b.time; });
  RiskTable table;
  const std::size_t n = sorted.size();
  for (std::size_t i = 0; i < n;) {
    std::size_t k = i;
    std::array<double, kCauses> d{};
    double d_any = 0.0;
    while (k < n && sorted[k].time == sorted[i].time) {
      const int s = sorted[k].status;
      if (s < 0 || s > kCauses) throw InvalidInput("status must be in {0,1,2,3}");
      if (s > 0) {
        d[static_cast<std::size_t>(s - 1)] += 1.0;
        d_any += 1.0;
      }
      ++k;
    }
    table.time.push_back(sorted[i].time);
    table.at_risk.push_back(static_cast<double>(n - i));
    table.events.push_back(d_any);
    table.by_cause.push_back(d);
    i = k;
  }
  return table;
}

}  // namespace

StepFunction kaplan_meier(std::span<const TimeToEvent> sample) {
  const auto table = risk_table(sample);
  std::vector<double> knots, values;
  double s = 1.0;
  for (std::size_t j = 0; j < table.time.size(); ++j) {
    if (table.events[j] == 0.0) continue;
    s *= 1.0 - table.events[j] / table.at_risk[j];
    knots.push_back(table.time[j]);
    values.push_back(s);
  }
  return {std::move(knots), std::move(values), 1.0};
}

StepFunction nelson_aalen(std::span<const TimeToEvent> sample, int cause) {
  if (cause < 0 || cause > kCauses) throw InvalidInput("cause must be in 0..3");
  const auto table = risk_table(sample);
  std::vector<double> knots, values;
  double h = 0.0;
  for (std::size_t j = 0; j < table.time.size(); ++j) {
    const double d = cause == 0 ? table.events[j] : table.by_cause[j][static_cast<std::size_t>(cause - 1)];
    if (d == 0.0) continue;
    h += d / table.at_risk[j];
    knots.push_back(table.time[j]);
    values.push_back(h);
  }
  return {std::move(knots), std::move(values), 0.0};
}

CumulativeIncidence aalen_johansen(std::span<const TimeToEvent> sample) {
  const auto table = risk_table(sample);
  std::vector<double> knots, surv;
  std::array<std::vector<double>, kCauses> cif;
  std::array<double, kCauses> acc{};
  double s = 1.0;
  for (std::size_t j = 0; j < table.time.size(); ++j) {
    if (table.events[j] == 0.0) continue;
    const double y = table.at_risk[j];
    for (std::size_t k = 0; k < kCauses; ++k) {
      acc[k] += s * table.by_cause[j][k] / y;
      cif[k].push_back(acc[k]);
    }
    s *= 1.0 - table.events[j] / y;
    knots.push_back(table.time[j]);
    surv.push_back(s);
  }
  CumulativeIncidence out;
  for (std::size_t k = 0; k < kCauses; ++k) out.cif[k] = StepFunction(knots, std::move(cif[k]), 0.0);
  out.survival = StepFunction(std::move(knots), std::move(surv), 1.0);
  return out;
}

}  // namespace lmrf::forest
