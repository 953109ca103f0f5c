#pragma once

// Reference implementations used only by tests. They favour directness over
// speed and share no code with the library.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <vector>

#include "lmrf/cohort.hpp"

namespace oracle {

using lmrf::TimeToEvent;

/// n * (Gini decrease) as an exact fraction num / den.
struct Fraction {
  long long num = 0;
  long long den = 1;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Fraction& a, const Fraction& b) { return a.num * b.den == b.num * a.den; }
  friend bool operator<(const Fraction& a, const Fraction& b) { return a.num * b.den < b.num * a.den; }
};

inline Fraction gini_decrease(const std::vector<int>& left, const std::vector<int>& right, int n_classes) {
  auto sq = [&](const std::vector<int>& labels) {
    std::vector<long long> c(static_cast<std::size_t>(n_classes), 0);
    for (int l : labels) ++c[static_cast<std::size_t>(l)];
    long long s = 0;
    for (auto v : c) s += v * v;
    return s;
  };
  std::vector<int> all = left;
  all.insert(all.end(), right.begin(), right.end());
  const long long n = static_cast<long long>(all.size());
  const long long nl = static_cast<long long>(left.size());
  const long long nr = static_cast<long long>(right.size());
  // n dG = sum cL^2/nL + sum cR^2/nR - sum c^2/n, divided by n at the end.
  Fraction f{sq(left) * nr * n + sq(right) * nl * n - sq(all) * nl * nr, nl * nr * n * n};
  const long long g = std::gcd(f.num, f.den);
  if (g > 1) {
    f.num /= g;
    f.den /= g;
  }
  return f;
}

struct Terms {
  double oe = 0.0;
  double v = 0.0;
};

/// Two-sample logrank sums for `cause` (0 = any event). With `retain`,
/// subjects with a competing event stay in the risk set at every time.
inline Terms logrank(const std::vector<TimeToEvent>& left, const std::vector<TimeToEvent>& right, int cause,
                     bool retain) {
  auto is_event = [&](const TimeToEvent& t) { return cause == 0 ? t.status != 0 : t.status == cause; };
  auto is_competing = [&](const TimeToEvent& t) { return cause != 0 && t.status != 0 && t.status != cause; };
  std::set<double> times;
  for (const auto* side : {&left, &right}) {
    for (const auto& t : *side) {
      if (is_event(t)) times.insert(t.time);
    }
  }
  Terms out;
  for (double s : times) {
    double y = 0, yl = 0, d = 0, dl = 0;
    for (int k = 0; k < 2; ++k) {
      const auto& side = k == 0 ? left : right;
      for (const auto& t : side) {
        const bool at_risk = t.time >= s || (retain && is_competing(t));
        if (!at_risk) continue;
        y += 1;
        if (k == 0) yl += 1;
        if (t.time == s && is_event(t)) {
          d += 1;
          if (k == 0) dl += 1;
        }
      }
    }
    if (y <= 1) continue;
    out.oe += dl - d * yl / y;
    out.v += (yl / y) * (1 - yl / y) * d * (y - d) / (y - 1);
  }
  return out;
}

inline double score(const Terms& t) { return t.v > 0 ? std::abs(t.oe) / std::sqrt(t.v) : 0.0; }
inline double chi2(const Terms& t) { return t.v > 0 ? t.oe * t.oe / t.v : 0.0; }

inline double cr_statistic(const std::vector<TimeToEvent>& left, const std::vector<TimeToEvent>& right,
                           const std::array<double, 3>& w, bool retain) {
  double s = 0;
  for (int k = 1; k <= 3; ++k) {
    if (w[static_cast<std::size_t>(k - 1)] > 0) s += w[static_cast<std::size_t>(k - 1)] * chi2(logrank(left, right, k, retain));
  }
  return s;
}

/// AUROC by counting all positive/negative pairs, ties as one half.
inline double auroc_pairs(const std::vector<double>& p, const std::vector<int>& y) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (y[j] != 0) continue;
      pairs += 1;
      wins += p[i] > p[j] ? 1.0 : (p[i] == p[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

/// Threshold candidates between consecutive distinct values, and the row
/// partition each one induces.
inline std::vector<std::vector<bool>> threshold_partitions(const std::vector<double>& x) {
  std::vector<double> v = x;
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  std::vector<std::vector<bool>> out;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    std::vector<bool> left(x.size());
    for (std::size_t r = 0; r < x.size(); ++r) left[r] = x[r] <= v[i];
    out.push_back(std::move(left));
  }
  return out;
}

template <typename T>
void partition(const std::vector<T>& values, const std::vector<bool>& left_mask, std::vector<T>& left,
               std::vector<T>& right) {
  left.clear();
  right.clear();
  for (std::size_t i = 0; i < values.size(); ++i) (left_mask[i] ? left : right).push_back(values[i]);
}

}  // namespace oracle
