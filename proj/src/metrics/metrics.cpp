#include "lmrf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "lmrf/common.hpp"
#include "metrics_internal.hpp"

namespace lmrf::metrics {

namespace detail {

void check_pairs(std::span<const double> p, std::span<const int> y) {
  if (p.size() != y.size()) throw InvalidInput("predictions and outcomes differ in length");
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidInput("predicted risks must lie in [0,1]");
  }
  for (int v : y) {
    if (v != 0 && v != 1) throw InvalidInput("outcomes must be 0 or 1");
  }
}

double clip(double p) { return std::clamp(p, kClip, 1.0 - kClip); }
double logit(double p) { return std::log(p / (1.0 - p)); }
double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double quantile7(std::span<const double> sorted, double q) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace detail

using namespace detail;

std::optional<double> auroc(std::span<const double> p, std::span<const int> y) {
  check_pairs(p, y);
  const std::size_t n = p.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  double n_pos = 0.0, rank_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t k = i;
    double pos = 0.0;
    while (k < n && p[order[k]] == p[order[i]]) {
      pos += y[order[k]];
      ++k;
    }
    // midrank of positions i+1..k
    rank_sum += pos * (static_cast<double>(i + 1 + k) / 2.0);
    n_pos += pos;
    i = k;
  }
  const double n_neg = static_cast<double>(n) - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0) return std::nullopt;
  return (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

std::optional<double> auprc(std::span<const double> p, std::span<const int> y) {
  check_pairs(p, y);
  const std::size_t n = p.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
  double total_pos = 0.0;
  for (int v : y) total_pos += v;
  if (total_pos == 0.0) return std::nullopt;
  double tp = 0.0, fp = 0.0, ap = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t k = i;
    double pos = 0.0, neg = 0.0;
    while (k < n && p[order[k]] == p[order[i]]) {
      (y[order[k]] ? pos : neg) += 1.0;
      ++k;
    }
    tp += pos;
    fp += neg;
    if (pos > 0.0) ap += (pos / total_pos) * (tp / (tp + fp));
    i = k;
  }
  return ap;
}

BrierScore brier_and_bss(std::span<const double> p, std::span<const int> y) {
  check_pairs(p, y);
  BrierScore out;
  if (p.empty()) {
    out.brier = std::nan("");
    return out;
  }
  std::vector<double> yd(y.begin(), y.end());
  const double prevalence = mean(yd);
  std::vector<double> sq(p.size()), ref(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    sq[i] = (p[i] - yd[i]) * (p[i] - yd[i]);
    ref[i] = (prevalence - yd[i]) * (prevalence - yd[i]);
  }
  out.brier = mean(sq);
  const double brier_ref = mean(ref);
  if (brier_ref > 0.0) out.skill = 1.0 - out.brier / brier_ref;
  return out;
}

std::optional<double> eo_ratio(std::span<const double> p, std::span<const int> y) {
  check_pairs(p, y);
  std::vector<double> yd(y.begin(), y.end());
  const double observed = mean(yd);
  if (p.empty() || observed == 0.0) return std::nullopt;
  return mean(p) / observed;
}

namespace {

// Bernoulli log-likelihood of a + b x + offset.
double loglik(std::span<const double> x, std::span<const int> y, double a, double b, double offset) {
  double ll = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double eta = a + b * x[i] + offset * x[i];
    const double log1pexp = eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
    ll += y[i] * eta - log1pexp;
  }
  return ll;
}

constexpr int kMaxHalvings = 40;

}  // namespace

CalibrationFit calibration_slope_intercept(std::span<const double> p, std::span<const int> y) {
  check_pairs(p, y);
  CalibrationFit fit;
  const std::size_t n = p.size();
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = logit(clip(p[i]));
  constexpr int kMaxIter = 100;
  constexpr double kTol = 1e-8;

  // Slope model: y ~ a + b x.
  const bool constant = n == 0 || std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; });
  if (constant) {
    fit.diagnostic = "predictions are constant; slope undefined";
  } else {
    double a = 0.0, b = 1.0;
    double ll = loglik(x, y, a, b, 0.0);
    bool converged = false;
    for (int it = 0; it < kMaxIter && !converged; ++it) {
      double g0 = 0, g1 = 0, h00 = 0, h01 = 0, h11 = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double mu = expit(a + b * x[i]);
        const double w = mu * (1.0 - mu);
        const double r = y[i] - mu;
        g0 += r;
        g1 += r * x[i];
        h00 += w;
        h01 += w * x[i];
        h11 += w * x[i] * x[i];
      }
      const double det = h00 * h11 - h01 * h01;
      if (!(det > 0.0) || !std::isfinite(det)) break;
      double da = (h11 * g0 - h01 * g1) / det;
      double db = (h00 * g1 - h01 * g0) / det;
      // Step halving keeps Newton from overshooting on extreme logits.
      double next = loglik(x, y, a + da, b + db, 0.0);
      for (int k = 0; k < kMaxHalvings && !(next >= ll - 1e-10 * (1.0 + std::abs(ll))); ++k) {
        da *= 0.5;
        db *= 0.5;
        next = loglik(x, y, a + da, b + db, 0.0);
      }
      a += da;
      b += db;
      ll = next;
      converged = std::max(std::abs(da), std::abs(db)) <= kTol * std::max({1.0, std::abs(a), std::abs(b)});
    }
    if (converged && std::isfinite(b)) {
      fit.slope = b;
    } else {
      fit.diagnostic = "slope model did not converge";
    }
  }

  // Intercept model: y ~ a + offset(x).
  if (n > 0) {
    double a = 0.0;
    double ll = loglik(x, y, a, 0.0, 1.0);
    bool converged = false;
    for (int it = 0; it < kMaxIter && !converged; ++it) {
      double g = 0, h = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double mu = expit(a + x[i]);
        g += y[i] - mu;
        h += mu * (1.0 - mu);
      }
      if (!(h > 0.0)) break;
      double da = g / h;
      double next = loglik(x, y, a + da, 0.0, 1.0);
      for (int k = 0; k < kMaxHalvings && !(next >= ll - 1e-10 * (1.0 + std::abs(ll))); ++k) {
        da *= 0.5;
        next = loglik(x, y, a + da, 0.0, 1.0);
      }
      a += da;
      ll = next;
      converged = std::abs(da) <= kTol * std::max(1.0, std::abs(a));
    }
    if (converged && std::isfinite(a)) {
      fit.intercept = a;
    } else if (fit.diagnostic.empty()) {
      fit.diagnostic = "intercept model did not converge";
    } else {
      fit.diagnostic += "; intercept model did not converge";
    }
  }
  return fit;
}

namespace {

struct SortedSample {
  std::vector<double> x;
  std::vector<double> y;
};

SortedSample sort_sample(std::span<const double> p, std::span<const int> y) {
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  SortedSample s;
  for (auto i : order) {
    s.x.push_back(p[i]);
    s.y.push_back(y[i]);
  }
  return s;
}

// Weighted local-linear fit at x0 over the q nearest neighbours.
double local_fit(const SortedSample& s, std::size_t q, double x0) {
  const auto& x = s.x;
  const std::size_t n = x.size();
  // Leftmost start l of the q-window closest to x0.
  std::size_t lo = 0, hi = n - q;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (x0 - x[mid] > x[mid + q] - x0) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  const std::size_t l = lo;
  const double h = std::max(x0 - x[l], x[l + q - 1] - x0);
  double s0 = 0, s1 = 0, s2 = 0, t0 = 0, t1 = 0;
  for (std::size_t i = l; i < l + q; ++i) {
    const double dx = x[i] - x0;
    double w = 1.0;
    if (h > 0.0) {
      const double u = std::abs(dx) / h;
      if (u >= 1.0) continue;
      const double c = 1.0 - u * u * u;
      w = c * c * c;
    }
    s0 += w;
    s1 += w * dx;
    s2 += w * dx * dx;
    t0 += w * s.y[i];
    t1 += w * dx * s.y[i];
  }
  if (s0 <= 0.0) return 0.0;
  const double den = s0 * s2 - s1 * s1;
  if (den <= 1e-12 * s0 * s2 || den <= 0.0) return t0 / s0;
  return (s2 * t0 - s1 * t1) / den;
}

constexpr std::size_t kSmoothGrid = 512;

}  // namespace

std::vector<double> local_linear_smooth(std::span<const double> p, std::span<const int> y,
                                        double span) {
  check_pairs(p, y);
  if (!(span > 0.0 && span <= 1.0)) throw InvalidInput("smoother span must lie in (0,1]");
  const std::size_t n = p.size();
  if (n < 2) return {p.begin(), p.end()};
  const auto s = sort_sample(p, y);
  const std::size_t q = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::floor(span * static_cast<double>(n))), 2, n);

  std::vector<double> distinct = s.x;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<double> grid;
  if (distinct.size() <= kSmoothGrid) {
    grid = distinct;
  } else {
    for (std::size_t k = 0; k < kSmoothGrid; ++k) {
      grid.push_back(quantile7(s.x, static_cast<double>(k) / static_cast<double>(kSmoothGrid - 1)));
    }
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  }
  std::vector<double> fitted_grid(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) fitted_grid[g] = local_fit(s, q, grid[g]);

  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto it = std::lower_bound(grid.begin(), grid.end(), p[i]);
    const auto k = static_cast<std::size_t>(it - grid.begin());
    if (it != grid.end() && *it == p[i]) {
      out[i] = fitted_grid[k];
    } else if (k == 0) {
      out[i] = fitted_grid.front();
    } else if (k == grid.size()) {
      out[i] = fitted_grid.back();
    } else {
      const double frac = (p[i] - grid[k - 1]) / (grid[k] - grid[k - 1]);
      out[i] = fitted_grid[k - 1] + frac * (fitted_grid[k] - fitted_grid[k - 1]);
    }
  }
  return out;
}

std::optional<double> eci(std::span<const double> p, std::span<const int> y) {
  check_pairs(p, y);
  if (p.size() < 20) return std::nullopt;
  const auto smooth = local_linear_smooth(p, y, 0.75);
  std::vector<double> sq(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) sq[i] = (p[i] - smooth[i]) * (p[i] - smooth[i]);
  return 100.0 * mean(sq);
}

double logloss(std::span<const double> p, std::span<const int> y) {
  check_pairs(p, y);
  if (p.empty()) throw InvalidInput("logloss of an empty sample");
  std::vector<double> terms(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = clip(p[i]);
    terms[i] = y[i] ? std::log(q) : std::log1p(-q);
  }
  return -mean(terms);
}

std::vector<MetricValue> evaluate_all(std::span<const double> p, std::span<const int> y) {
  check_pairs(p, y);
  std::vector<MetricValue> out;
  const auto add = [&](std::string_view name, std::optional<double> v) {
    out.push_back({std::string(name), v});
  };
  const bool empty = p.empty();
  add("AUROC", auroc(p, y));
  add("AUPRC", auprc(p, y));
  add("BSS", empty ? std::nullopt : brier_and_bss(p, y).skill);
  add("EO", eo_ratio(p, y));
  const auto cal = empty ? CalibrationFit{} : calibration_slope_intercept(p, y);
  add("CalSlope", cal.slope);
  add("CalIntercept", cal.intercept);
  add("ECI", eci(p, y));
  add("LogLoss", empty ? std::nullopt : std::optional<double>(logloss(p, y)));
  return out;
}

std::vector<StratumReport> per_landmark(std::span<const double> p, std::span<const int> y,
                                        std::span<const int> lm) {
  check_pairs(p, y);
  if (lm.size() != p.size()) throw InvalidInput("landmarks and predictions differ in length");
  std::vector<StratumReport> out;
  out.push_back({std::nullopt, p.size(), evaluate_all(p, y)});
  std::map<int, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < lm.size(); ++i) strata[lm[i]].push_back(i);
  for (const auto& [landmark, rows] : strata) {
    std::vector<double> ps;
    std::vector<int> ys;
    for (auto i : rows) {
      ps.push_back(p[i]);
      ys.push_back(y[i]);
    }
    out.push_back({landmark, rows.size(), evaluate_all(ps, ys)});
  }
  return out;
}

}  // namespace lmrf::metrics
