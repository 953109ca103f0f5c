#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "lmrf/common.hpp"
#include "lmrf/metrics.hpp"
#include "metrics_internal.hpp"

namespace lmrf::metrics {

using namespace detail;

std::vector<CalibrationPoint> calibration_deciles(std::span<const double> p, std::span<const int> y) {
  check_pairs(p, y);
  if (p.empty()) return {};
  std::vector<double> sorted(p.begin(), p.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> breaks;
  for (int k = 0; k <= 10; ++k) breaks.push_back(quantile7(sorted, k / 10.0));
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  const std::size_t groups = std::max<std::size_t>(1, breaks.size() - 1);

  std::vector<double> sum_p(groups, 0.0), sum_y(groups, 0.0);
  std::vector<std::size_t> count(groups, 0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    std::size_t g = 0;
    if (breaks.size() > 1) {
      g = static_cast<std::size_t>(std::lower_bound(breaks.begin() + 1, breaks.end(), p[i]) -
                                   (breaks.begin() + 1));
      g = std::min(g, groups - 1);
    }
    sum_p[g] += p[i];
    sum_y[g] += y[i];
    ++count[g];
  }
  std::vector<CalibrationPoint> out;
  for (std::size_t g = 0; g < groups; ++g) {
    if (count[g] == 0) continue;
    const double c = static_cast<double>(count[g]);
    out.push_back({sum_p[g] / c, sum_y[g] / c, count[g]});
  }
  return out;
}

namespace {

// Restricted (natural) cubic spline basis: x plus K-2 truncated-power terms,
// linear beyond the boundary knots.
Eigen::RowVectorXd spline_row(double x, const std::vector<double>& knots) {
  const std::size_t k = knots.size();
  const std::size_t cols = k >= 3 ? k : 2;
  Eigen::RowVectorXd row(static_cast<Eigen::Index>(cols));
  row(0) = 1.0;
  row(1) = x;
  if (k < 3) return row;
  const double t_last = knots[k - 1];
  const double t_prev = knots[k - 2];
  const double scale = (t_last - knots[0]) * (t_last - knots[0]);
  const auto cube = [](double v) { return v > 0.0 ? v * v * v : 0.0; };
  for (std::size_t j = 0; j + 2 < k; ++j) {
    const double tj = knots[j];
    const double v = cube(x - tj) - cube(x - t_prev) * (t_last - tj) / (t_last - t_prev) +
                     cube(x - t_last) * (t_prev - tj) / (t_last - t_prev);
    row(static_cast<Eigen::Index>(j + 2)) = v / scale;
  }
  return row;
}

}  // namespace

std::vector<CurvePoint> calibration_splines(std::span<const double> p, std::span<const int> y,
                                            int df, int points) {
  check_pairs(p, y);
  if (df < 1) throw InvalidInput("spline degrees of freedom must be positive");
  if (points < 2) throw InvalidInput("need at least two curve points");
  const std::size_t n = p.size();
  if (n < 2) return {};
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = logit(clip(p[i]));
  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back()) return {};

  std::vector<double> knots;
  for (int k = 0; k <= df; ++k) knots.push_back(quantile7(sorted, static_cast<double>(k) / df));
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

  const auto cols = static_cast<Eigen::Index>(knots.size() >= 3 ? knots.size() : 2);
  Eigen::MatrixXd design(static_cast<Eigen::Index>(n), cols);
  for (std::size_t i = 0; i < n; ++i) design.row(static_cast<Eigen::Index>(i)) = spline_row(x[i], knots);
  Eigen::VectorXd yv(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) yv(static_cast<Eigen::Index>(i)) = y[i];

  const double ybar = yv.mean();
  if (ybar <= 0.0 || ybar >= 1.0) return {};
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(cols);
  beta(0) = std::log(ybar / (1.0 - ybar));
  bool converged = false;
  for (int it = 0; it < 100 && !converged; ++it) {
    const Eigen::VectorXd eta = design * beta;
    const Eigen::VectorXd mu = eta.unaryExpr([](double v) { return expit(v); });
    const Eigen::VectorXd w = mu.array() * (1.0 - mu.array());
    const Eigen::MatrixXd h = design.transpose() * w.asDiagonal() * design;
    const Eigen::VectorXd g = design.transpose() * (yv - mu);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    if (ldlt.info() != Eigen::Success) return {};
    const Eigen::VectorXd step = ldlt.solve(g);
    if (!step.allFinite()) return {};
    beta += step;
    converged = step.cwiseAbs().maxCoeff() <= 1e-8 * std::max(1.0, beta.cwiseAbs().maxCoeff());
  }
  if (!converged) return {};

  std::vector<CurvePoint> out;
  const double lo = sorted.front(), hi = sorted.back();
  for (int k = 0; k < points; ++k) {
    const double xv = lo + (hi - lo) * k / (points - 1);
    out.push_back({expit(xv), expit(spline_row(xv, knots).dot(beta))});
  }
  return out;
}

std::vector<double> default_thresholds() {
  std::vector<double> t;
  for (int k = 0; k <= 60; ++k) t.push_back(k / 1000.0);
  return t;
}

std::vector<NetBenefitPoint> net_benefit(std::span<const double> p, std::span<const int> y,
                                         std::span<const double> thresholds) {
  check_pairs(p, y);
  if (p.empty()) throw InvalidInput("net benefit of an empty sample");
  const double n = static_cast<double>(p.size());
  double positives = 0.0;
  for (int v : y) positives += v;
  const double prevalence = positives / n;
  std::vector<NetBenefitPoint> out;
  for (double pt : thresholds) {
    if (!(pt >= 0.0 && pt < 1.0)) throw InvalidInput("thresholds must lie in [0,1)");
    double tp = 0.0, fp = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] >= pt) (y[i] ? tp : fp) += 1.0;
    }
    const double odds = pt / (1.0 - pt);
    out.push_back({pt, tp / n - (fp / n) * odds, prevalence - (1.0 - prevalence) * pt / (1.0 - pt), 0.0});
  }
  return out;
}

std::vector<DensityBin> prediction_density(std::span<const double> p, std::span<const int> y, int bins) {
  check_pairs(p, y);
  if (bins < 1) throw InvalidInput("need at least one bin");
  double top = 0.0;
  for (double v : p) top = std::max(top, v);
  if (top == 0.0) top = 1.0;
  const double width = top / bins;
  std::vector<DensityBin> out(static_cast<std::size_t>(bins));
  for (int b = 0; b < bins; ++b) {
    out[static_cast<std::size_t>(b)].lower = b * width;
    out[static_cast<std::size_t>(b)].upper = b + 1 == bins ? top : (b + 1) * width;
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto b = std::min<std::size_t>(static_cast<std::size_t>(bins - 1),
                                         static_cast<std::size_t>(p[i] / width));
    (y[i] ? out[b].events : out[b].non_events) += 1;
  }
  return out;
}

}  // namespace lmrf::metrics
