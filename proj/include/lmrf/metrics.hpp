#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lmrf::metrics {

// All functions take predicted risks p in [0,1] and outcomes y in {0,1} of
// equal length. Metrics that are undefined for the input are std::nullopt.

inline constexpr double kClip = 1e-10;

std::optional<double> auroc(std::span<const double> p, std::span<const int> y);

/// Average precision over a descending-score sweep; tied scores enter as one
/// step.
std::optional<double> auprc(std::span<const double> p, std::span<const int> y);

struct BrierScore {
  double brier = 0.0;
  std::optional<double> skill;  // 1 - brier / brier of the prevalence predictor
};
BrierScore brier_and_bss(std::span<const double> p, std::span<const int> y);

/// mean(p) / mean(y).
std::optional<double> eo_ratio(std::span<const double> p, std::span<const int> y);

struct CalibrationFit {
  std::optional<double> slope;      // y ~ a + b logit(p)
  std::optional<double> intercept;  // y ~ a + offset(logit(p))
  std::string diagnostic;           // why a value is absent
};
CalibrationFit calibration_slope_intercept(std::span<const double> p, std::span<const int> y);

/// Local-linear tricube smoother of y on p (span as a fraction of n).
/// Fitted values at each p.
std::vector<double> local_linear_smooth(std::span<const double> p, std::span<const int> y,
                                        double span = 0.75);

/// 100 * mean (p - smoothed(p))^2; absent for n < 20.
std::optional<double> eci(std::span<const double> p, std::span<const int> y);

double logloss(std::span<const double> p, std::span<const int> y);

// ---------------------------------------------------------------------------
// Curves

struct CalibrationPoint {
  double mean_predicted = 0.0;
  double observed = 0.0;
  std::size_t n = 0;
};

/// Groups cut at the deciles of p (duplicate cut points merged).
std::vector<CalibrationPoint> calibration_deciles(std::span<const double> p, std::span<const int> y);

struct CurvePoint {
  double predicted = 0.0;
  double observed = 0.0;
};

/// Logistic regression of y on a natural cubic spline of logit(p) with `df`
/// degrees of freedom, evaluated on `points` values of p evenly spaced on the
/// logit scale across the observed range. Empty if the fit fails.
std::vector<CurvePoint> calibration_splines(std::span<const double> p, std::span<const int> y,
                                            int df = 6, int points = 100);

struct NetBenefitPoint {
  double threshold = 0.0;
  double model = 0.0;
  double treat_all = 0.0;
  double treat_none = 0.0;
};

/// Thresholds 0, 0.001, ..., 0.06.
std::vector<double> default_thresholds();

/// NB(pt) = TP/n - FP/n * pt/(1-pt), calling p >= pt positive.
std::vector<NetBenefitPoint> net_benefit(std::span<const double> p, std::span<const int> y,
                                         std::span<const double> thresholds);

struct DensityBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t events = 0;
  std::size_t non_events = 0;
};
/// Histogram of p by outcome with equal-width bins over [0, max p].
std::vector<DensityBin> prediction_density(std::span<const double> p, std::span<const int> y,
                                           int bins = 50);

// ---------------------------------------------------------------------------
// Reports

inline constexpr std::string_view kMetricNames[] = {"AUROC", "AUPRC", "BSS", "EO",
                                                    "CalSlope", "CalIntercept", "ECI", "LogLoss"};

struct MetricValue {
  std::string metric;
  std::optional<double> value;
};

/// Every metric in kMetricNames order.
std::vector<MetricValue> evaluate_all(std::span<const double> p, std::span<const int> y);

struct StratumReport {
  std::optional<int> lm;  // empty for the pooled scope
  std::size_t n = 0;
  std::vector<MetricValue> values;
};

/// Pooled metrics followed by one report per distinct landmark, ascending.
std::vector<StratumReport> per_landmark(std::span<const double> p, std::span<const int> y,
                                        std::span<const int> lm);

}  // namespace lmrf::metrics
