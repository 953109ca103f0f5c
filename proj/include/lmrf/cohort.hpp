#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lmrf {

// Numeric codes are part of the file and model formats.
enum class EventType : int { Censored = 0, Clabsi = 1, Death = 2, Discharge = 3 };

std::string_view to_string(EventType type);
EventType parse_event_type(std::string_view text);

/// Missing covariate value.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) { return std::isnan(v); }

/// One catheter in an admission, in days since admission.
struct CatheterInterval {
  std::string admission_id;
  double start = 0.0;
  double end = 0.0;
};

/// Terminal event of an admission (time in days since admission).
struct AdmissionEvent {
  EventType type = EventType::Discharge;
  double time = 0.0;
};

struct CatheterEpisode {
  std::string admission_id;
  int episode_id = 1;
  double start = 0.0;
  EventType event_type = EventType::Discharge;
  double event_time = 0.0;  // days from episode start
};

/// One landmark (catheter-day) of one episode.
struct LandmarkRow {
  std::string admission_id;
  int episode_id = 1;
  int lm = 0;
  std::vector<double> covariates;
  EventType event_type = EventType::Discharge;
  double event_time = 0.0;

  /// Time from this landmark to the episode's event.
  double residual() const { return event_time - static_cast<double>(lm); }
};

struct LandmarkTable {
  std::vector<std::string> feature_names;
  std::vector<LandmarkRow> rows;

  std::size_t feature_index(std::string_view name) const;
};

struct TimeToEvent {
  double time = 0.0;
  int status = 0;  // 0 censored, k >= 1 cause k

  friend bool operator==(const TimeToEvent&, const TimeToEvent&) = default;
};

enum class HorizonClass : int { NoEvent = 0, Clabsi = 1, Death = 2, Discharge = 3 };

/// How survival encodings treat death and discharge.
enum class CensorScheme {
  AtEventTime,  // censored when the competing event happens
  AtHorizon,    // kept at risk until the horizon, then censored
};

inline constexpr double kEpisodeGapDays = 2.0;
inline constexpr double kDefaultHorizon = 7.0;

/// Groups catheter intervals into episodes. Intervals of one admission that
/// overlap or are separated by less than `gap_days` are merged. An episode
/// ends at the admission event if that falls inside [start, last removal +
/// gap_days], otherwise with Discharge at last removal + gap_days. Episodes
/// starting at or after the admission event are dropped.
std::vector<CatheterEpisode> assemble_episodes(
    std::span<const CatheterInterval> intervals,
    const std::map<std::string, AdmissionEvent>& admission_events,
    double gap_days = kEpisodeGapDays);

using CovariateSource = std::function<std::vector<double>(const CatheterEpisode&, int lm)>;

/// Landmarks lm = 0, 1, ... with lm < event_time.
std::vector<LandmarkRow> build_landmarks(const CatheterEpisode& episode,
                                         const CovariateSource& covariates);

int label_binary(const LandmarkRow& row, double horizon = kDefaultHorizon);
HorizonClass label_multinomial(const LandmarkRow& row, double horizon = kDefaultHorizon);

TimeToEvent to_competing_risks(const LandmarkRow& row);
/// Applies a competing-event censor scheme to a competing-risks record.
/// Status 1 and already-censored records pass through.
TimeToEvent censor_competing(TimeToEvent t, CensorScheme scheme, double horizon);
TimeToEvent to_survival(const LandmarkRow& row, CensorScheme scheme,
                        double horizon = kDefaultHorizon);

TimeToEvent discretize_time(TimeToEvent t);
TimeToEvent administrative_censor(TimeToEvent t, double tau);

struct AdmissionSplit {
  std::vector<std::size_t> train;  // row indices, ascending
  std::vector<std::size_t> test;
};

/// Random partition of admissions; every row of an admission lands on one side.
AdmissionSplit split_by_admission(std::span<const LandmarkRow> rows, double train_fraction,
                                  std::uint64_t seed);

LandmarkTable subset(const LandmarkTable& table, std::span<const std::size_t> indices);
LandmarkTable filter_landmark(const LandmarkTable& table, int lm);

// ---------------------------------------------------------------------------
// Simple imputation

enum class ImputeKind { Mean, Mode, Fixed, Locf };

struct ImputePolicy {
  ImputeKind kind = ImputeKind::Mean;
  double fixed_value = 0.0;

  static ImputePolicy mean() { return {ImputeKind::Mean, 0.0}; }
  static ImputePolicy mode() { return {ImputeKind::Mode, 0.0}; }
  static ImputePolicy fixed(double v) { return {ImputeKind::Fixed, v}; }
  static ImputePolicy locf() { return {ImputeKind::Locf, 0.0}; }
};

ImputePolicy parse_impute_policy(std::string_view text);
std::string to_string(const ImputePolicy& policy);

/// Imputation constants learned on a training table and reused verbatim on
/// any other table. LOCF carries values forward within an episode and falls
/// back to the training mean for leading gaps.
class SimpleImputer {
 public:
  SimpleImputer() = default;
  SimpleImputer(std::vector<ImputePolicy> policies, std::vector<double> constants);

  static SimpleImputer fit(const LandmarkTable& train, std::vector<ImputePolicy> policies);

  void apply(LandmarkTable& table) const;

  const std::vector<ImputePolicy>& policies() const { return policies_; }
  /// Fill value per feature (training statistic, fixed value, or LOCF fallback).
  const std::vector<double>& constants() const { return constants_; }

 private:
  std::vector<ImputePolicy> policies_;
  std::vector<double> constants_;
};

/// Mean for continuous features, mode for 0/1 features; LOCF (mean
/// fallback) everywhere when `dynamic` is set.
std::vector<ImputePolicy> default_impute_policies(const LandmarkTable& train, bool dynamic);

// ---------------------------------------------------------------------------
// Landmark CSV: admission_id,episode_id,lm,<features...>,event_type,event_time

LandmarkTable read_landmark_csv(std::istream& in);
LandmarkTable read_landmark_csv(const std::string& path);
void write_landmark_csv(std::ostream& out, const LandmarkTable& table);
void write_landmark_csv(const std::string& path, const LandmarkTable& table);

}  // namespace lmrf
