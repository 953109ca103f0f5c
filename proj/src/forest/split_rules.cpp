#include "lmrf/forest/split_rules.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lmrf/common.hpp"
#include "sweep.hpp"

namespace lmrf::forest {

void SplitRule::validate() const {
  if (!is_competing_risks()) return;
  bool any = false;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidInput("cause weights must be finite and nonnegative");
    any = any || w > 0.0;
  }
  if (!any) throw InvalidInput("competing-risks split rule needs a positive cause weight");
}

std::string_view to_string(SplitRuleKind kind) {
  switch (kind) {
    case SplitRuleKind::Gini: return "gini";
    case SplitRuleKind::Logrank: return "logrank";
    case SplitRuleKind::CrLogrank: return "cr_logrank";
    case SplitRuleKind::CrLogrankCif: return "cr_logrank_cif";
  }
  return "?";
}

SplitRuleKind parse_split_rule_kind(std::string_view text) {
  for (auto k : {SplitRuleKind::Gini, SplitRuleKind::Logrank, SplitRuleKind::CrLogrank,
                 SplitRuleKind::CrLogrankCif}) {
    if (to_string(k) == text) return k;
  }
  throw InvalidInput("unknown split rule '" + std::string(text) + "'");
}

double LogrankTerms::score() const {
  return variance > 0.0 ? std::abs(observed_minus_expected) / std::sqrt(variance) : 0.0;
}

double LogrankTerms::chi_square() const {
  return variance > 0.0 ? observed_minus_expected * observed_minus_expected / variance : 0.0;
}

namespace detail {

ClassSweep::ClassSweep(int n_classes)
    : n_classes_(n_classes),
      total_(static_cast<std::size_t>(n_classes)),
      left_(static_cast<std::size_t>(n_classes)),
      right_(static_cast<std::size_t>(n_classes)) {}

void ClassSweep::prepare(std::span<const int> labels) {
  labels_ = labels;
  std::fill(total_.begin(), total_.end(), 0.0);
  for (int c : labels) total_[static_cast<std::size_t>(c)] += 1.0;
  n_ = static_cast<double>(labels.size());
  parent_impurity_ = gini_impurity(total_, n_);
}

bool ClassSweep::degenerate() const {
  return std::count_if(total_.begin(), total_.end(), [](double c) { return c > 0.0; }) <= 1;
}

void ClassSweep::reset() { std::fill(left_.begin(), left_.end(), 0.0); }

void ClassSweep::move_left(std::uint32_t pos) { left_[static_cast<std::size_t>(labels_[pos])] += 1.0; }

double ClassSweep::evaluate(std::size_t n_left) const {
  const double nl = static_cast<double>(n_left);
  const double nr = n_ - nl;
  for (std::size_t c = 0; c < total_.size(); ++c) right_[c] = total_[c] - left_[c];
  return parent_impurity_ - (nl / n_) * gini_impurity(left_, nl) -
         (nr / n_) * gini_impurity(right_, nr);
}

LogrankSweep::LogrankSweep(const SplitRule& rule) : rule_(rule) {
  if (rule.kind == SplitRuleKind::Logrank) {
    score_ = true;
    channels_.emplace_back();
  } else if (rule.is_competing_risks()) {
    gray_ = rule.kind == SplitRuleKind::CrLogrankCif;
    for (int c = 1; c <= 3; ++c) {
      const double w = rule.weights[static_cast<std::size_t>(c - 1)];
      if (w <= 0.0) continue;
      auto& ch = channels_.emplace_back();
      ch.cause = c;
      ch.weight = w;
    }
  } else {
    throw InvalidInput("logrank sweep needs a time-to-event split rule");
  }
}

void LogrankSweep::prepare(std::span<const TimeToEvent> node) {
  const std::size_t n = node.size();
  double max_time = -std::numeric_limits<double>::infinity();
  for (const auto& t : node) max_time = std::max(max_time, t.time);

  for (auto& ch : channels_) {
    auto is_event = [&](const TimeToEvent& t) {
      return ch.cause == 0 ? t.status > 0 : t.status == ch.cause;
    };
    scratch_times_.clear();
    for (const auto& t : node) {
      if (is_event(t)) scratch_times_.push_back(t.time);
    }
    std::sort(scratch_times_.begin(), scratch_times_.end());
    scratch_times_.erase(std::unique(scratch_times_.begin(), scratch_times_.end()),
                         scratch_times_.end());
    const std::size_t m = scratch_times_.size();
    ch.n_times = m;
    ch.level.resize(n);
    ch.event.resize(n);
    ch.at_risk.assign(m, 0.0);
    ch.deaths.assign(m, 0.0);
    ch.left_level.assign(m + 1, 0.0);
    ch.left_deaths.assign(m, 0.0);
    std::vector<double> level_count(m + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& t = node[i];
      const bool competing = gray_ && t.status > 0 && t.status != ch.cause;
      const auto upper = std::upper_bound(scratch_times_.begin(), scratch_times_.end(),
                                          competing ? max_time : t.time);
      ch.level[i] = static_cast<std::uint32_t>(upper - scratch_times_.begin());
      level_count[ch.level[i]] += 1.0;
      if (is_event(t)) {
        const auto e = static_cast<std::int32_t>(ch.level[i]) - 1;  // t.time is an event time
        ch.event[i] = e;
        ch.deaths[static_cast<std::size_t>(e)] += 1.0;
      } else {
        ch.event[i] = -1;
      }
    }
    double y = 0.0;
    for (std::size_t e = m; e-- > 0;) {
      y += level_count[e + 1];
      ch.at_risk[e] = y;
    }
  }
}

bool LogrankSweep::degenerate() const {
  return std::all_of(channels_.begin(), channels_.end(),
                     [](const Channel& ch) { return ch.n_times == 0; });
}

void LogrankSweep::reset() {
  for (auto& ch : channels_) {
    std::fill(ch.left_level.begin(), ch.left_level.end(), 0.0);
    std::fill(ch.left_deaths.begin(), ch.left_deaths.end(), 0.0);
  }
}

void LogrankSweep::move_left(std::uint32_t pos) {
  for (auto& ch : channels_) {
    ch.left_level[ch.level[pos]] += 1.0;
    if (ch.event[pos] >= 0) ch.left_deaths[static_cast<std::size_t>(ch.event[pos])] += 1.0;
  }
}

LogrankTerms LogrankSweep::channel_terms(const Channel& ch) const {
  LogrankTerms terms;
  double y_left = 0.0;
  for (std::size_t e = ch.n_times; e-- > 0;) {
    y_left += ch.left_level[e + 1];
    const double y = ch.at_risk[e];
    if (y <= 1.0) continue;
    const double d = ch.deaths[e];
    const double frac = y_left / y;
    terms.observed_minus_expected += ch.left_deaths[e] - d * frac;
    terms.variance += d * frac * (1.0 - frac) * (y - d) / (y - 1.0);
  }
  return terms;
}

double LogrankSweep::evaluate(std::size_t /*n_left*/) const {
  if (score_) return channel_terms(channels_.front()).score();
  double stat = 0.0;
  for (const auto& ch : channels_) {
    if (ch.n_times == 0) continue;
    stat += ch.weight * channel_terms(ch).chi_square();
  }
  return stat;
}

std::vector<LogrankTerms> LogrankSweep::terms() const {
  std::vector<LogrankTerms> out;
  for (const auto& ch : channels_) out.push_back(channel_terms(ch));
  return out;
}

}  // namespace detail

namespace {

template <typename T>
std::vector<T> concat(std::span<const T> a, std::span<const T> b) {
  std::vector<T> out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

template <typename Sweep, typename T>
void load_left(Sweep& sweep, std::span<const T> node, std::size_t n_left) {
  sweep.prepare(node);
  sweep.reset();
  for (std::size_t i = 0; i < n_left; ++i) sweep.move_left(static_cast<std::uint32_t>(i));
}

double time_to_event_statistic(const SplitRule& rule, std::span<const TimeToEvent> left,
                               std::span<const TimeToEvent> right) {
  rule.validate();
  const auto node = concat(left, right);
  detail::LogrankSweep sweep(rule);
  load_left(sweep, std::span<const TimeToEvent>(node), left.size());
  if (left.empty() || right.empty()) return 0.0;
  return sweep.evaluate(left.size());
}

}  // namespace

double split_gini(std::span<const int> left_labels, std::span<const int> right_labels,
                  int n_classes) {
  if (left_labels.empty() || right_labels.empty()) return 0.0;
  for (int c : left_labels) {
    if (c < 0 || c >= n_classes) throw InvalidInput("class label out of range");
  }
  for (int c : right_labels) {
    if (c < 0 || c >= n_classes) throw InvalidInput("class label out of range");
  }
  const auto node = concat(left_labels, right_labels);
  detail::ClassSweep sweep(n_classes);
  load_left(sweep, std::span<const int>(node), left_labels.size());
  return sweep.evaluate(left_labels.size());
}

double split_logrank(std::span<const TimeToEvent> left, std::span<const TimeToEvent> right) {
  return time_to_event_statistic(SplitRule::logrank(), left, right);
}

LogrankTerms logrank_terms(std::span<const TimeToEvent> left, std::span<const TimeToEvent> right) {
  const auto node = concat(left, right);
  detail::LogrankSweep sweep(SplitRule::logrank());
  load_left(sweep, std::span<const TimeToEvent>(node), left.size());
  return sweep.terms().front();
}

double split_cr_logrank(std::span<const TimeToEvent> left, std::span<const TimeToEvent> right,
                        const std::array<double, 3>& weights) {
  return time_to_event_statistic(SplitRule::cr_logrank(weights), left, right);
}

double split_cr_logrank_cif(std::span<const TimeToEvent> left, std::span<const TimeToEvent> right,
                            const std::array<double, 3>& weights) {
  return time_to_event_statistic(SplitRule::cr_logrank_cif(weights), left, right);
}

}  // namespace lmrf::forest
