#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "lmrf/harness/experiment.hpp"
#include "lmrf/tuning/mbo.hpp"

namespace lmrf::harness {

struct SummaryStat {
  std::size_t n = 0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
};

/// Median and quartiles (type-7 quantiles). Throws on an empty input.
SummaryStat median_iqr(std::vector<double> values);

/// step,phase,mtry,nodesize,subsample_fraction,objective,seconds
void write_trace_csv(std::ostream& out, std::span<const tuning::TracePoint> trace);

/// Writes metrics.csv, timings.csv, predictions.csv, importance.csv,
/// hyperparams.csv, failures.csv, summary.csv, config.json, curves/*.csv
/// and tuning/*.csv under `dir`. Every file is written atomically.
void emit_reports(const ExperimentResult& result, const std::filesystem::path& dir);

}  // namespace lmrf::harness
