#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace lmrf::tuning {

struct Dimension {
  std::string name;
  double lower = 0.0;
  double upper = 1.0;
  bool integer = false;
};

struct SearchSpace {
  std::vector<Dimension> dims;

  void validate() const;
  bool contains(std::span<const double> x) const;

  /// mtry in [2, min(15, n_features)], nodesize in [50, 4000], plus
  /// subsample_fraction in [0.3, 0.8] for dynamic models.
  static SearchSpace forest(bool dynamic, std::size_t n_features);
};

enum class Phase { Design, Optimization };

struct TracePoint {
  int step = 0;  // 1-based
  Phase phase = Phase::Design;
  std::vector<double> x;
  double objective = 0.0;  // +inf if the evaluation failed
  double seconds = 0.0;
};

struct TuneOptions {
  int design_points = 20;
  int iterations = 30;
  int candidates = 1024;
  std::uint64_t seed = 1;
  std::size_t jobs = 1;  // parallel design evaluations
};

struct TuneResult {
  std::vector<double> best;
  double best_objective = 0.0;
  std::vector<TracePoint> trace;
};

using Objective = std::function<double(std::span<const double>)>;

/// Uniform design followed by expected-improvement proposals from a GP
/// surrogate. Returns the best point of the trace.
TuneResult tune(const Objective& objective, const SearchSpace& space, const TuneOptions& options);

std::string_view to_string(Phase phase);

}  // namespace lmrf::tuning
