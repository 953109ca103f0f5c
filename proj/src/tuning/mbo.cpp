#include "lmrf/tuning/mbo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

#include "lmrf/common.hpp"
#include "lmrf/tuning/gaussian_process.hpp"

namespace lmrf::tuning {

std::string_view to_string(Phase phase) {
  return phase == Phase::Design ? "design" : "optimization";
}

void SearchSpace::validate() const {
  if (dims.empty()) throw InvalidInput("search space has no dimensions");
  for (const auto& d : dims) {
    if (!(d.lower < d.upper) || !std::isfinite(d.lower) || !std::isfinite(d.upper)) {
      throw InvalidInput("dimension '" + d.name + "' needs finite bounds with lower < upper");
    }
    if (d.integer && (d.lower != std::round(d.lower) || d.upper != std::round(d.upper))) {
      throw InvalidInput("integer dimension '" + d.name + "' needs integral bounds");
    }
  }
}

bool SearchSpace::contains(std::span<const double> x) const {
  if (x.size() != dims.size()) return false;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    if (!(x[k] >= dims[k].lower && x[k] <= dims[k].upper)) return false;
    if (dims[k].integer && x[k] != std::round(x[k])) return false;
  }
  return true;
}

SearchSpace SearchSpace::forest(bool dynamic, std::size_t n_features) {
  const double mtry_max = static_cast<double>(std::min<std::size_t>(15, n_features));
  if (mtry_max <= 2.0) throw InvalidInput("tuning mtry needs at least 3 features");
  SearchSpace s;
  s.dims.push_back({"mtry", 2.0, mtry_max, true});
  s.dims.push_back({"nodesize", 50.0, 4000.0, true});
  if (dynamic) s.dims.push_back({"subsample_fraction", 0.30, 0.80, false});
  return s;
}

namespace {

using Point = std::vector<double>;

class Sampler {
 public:
  explicit Sampler(const SearchSpace& space) : space_(space) {}

  Point uniform(std::mt19937_64& rng) const {
    Point x(space_.dims.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
      const auto& d = space_.dims[k];
      if (d.integer) {
        x[k] = static_cast<double>(std::uniform_int_distribution<long long>(
            std::llround(d.lower), std::llround(d.upper))(rng));
      } else {
        x[k] = std::uniform_real_distribution<double>(d.lower, d.upper)(rng);
      }
    }
    return x;
  }

  Point from_unit(std::span<const double> u) const {
    Point x(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) {
      const auto& d = space_.dims[k];
      x[k] = d.lower + std::clamp(u[k], 0.0, 1.0) * (d.upper - d.lower);
      if (d.integer) x[k] = std::clamp(std::round(x[k]), d.lower, d.upper);
    }
    return x;
  }

  Point to_unit(std::span<const double> x) const {
    Point u(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
      const auto& d = space_.dims[k];
      u[k] = (x[k] - d.lower) / (d.upper - d.lower);
    }
    return u;
  }

  Point perturb(const Point& x, std::mt19937_64& rng) const {
    Point y = x;
    for (std::size_t k = 0; k < y.size(); ++k) {
      const auto& d = space_.dims[k];
      if (d.integer) {
        const double step = std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0;
        y[k] = std::clamp(y[k] + step, d.lower, d.upper);
      } else {
        y[k] = std::clamp(y[k] + std::normal_distribution<double>(0.0, 0.05 * (d.upper - d.lower))(rng),
                          d.lower, d.upper);
      }
    }
    return y;
  }

 private:
  const SearchSpace& space_;
};

bool seen(const std::vector<TracePoint>& trace, const Point& x) {
  return std::any_of(trace.begin(), trace.end(), [&](const TracePoint& t) { return t.x == x; });
}

double evaluate(const Objective& objective, const Point& x, double& seconds) {
  const auto start = std::chrono::steady_clock::now();
  double value = std::numeric_limits<double>::infinity();
  try {
    value = objective(x);
    if (std::isnan(value)) value = std::numeric_limits<double>::infinity();
  } catch (const std::exception&) {
    value = std::numeric_limits<double>::infinity();
  }
  seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return value;
}

constexpr std::uint64_t kDesignStream = 1;
constexpr std::uint64_t kProposalStream = 2;
constexpr std::uint64_t kSurrogateStream = 3;
constexpr int kLocalCenters = 5;
constexpr double kLocalSd = 0.1;

}  // namespace

TuneResult tune(const Objective& objective, const SearchSpace& space, const TuneOptions& options) {
  space.validate();
  if (options.design_points < 1) throw InvalidInput("need at least one design point");
  if (options.iterations < 0 || options.candidates < 1) throw InvalidInput("invalid tuning budget");
  const Sampler sampler(space);
  TuneResult result;
  auto& trace = result.trace;

  // Design phase.
  std::mt19937_64 design_rng(derive_seed(options.seed, kDesignStream));
  std::vector<Point> design;
  for (int i = 0; i < options.design_points; ++i) {
    Point x = sampler.uniform(design_rng);
    for (int attempt = 0; attempt < 1000 && std::find(design.begin(), design.end(), x) != design.end();
         ++attempt) {
      x = sampler.uniform(design_rng);
    }
    design.push_back(std::move(x));
  }
  trace.resize(design.size());
  parallel_for(design.size(), options.jobs, [&](std::size_t i) {
    auto& t = trace[i];
    t.step = static_cast<int>(i) + 1;
    t.phase = Phase::Design;
    t.x = design[i];
    t.objective = evaluate(objective, t.x, t.seconds);
  });

  // Optimization phase.
  for (int it = 0; it < options.iterations; ++it) {
    std::mt19937_64 rng(derive_seed(derive_seed(options.seed, kProposalStream), static_cast<std::uint64_t>(it)));
    std::vector<Point> unit_x;
    std::vector<double> y;
    std::vector<std::size_t> finite;
    for (std::size_t i = 0; i < trace.size(); ++i) {
      if (!std::isfinite(trace[i].objective)) continue;
      unit_x.push_back(sampler.to_unit(trace[i].x));
      y.push_back(trace[i].objective);
      finite.push_back(i);
    }

    Point proposal;
    if (finite.empty()) {
      proposal = sampler.uniform(rng);
    } else {
      const auto gp = GaussianProcess::fit(
          unit_x, y, derive_seed(derive_seed(options.seed, kSurrogateStream), static_cast<std::uint64_t>(it)));
      const double best = *std::min_element(y.begin(), y.end());
      std::vector<std::size_t> ranked(finite.size());
      for (std::size_t k = 0; k < ranked.size(); ++k) ranked[k] = k;
      std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) { return y[a] < y[b]; });
      const std::size_t centers = std::min<std::size_t>(kLocalCenters, ranked.size());

      const auto propose = [&]() {
        Point best_x;
        double best_ei = -1.0;
        std::normal_distribution<double> noise(0.0, kLocalSd);
        for (int c = 0; c < options.candidates; ++c) {
          Point x;
          if (c < options.candidates / 2) {
            x = sampler.uniform(rng);
          } else {
            Point u = unit_x[ranked[static_cast<std::size_t>(c) % centers]];
            for (auto& v : u) v += noise(rng);
            x = sampler.from_unit(u);
          }
          const auto pred = gp.predict(sampler.to_unit(x));
          const double ei = expected_improvement(pred.mean, pred.sd, best);
          if (ei > best_ei) {
            best_ei = ei;
            best_x = std::move(x);
          }
        }
        return best_x;
      };
      proposal = propose();
      if (seen(trace, proposal)) proposal = propose();
      for (int attempt = 0; attempt < 100 && seen(trace, proposal); ++attempt) {
        proposal = sampler.perturb(proposal, rng);
      }
    }

    TracePoint t;
    t.step = static_cast<int>(trace.size()) + 1;
    t.phase = Phase::Optimization;
    t.x = proposal;
    t.objective = evaluate(objective, t.x, t.seconds);
    trace.push_back(std::move(t));
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (trace[i].objective < trace[best].objective) best = i;
  }
  result.best = trace[best].x;
  result.best_objective = trace[best].objective;
  return result;
}

}  // namespace lmrf::tuning
