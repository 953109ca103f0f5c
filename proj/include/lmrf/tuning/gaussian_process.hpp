#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace lmrf::tuning {

struct GpOptions {
  int restarts = 5;
  double min_log_length = -4.605170185988091;  // log 0.01
  double max_log_length = 2.302585092994046;   // log 10
  double initial_nugget = 1e-8;
  double max_nugget = 1e-2;
};

/// Kriging surrogate: constant (GLS) mean, anisotropic squared-exponential
/// correlation, profiled process variance. Inputs are expected on [0,1]^d.
class GaussianProcess {
 public:
  using Options = GpOptions;

  struct Prediction {
    double mean = 0.0;
    double sd = 0.0;
  };

  GaussianProcess() = default;

  /// Maximum-likelihood fit over log length-scales by seeded multi-start
  /// Nelder-Mead.
  static GaussianProcess fit(const std::vector<std::vector<double>>& x, std::span<const double> y,
                             std::uint64_t seed, const Options& options);
  static GaussianProcess fit(const std::vector<std::vector<double>>& x, std::span<const double> y,
                             std::uint64_t seed) {
    return fit(x, y, seed, Options{});
  }

  /// Fit with fixed length-scales (no likelihood search).
  static GaussianProcess with_length_scales(const std::vector<std::vector<double>>& x,
                                            std::span<const double> y,
                                            std::vector<double> length_scales,
                                            const Options& options = Options{});

  Prediction predict(std::span<const double> x) const;

  const std::vector<double>& length_scales() const { return length_; }
  double process_variance() const { return sigma2_ * y_scale_ * y_scale_; }
  double nugget() const { return nugget_; }
  /// True when the nugget had to be raised above its initial value.
  bool nugget_escalated() const { return escalated_; }
  double mean_constant() const { return beta_ * y_scale_ + y_center_; }

 private:
  std::vector<std::vector<double>> x_;
  std::vector<double> length_;
  double nugget_ = 1e-8;
  bool escalated_ = false;
  double y_center_ = 0.0;
  double y_scale_ = 1.0;
  double beta_ = 0.0;
  double sigma2_ = 0.0;
  struct Factorization;
  std::shared_ptr<const Factorization> factor_;
};

/// EI for minimization: (best - mu) Phi(z) + sigma phi(z), z = (best - mu) / sigma;
/// 0 when sigma = 0.
double expected_improvement(double mu, double sigma, double best);

}  // namespace lmrf::tuning
