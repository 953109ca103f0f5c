#include "lmrf/tuning/gaussian_process.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include <Eigen/Dense>
#include <gsl/gsl_cdf.h>
#include <gsl/gsl_multimin.h>
#include <gsl/gsl_randist.h>

#include "lmrf/common.hpp"

namespace lmrf::tuning {

struct GaussianProcess::Factorization {
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::VectorXd alpha;     // R^-1 (y - beta)
  Eigen::VectorXd rinv_one;  // R^-1 1
  double one_rinv_one = 1.0;
};

namespace {

using Points = std::vector<std::vector<double>>;

double correlation(std::span<const double> a, std::span<const double> b,
                   std::span<const double> length) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double u = (a[d] - b[d]) / length[d];
    s += u * u;
  }
  return std::exp(-0.5 * s);
}

struct Profile {
  double neg2ll = 0.0;
  double beta = 0.0;
  double sigma2 = 0.0;
  double nugget = 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::VectorXd alpha;
  Eigen::VectorXd rinv_one;
  double one_rinv_one = 1.0;
};

std::optional<Profile> profile(const Points& x, const Eigen::VectorXd& y,
                               std::span<const double> length,
                               const GaussianProcess::Options& opt) {
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      k(i, j) = k(j, i) = correlation(x[static_cast<std::size_t>(i)], x[static_cast<std::size_t>(j)], length);
    }
  }
  Profile pr;
  bool ok = false;
  for (double nug = opt.initial_nugget; nug <= opt.max_nugget * (1.0 + 1e-9); nug *= 10.0) {
    pr.llt.compute(k + nug * Eigen::MatrixXd::Identity(n, n));
    // Every pivot of R + nug I is at least nug; smaller ones are rounding noise.
    if (pr.llt.info() == Eigen::Success && pr.llt.matrixLLT().diagonal().minCoeff() >= std::sqrt(0.5 * nug)) {
      pr.nugget = nug;
      ok = true;
      break;
    }
  }
  if (!ok) return std::nullopt;
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  pr.rinv_one = pr.llt.solve(ones);
  pr.one_rinv_one = ones.dot(pr.rinv_one);
  pr.beta = pr.rinv_one.dot(y) / pr.one_rinv_one;
  const Eigen::VectorXd resid = y - pr.beta * ones;
  pr.alpha = pr.llt.solve(resid);
  pr.sigma2 = std::max(resid.dot(pr.alpha) / static_cast<double>(n), 0.0);
  const Eigen::MatrixXd l = pr.llt.matrixL();
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) logdet += 2.0 * std::log(l(i, i));
  pr.neg2ll = static_cast<double>(n) * std::log(std::max(pr.sigma2, 1e-300)) + logdet;
  if (!std::isfinite(pr.neg2ll) || !pr.alpha.allFinite()) return std::nullopt;
  return pr;
}

struct SearchContext {
  const Points* x;
  const Eigen::VectorXd* y;
  const GaussianProcess::Options* opt;
};

double search_objective(const gsl_vector* v, void* params) {
  const auto* ctx = static_cast<const SearchContext*>(params);
  const std::size_t d = v->size;
  std::vector<double> length(d);
  double penalty = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const double raw = gsl_vector_get(v, k);
    const double t = std::clamp(raw, ctx->opt->min_log_length, ctx->opt->max_log_length);
    penalty += (raw - t) * (raw - t);
    length[k] = std::exp(t);
  }
  const auto pr = profile(*ctx->x, *ctx->y, length, *ctx->opt);
  if (!pr) return 1e300;
  return pr->neg2ll + 1e3 * penalty;
}

std::vector<double> nelder_mead(SearchContext& ctx, std::vector<double> start, double& value) {
  const std::size_t d = start.size();
  gsl_multimin_function fn{&search_objective, d, &ctx};
  gsl_vector* x0 = gsl_vector_alloc(d);
  gsl_vector* step = gsl_vector_alloc(d);
  for (std::size_t k = 0; k < d; ++k) {
    gsl_vector_set(x0, k, start[k]);
    gsl_vector_set(step, k, 1.0);
  }
  gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, d);
  gsl_multimin_fminimizer_set(s, &fn, x0, step);
  for (int it = 0; it < 300; ++it) {
    if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), 1e-4) == GSL_SUCCESS) break;
  }
  std::vector<double> best(d);
  for (std::size_t k = 0; k < d; ++k) {
    best[k] = std::clamp(gsl_vector_get(s->x, k), ctx.opt->min_log_length, ctx.opt->max_log_length);
  }
  value = s->fval;
  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(step);
  gsl_vector_free(x0);
  return best;
}

void check_inputs(const Points& x, std::span<const double> y) {
  if (x.empty()) throw InvalidInput("surrogate needs at least one point");
  if (x.size() != y.size()) throw InvalidInput("surrogate inputs and outputs differ in length");
  for (const auto& p : x) {
    if (p.size() != x.front().size()) throw InvalidInput("surrogate inputs differ in dimension");
  }
  for (double v : y) {
    if (!std::isfinite(v)) throw InvalidInput("surrogate outputs must be finite");
  }
}

void check_options(const GaussianProcess::Options& o) {
  if (!(o.initial_nugget > 0.0 && o.initial_nugget <= o.max_nugget)) {
    throw InvalidInput("nugget bounds must satisfy 0 < initial <= max");
  }
  if (!(o.min_log_length < o.max_log_length)) throw InvalidInput("empty length-scale range");
}

}  // namespace

GaussianProcess GaussianProcess::with_length_scales(const Points& x, std::span<const double> y,
                                                    std::vector<double> length_scales,
                                                    const Options& options) {
  check_inputs(x, y);
  check_options(options);
  if (length_scales.size() != x.front().size()) throw InvalidInput("one length-scale per dimension");
  GaussianProcess gp;
  gp.x_ = x;
  gp.length_ = std::move(length_scales);
  const auto n = static_cast<Eigen::Index>(y.size());
  Eigen::VectorXd yv(n);
  for (Eigen::Index i = 0; i < n; ++i) yv(i) = y[static_cast<std::size_t>(i)];
  gp.y_center_ = yv.mean();
  const double var = n > 1 ? (yv.array() - gp.y_center_).square().sum() / static_cast<double>(n - 1) : 0.0;
  gp.y_scale_ = var > 0.0 ? std::sqrt(var) : 1.0;
  const Eigen::VectorXd ys = (yv.array() - gp.y_center_) / gp.y_scale_;
  auto pr = profile(x, ys, gp.length_, options);
  if (!pr) throw InvalidInput("kernel matrix is singular even at the largest nugget");
  gp.nugget_ = pr->nugget;
  gp.escalated_ = pr->nugget > options.initial_nugget;
  gp.beta_ = pr->beta;
  gp.sigma2_ = pr->sigma2;
  auto f = std::make_shared<Factorization>();
  f->llt = std::move(pr->llt);
  f->alpha = std::move(pr->alpha);
  f->rinv_one = std::move(pr->rinv_one);
  f->one_rinv_one = pr->one_rinv_one;
  gp.factor_ = std::move(f);
  return gp;
}

GaussianProcess GaussianProcess::fit(const Points& x, std::span<const double> y, std::uint64_t seed,
                                     const Options& options) {
  check_inputs(x, y);
  check_options(options);
  const std::size_t d = x.front().size();
  const double mid = 0.5 * (options.min_log_length + options.max_log_length);
  const bool flat = std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; });
  if (x.size() < 2 || flat || d == 0) {
    return with_length_scales(x, y, std::vector<double>(d, std::exp(mid)), options);
  }

  const auto n = static_cast<Eigen::Index>(y.size());
  Eigen::VectorXd yv(n);
  for (Eigen::Index i = 0; i < n; ++i) yv(i) = y[static_cast<std::size_t>(i)];
  const double center = yv.mean();
  const double scale = std::sqrt((yv.array() - center).square().sum() / static_cast<double>(n - 1));
  const Eigen::VectorXd ys = (yv.array() - center) / scale;

  SearchContext ctx{&x, &ys, &options};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(options.min_log_length, options.max_log_length);
  std::vector<double> best_theta;
  double best_value = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, options.restarts); ++r) {
    std::vector<double> start(d, mid);
    if (r > 0) {
      for (auto& t : start) t = unif(rng);
    }
    double value = 0.0;
    auto theta = nelder_mead(ctx, start, value);
    if (value < best_value) {
      best_value = value;
      best_theta = std::move(theta);
    }
  }
  if (best_theta.empty()) best_theta.assign(d, mid);
  std::vector<double> length(d);
  for (std::size_t k = 0; k < d; ++k) length[k] = std::exp(best_theta[k]);
  return with_length_scales(x, y, std::move(length), options);
}

GaussianProcess::Prediction GaussianProcess::predict(std::span<const double> q) const {
  if (!factor_) throw InvalidInput("surrogate has not been fitted");
  if (q.size() != length_.size()) throw InvalidInput("query has the wrong dimension");
  const auto n = static_cast<Eigen::Index>(x_.size());
  Eigen::VectorXd r(n);
  for (Eigen::Index i = 0; i < n; ++i) r(i) = correlation(q, x_[static_cast<std::size_t>(i)], length_);
  const double mean_std = beta_ + r.dot(factor_->alpha);
  const Eigen::VectorXd rinv_r = factor_->llt.solve(r);
  const double u = 1.0 - factor_->rinv_one.dot(r);
  const double s2 = sigma2_ * (1.0 - r.dot(rinv_r) + u * u / factor_->one_rinv_one);
  return {mean_std * y_scale_ + y_center_, std::sqrt(std::max(s2, 0.0)) * y_scale_};
}

double expected_improvement(double mu, double sigma, double best) {
  if (!(sigma > 0.0)) return 0.0;
  const double z = (best - mu) / sigma;
  const double ei = (best - mu) * gsl_cdf_ugaussian_P(z) + sigma * gsl_ran_ugaussian_pdf(z);
  return std::max(ei, 0.0);
}

}  // namespace lmrf::tuning
