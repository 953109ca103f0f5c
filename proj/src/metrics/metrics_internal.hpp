#pragma once

#include <span>

namespace lmrf::metrics::detail {

void check_pairs(std::span<const double> p, std::span<const int> y);
double clip(double p);
double logit(double p);
double expit(double x);
/// Type-7 sample quantile of an ascending sample.
double quantile7(std::span<const double> sorted, double q);

}  // namespace lmrf::metrics::detail
