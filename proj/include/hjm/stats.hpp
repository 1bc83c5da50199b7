#pragma once

#include <functional>
#include <span>
#include <vector>

namespace hjm {

double mean(std::span<const double> xs);
double sample_sd(std::span<const double> xs);

// Type-7 quantile (linear interpolation of the empirical CDF), q in [0, 1].
double quantile(std::span<const double> xs, double q);

// Average rank with ties sharing their mean rank; ranks start at 1.
std::vector<double> average_ranks(std::span<const double> xs);

// Kaplan-Meier estimator on right-censored data.
struct KaplanMeier {
  std::vector<double> times;     // distinct event times, ascending
  std::vector<double> survival;  // S(t) just after each event time

  // step-function evaluation; S(t) = 1 before the first event
  double at(double t) const;
};

KaplanMeier kaplan_meier(std::span<const double> times, std::span<const int> status);

// One-sample Kolmogorov-Smirnov statistic and asymptotic p-value of
// sup_t |F_n(t) - F(t)| for a given reference CDF.
struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

KsResult ks_test(std::vector<double> xs, const std::function<double(double)>& cdf);

}  // namespace hjm
