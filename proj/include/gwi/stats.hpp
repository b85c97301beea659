#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace gwi {

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

// Kolmogorov survival function Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2).
double kolmogorov_q(double lambda);

// sup |F_x - F_y| with the asymptotic p-value Q((e + 0.12 + 0.11/e) D),
// e = sqrt(nm/(n+m)). Ties are handled by stepping over equal values together.
KsResult ks_two_sample(std::span<const double> xs, std::span<const double> ys);

// sup |F_x - F| against a continuous or step CDF.
KsResult ks_one_sample(std::span<const double> xs, const std::function<double(double)>& cdf);

// int |F_x - F_y| dx. For equal sizes this is the mean absolute difference
// of order statistics.
double wasserstein1(std::span<const double> xs, std::span<const double> ys);

struct SampleSummary {
    std::size_t count = 0;
    double mean = 0.0;
    double variance = 0.0;  // unbiased
    double standard_error = 0.0;
};

// Two-pass moments with pairwise summation.
SampleSummary summarize(std::span<const double> xs);

// Least-squares slope of log y against log x.
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace gwi
