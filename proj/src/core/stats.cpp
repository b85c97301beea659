#include "gwi/stats.hpp"

#include <algorithm>
#include <cmath>

#include "gwi/error.hpp"
#include "gwi/parallel.hpp"

namespace gwi {

namespace {

std::vector<double> sorted_copy(std::span<const double> xs, const char* what) {
    if (xs.empty()) throw ValidationError(std::string(what) + ": sample must be nonempty");
    std::vector<double> out(xs.begin(), xs.end());
    for (double x : out)
        if (std::isnan(x)) throw ValidationError(std::string(what) + ": sample contains NaN");
    std::sort(out.begin(), out.end());
    return out;
}

double ks_p_value(double d, double effective_n) {
    const double e = std::sqrt(effective_n);
    return kolmogorov_q((e + 0.12 + 0.11 / e) * d);
}

}  // namespace

double kolmogorov_q(double lambda) {
    if (!(lambda > 0.0)) return 1.0;
    if (lambda < 1.18) {
        // Jacobi theta form converges fast for small lambda.
        const double y = std::exp(-M_PI * M_PI / (8.0 * lambda * lambda));
        const double y8 = std::pow(y, 8.0);
        const double cdf = std::sqrt(2.0 * M_PI) / lambda * y * (1.0 + y8 * (1.0 + y8 * y8 * (1.0 + y8 * y8 * y8)));
        return std::clamp(1.0 - cdf, 0.0, 1.0);
    }
    const double x = std::exp(-2.0 * lambda * lambda);
    const double x3 = x * x * x;
    const double x5 = x3 * x * x;
    const double x7 = x5 * x * x;
    return std::clamp(2.0 * x * (1.0 - x3 * (1.0 - x5 * (1.0 - x7))), 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> xs, std::span<const double> ys) {
    const std::vector<double> x = sorted_copy(xs, "ks_two_sample");
    const std::vector<double> y = sorted_copy(ys, "ks_two_sample");
    const double n = static_cast<double>(x.size()), m = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] == v) ++i;
        while (j < y.size() && y[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
    }
    return {d, ks_p_value(d, n * m / (n + m))};
}

KsResult ks_one_sample(std::span<const double> xs, const std::function<double(double)>& cdf) {
    const std::vector<double> x = sorted_copy(xs, "ks_one_sample");
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    std::size_t i = 0;
    while (i < x.size()) {
        const double v = x[i];
        const std::size_t below = i;
        while (i < x.size() && x[i] == v) ++i;
        const double f = cdf(v);
        // Left limit of F at v is approximated by F just below v for step CDFs.
        const double f_left = cdf(std::nextafter(v, -INFINITY));
        d = std::max({d, std::abs(static_cast<double>(i) / n - f), std::abs(f_left - static_cast<double>(below) / n)});
    }
    return {d, ks_p_value(d, n)};
}

double wasserstein1(std::span<const double> xs, std::span<const double> ys) {
    const std::vector<double> x = sorted_copy(xs, "wasserstein1");
    const std::vector<double> y = sorted_copy(ys, "wasserstein1");
    const double n = static_cast<double>(x.size()), m = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double prev = std::min(x.front(), y.front());
    std::vector<double> panels;
    panels.reserve(x.size() + y.size());
    while (i < x.size() || j < y.size()) {
        const double v = std::min(i < x.size() ? x[i] : INFINITY, j < y.size() ? y[j] : INFINITY);
        panels.push_back((v - prev) * std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
        while (i < x.size() && x[i] == v) ++i;
        while (j < y.size() && y[j] == v) ++j;
        prev = v;
    }
    return pairwise_sum(panels);
}

SampleSummary summarize(std::span<const double> xs) {
    SampleSummary s;
    s.count = xs.size();
    if (xs.empty()) return s;
    const double n = static_cast<double>(xs.size());
    s.mean = pairwise_sum(xs) / n;
    if (xs.size() > 1) {
        std::vector<double> sq(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) sq[i] = (xs[i] - s.mean) * (xs[i] - s.mean);
        s.variance = pairwise_sum(sq) / (n - 1.0);
        s.standard_error = std::sqrt(s.variance / n);
    }
    return s;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw ValidationError("slope fit needs at least two matching points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw ValidationError("slope fit needs positive values");
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(y.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    if (sxx == 0.0) throw ValidationError("slope fit needs distinct abscissae");
    return sxy / sxx;
}

}  // namespace gwi
