#include "gwi/moments.hpp"

#include <algorithm>
#include <string>

namespace gwi {

Int128 binomial_exact(std::int64_t k, std::int64_t m) {
    if (k < 0 || m < 0) throw ValidationError("binomial arguments must be nonnegative");
    if (m > k) return 0;
    m = std::min(m, k - m);
    Int128 c = 1;
    for (std::int64_t i = 0; i < m; ++i) {
        Int128 next;
        if (__builtin_mul_overflow(c, static_cast<Int128>(k - i), &next))
            throw OverflowError("binomial coefficient overflows 128 bits");
        c = next / (i + 1);  // exact: c * (k-i) is divisible by (i+1)
    }
    return c;
}

double binomial(std::int64_t k, std::int64_t m) { return static_cast<double>(binomial_exact(k, m)); }

double MeanPolynomial::evaluate(std::size_t coordinate, std::int64_t k) const {
    const RealVector& g = coefficients.at(coordinate);
    double total = 0.0;
    for (std::size_t m = 1; m <= g.size(); ++m)
        if (g[m - 1] != 0.0) total += g[m - 1] * binomial(k, static_cast<std::int64_t>(m));
    return total;
}

int MeanPolynomial::degree(std::size_t coordinate) const {
    const RealVector& g = coefficients.at(coordinate);
    for (std::size_t m = g.size(); m >= 1; --m)
        if (g[m - 1] > 0.0) return static_cast<int>(m);
    return 0;
}

RealVector mean_vector(const GwiModel& model, std::int64_t k) {
    if (k < 0) throw ValidationError("generation index must be nonnegative");
    const std::size_t p = model.types();
    const RealMatrix& a = model.mean_matrix();
    const RealVector& b = model.immigration_mean();
    RealVector mean(p, 0.0);
    if (is_lower_unipotent(a)) {
        const UnipotentMatrix<double> u(a);
        for (std::int64_t j = 0; j < k; ++j) {
            const RealVector term = u.power(j) * b;
            for (std::size_t i = 0; i < p; ++i) mean[i] += term[i];
        }
        return mean;
    }
    for (std::int64_t j = 0; j < k; ++j) {
        mean = a * mean;
        for (std::size_t i = 0; i < p; ++i) mean[i] += b[i];
    }
    return mean;
}

MeanPolynomial mean_polynomial(const GwiModel& model) {
    const UnipotentMatrix<double> u(model.mean_matrix());
    const std::size_t p = model.types();
    const RealVector& b = model.immigration_mean();
    MeanPolynomial poly;
    poly.coefficients.assign(p, RealVector(p, 0.0));
    for (std::size_t m = 1; m <= p; ++m) {
        const RealVector cb = u.nilpotent_power(m - 1) * b;
        for (std::size_t i = 0; i < p; ++i) poly.coefficients[i][m - 1] = cb[i];
    }
    return poly;
}

RealMatrix martingale_second_moment(const GwiModel& model, std::int64_t k) {
    if (k < 1) throw ValidationError("martingale differences start at k = 1");
    const RealVector prev_mean = mean_vector(model, k - 1);
    RealMatrix out = model.immigration_variance();
    for (std::size_t i = 0; i < model.types(); ++i)
        if (prev_mean[i] != 0.0) out += prev_mean[i] * model.offspring_variance(i);
    return out;
}

RealMatrix conditional_covariance(const GwiModel& model, const std::vector<std::int64_t>& state) {
    if (state.size() != model.types()) throw DimensionError("state has wrong dimension");
    RealMatrix out = model.immigration_variance();
    for (std::size_t i = 0; i < model.types(); ++i)
        if (state[i] != 0) out += static_cast<double>(state[i]) * model.offspring_variance(i);
    return out;
}

RealMatrix variance_matrix(const GwiModel& model, std::int64_t k) {
    if (k < 0) throw ValidationError("generation index must be nonnegative");
    const std::size_t p = model.types();
    const RealMatrix& a = model.mean_matrix();
    RealMatrix var(p, p);
    RealMatrix a_pow = RealMatrix::identity(p);
    for (std::int64_t j = 0; j < k; ++j) {
        var += a_pow * martingale_second_moment(model, k - j) * a_pow.transpose();
        a_pow = a_pow * a;
    }
    return var;
}

GrowthExponents growth_exponents(const RealMatrix& a, const RealVector& b) {
    const UnipotentMatrix<double> u(a);
    const std::size_t p = u.size();
    if (b.size() != p) throw DimensionError("immigration mean has wrong dimension");
    GrowthExponents g;
    g.eta.assign(p, 1);
    g.first_immigrant.assign(p, 0);
    for (std::size_t m = 1; m <= p; ++m) {
        const RealMatrix c = u.nilpotent_power(m - 1);
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < p; ++j)
                if (c(i, j) > 0.0) g.eta[i] = std::max(g.eta[i], static_cast<int>(m));
    }
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t r = 0; r <= i; ++r)
            if (b[r] > 0.0) {
                g.first_immigrant[i] = r;
                break;
            }
    }
    return g;
}

LeadingTerm leading_asymptotic(const GwiModel& model, std::size_t coordinate) {
    const RealVector& b = model.immigration_mean();
    if (coordinate >= model.types()) throw ValidationError("coordinate out of range");
    if (std::all_of(b.begin(), b.end(), [](double x) { return x == 0.0; })) return {};
    const UnipotentMatrix<double> u(model.mean_matrix());
    const GrowthExponents g = growth_exponents(model.mean_matrix(), b);
    const std::size_t r = g.first_immigrant[coordinate];
    const std::size_t gap = coordinate - r;
    return {static_cast<int>(gap + 1), b[r] * u.nilpotent_power(gap)(coordinate, r)};
}

MomentGrowthTargets moment_growth_targets(const GwiModel& model) {
    const RealMatrix& a = model.mean_matrix();
    const GrowthExponents g = growth_exponents(a, model.immigration_mean());
    const std::size_t p = model.types();
    MomentGrowthTargets t;
    t.mean = g.eta;
    t.cross.assign(p, std::vector<int>(p, 0));
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) t.cross[i][j] = std::min(g.eta[i], g.eta[j]);
        bool unit_row = true;
        for (std::size_t r = 0; r < p; ++r)
            if (a(i, r) != (r == i ? 1.0 : 0.0)) unit_row = false;
        t.fourth.push_back(unit_row ? std::optional<int>(2) : std::nullopt);
        t.sum_sup.push_back(g.eta[i] + 1);
        t.weighted_sum_sup.push_back(g.eta[i] + 3);
    }
    return t;
}

}  // namespace gwi
