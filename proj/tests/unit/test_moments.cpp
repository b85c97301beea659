#include <doctest.h>

#include <random>

#include "gwi/error.hpp"
#include "gwi/moments.hpp"
#include "helpers.hpp"

using namespace gwi;
using testutil::lower3;
using testutil::naive_mul;
using testutil::poisson_model;

namespace {

// Mean and variance by direct iteration of E X_k = A E X_{k-1} + b and
// Var X_k = A Var X_{k-1} A^T + V0 + sum_i E X_{k-1,i} V_i.
struct Iterated {
    RealVector mean;
    RealMatrix var;
};

Iterated iterate_moments(const GwiModel& m, std::int64_t k) {
    const std::size_t p = m.types();
    const RealMatrix& a = m.mean_matrix();
    RealVector mean(p, 0.0);
    RealMatrix var(p, p);
    for (std::int64_t s = 0; s < k; ++s) {
        RealMatrix next = naive_mul(naive_mul(a, var), a.transpose()) + m.immigration_variance();
        for (std::size_t i = 0; i < p; ++i) next += mean[i] * m.offspring_variance(i);
        RealVector nm = a * mean;
        for (std::size_t i = 0; i < p; ++i) nm[i] += m.immigration_mean()[i];
        mean = nm;
        var = next;
    }
    return {mean, var};
}

Matrix<long long> random_unipotent_int(std::mt19937_64& gen, std::size_t p) {
    std::uniform_int_distribution<long long> u(0, 3);
    Matrix<long long> a = Matrix<long long>::identity(p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < i; ++j) a(i, j) = u(gen);
    return a;
}

}  // namespace

TEST_CASE("binomial_exact") {
    CHECK(binomial_exact(5, 2) == 10);
    CHECK(binomial_exact(2, 5) == 0);
    CHECK(binomial_exact(0, 0) == 1);
    CHECK(binomial_exact(60, 30) == Int128(118264581564861424LL));
    CHECK_THROWS_AS(binomial_exact(300, 150), OverflowError);
}

TEST_CASE("unipotent_power examples") {
    const Matrix<long long> a{{1, 0, 0}, {2, 1, 0}, {3, 4, 1}};
    CHECK(unipotent_power(a, 3) == Matrix<long long>{{1, 0, 0}, {6, 1, 0}, {33, 12, 1}});
    CHECK(unipotent_power(a, 0) == Matrix<long long>::identity(3));
    CHECK(unipotent_power(RealMatrix::identity(4), 1000) == RealMatrix::identity(4));
    CHECK(unipotent_power(RealMatrix{{1, 0}, {0.5, 1}}, 10) == RealMatrix{{1, 0}, {5, 1}});
    CHECK_THROWS_AS(unipotent_power(RealMatrix{{1, 1}, {0, 1}}, 2), ValidationError);
    CHECK_THROWS_AS(unipotent_power(RealMatrix{{2, 0}, {0, 1}}, 2), ValidationError);
    CHECK_THROWS_AS(unipotent_power(a, -1), ValidationError);
}

TEST_CASE("unipotent_power equals repeated multiplication exactly") {
    std::mt19937_64 gen(21);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t p = 1 + trial % 6;
        const Matrix<long long> a = random_unipotent_int(gen, p);
        Matrix<long long> brute = Matrix<long long>::identity(p);
        for (std::int64_t k = 0; k <= 30; ++k) {
            CHECK(unipotent_power(a, k) == brute);
            brute = brute * a;
        }
    }
}

TEST_CASE("unipotent_power reports integer overflow") {
    const Matrix<long long> a{{1, 0, 0}, {3, 1, 0}, {3, 3, 1}};
    CHECK_THROWS_AS(unipotent_power(a, 3000000000LL), OverflowError);
}

TEST_CASE("mean_vector and variance_matrix: single-type critical example") {
    // A = 1, b = 1, Poisson offspring and immigration: E X_k = k, Var X_k = k(k+1)/2.
    const GwiModel m = poisson_model(RealMatrix{{1}}, {1});
    for (std::int64_t k = 0; k <= 50; ++k) {
        CHECK(mean_vector(m, k) == RealVector{double(k)});
        CHECK(variance_matrix(m, k)(0, 0) == doctest::Approx(double(k * (k + 1)) / 2.0));
    }
}

TEST_CASE("mean_vector and variance_matrix agree with direct iteration") {
    const std::vector<GwiModel> models{
        poisson_model(lower3(0, 0, 0), {1, 2, 0.5}),
        poisson_model(lower3(0, 0.5, 1), {1, 0.5, 0.5}),
        poisson_model(lower3(0.7, 0.2, 0), {0.3, 1, 1}),
        poisson_model(lower3(1, 0.5, 1), {1, 0.5, 0.5}),
        poisson_model(RealMatrix{{0.5, 0.2}, {0.3, 0.9}}, {1, 1}),
    };
    for (std::size_t idx = 0; idx < models.size(); ++idx) {
        CAPTURE(idx);
        for (std::int64_t k : {0, 1, 2, 7, 30}) {
            const Iterated it = iterate_moments(models[idx], k);
            const RealVector mean = mean_vector(models[idx], k);
            const RealMatrix var = variance_matrix(models[idx], k);
            for (std::size_t i = 0; i < mean.size(); ++i) {
                CHECK(testutil::close(mean[i], it.mean[i], 1e-12, 1e-12));
                for (std::size_t j = 0; j < mean.size(); ++j) CHECK(testutil::close(var(i, j), it.var(i, j), 1e-10, 1e-10));
            }
        }
    }
    CHECK_THROWS_AS(mean_vector(models[0], -1), ValidationError);
}

TEST_CASE("mean polynomial matches mean_vector") {
    const GwiModel m = poisson_model(lower3(1, 0.5, 1), {1, 0.5, 0.5});
    const MeanPolynomial poly = mean_polynomial(m);
    for (std::int64_t k = 0; k <= 40; ++k)
        for (std::size_t i = 0; i < 3; ++i) CHECK(poly.evaluate(i, k) == doctest::Approx(mean_vector(m, k)[i]));
    CHECK(poly.degree(0) == 1);
    CHECK(poly.degree(1) == 2);
    CHECK(poly.degree(2) == 3);
}

TEST_CASE("conditional covariance is linear in the state") {
    const GwiModel m = poisson_model(lower3(1, 0.5, 1), {1, 0.5, 0.5});
    const RealMatrix c = conditional_covariance(m, {2, 0, 3});
    const RealMatrix expected = m.immigration_variance() + 2.0 * m.offspring_variance(0) + 3.0 * m.offspring_variance(2);
    CHECK(c == expected);
    CHECK_THROWS_AS(conditional_covariance(m, {1, 2}), DimensionError);
}

TEST_CASE("growth exponents per case") {
    const RealVector b{1, 1, 1};
    CHECK(growth_exponents(lower3(0, 0, 0), b).eta == std::vector<int>{1, 1, 1});
    CHECK(growth_exponents(lower3(0, 0.5, 0), b).eta == std::vector<int>{1, 1, 2});
    CHECK(growth_exponents(lower3(0, 0.5, 0.5), b).eta == std::vector<int>{1, 1, 2});
    CHECK(growth_exponents(lower3(0.5, 0.5, 0), b).eta == std::vector<int>{1, 2, 2});
    CHECK(growth_exponents(lower3(0.5, 0, 0.5), b).eta == std::vector<int>{1, 2, 3});
    CHECK(growth_exponents(lower3(0.5, 0.5, 0.5), b).eta == std::vector<int>{1, 2, 3});
}

TEST_CASE("growth exponents: eta_i equals 1 + longest path into i; monotone under adding edges") {
    std::mt19937_64 gen(8);
    std::bernoulli_distribution coin(0.4);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t p = 1 + trial % 6;
        RealMatrix a = RealMatrix::identity(p);
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < i; ++j)
                if (coin(gen)) a(i, j) = 0.5;
        // Longest chain j -> ... -> i along strictly lower entries.
        std::vector<int> longest(p, 1);
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < i; ++j)
                if (a(i, j) > 0) longest[i] = std::max(longest[i], longest[j] + 1);
        const GrowthExponents g = growth_exponents(a, RealVector(p, 1.0));
        CHECK(g.eta == longest);
        for (std::size_t i = 0; i < p; ++i) {
            CHECK(g.eta[i] >= 1);
            CHECK(g.eta[i] <= int(i) + 1);
        }
        RealMatrix more = a;
        if (p >= 2) more(p - 1, 0) = 1.0;
        const GrowthExponents g2 = growth_exponents(more, RealVector(p, 1.0));
        for (std::size_t i = 0; i < p; ++i) CHECK(g2.eta[i] >= g.eta[i]);
    }
}

TEST_CASE("first immigrant and leading asymptotic") {
    const GwiModel m = poisson_model(lower3(1, 0.5, 1), {0, 0.5, 0.5});
    const GrowthExponents g = growth_exponents(m.mean_matrix(), m.immigration_mean());
    CHECK(g.first_immigrant == std::vector<std::size_t>{0, 1, 1});
    const LeadingTerm l2 = leading_asymptotic(m, 2);
    CHECK(l2.degree == 2);
    CHECK(l2.coefficient == doctest::Approx(0.5 * 1.0));
    // Ratio of E X_{k,3} to the leading term tends to 1.
    CHECK(mean_vector(m, 2000)[2] / (l2.coefficient * binomial(2000, 2)) == doctest::Approx(1.0).epsilon(2e-3));
    const LeadingTerm zero = leading_asymptotic(poisson_model(lower3(1, 0, 1), {0, 0, 0}), 2);
    CHECK(zero.degree == 0);
    CHECK(zero.coefficient == 0.0);
}

TEST_CASE("moment growth targets") {
    const GwiModel m = poisson_model(lower3(1, 0.5, 1), {1, 0.5, 0.5});
    const MomentGrowthTargets t = moment_growth_targets(m);
    CHECK(t.mean == std::vector<int>{1, 2, 3});
    CHECK(t.sum_sup == std::vector<int>{2, 3, 4});
    CHECK(t.weighted_sum_sup == std::vector<int>{4, 5, 6});
    CHECK(t.cross[0][2] == 1);
    CHECK(t.cross[1][2] == 2);
    CHECK(t.fourth[0] == 2);
    CHECK_FALSE(t.fourth[1].has_value());
    CHECK_FALSE(t.fourth[2].has_value());
}
