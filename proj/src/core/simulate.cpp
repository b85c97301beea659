#include "gwi/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "gwi/error.hpp"
#include "gwi/parallel.hpp"

namespace gwi {

namespace {

constexpr double kMaxPopulation = 9.2e18;
constexpr double kResidualTolerance = 1e-9;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void checked_add(std::int64_t& acc, std::int64_t value) {
    if (__builtin_add_overflow(acc, value, &acc)) throw OverflowError("population coordinate exceeds 2^63-1");
}

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
    std::int64_t out;
    if (__builtin_mul_overflow(a, b, &out)) throw OverflowError("population coordinate exceeds 2^63-1");
    return out;
}

std::int64_t draw_poisson(double mean, Rng& rng) {
    if (mean <= 0.0) return 0;
    if (mean > kMaxPopulation) throw OverflowError("Poisson mean exceeds the representable population size");
    return std::poisson_distribution<std::int64_t>(mean)(rng);
}

std::int64_t draw_binomial(std::int64_t trials, double prob, Rng& rng) {
    if (trials <= 0 || prob <= 0.0) return 0;
    if (prob >= 1.0) return trials;
    return std::binomial_distribution<std::int64_t>(trials, prob)(rng);
}

// Failures before `successes` successes.
std::int64_t draw_negative_binomial(std::int64_t successes, double prob, Rng& rng) {
    if (successes <= 0 || prob >= 1.0) return 0;
    if (static_cast<double>(successes) * (1.0 - prob) / prob > kMaxPopulation)
        throw OverflowError("negative binomial mean exceeds the representable population size");
    return std::negative_binomial_distribution<std::int64_t>(successes, prob)(rng);
}

std::size_t draw_index(const std::vector<double>& prob, Rng& rng) {
    double u = rng.uniform();
    for (std::size_t s = 0; s + 1 < prob.size(); ++s) {
        if (u < prob[s]) return s;
        u -= prob[s];
    }
    return prob.size() - 1;
}

// Generic step-function integral: int_0^upper g(floor(n s)) ds with g given
// per panel, exact over rational breakpoints.
template <typename PanelValue>
Rational integrate_step(PanelValue&& g, Rational upper, std::int64_t n) {
    Rational total = 0;
    for (std::int64_t panel = 0;; ++panel) {
        const Rational left(panel, n);
        if (left >= upper) break;
        const Rational right = std::min(Rational(panel + 1, n), upper);
        total += g(panel) * (right - left);
    }
    return total;
}

void check_identity_args(std::int64_t k, std::int64_t n) {
    if (k < 1 || n < 1) throw ValidationError("identity arguments need k >= 1 and n >= 1");
}

}  // namespace

void add_iid_sum(const DistributionSpec& law, std::int64_t count, Rng& rng, SumMode mode,
                 std::span<std::int64_t> acc) {
    if (count < 0) throw ValidationError("negative individual count");
    if (count == 0) return;
    if (acc.size() != law.dim()) throw DimensionError("accumulator dimension mismatch");
    if (mode == SumMode::per_individual) {
        for (std::int64_t c = 0; c < count; ++c) {
            const State draw = sample(law, rng);
            for (std::size_t j = 0; j < acc.size(); ++j) checked_add(acc[j], draw[j]);
        }
        return;
    }
    std::visit(overloaded{
                   [&](const Deterministic& d) {
                       for (std::size_t j = 0; j < acc.size(); ++j) checked_add(acc[j], checked_mul(count, d.value[j]));
                   },
                   [&](const Poisson& d) {
                       for (std::size_t j = 0; j < acc.size(); ++j)
                           checked_add(acc[j], draw_poisson(static_cast<double>(count) * d.mean[j], rng));
                   },
                   [&](const Bernoulli& d) {
                       for (std::size_t j = 0; j < acc.size(); ++j) checked_add(acc[j], draw_binomial(count, d.prob[j], rng));
                   },
                   [&](const Geometric& d) {
                       for (std::size_t j = 0; j < acc.size(); ++j)
                           checked_add(acc[j], draw_negative_binomial(count, d.prob[j], rng));
                   },
                   [&](const JointTable& d) {
                       // Multinomial allocation of the individuals over the support.
                       std::int64_t remaining = count;
                       double remaining_prob = 1.0;
                       for (std::size_t s = 0; s < d.support.size() && remaining > 0; ++s) {
                           std::int64_t hits;
                           if (s + 1 == d.support.size()) {
                               hits = remaining;
                           } else {
                               const double q = remaining_prob > 0.0 ? std::min(1.0, d.prob[s] / remaining_prob) : 1.0;
                               hits = draw_binomial(remaining, q, rng);
                           }
                           for (std::size_t j = 0; j < acc.size(); ++j)
                               checked_add(acc[j], checked_mul(hits, d.support[s][j]));
                           remaining -= hits;
                           remaining_prob -= d.prob[s];
                       }
                   },
               },
               law.law());
}

State sample(const DistributionSpec& law, Rng& rng) {
    State out(law.dim(), 0);
    std::visit(overloaded{
                   [&](const Deterministic& d) { out = d.value; },
                   [&](const Poisson& d) {
                       for (std::size_t j = 0; j < out.size(); ++j) out[j] = draw_poisson(d.mean[j], rng);
                   },
                   [&](const Bernoulli& d) {
                       for (std::size_t j = 0; j < out.size(); ++j) out[j] = rng.uniform() < d.prob[j] ? 1 : 0;
                   },
                   [&](const Geometric& d) {
                       for (std::size_t j = 0; j < out.size(); ++j)
                           out[j] = d.prob[j] >= 1.0 ? 0 : std::geometric_distribution<std::int64_t>(d.prob[j])(rng);
                   },
                   [&](const JointTable& d) { out = d.support[draw_index(d.prob, rng)]; },
               },
               law.law());
    return out;
}

Trajectory simulate_trajectory(const GwiModel& model, std::size_t steps, std::uint64_t seed,
                               const SimulationOptions& options) {
    const std::size_t p = model.types();
    Trajectory traj;
    traj.seed = seed;
    traj.replica = options.replica;
    traj.states.reserve(steps + 1);
    if (options.initial_state.empty()) {
        traj.states.emplace_back(p, 0);
    } else {
        if (options.initial_state.size() != p) throw DimensionError("initial state has wrong dimension");
        for (auto x : options.initial_state)
            if (x < 0) throw ValidationError("initial state must be nonnegative");
        traj.states.push_back(options.initial_state);
    }
    Rng rng(seed, options.replica);
    for (std::size_t k = 1; k <= steps; ++k) {
        State next(p, 0);
        const State& prev = traj.states.back();
        for (std::size_t i = 0; i < p; ++i) add_iid_sum(model.offspring(i), prev[i], rng, options.sum_mode, next);
        add_iid_sum(model.immigration(), 1, rng, options.sum_mode, next);
        traj.states.push_back(std::move(next));
    }
    return traj;
}

std::vector<Trajectory> simulate_batch(const GwiModel& model, std::size_t steps, std::size_t replicas,
                                       std::uint64_t seed, unsigned threads, SumMode mode) {
    std::vector<Trajectory> out(replicas);
    parallel_for(replicas, threads, [&](std::size_t r) {
        SimulationOptions opts;
        opts.replica = r;
        opts.sum_mode = mode;
        out[r] = simulate_trajectory(model, steps, seed, opts);
    });
    return out;
}

MartingalePath martingale_increments(const GwiModel& model, const Trajectory& trajectory) {
    if (trajectory.states.empty()) throw ValidationError("empty trajectory");
    const std::size_t p = model.types();
    if (trajectory.types() != p) throw DimensionError("trajectory dimension does not match model");
    const RealMatrix& a = model.mean_matrix();
    const RealVector& b = model.immigration_mean();
    MartingalePath path;
    path.increments.reserve(trajectory.steps());
    for (std::size_t k = 1; k <= trajectory.steps(); ++k) {
        const State& prev = trajectory.states[k - 1];
        const State& cur = trajectory.states[k];
        RealVector m(p);
        for (std::size_t i = 0; i < p; ++i) {
            double predicted = b[i];
            for (std::size_t j = 0; j < p; ++j) predicted += a(i, j) * static_cast<double>(prev[j]);
            m[i] = static_cast<double>(cur[i]) - predicted;
        }
        path.increments.push_back(std::move(m));
    }
    return path;
}

DecompositionComponents decomposition_components(const GwiModel& model, const Trajectory& trajectory) {
    const RealMatrix& a = model.mean_matrix();
    if (model.types() != 3 || !is_lower_unipotent(a, 1e-12))
        throw ValidationError("decomposition needs a 3-type lower-unipotent model");
    const MartingalePath mart = martingale_increments(model, trajectory);
    const RealVector& b = model.immigration_mean();
    const std::size_t steps = trajectory.steps();
    const double a21 = a(1, 0), a31 = a(2, 0), a32 = a(2, 1);

    DecompositionComponents d;
    for (auto* v : {&d.x1_1, &d.x2_1, &d.x2_2, &d.x3_1, &d.x3_2, &d.x3_3, &d.x3_4}) v->assign(steps + 1, 0.0);

    // Plain sums S_k, then sum_{l<=k}(k-l) u_l = sum_{j<k} S_j and
    // sum_{l<=k} C(k-l,2) u_l = sum_{j<k} sum_{i<j} S_i.
    for (std::size_t k = 1; k <= steps; ++k) {
        const RealVector& m = mart.increments[k - 1];
        d.x1_1[k] = d.x1_1[k - 1] + (m[0] + b[0]);
        d.x2_2[k] = d.x2_2[k - 1] + (m[1] + b[1]);
        d.x3_4[k] = d.x3_4[k - 1] + (m[2] + b[2]);
        d.x2_1[k] = d.x2_1[k - 1] + d.x1_1[k - 1];
        d.x3_3[k] = d.x3_3[k - 1] + d.x2_2[k - 1];
        d.x3_1[k] = d.x3_1[k - 1] + d.x2_1[k - 1];
    }
    d.x3_2 = d.x2_1;

    // X_k = A^k X_0 + sum_l A^{k-l}(M_l + b); the components carry the sum.
    const State& x0 = trajectory.states.front();
    for (std::size_t k = 0; k <= steps; ++k) {
        const State& x = trajectory.states[k];
        const double kk = static_cast<double>(k);
        const double power[3][3] = {
            {1, 0, 0},
            {kk * a21, 1, 0},
            {kk * (kk - 1) / 2 * a32 * a21 + kk * a31, kk * a32, 1},
        };
        const double terms[3][4] = {
            {d.x1_1[k], 0, 0, 0},
            {a21 * d.x2_1[k], d.x2_2[k], 0, 0},
            {a32 * a21 * d.x3_1[k], a31 * d.x3_2[k], a32 * d.x3_3[k], d.x3_4[k]},
        };
        for (std::size_t i = 0; i < 3; ++i) {
            double recon = 0.0, scale = 1.0;
            for (std::size_t j = 0; j < 3; ++j) {
                const double t = power[i][j] * static_cast<double>(x0[j]);
                recon += t;
                scale += std::abs(t);
            }
            for (double t : terms[i]) {
                recon += t;
                scale += std::abs(t);
            }
            const double residual = std::abs(static_cast<double>(x[i]) - recon) / scale;
            d.max_relative_residual = std::max(d.max_relative_residual, residual);
        }
    }
    if (d.max_relative_residual > kResidualTolerance)
        throw ConsistencyError("decomposition reconstruction residual " + std::to_string(d.max_relative_residual) +
                               " exceeds tolerance");
    return d;
}

IdentitySides weighted_sum_identity_1(const IntegerFunction& f, std::int64_t k, std::int64_t n) {
    check_identity_args(k, n);
    IdentitySides out;
    for (std::int64_t l = 0; l <= k; ++l) out.lhs += f(l);
    out.rhs = Rational(n) * integrate_step([&](std::int64_t panel) { return Rational(f(panel)); }, Rational(k + 1, n), n);
    return out;
}

IdentitySides weighted_sum_identity_2(const IntegerFunction& f, std::int64_t k, std::int64_t n) {
    check_identity_args(k, n);
    IdentitySides out;
    for (std::int64_t l = 1; l <= k; ++l) out.lhs += (k - l) * f(l);
    std::vector<std::int64_t> prefix(k + 1, 0);  // F(m) = sum_{l=1}^{m} f(l)
    for (std::int64_t m = 1; m <= k; ++m) prefix[m] = prefix[m - 1] + f(m);
    out.rhs = Rational(n) * integrate_step([&](std::int64_t panel) { return Rational(prefix.at(panel)); }, Rational(k, n), n);
    return out;
}

IdentitySides weighted_sum_identity_3(const IntegerFunction& f, std::int64_t k, std::int64_t n) {
    check_identity_args(k, n);
    IdentitySides out;
    for (std::int64_t l = 1; l <= k; ++l) out.lhs += (k - l) * (k - l - 1) / 2 * f(l);
    std::vector<std::int64_t> prefix(k + 1, 0);
    for (std::int64_t m = 1; m <= k; ++m) prefix[m] = prefix[m - 1] + f(m);
    const auto inner = [&](std::int64_t m) {
        return integrate_step([&](std::int64_t panel) { return Rational(prefix.at(panel)); }, Rational(m, n), n);
    };
    out.rhs = Rational(n * n) * integrate_step(inner, Rational(k, n), n);
    return out;
}

IdentityBatteryResult run_identity_battery(std::int64_t max_k, std::size_t trials, std::uint64_t seed,
                                           unsigned threads) {
    if (max_k < 1) throw ValidationError("max_k must be at least 1");
    static constexpr std::int64_t kScales[] = {1, 2, 3, 7, 64};
    std::vector<std::array<bool, 3>> ok(trials);
    parallel_for(trials, threads, [&](std::size_t t) {
        Rng rng(seed, t);
        const std::int64_t k = std::uniform_int_distribution<std::int64_t>(1, max_k)(rng);
        const std::int64_t n = kScales[std::uniform_int_distribution<std::size_t>(0, 4)(rng)];
        std::vector<std::int64_t> table(static_cast<std::size_t>(k) + 1);
        std::uniform_int_distribution<std::int64_t> value(-1000, 1000);
        for (auto& v : table) v = value(rng);
        const IntegerFunction f = [&](std::int64_t l) { return table.at(static_cast<std::size_t>(l)); };
        ok[t] = {weighted_sum_identity_1(f, k, n).holds(), weighted_sum_identity_2(f, k, n).holds(),
                 weighted_sum_identity_3(f, k, n).holds()};
    });
    IdentityBatteryResult result;
    result.trials = trials;
    for (const auto& r : ok)
        for (std::size_t i = 0; i < 3; ++i)
            if (!r[i]) ++result.failures[i];
    return result;
}

}  // namespace gwi
