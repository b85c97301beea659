#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <boost/rational.hpp>

#include "gwi/model.hpp"
#include "gwi/rng.hpp"

namespace gwi {

using State = std::vector<std::int64_t>;

// How the sum of `count` i.i.d. offspring vectors is drawn. closed_form uses
// the exact law of the sum (Poisson, Binomial, negative binomial,
// multinomial over a JointTable support); per_individual draws every
// individual separately. Both produce the same distribution.
enum class SumMode { closed_form, per_individual };

struct SimulationOptions {
    std::uint64_t replica = 0;
    State initial_state;  // empty means the zero vector
    SumMode sum_mode = SumMode::closed_form;
};

struct Trajectory {
    std::vector<State> states;  // X_0 .. X_K
    std::uint64_t seed = 0;
    std::uint64_t replica = 0;

    std::size_t steps() const noexcept { return states.empty() ? 0 : states.size() - 1; }
    std::size_t types() const noexcept { return states.empty() ? 0 : states.front().size(); }
};

// Adds the sum of `count` independent draws of `law` to `acc`.
// Throws OverflowError if a coordinate would exceed 2^63 - 1.
void add_iid_sum(const DistributionSpec& law, std::int64_t count, Rng& rng, SumMode mode,
                 std::span<std::int64_t> acc);

// One draw of `law`.
State sample(const DistributionSpec& law, Rng& rng);

// Runs the branching recursion for `steps` generations. The random stream is
// keyed by (seed, options.replica), so the result is reproducible.
Trajectory simulate_trajectory(const GwiModel& model, std::size_t steps, std::uint64_t seed,
                               const SimulationOptions& options = {});

// Replicas 0..replicas-1, each on its own stream.
std::vector<Trajectory> simulate_batch(const GwiModel& model, std::size_t steps, std::size_t replicas,
                                       std::uint64_t seed, unsigned threads, SumMode mode = SumMode::closed_form);

struct MartingalePath {
    // increments[k - 1] = M_k = X_k - A X_{k-1} - b, k = 1..K
    std::vector<RealVector> increments;
};

MartingalePath martingale_increments(const GwiModel& model, const Trajectory& trajectory);

// Components of X_k for a 3-type lower-unipotent model, indexed by k = 0..K.
// Naming: xI_J is X^{(J)}_{k,I}.
struct DecompositionComponents {
    RealVector x1_1;
    RealVector x2_1, x2_2;
    RealVector x3_1, x3_2, x3_3, x3_4;
    double max_relative_residual = 0.0;
};

// Throws ValidationError for a non lower-unipotent or non 3-type model and
// ConsistencyError if the reconstruction residual exceeds 1e-9 (relative).
DecompositionComponents decomposition_components(const GwiModel& model, const Trajectory& trajectory);

using Rational = boost::rational<std::int64_t>;
using IntegerFunction = std::function<std::int64_t(std::int64_t)>;

// Both sides of the step-function identities, evaluated in exact rational
// arithmetic. The "integral" side integrates the step function panel by
// panel over rational breakpoints.
struct IdentitySides {
    Rational lhs;
    Rational rhs;
    bool holds() const noexcept { return lhs == rhs; }
};

// sum_{l=0}^{k} f(l)  vs  n * int_0^{(k+1)/n} f(floor(ns)) ds
IdentitySides weighted_sum_identity_1(const IntegerFunction& f, std::int64_t k, std::int64_t n);
// sum_{l=1}^{k} (k-l) f(l)  vs  n * int_0^{k/n} sum_{l<=floor(ns)} f(l) ds
IdentitySides weighted_sum_identity_2(const IntegerFunction& f, std::int64_t k, std::int64_t n);
// sum_{l=1}^{k} C(k-l,2) f(l)  vs  n^2 * int_0^{k/n} int_0^{floor(nr)/n} sum_{l<=floor(ns)} f(l) ds dr
IdentitySides weighted_sum_identity_3(const IntegerFunction& f, std::int64_t k, std::int64_t n);

struct IdentityBatteryResult {
    std::size_t trials = 0;
    std::array<std::size_t, 3> failures{};  // per identity
    bool all_hold() const noexcept { return failures[0] == 0 && failures[1] == 0 && failures[2] == 0; }
};

// Checks all three identities on `trials` random instances: k uniform in
// [1, max_k], n drawn from {1, 2, 3, 7, 64}, f(l) uniform integers in
// [-1000, 1000]. Trial t uses the stream (seed, t).
IdentityBatteryResult run_identity_battery(std::int64_t max_k, std::size_t trials, std::uint64_t seed,
                                           unsigned threads = 1);

}  // namespace gwi
