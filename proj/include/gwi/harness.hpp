#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gwi/model.hpp"
#include "gwi/sde.hpp"
#include "gwi/simulate.hpp"
#include "gwi/stats.hpp"

namespace gwi {

std::array<int, 3> exponents_for_case(int case_value);

// t -> (n^{-e_1} X_{floor(nt),1}, ..., n^{-e_p} X_{floor(nt),p}).
class ScaledStepProcess {
public:
    ScaledStepProcess(const Trajectory& trajectory, std::int64_t n, std::vector<int> exponents);

    // floor(n t) with a 1e-9 guard against round-off just below an integer.
    std::size_t index(double t) const;
    RealVector operator()(double t) const;
    std::int64_t scale() const noexcept { return n_; }

private:
    const Trajectory* trajectory_;
    std::int64_t n_;
    std::vector<int> exponents_;
};

// For a step function f(floor(ns)) with k = floor(nt):
// value = f_k, integral = int_0^{k/n} f = n^{-1} sum_{j<k} f_j,
// double_integral = int_0^{k/n} int_0^{floor(nr)/n} f = n^{-2} sum_{j<k} (k-1-j) f_j.
struct StepFunctional {
    double value = 0.0;
    double integral = 0.0;
    double double_integral = 0.0;
};

StepFunctional step_integral_functional(std::span<const double> f, std::int64_t n, double t);

struct ExactStepFunctional {
    std::int64_t k = 0;
    std::int64_t value = 0;
    Rational integral;
    Rational double_integral;
};

ExactStepFunctional step_integral_functional_exact(std::span<const std::int64_t> f, std::int64_t n, std::int64_t k);

struct ConvergenceConfig {
    int case_value = 0;  // 0 accepts whatever detect_case returns
    std::vector<std::int64_t> n_list{125, 250, 500, 1000, 2000};
    std::vector<double> t_points{0.25, 0.5, 1.0};
    std::size_t replicas = 2000;
    std::size_t sde_paths = 2000;
    double dt = 1e-3;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    double alpha = 0.01;       // family-wise level across (coordinate, t)
    double confidence = 0.95;  // two-sided CI level for the means
};

struct CoordinateComparison {
    std::size_t coordinate = 0;  // 0-based, normalized labels
    SampleSummary gwi;
    SampleSummary sde;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double limit_mean = 0.0;
    double exact_scaled_mean = 0.0;  // n^{-e} E X_{k}
    KsResult ks;
    bool ks_pass = true;
    std::optional<KsResult> ks_gamma;  // coordinate 0 only, nondegenerate law
    double wasserstein = 0.0;
};

struct ConvergenceCell {
    std::int64_t n = 0;
    double t = 0.0;
    std::int64_t k = 0;
    std::vector<CoordinateComparison> coordinates;
};

struct DistanceTrend {
    double t = 0.0;
    std::size_t coordinate = 0;
    std::vector<double> wasserstein;  // indexed like n_list
    bool last_below_first = false;
};

struct ConvergenceReport {
    ConvergenceConfig config;
    CaseId case_id;
    LimitSystem system;
    double per_test_alpha = 0.0;
    std::vector<ConvergenceCell> cells;
    std::vector<DistanceTrend> trends;
};

// Simulates config.replicas trajectories per n (streams keyed by
// stream_key(seed, n) and the replica index) and config.sde_paths limit
// paths, and compares the scaled marginals at every (n, t).
ConvergenceReport run_convergence_experiment(const GwiModel& model, const ConvergenceConfig& config);

nlohmann::json convergence_config_to_json(const ConvergenceConfig& config);
ConvergenceConfig convergence_config_from_json(const nlohmann::json& j);
nlohmann::json report_to_json(const ConvergenceReport& report);
std::string report_to_csv(const ConvergenceReport& report);

enum class GrowthQuantity { sup_sum_sq, weighted_sup_sum_sq, fourth_moment };

std::string_view to_string(GrowthQuantity q) noexcept;
GrowthQuantity growth_quantity_from_string(std::string_view name);

struct GrowthFitConfig {
    std::vector<std::int64_t> n_list{32, 64, 128, 256, 512};
    std::size_t replicas = 100000;
    std::uint64_t seed = 1;
    unsigned threads = 0;
};

struct GrowthFit {
    GrowthQuantity quantity = GrowthQuantity::fourth_moment;
    std::size_t coordinate = 0;
    std::vector<double> estimates;  // indexed like n_list
    std::vector<double> standard_errors;
    double slope = 0.0;
    std::optional<int> target;
    bool degenerate = false;  // some estimate was not positive
};

// Monte Carlo estimates, for every n in n_list and every coordinate i, of
//   sup_sum_sq:          E max_{k<=n} (sum_{l<=k} (M_{l,i} + b_i))^2
//   weighted_sup_sum_sq: E max_{k<=n} (sum_{l<=k} (k-l)(M_{l,i} + b_i))^2
//   fourth_moment:       E M_{n,i}^4
// with their log-log slopes. One trajectory per replica up to max n.
// Targets come from moment_growth_targets and need a lower-unipotent model.
std::vector<GrowthFit> growth_fit(const GwiModel& model, const GrowthFitConfig& config);

struct ScaledSupResult {
    std::vector<std::int64_t> n_list;
    std::vector<SampleSummary> sup;  // of max_{k<=n} n^{-e} X_{k,i}
};

// Sample behaviour of sup_{t<=1} n^{-exponent} X_{floor(nt), coordinate}.
ScaledSupResult scaled_sup_experiment(const GwiModel& model, std::size_t coordinate, int exponent,
                                      const std::vector<std::int64_t>& n_list, std::size_t replicas,
                                      std::uint64_t seed, unsigned threads);

}  // namespace gwi
