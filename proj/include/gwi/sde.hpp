#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "gwi/model.hpp"
#include "gwi/rng.hpp"

namespace gwi {

// Parameters of the 3-dimensional limit diffusion for one of the four
// normalized cases. Coordinates are those of the normalized model.
struct LimitSystem {
    int case_value = 1;
    std::array<double, 3> b{};  // immigration means
    std::array<double, 3> v{};  // v_i = Var of coordinate i of a type-i offspring
    double a21 = 0.0;
    double a31 = 0.0;
    double a32 = 0.0;
    std::array<int, 3> exponents{1, 1, 1};

    // Reads the parameters from `model` after relabelling it by
    // case_id.permutation. Throws ValidationError if the relabelled mean
    // matrix does not match the case.
    static LimitSystem from_model(const GwiModel& model, const CaseId& case_id);

    // Throws ValidationError on negative parameters or a sign pattern that
    // contradicts case_value.
    void validate() const;
};

// Grid 0, dt, 2dt, ..., horizon. The horizon must be an integer multiple of
// dt up to 1e-9 relative.
std::vector<double> uniform_grid(double horizon, double dt);

// Grid index of time t; throws ValidationError if t is not a grid point.
std::size_t grid_index(std::span<const double> grid, double t);

// Euler-Maruyama for dX = b dt + sqrt(v X^+) dW, X(0) = 0, clamped at 0
// after each step. b = 0 gives the zero path without drawing noise.
std::vector<double> simulate_squared_bessel(double b, double v, std::span<const double> grid, Rng& rng);
std::vector<double> simulate_squared_bessel(double b, double v, std::span<const double> grid, std::uint64_t seed,
                                            std::uint64_t stream = 0);

struct SdePath {
    std::vector<double> times;
    std::vector<std::array<double, 3>> values;
    std::uint64_t seed = 0;
    std::uint64_t path = 0;
};

// One path of the limit system. The squared-Bessel coordinates use the
// streams (stream_key(seed, path), coordinate); integral coordinates are
// accumulated with the trapezoidal rule on the same grid.
SdePath simulate_limit_system(const LimitSystem& system, std::span<const double> grid, std::uint64_t seed,
                              std::uint64_t path = 0);

// values[path][j] is the state at grid point grid_index(grid, times[j]).
// Identical to extracting those points from simulate_limit_system.
std::vector<std::vector<std::array<double, 3>>> limit_marginals(const LimitSystem& system,
                                                                std::span<const double> grid,
                                                                std::span<const double> times, std::size_t paths,
                                                                std::uint64_t seed, unsigned threads);

std::array<double, 3> limit_mean_vector(const LimitSystem& system, double t);

// Marginal law of the first limit coordinate at time t.
struct FirstCoordinateLaw {
    bool degenerate = false;  // point mass at `point`
    double point = 0.0;
    double shape = 0.0;
    double scale = 0.0;

    double mean() const noexcept;
    double variance() const noexcept;
    double cdf(double x) const;
};

// Gamma(2b/v, vt/2); a point mass at b t when v = 0 or b = 0.
FirstCoordinateLaw exact_first_coordinate_law(double b, double v, double t);

struct KernelResiduals {
    double integral = 0.0;         // a21 int_0^t X ds
    double stieltjes = 0.0;        // a21 sum (t - s_m) dX_m
    double iterated = 0.0;         // a32 a21 int_0^t int_0^r X ds dr
    double weighted = 0.0;         // a32 a21 int_0^t (t - s) X ds
    double stieltjes_sq = 0.0;     // (a32 a21 / 2) sum (t - s_m)^2 dX_m
    double path_sup = 0.0;         // sup of |X| on [0, t]
    double first_residual = 0.0;   // |integral - stieltjes|
    double second_residual = 0.0;  // max pairwise gap among the last three forms
};

// Compares the kernel forms of the second and third limit coordinates of
// case 4 on a sampled first coordinate. Throws ValidationError if t is not
// on the grid or the sizes disagree.
KernelResiduals kernel_representation_check(std::span<const double> grid, std::span<const double> path1, double t,
                                            double a21, double a32);

}  // namespace gwi
