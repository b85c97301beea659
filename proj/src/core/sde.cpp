#include "gwi/sde.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "gwi/error.hpp"
#include "gwi/parallel.hpp"

namespace gwi {

namespace {

constexpr std::array<std::array<int, 3>, 4> kExponents{{{1, 1, 1}, {1, 1, 2}, {1, 2, 2}, {1, 2, 3}}};

void check_grid(std::span<const double> grid) {
    if (grid.empty() || grid.front() != 0.0) throw ValidationError("time grid must start at 0");
    for (std::size_t m = 1; m < grid.size(); ++m)
        if (!(grid[m] > grid[m - 1])) throw ValidationError("time grid must be strictly increasing");
}

// One Euler-Maruyama step of the clamped squared-Bessel scheme.
class BesselStepper {
public:
    BesselStepper(double b, double v, Rng& rng) : b_(b), v_(v), rng_(rng) {}

    double step(double x, double h) {
        if (b_ == 0.0 && x == 0.0) return 0.0;
        double next = x + b_ * h;
        if (v_ > 0.0) next += std::sqrt(v_ * std::max(x, 0.0) * h) * normal_(rng_);
        return std::max(next, 0.0);
    }

private:
    double b_;
    double v_;
    Rng& rng_;
    std::normal_distribution<double> normal_;
};

// Runs one path and reports every grid point to `visit(m, state)`.
template <typename Visit>
void run_limit_path(const LimitSystem& s, std::span<const double> grid, std::uint64_t seed, std::uint64_t path,
                    Visit&& visit) {
    const std::uint64_t key = stream_key(seed, path);
    const bool independent_second = s.case_value <= 2;
    Rng r1(key, 0), r2(key, 1), r3(key, 2);
    BesselStepper x1(s.b[0], s.v[0], r1);
    BesselStepper x2(s.b[1], s.v[1], r2);
    BesselStepper x3(s.b[2], s.v[2], r3);

    std::array<double, 3> state{0.0, 0.0, 0.0};
    visit(std::size_t{0}, state);
    for (std::size_t m = 1; m < grid.size(); ++m) {
        const double h = grid[m] - grid[m - 1];
        const std::array<double, 3> prev = state;
        state[0] = x1.step(prev[0], h);
        if (independent_second) {
            state[1] = x2.step(prev[1], h);
        } else {
            state[1] = prev[1] + 0.5 * h * s.a21 * (prev[0] + state[0]);
        }
        switch (s.case_value) {
            case 1: state[2] = x3.step(prev[2], h); break;
            case 2:
                state[2] = prev[2] + 0.5 * h * (s.a31 * (prev[0] + state[0]) + s.a32 * (prev[1] + state[1]));
                break;
            case 3: state[2] = prev[2] + 0.5 * h * s.a31 * (prev[0] + state[0]); break;
            default: state[2] = prev[2] + 0.5 * h * s.a32 * (prev[1] + state[1]); break;
        }
        visit(m, state);
    }
}

}  // namespace

LimitSystem LimitSystem::from_model(const GwiModel& model, const CaseId& case_id) {
    if (model.types() != 3) throw ValidationError("limit systems are defined for 3-type models");
    const GwiModel normalized = model.permuted(case_id.permutation);
    const RealMatrix& a = normalized.mean_matrix();
    if (!is_lower_unipotent(a, 1e-12) || case_of_pattern(a) != case_id.value)
        throw ValidationError("model does not match case " + std::to_string(case_id.value));
    LimitSystem s;
    s.case_value = case_id.value;
    for (std::size_t i = 0; i < 3; ++i) {
        s.b[i] = normalized.immigration_mean()[i];
        s.v[i] = normalized.offspring_variance(i)(i, i);
    }
    s.a21 = a(1, 0);
    s.a31 = a(2, 0);
    s.a32 = a(2, 1);
    s.exponents = kExponents[static_cast<std::size_t>(s.case_value - 1)];
    s.validate();
    return s;
}

void LimitSystem::validate() const {
    if (case_value < 1 || case_value > 4) throw ValidationError("case must be 1, 2, 3 or 4");
    for (std::size_t i = 0; i < 3; ++i)
        if (!(b[i] >= 0.0) || !(v[i] >= 0.0) || !std::isfinite(b[i]) || !std::isfinite(v[i]))
            throw ValidationError("limit system drift and diffusion parameters must be finite and nonnegative");
    if (!(a21 >= 0.0) || !(a31 >= 0.0) || !(a32 >= 0.0))
        throw ValidationError("limit system coupling parameters must be nonnegative");
    bool ok = false;
    switch (case_value) {
        case 1: ok = a21 == 0.0 && a31 == 0.0 && a32 == 0.0; break;
        case 2: ok = a21 == 0.0 && a31 > 0.0; break;
        case 3: ok = a21 > 0.0 && a31 > 0.0 && a32 == 0.0; break;
        case 4: ok = a21 > 0.0 && a32 > 0.0; break;
    }
    if (!ok) throw ValidationError("coupling parameters do not match case " + std::to_string(case_value));
    if (exponents != kExponents[static_cast<std::size_t>(case_value - 1)])
        throw ValidationError("scaling exponents do not match the case");
}

std::vector<double> uniform_grid(double horizon, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("time step must be positive");
    if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw ValidationError("horizon must be nonnegative");
    const double steps_real = horizon / dt;
    const auto steps = static_cast<std::size_t>(std::llround(steps_real));
    if (std::abs(steps_real - static_cast<double>(steps)) > 1e-9 * std::max(1.0, steps_real))
        throw ValidationError("horizon must be a multiple of the time step");
    std::vector<double> grid(steps + 1);
    for (std::size_t m = 0; m <= steps; ++m) grid[m] = static_cast<double>(m) * dt;
    grid.back() = horizon;
    return grid;
}

std::size_t grid_index(std::span<const double> grid, double t) {
    const auto it = std::lower_bound(grid.begin(), grid.end(), t - 1e-9 * std::max(1.0, std::abs(t)));
    if (it == grid.end() || std::abs(*it - t) > 1e-9 * std::max(1.0, std::abs(t)))
        throw ValidationError("time " + std::to_string(t) + " is not a grid point");
    return static_cast<std::size_t>(it - grid.begin());
}

std::vector<double> simulate_squared_bessel(double b, double v, std::span<const double> grid, Rng& rng) {
    if (!(b >= 0.0) || !(v >= 0.0)) throw ValidationError("squared Bessel parameters must be nonnegative");
    check_grid(grid);
    BesselStepper stepper(b, v, rng);
    std::vector<double> path(grid.size(), 0.0);
    for (std::size_t m = 1; m < grid.size(); ++m) path[m] = stepper.step(path[m - 1], grid[m] - grid[m - 1]);
    return path;
}

std::vector<double> simulate_squared_bessel(double b, double v, std::span<const double> grid, std::uint64_t seed,
                                            std::uint64_t stream) {
    Rng rng(seed, stream);
    return simulate_squared_bessel(b, v, grid, rng);
}

SdePath simulate_limit_system(const LimitSystem& system, std::span<const double> grid, std::uint64_t seed,
                              std::uint64_t path) {
    system.validate();
    check_grid(grid);
    SdePath out;
    out.times.assign(grid.begin(), grid.end());
    out.values.resize(grid.size());
    out.seed = seed;
    out.path = path;
    run_limit_path(system, grid, seed, path,
                   [&](std::size_t m, const std::array<double, 3>& x) { out.values[m] = x; });
    return out;
}

std::vector<std::vector<std::array<double, 3>>> limit_marginals(const LimitSystem& system,
                                                                std::span<const double> grid,
                                                                std::span<const double> times, std::size_t paths,
                                                                std::uint64_t seed, unsigned threads) {
    system.validate();
    check_grid(grid);
    std::vector<std::size_t> wanted;
    for (double t : times) wanted.push_back(grid_index(grid, t));
    std::vector<std::vector<std::array<double, 3>>> out(paths, std::vector<std::array<double, 3>>(times.size()));
    parallel_for(paths, threads, [&](std::size_t p) {
        run_limit_path(system, grid, seed, p, [&](std::size_t m, const std::array<double, 3>& x) {
            for (std::size_t j = 0; j < wanted.size(); ++j)
                if (wanted[j] == m) out[p][j] = x;
        });
    });
    return out;
}

std::array<double, 3> limit_mean_vector(const LimitSystem& s, double t) {
    if (!(t >= 0.0)) throw ValidationError("time must be nonnegative");
    const double t2 = t * t / 2.0;
    switch (s.case_value) {
        case 1: return {s.b[0] * t, s.b[1] * t, s.b[2] * t};
        case 2: return {s.b[0] * t, s.b[1] * t, (s.a31 * s.b[0] + s.a32 * s.b[1]) * t2};
        case 3: return {s.b[0] * t, s.a21 * s.b[0] * t2, s.a31 * s.b[0] * t2};
        case 4: return {s.b[0] * t, s.a21 * s.b[0] * t2, s.a32 * s.a21 * s.b[0] * t * t * t / 6.0};
        default: throw ValidationError("case must be 1, 2, 3 or 4");
    }
}

double FirstCoordinateLaw::mean() const noexcept { return degenerate ? point : shape * scale; }

double FirstCoordinateLaw::variance() const noexcept { return degenerate ? 0.0 : shape * scale * scale; }

double FirstCoordinateLaw::cdf(double x) const {
    if (degenerate) return x >= point ? 1.0 : 0.0;
    if (x <= 0.0) return 0.0;
    return boost::math::gamma_p(shape, x / scale);
}

FirstCoordinateLaw exact_first_coordinate_law(double b, double v, double t) {
    if (!(b >= 0.0) || !(v >= 0.0) || !(t >= 0.0)) throw ValidationError("law parameters must be nonnegative");
    FirstCoordinateLaw law;
    if (b == 0.0 || v == 0.0 || t == 0.0) {
        law.degenerate = true;
        law.point = b * t;
        return law;
    }
    law.shape = 2.0 * b / v;
    law.scale = v * t / 2.0;
    return law;
}

KernelResiduals kernel_representation_check(std::span<const double> grid, std::span<const double> path1, double t,
                                            double a21, double a32) {
    if (grid.size() != path1.size()) throw ValidationError("grid and path sizes differ");
    check_grid(grid);
    if (path1.front() != 0.0) throw ValidationError("path must start at 0");
    const std::size_t end = grid_index(grid, t);
    double integral = 0.0, inner = 0.0, iterated = 0.0, weighted = 0.0, stieltjes = 0.0, stieltjes_sq = 0.0;
    double sup = 0.0;
    for (std::size_t m = 0; m < end; ++m) {
        const double h = grid[m + 1] - grid[m];
        const double x0 = path1[m], x1 = path1[m + 1];
        const double w0 = t - grid[m], w1 = t - grid[m + 1];
        const double panel = 0.5 * h * (x0 + x1);
        integral += panel;
        const double inner_next = inner + panel;
        iterated += 0.5 * h * (inner + inner_next);
        inner = inner_next;
        weighted += 0.5 * h * (w0 * x0 + w1 * x1);
        stieltjes += w0 * (x1 - x0);
        stieltjes_sq += w0 * w0 * (x1 - x0);
        sup = std::max({sup, std::abs(x0), std::abs(x1)});
    }
    KernelResiduals r;
    const double c = a32 * a21;
    r.integral = a21 * integral;
    r.stieltjes = a21 * stieltjes;
    r.iterated = c * iterated;
    r.weighted = c * weighted;
    r.stieltjes_sq = 0.5 * c * stieltjes_sq;
    r.path_sup = sup;
    r.first_residual = std::abs(r.integral - r.stieltjes);
    r.second_residual = std::max({std::abs(r.iterated - r.weighted), std::abs(r.weighted - r.stieltjes_sq),
                                  std::abs(r.iterated - r.stieltjes_sq)});
    return r;
}

}  // namespace gwi
