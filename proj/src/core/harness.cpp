#include "gwi/harness.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "gwi/error.hpp"
#include "gwi/format.hpp"
#include "gwi/moments.hpp"
#include "gwi/parallel.hpp"

namespace gwi {

namespace {

using nlohmann::json;

// Stream reserved for the limit-system ensemble; GWI runs use the n values.
constexpr std::uint64_t kSdeStream = 0x5de5de5de5de5de5ULL;

std::int64_t floor_index(std::int64_t n, double t) {
    return static_cast<std::int64_t>(std::floor(static_cast<double>(n) * t + 1e-9));
}

void check_config(const ConvergenceConfig& c) {
    if (c.n_list.empty()) throw ValidationError("n_list must be nonempty");
    for (auto n : c.n_list)
        if (n < 1) throw ValidationError("n_list entries must be positive");
    if (c.t_points.empty()) throw ValidationError("t_points must be nonempty");
    for (double t : c.t_points)
        if (!(t > 0.0) || !std::isfinite(t)) throw ValidationError("t_points must be positive");
    if (c.replicas < 1000) throw ValidationError("at least 1000 replicas are required for the confidence intervals");
    if (c.sde_paths < 1) throw ValidationError("sde_paths must be positive");
    if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
    if (!(c.confidence > 0.0 && c.confidence < 1.0)) throw ValidationError("confidence must lie in (0, 1)");
    if (c.case_value < 0 || c.case_value > 4) throw ValidationError("case must be 0 (auto) or 1..4");
}

json summary_json(const SampleSummary& s) {
    return json{{"count", s.count}, {"mean", s.mean}, {"variance", s.variance}, {"standard_error", s.standard_error}};
}

json ks_json(const KsResult& r) { return json{{"statistic", r.statistic}, {"p_value", r.p_value}}; }

template <typename T>
T get_or(const json& j, const char* name, T fallback) {
    if (!j.contains(name)) return fallback;
    try {
        return j.at(name).get<T>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config field '") + name + "': " + e.what());
    }
}

}  // namespace

std::array<int, 3> exponents_for_case(int case_value) {
    switch (case_value) {
        case 1: return {1, 1, 1};
        case 2: return {1, 1, 2};
        case 3: return {1, 2, 2};
        case 4: return {1, 2, 3};
        default: throw ValidationError("case must be 1, 2, 3 or 4");
    }
}

ScaledStepProcess::ScaledStepProcess(const Trajectory& trajectory, std::int64_t n, std::vector<int> exponents)
    : trajectory_(&trajectory), n_(n), exponents_(std::move(exponents)) {
    if (n < 1) throw ValidationError("scale n must be positive");
    if (exponents_.size() != trajectory.types()) throw ValidationError("one exponent per coordinate is required");
}

std::size_t ScaledStepProcess::index(double t) const {
    if (!(t >= 0.0)) throw ValidationError("time must be nonnegative");
    const auto k = static_cast<std::size_t>(floor_index(n_, t));
    if (k > trajectory_->steps()) throw ValidationError("time lies beyond the simulated horizon");
    return k;
}

RealVector ScaledStepProcess::operator()(double t) const {
    const State& x = trajectory_->states[index(t)];
    RealVector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = static_cast<double>(x[i]) / std::pow(static_cast<double>(n_), exponents_[i]);
    return out;
}

StepFunctional step_integral_functional(std::span<const double> f, std::int64_t n, double t) {
    if (n < 1) throw ValidationError("scale n must be positive");
    if (!(t >= 0.0)) throw ValidationError("time must be nonnegative");
    const auto k = static_cast<std::size_t>(floor_index(n, t));
    if (k >= f.size()) throw ValidationError("step values do not reach floor(n t)");
    double plain = 0.0, weighted = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        plain += f[j];
        weighted += static_cast<double>(k - 1 - j) * f[j];
    }
    const double nn = static_cast<double>(n);
    return {f[k], plain / nn, weighted / (nn * nn)};
}

ExactStepFunctional step_integral_functional_exact(std::span<const std::int64_t> f, std::int64_t n, std::int64_t k) {
    if (n < 1) throw ValidationError("scale n must be positive");
    if (k < 0 || static_cast<std::size_t>(k) >= f.size()) throw ValidationError("k outside the step values");
    std::int64_t plain = 0, weighted = 0;
    for (std::int64_t j = 0; j < k; ++j) {
        std::int64_t term;
        if (__builtin_add_overflow(plain, f[j], &plain) || __builtin_mul_overflow(k - 1 - j, f[j], &term) ||
            __builtin_add_overflow(weighted, term, &weighted))
            throw OverflowError("step functional overflows 64 bits");
    }
    ExactStepFunctional out;
    out.k = k;
    out.value = f[k];
    out.integral = Rational(plain, n);
    out.double_integral = Rational(weighted, n * n);
    return out;
}

ConvergenceReport run_convergence_experiment(const GwiModel& model, const ConvergenceConfig& config) {
    check_config(config);
    if (model.types() != 3) throw ValidationError("convergence experiments need a 3-type model");
    ConvergenceReport report;
    report.config = config;
    report.case_id = detect_case(model.mean_matrix());
    if (config.case_value != 0 && config.case_value != report.case_id.value)
        throw ValidationError("model is case " + std::to_string(report.case_id.value) + ", config expects case " +
                              std::to_string(config.case_value));
    const GwiModel normalized = model.permuted(report.case_id.permutation);
    report.system = LimitSystem::from_model(model, report.case_id);
    const auto& e = report.system.exponents;
    const std::size_t nt = config.t_points.size();
    report.per_test_alpha = config.alpha / static_cast<double>(3 * nt);
    const double z = boost::math::quantile(boost::math::normal(), 0.5 + config.confidence / 2.0);

    const double horizon = *std::max_element(config.t_points.begin(), config.t_points.end());
    const std::vector<double> grid = uniform_grid(horizon, config.dt);
    const auto sde = limit_marginals(report.system, grid, config.t_points, config.sde_paths,
                                     stream_key(config.seed, kSdeStream), config.threads);
    // sde_values[j][c] = sample of coordinate c at t_points[j]
    std::vector<std::array<std::vector<double>, 3>> sde_values(nt);
    for (std::size_t j = 0; j < nt; ++j)
        for (std::size_t c = 0; c < 3; ++c) {
            sde_values[j][c].resize(config.sde_paths);
            for (std::size_t p = 0; p < config.sde_paths; ++p) sde_values[j][c][p] = sde[p][j][c];
        }

    std::vector<std::array<double, 3>> wasserstein_by_n;
    for (const std::int64_t n : config.n_list) {
        std::vector<std::int64_t> ks(nt);
        for (std::size_t j = 0; j < nt; ++j) ks[j] = floor_index(n, config.t_points[j]);
        const std::int64_t horizon_k = *std::max_element(ks.begin(), ks.end());
        const std::uint64_t run_seed = stream_key(config.seed, static_cast<std::uint64_t>(n));
        std::vector<std::array<std::vector<double>, 3>> gwi(nt);
        for (auto& per_t : gwi)
            for (auto& v : per_t) v.resize(config.replicas);
        double scale[3];
        for (std::size_t c = 0; c < 3; ++c) scale[c] = std::pow(static_cast<double>(n), e[c]);

        parallel_for(config.replicas, config.threads, [&](std::size_t r) {
            SimulationOptions opts;
            opts.replica = r;
            const Trajectory tr = simulate_trajectory(normalized, static_cast<std::size_t>(horizon_k), run_seed, opts);
            for (std::size_t j = 0; j < nt; ++j)
                for (std::size_t c = 0; c < 3; ++c)
                    gwi[j][c][r] = static_cast<double>(tr.states[static_cast<std::size_t>(ks[j])][c]) / scale[c];
        });

        for (std::size_t j = 0; j < nt; ++j) {
            ConvergenceCell cell;
            cell.n = n;
            cell.t = config.t_points[j];
            cell.k = ks[j];
            const RealVector exact = mean_vector(normalized, ks[j]);
            const auto limit = limit_mean_vector(report.system, cell.t);
            for (std::size_t c = 0; c < 3; ++c) {
                CoordinateComparison cmp;
                cmp.coordinate = c;
                cmp.gwi = summarize(gwi[j][c]);
                cmp.sde = summarize(sde_values[j][c]);
                cmp.ci_low = cmp.gwi.mean - z * cmp.gwi.standard_error;
                cmp.ci_high = cmp.gwi.mean + z * cmp.gwi.standard_error;
                cmp.limit_mean = limit[c];
                cmp.exact_scaled_mean = exact[c] / scale[c];
                cmp.ks = ks_two_sample(gwi[j][c], sde_values[j][c]);
                cmp.ks_pass = cmp.ks.p_value > report.per_test_alpha;
                if (c == 0) {
                    const FirstCoordinateLaw law =
                        exact_first_coordinate_law(report.system.b[0], report.system.v[0], cell.t);
                    if (!law.degenerate)
                        cmp.ks_gamma = ks_one_sample(gwi[j][c], [&](double x) { return law.cdf(x); });
                }
                cmp.wasserstein = wasserstein1(gwi[j][c], sde_values[j][c]);
                cell.coordinates.push_back(std::move(cmp));
            }
            report.cells.push_back(std::move(cell));
        }
    }

    for (std::size_t j = 0; j < nt; ++j)
        for (std::size_t c = 0; c < 3; ++c) {
            DistanceTrend trend;
            trend.t = config.t_points[j];
            trend.coordinate = c;
            for (std::size_t ni = 0; ni < config.n_list.size(); ++ni)
                trend.wasserstein.push_back(report.cells[ni * nt + j].coordinates[c].wasserstein);
            trend.last_below_first = trend.wasserstein.back() < trend.wasserstein.front();
            report.trends.push_back(std::move(trend));
        }
    return report;
}

json convergence_config_to_json(const ConvergenceConfig& c) {
    return json{{"case", c.case_value},   {"n_list", c.n_list}, {"t_points", c.t_points},
                {"replicas", c.replicas}, {"sde_paths", c.sde_paths}, {"dt", c.dt},
                {"seed", c.seed},         {"alpha", c.alpha},   {"confidence", c.confidence}};
}

ConvergenceConfig convergence_config_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("experiment config must be a JSON object");
    static const std::set<std::string> known{"case", "n_list", "t_points", "replicas", "sde_paths",
                                             "dt", "seed", "threads", "alpha", "confidence"};
    for (const auto& item : j.items())
        if (!known.contains(item.key())) throw ValidationError("unknown experiment config key: " + item.key());
    ConvergenceConfig c;
    c.case_value = get_or(j, "case", c.case_value);
    c.n_list = get_or(j, "n_list", c.n_list);
    c.t_points = get_or(j, "t_points", c.t_points);
    c.replicas = get_or(j, "replicas", c.replicas);
    c.sde_paths = get_or(j, "sde_paths", c.sde_paths);
    c.dt = get_or(j, "dt", c.dt);
    c.seed = get_or(j, "seed", c.seed);
    c.threads = get_or(j, "threads", c.threads);
    c.alpha = get_or(j, "alpha", c.alpha);
    c.confidence = get_or(j, "confidence", c.confidence);
    check_config(c);
    return c;
}

json report_to_json(const ConvergenceReport& r) {
    json perm = json::array();
    for (auto p : r.case_id.permutation) perm.push_back(p + 1);
    const LimitSystem& s = r.system;
    json cells = json::array();
    for (const auto& cell : r.cells) {
        json coords = json::array();
        for (const auto& c : cell.coordinates) {
            json entry{{"coordinate", c.coordinate + 1},
                       {"gwi", summary_json(c.gwi)},
                       {"sde", summary_json(c.sde)},
                       {"ci", {c.ci_low, c.ci_high}},
                       {"limit_mean", c.limit_mean},
                       {"exact_scaled_mean", c.exact_scaled_mean},
                       {"ks", ks_json(c.ks)},
                       {"ks_pass", c.ks_pass},
                       {"wasserstein1", c.wasserstein}};
            entry["ks_gamma"] = c.ks_gamma ? ks_json(*c.ks_gamma) : json(nullptr);
            coords.push_back(std::move(entry));
        }
        cells.push_back(json{{"n", cell.n}, {"t", cell.t}, {"k", cell.k}, {"coordinates", coords}});
    }
    json trends = json::array();
    for (const auto& t : r.trends)
        trends.push_back(json{{"t", t.t},
                              {"coordinate", t.coordinate + 1},
                              {"wasserstein1", t.wasserstein},
                              {"last_below_first", t.last_below_first}});
    return json{{"config", convergence_config_to_json(r.config)},
                {"case", r.case_id.value},
                {"permutation", perm},
                {"system",
                 {{"b", s.b}, {"v", s.v}, {"a21", s.a21}, {"a31", s.a31}, {"a32", s.a32}, {"exponents", s.exponents}}},
                {"per_test_alpha", r.per_test_alpha},
                {"cells", cells},
                {"trends", trends}};
}

std::string report_to_csv(const ConvergenceReport& r) {
    std::ostringstream out;
    out << "n,t,k,coordinate,gwi_mean,gwi_var,gwi_se,ci_low,ci_high,sde_mean,sde_var,sde_se,limit_mean,"
           "exact_scaled_mean,ks_stat,ks_p,ks_pass,gamma_ks_stat,gamma_ks_p,w1\n";
    for (const auto& cell : r.cells)
        for (const auto& c : cell.coordinates) {
            out << cell.n << ',' << format_double(cell.t) << ',' << cell.k << ',' << c.coordinate + 1;
            for (double x : {c.gwi.mean, c.gwi.variance, c.gwi.standard_error, c.ci_low, c.ci_high, c.sde.mean,
                             c.sde.variance, c.sde.standard_error, c.limit_mean, c.exact_scaled_mean,
                             c.ks.statistic, c.ks.p_value})
                out << ',' << format_double(x);
            out << ',' << (c.ks_pass ? 1 : 0);
            if (c.ks_gamma)
                out << ',' << format_double(c.ks_gamma->statistic) << ',' << format_double(c.ks_gamma->p_value);
            else
                out << ",,";
            out << ',' << format_double(c.wasserstein) << '\n';
        }
    return out.str();
}

std::string_view to_string(GrowthQuantity q) noexcept {
    switch (q) {
        case GrowthQuantity::sup_sum_sq: return "sup_sum_sq";
        case GrowthQuantity::weighted_sup_sum_sq: return "weighted_sup_sum_sq";
        case GrowthQuantity::fourth_moment: return "fourth_moment";
    }
    return "unknown";
}

GrowthQuantity growth_quantity_from_string(std::string_view name) {
    for (auto q : {GrowthQuantity::sup_sum_sq, GrowthQuantity::weighted_sup_sum_sq, GrowthQuantity::fourth_moment})
        if (to_string(q) == name) return q;
    throw ValidationError("unknown growth quantity '" + std::string(name) + "'");
}

std::vector<GrowthFit> growth_fit(const GwiModel& model, const GrowthFitConfig& config) {
    if (config.n_list.size() < 2) throw ValidationError("growth fits need at least two scales");
    if (config.replicas < 2) throw ValidationError("growth fits need at least two replicas");
    for (auto n : config.n_list)
        if (n < 1) throw ValidationError("n_list entries must be positive");
    std::vector<std::int64_t> ns = config.n_list;
    std::sort(ns.begin(), ns.end());
    if (std::adjacent_find(ns.begin(), ns.end()) != ns.end()) throw ValidationError("n_list entries must be distinct");

    const std::size_t p = model.types();
    const std::size_t nn = ns.size();
    const std::size_t reps = config.replicas;
    const RealMatrix& a = model.mean_matrix();
    const RealVector& b = model.immigration_mean();
    constexpr std::size_t kQuantities = 3;
    // samples[((q * nn + ni) * p + i) * reps + r]
    std::vector<double> samples(kQuantities * nn * p * reps);
    const auto slot = [&](std::size_t q, std::size_t ni, std::size_t i, std::size_t r) {
        return ((q * nn + ni) * p + i) * reps + r;
    };

    parallel_for(reps, config.threads, [&](std::size_t r) {
        SimulationOptions opts;
        opts.replica = r;
        const Trajectory tr = simulate_trajectory(model, static_cast<std::size_t>(ns.back()), config.seed, opts);
        std::vector<double> sum(p, 0.0), weighted(p, 0.0), sup_sum(p, 0.0), sup_weighted(p, 0.0);
        std::size_t next = 0;
        for (std::size_t k = 1; k <= tr.steps(); ++k) {
            const State& prev = tr.states[k - 1];
            const State& cur = tr.states[k];
            for (std::size_t i = 0; i < p; ++i) {
                double predicted = b[i];
                for (std::size_t j = 0; j < p; ++j) predicted += a(i, j) * static_cast<double>(prev[j]);
                const double m = static_cast<double>(cur[i]) - predicted;
                weighted[i] += sum[i];  // sum_{l<=k}(k-l)u_l = sum_{j<k} S_j
                sum[i] += m + b[i];
                sup_sum[i] = std::max(sup_sum[i], sum[i] * sum[i]);
                sup_weighted[i] = std::max(sup_weighted[i], weighted[i] * weighted[i]);
                if (next < nn && static_cast<std::int64_t>(k) == ns[next]) {
                    samples[slot(0, next, i, r)] = sup_sum[i];
                    samples[slot(1, next, i, r)] = sup_weighted[i];
                    samples[slot(2, next, i, r)] = m * m * m * m;
                }
            }
            if (next < nn && static_cast<std::int64_t>(k) == ns[next]) ++next;
        }
    });

    std::optional<MomentGrowthTargets> targets;
    if (is_lower_unipotent(a)) targets = moment_growth_targets(model);
    std::vector<double> xs(ns.begin(), ns.end());
    std::vector<GrowthFit> fits;
    for (std::size_t q = 0; q < kQuantities; ++q)
        for (std::size_t i = 0; i < p; ++i) {
            GrowthFit fit;
            fit.quantity = static_cast<GrowthQuantity>(q);
            fit.coordinate = i;
            for (std::size_t ni = 0; ni < nn; ++ni) {
                const SampleSummary s = summarize(std::span<const double>(&samples[slot(q, ni, i, 0)], reps));
                fit.estimates.push_back(s.mean);
                fit.standard_errors.push_back(s.standard_error);
                if (!(s.mean > 0.0)) fit.degenerate = true;
            }
            if (!fit.degenerate) fit.slope = loglog_slope(xs, fit.estimates);
            if (targets) {
                if (q == 0) fit.target = targets->sum_sup[i];
                if (q == 1) fit.target = targets->weighted_sum_sup[i];
                if (q == 2) fit.target = targets->fourth[i];
            }
            fits.push_back(std::move(fit));
        }
    return fits;
}

ScaledSupResult scaled_sup_experiment(const GwiModel& model, std::size_t coordinate, int exponent,
                                      const std::vector<std::int64_t>& n_list, std::size_t replicas,
                                      std::uint64_t seed, unsigned threads) {
    if (coordinate >= model.types()) throw ValidationError("coordinate out of range");
    if (replicas < 2) throw ValidationError("need at least two replicas");
    ScaledSupResult out;
    out.n_list = n_list;
    for (const std::int64_t n : n_list) {
        if (n < 1) throw ValidationError("n_list entries must be positive");
        const double scale = std::pow(static_cast<double>(n), exponent);
        const std::uint64_t run_seed = stream_key(seed, static_cast<std::uint64_t>(n));
        std::vector<double> sups(replicas);
        parallel_for(replicas, threads, [&](std::size_t r) {
            SimulationOptions opts;
            opts.replica = r;
            const Trajectory tr = simulate_trajectory(model, static_cast<std::size_t>(n), run_seed, opts);
            std::int64_t best = 0;
            for (const State& x : tr.states) best = std::max(best, x[coordinate]);
            sups[r] = static_cast<double>(best) / scale;
        });
        out.sup.push_back(summarize(sups));
    }
    return out;
}

}  // namespace gwi
