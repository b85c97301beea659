// Acceptance suite: one PASS/FAIL line per criterion, with details indented
// beneath it. Each criterion uses its own number as the seed.
#include <CLI11.hpp>

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gwi/harness.hpp"
#include "gwi/moments.hpp"
#include "gwi/parallel.hpp"
#include "gwi/sde.hpp"
#include "gwi/simulate.hpp"
#include "gwi/stats.hpp"

using namespace gwi;

namespace {

struct Outcome {
    bool pass = true;
    std::vector<std::string> details;

    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        details.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
    }
    void note(const std::string& what) { details.push_back("info " + what); }
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

GwiModel poisson_model(const RealMatrix& a, const std::vector<double>& b) {
    std::vector<DistributionSpec> offspring;
    for (std::size_t j = 0; j < a.cols(); ++j) {
        std::vector<double> col(a.rows());
        for (std::size_t i = 0; i < a.rows(); ++i) col[i] = a(i, j);
        offspring.push_back(DistributionSpec::poisson(col));
    }
    return GwiModel::build(std::move(offspring), DistributionSpec::poisson(b));
}

RealMatrix lower3(double a21, double a31, double a32) { return RealMatrix{{1, 0, 0}, {a21, 1, 0}, {a31, a32, 1}}; }

// One Poisson model per case. b = (1, 0.5, 0.5) with these couplings makes
// the O(1/n) bias of the scaled means vanish (or nearly so in case 3).
const std::vector<double> kB{1.0, 0.5, 0.5};
RealMatrix case_matrix(int c) {
    switch (c) {
        case 1: return lower3(0, 0, 0);
        case 2: return lower3(0, 0.5, 1);
        case 3: return lower3(1, 0.5, 0);
        default: return lower3(1, 0.5, 1);
    }
}

// ---- 1 ------------------------------------------------------------------

Outcome exact_identities(unsigned threads) {
    Outcome o;
    const IdentityBatteryResult battery = run_identity_battery(100, 500, 1, threads);
    o.require(battery.all_hold(), fmt("weighted-sum identities on %zu trials: failures %zu/%zu/%zu", battery.trials,
                                      battery.failures[0], battery.failures[1], battery.failures[2]));

    std::mt19937_64 gen(1);
    std::uniform_int_distribution<int> entry(0, 3), dim(1, 6), power(0, 50);
    std::size_t exact_bad = 0, float_bad = 0;
    double worst_rel = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t p = static_cast<std::size_t>(dim(gen));
        Matrix<Int128> a = Matrix<Int128>::identity(p);
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < i; ++j) a(i, j) = entry(gen);
        const std::int64_t k = power(gen);
        Matrix<Int128> brute = Matrix<Int128>::identity(p);
        for (std::int64_t s = 0; s < k; ++s) brute = brute * a;
        if (!(unipotent_power(a, k) == brute)) ++exact_bad;
        const RealMatrix approx = unipotent_power(a.cast<double>(), k);
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < p; ++j) {
                const double want = static_cast<double>(brute(i, j));
                const double rel = want == 0.0 ? std::abs(approx(i, j)) : std::abs(approx(i, j) - want) / want;
                worst_rel = std::max(worst_rel, rel);
                if (rel > 1e-9) ++float_bad;
            }
    }
    o.require(exact_bad == 0, fmt("unipotent_power exact (128-bit) vs repeated product: %zu/200 mismatches", exact_bad));
    o.require(float_bad == 0, fmt("unipotent_power in double: worst relative error %.3g (limit 1e-9)", worst_rel));

    const GwiModel model = poisson_model(case_matrix(4), kB);
    const auto batch = simulate_batch(model, 200, 100, 1, threads);
    double worst = 0.0;
    for (const auto& t : batch) worst = std::max(worst, decomposition_components(model, t).max_relative_residual);
    o.require(worst <= 1e-9, fmt("decomposition residual over 100 case-4 paths, K=200: %.3g (limit 1e-9)", worst));
    return o;
}

// ---- 2 ------------------------------------------------------------------

Outcome eta_table() {
    Outcome o;
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> pos(0.05, 3.0);
    std::bernoulli_distribution coin(0.5);
    const std::array<std::vector<int>, 4> expected{{{1, 1, 1}, {1, 1, 2}, {1, 2, 2}, {1, 2, 3}}};
    for (int c = 1; c <= 4; ++c) {
        std::size_t bad = 0;
        for (int trial = 0; trial < 50; ++trial) {
            double a21 = 0, a31 = 0, a32 = 0;
            switch (c) {
                case 2: a31 = pos(gen); a32 = coin(gen) ? pos(gen) : 0.0; break;
                case 3: a21 = pos(gen); a31 = pos(gen); break;
                case 4: a21 = pos(gen); a32 = pos(gen); a31 = coin(gen) ? pos(gen) : 0.0; break;
                default: break;
            }
            std::array<std::size_t, 3> perm{0, 1, 2};
            std::shuffle(perm.begin(), perm.end(), gen);
            const RealMatrix scrambled = permute_matrix(lower3(a21, a31, a32), perm);
            const CaseId id = detect_case(scrambled);
            const RealMatrix normal = permute_matrix(scrambled, id.permutation);
            const GrowthExponents g = growth_exponents(normal, RealVector{1, 1, 1});
            if (id.value != c || g.eta != expected[c - 1]) ++bad;
        }
        o.require(bad == 0, fmt("case %d: %d/50 random (relabelled) matrices give eta = (%d,%d,%d)", c, 50 - int(bad),
                                expected[c - 1][0], expected[c - 1][1], expected[c - 1][2]));
    }
    return o;
}

// ---- 3 ------------------------------------------------------------------

Outcome moments_vs_monte_carlo(unsigned threads) {
    Outcome o;
    constexpr std::size_t kReplicas = 100000;
    for (int c = 1; c <= 4; ++c) {
        const GwiModel model = poisson_model(case_matrix(c), kB);
        const auto batch = simulate_batch(model, 20, kReplicas, 3, threads);
        double worst_mean = 0.0, worst_var = 0.0;
        for (std::int64_t k : {5, 10, 20}) {
            const RealVector mean = mean_vector(model, k);
            const RealMatrix var = variance_matrix(model, k);
            for (std::size_t i = 0; i < 3; ++i) {
                std::vector<double> xs(kReplicas);
                for (std::size_t r = 0; r < kReplicas; ++r) xs[r] = double(batch[r].states[k][i]);
                const SampleSummary s = summarize(xs);
                // SE of the sample variance from the sample fourth central moment.
                std::vector<double> dev4(kReplicas);
                for (std::size_t r = 0; r < kReplicas; ++r) dev4[r] = std::pow(xs[r] - s.mean, 4);
                const double m4 = pairwise_sum(dev4) / double(kReplicas);
                const double var_se = std::sqrt(std::max(m4 - s.variance * s.variance, 0.0) / double(kReplicas));
                const double zm = std::abs(s.mean - mean[i]) / s.standard_error;
                const double zv = std::abs(s.variance - var(i, i)) / var_se;
                worst_mean = std::max(worst_mean, zm);
                worst_var = std::max(worst_var, zv);
                if (zm > 4 || zv > 4)
                    o.note(fmt("case %d k=%lld coord %zu: mean z=%.2f var z=%.2f", c, (long long)k, i + 1, zm, zv));
            }
        }
        o.require(worst_mean <= 4 && worst_var <= 4,
                  fmt("case %d, k in {5,10,20}, 1e5 replicas: max |z| mean %.2f, variance %.2f (limit 4)", c,
                      worst_mean, worst_var));
    }
    return o;
}

// ---- 4 ------------------------------------------------------------------

Outcome leading_asymptotics() {
    Outcome o;
    const GwiModel model = poisson_model(case_matrix(4), kB);
    const double a21 = 1, a32 = 1, b1 = kB[0];
    const double ratio = mean_vector(model, 500)[2] / (b1 * a21 * a32 * binomial(500, 3));
    o.require(ratio >= 0.99 && ratio <= 1.01, fmt("E X_{500,3} / (b1 a21 a32 C(500,3)) = %.6f (range [0.99, 1.01])", ratio));
    return o;
}

// ---- 5 ------------------------------------------------------------------

Outcome squared_bessel(unsigned threads) {
    Outcome o;
    const double b = 1.0, v = 1.0;
    {
        constexpr std::size_t kPaths = 100000;
        const auto grid = uniform_grid(2.0, 1e-3);
        const std::size_t i1 = grid_index(grid, 1.0), i2 = grid_index(grid, 2.0);
        std::vector<double> at1(kPaths), at2(kPaths);
        parallel_for(kPaths, threads, [&](std::size_t p) {
            const auto x = simulate_squared_bessel(b, v, grid, 5, p);
            at1[p] = x[i1];
            at2[p] = x[i2];
        });
        for (const auto& [t, xs] : {std::pair{1.0, &at1}, std::pair{2.0, &at2}}) {
            const SampleSummary s = summarize(*xs);
            const double mean_err = std::abs(s.mean - b * t) / (b * t);
            const double target_var = v * b * t * t / 2;
            const double var_err = std::abs(s.variance - target_var) / target_var;
            o.require(mean_err <= 0.02, fmt("t=%g: mean %.5f vs %.5f, rel err %.4f (limit 0.02)", t, s.mean, b * t, mean_err));
            o.require(var_err <= 0.05,
                      fmt("t=%g: variance %.5f vs %.5f, rel err %.4f (limit 0.05)", t, s.variance, target_var, var_err));
        }
    }
    {
        constexpr std::size_t kPaths = 10000;
        const auto grid = uniform_grid(1.0, 1e-4);
        std::vector<double> end(kPaths);
        parallel_for(kPaths, threads, [&](std::size_t p) {
            end[p] = simulate_squared_bessel(b, v, grid, 50, p).back();
        });
        const FirstCoordinateLaw law = exact_first_coordinate_law(b, v, 1.0);
        const KsResult ks = ks_one_sample(end, [&](double x) { return law.cdf(x); });
        o.require(ks.p_value > 0.01, fmt("KS vs Gamma(%g, %g) at t=1, dt=1e-4, 1e4 paths: D=%.4f p=%.4f (need p > 0.01)",
                                         law.shape, law.scale, ks.statistic, ks.p_value));
    }
    return o;
}

// ---- 6 ------------------------------------------------------------------

Outcome convergence(unsigned threads) {
    Outcome o;
    for (int c : {4, 1, 2, 3}) {
        const GwiModel model = poisson_model(case_matrix(c), kB);
        ConvergenceConfig cfg;  // n_list {125..2000}, t {0.25,0.5,1}, 2000 replicas, 2000 SDE paths, dt 1e-3
        cfg.case_value = c;
        cfg.seed = 6;
        cfg.threads = threads;
        const ConvergenceReport r = run_convergence_experiment(model, cfg);
        const auto& target_cell = *std::find_if(r.cells.begin(), r.cells.end(),
                                                [](const ConvergenceCell& cell) { return cell.n == 500 && cell.t == 1.0; });
        bool means_ok = true, ks_ok = true;
        std::string mean_text, ks_text;
        for (const auto& cc : target_cell.coordinates) {
            const double se = std::hypot(cc.gwi.standard_error, cc.sde.standard_error);
            const double z = std::abs(cc.gwi.mean - cc.limit_mean) / se;
            means_ok = means_ok && z <= 3.0;
            ks_ok = ks_ok && cc.ks_pass;
            mean_text += fmt(" X%zu %.4f vs %.4f (z=%.2f);", cc.coordinate + 1, cc.gwi.mean, cc.limit_mean, z);
            ks_text += fmt(" X%zu p=%.4f;", cc.coordinate + 1, cc.ks.p_value);
            if (cc.ks_gamma) o.note(fmt("case %d n=500 t=1: X1 vs exact Gamma p=%.4f", c, cc.ks_gamma->p_value));
        }
        o.require(means_ok, fmt("case %d n=500 t=1 means within 3 combined SE:", c) + mean_text);
        o.require(ks_ok, fmt("case %d n=500 t=1 two-sample KS vs SDE, per-test alpha %.5f:", c, r.per_test_alpha) + ks_text);
        bool w_ok = true;
        std::string w_text;
        for (const auto& trend : r.trends) {
            if (trend.t != 1.0) continue;
            w_ok = w_ok && trend.last_below_first;
            w_text += fmt(" X%zu %.4f -> %.4f;", trend.coordinate + 1, trend.wasserstein.front(), trend.wasserstein.back());
        }
        o.require(w_ok, fmt("case %d t=1 W1 at n=2000 below n=125:", c) + w_text);
        // Sampling noise floor: W1 between two independent SDE ensembles of the same size.
        const auto grid = uniform_grid(1.0, cfg.dt);
        const std::vector<double> at_one{1.0};
        const auto e1 = limit_marginals(r.system, grid, at_one, cfg.sde_paths, 600, threads);
        const auto e2 = limit_marginals(r.system, grid, at_one, cfg.sde_paths, 601, threads);
        for (const auto& trend : r.trends)
            if (trend.t == 1.0) {
                std::vector<double> x1, x2;
                for (const auto& p : e1) x1.push_back(p[0][trend.coordinate]);
                for (const auto& p : e2) x2.push_back(p[0][trend.coordinate]);
                std::string all;
                for (double w : trend.wasserstein) all += fmt(" %.4f", w);
                o.note(fmt("case %d X%zu W1 over n_list:", c, trend.coordinate + 1) + all +
                       fmt("; SDE-vs-SDE noise floor %.4f", wasserstein1(x1, x2)));
            }
    }
    return o;
}

// ---- 7 ------------------------------------------------------------------

Outcome growth_fits(unsigned threads) {
    Outcome o;
    GrowthFitConfig cfg;  // n_list {32..512}, 1e5 replicas
    cfg.seed = 7;
    cfg.threads = threads;
    for (const auto& f : growth_fit(poisson_model(RealMatrix{{1}}, {1}), cfg))
        if (f.quantity == GrowthQuantity::fourth_moment)
            o.require(f.target && std::abs(f.slope - *f.target) <= 0.3,
                      fmt("single-type critical, E M_n^4: slope %.3f (target %d +- 0.3)", f.slope, f.target.value_or(-1)));
    for (const auto& f : growth_fit(poisson_model(case_matrix(4), kB), cfg))
        if (f.quantity == GrowthQuantity::sup_sum_sq)
            o.require(f.target && std::abs(f.slope - *f.target) <= 0.3,
                      fmt("case 4 coord %zu, E sup (sum)^2: slope %.3f (target %d +- 0.3)", f.coordinate + 1, f.slope,
                          f.target.value_or(-1)));
    return o;
}

// ---- 8 ------------------------------------------------------------------

Outcome kernel_representations(unsigned threads) {
    Outcome o;
    const double dt = 1e-3;
    const auto grid = uniform_grid(1.0, dt);
    LimitSystem system = LimitSystem::from_model(poisson_model(case_matrix(4), kB), CaseId{4, {0, 1, 2}});
    std::vector<KernelResiduals> res(100);
    parallel_for(res.size(), threads, [&](std::size_t p) {
        const SdePath path = simulate_limit_system(system, grid, 8, p);
        std::vector<double> x1(path.values.size());
        for (std::size_t i = 0; i < x1.size(); ++i) x1[i] = path.values[i][0];
        res[p] = kernel_representation_check(grid, x1, 1.0, system.a21, system.a32);
    });
    double worst_ratio = 0.0, worst_first = 0.0;
    for (const auto& r : res) {
        const double bound = 5 * dt * r.path_sup;
        worst_ratio = std::max(worst_ratio, r.second_residual / bound);
        worst_first = std::max(worst_first, r.first_residual / bound);
    }
    o.require(worst_ratio <= 1.0,
              fmt("coordinate-3 forms, 100 paths: max residual / (5 dt sup|X1|) = %.4f (limit 1)", worst_ratio));
    o.require(worst_first <= 1.0,
              fmt("coordinate-2 forms, 100 paths: max residual / (5 dt sup|X1|) = %.4f (limit 1)", worst_first));
    return o;
}

// ---- 9 ------------------------------------------------------------------

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome cli_determinism(const std::string& cli, const std::string& data) {
    Outcome o;
    if (cli.empty()) {
        o.require(false, "no CLI path given (--cli)");
        return o;
    }
    const std::filesystem::path work = std::filesystem::temp_directory_path() / ("gwi_acceptance_" + std::to_string(::getpid()));
    std::filesystem::create_directories(work);
    const std::string model = data + "/case4.json";
    const std::vector<std::pair<std::string, std::string>> commands{
        {"classify", "classify --model " + model},
        {"simulate", "simulate --model " + model + " --steps 100 --replicas 50"},
        {"simulate_json", "--format json simulate --model " + model + " --steps 20 --replicas 5 --per-individual"},
        {"moments", "moments --model " + model + " --k-max 50"},
        {"sde", "sde --model " + model + " --paths 50 --dt 0.001 --thin 100"},
        {"identities", "identities --max-k 100 --trials 500"},
        {"converge", "converge --model " + model + " --n-list 50,100 --t-points 0.5,1 --replicas 1000 --sde-paths 500 --dt 0.01"},
        {"growth", "growth --model " + model + " --n-list 16,32,64 --replicas 2000"},
    };
    for (const auto& [name, args] : commands) {
        std::vector<std::string> outputs;
        bool ran = true;
        for (int threads : {1, 8})
            for (int rep = 0; rep < 2; ++rep) {
                const auto out = work / (name + "_" + std::to_string(threads) + "_" + std::to_string(rep));
                const std::string cmd = "\"" + cli + "\" --seed 9 --threads " + std::to_string(threads) + " --out \"" +
                                        out.string() + "\" " + args + " > /dev/null 2>&1";
                const int rc = std::system(cmd.c_str());
                ran = ran && rc == 0;
                if (std::filesystem::is_directory(out))
                    outputs.push_back(slurp(out / "report.json") + slurp(out / "report.csv"));
                else
                    outputs.push_back(slurp(out));
            }
        bool same = ran && !outputs[0].empty();
        for (const auto& s : outputs) same = same && s == outputs[0];
        o.require(same, fmt("%s: 2 runs x threads {1, 8} byte-identical (%zu bytes)", name.c_str(), outputs[0].size()));
    }
    std::filesystem::remove_all(work);
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance suite"};
    std::string cli, data;
    std::vector<int> only;
    unsigned threads = 0;
    app.add_option("--cli", cli, "Path of the gwi executable");
    app.add_option("--data", data, "Directory with the test models")->required();
    app.add_option("--only", only, "Run only these criteria")->delimiter(',');
    app.add_option("--threads", threads, "Worker threads, 0 = all cores");
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"exact identities, unipotent powers, decomposition", [&] { return exact_identities(threads); }},
        {"growth-exponent table", [] { return eta_table(); }},
        {"exact moments vs Monte Carlo", [&] { return moments_vs_monte_carlo(threads); }},
        {"leading asymptotics of the case-4 mean", [] { return leading_asymptotics(); }},
        {"squared-Bessel moments and Gamma law", [&] { return squared_bessel(threads); }},
        {"convergence to the limit systems", [&] { return convergence(threads); }},
        {"growth-exponent fits", [&] { return growth_fits(threads); }},
        {"kernel representations", [&] { return kernel_representations(threads); }},
        {"CLI determinism", [&] { return cli_determinism(cli, data); }},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i + 1);
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = criteria[i].second();
        } catch (const std::exception& e) {
            out.require(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << (out.pass ? "PASS" : "FAIL") << " [" << id << "] " << criteria[i].first << " ("
                  << fmt("%.1f", secs) << " s)\n";
        for (const auto& d : out.details) std::cout << "       " << d << "\n";
        std::cout.flush();
        if (!out.pass) ++failed;
    }
    std::cout << (failed ? "acceptance: " + std::to_string(failed) + " criteria failed\n" : "acceptance: all criteria passed\n");
    return failed ? 1 : 0;
}
