#include "gwi/gwi.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include <nlohmann/json.hpp>

#include "gwi/error.hpp"
#include "gwi/harness.hpp"
#include "gwi/model.hpp"
#include "gwi/model_io.hpp"
#include "gwi/moments.hpp"
#include "gwi/parallel.hpp"
#include "gwi/sde.hpp"
#include "gwi/simulate.hpp"
#include "gwi/stats.hpp"

#ifndef GWI_VERSION_STRING
#define GWI_VERSION_STRING "0.0.0"
#endif

struct gwi_model {
    gwi::GwiModel model;
};

struct gwi_trajectory {
    std::vector<gwi::Trajectory> runs;
};

namespace {

using nlohmann::json;

thread_local std::string last_error;

gwi_status fail(gwi_status status, const char* what) {
    last_error = what;
    return status;
}

template <typename F>
gwi_status guarded(F&& body) {
    try {
        body();
        return GWI_OK;
    } catch (const gwi::DimensionError& e) {
        return fail(GWI_ERR_DIMENSION, e.what());
    } catch (const gwi::ValidationError& e) {
        return fail(GWI_ERR_INVALID_ARGUMENT, e.what());
    } catch (const gwi::OverflowError& e) {
        return fail(GWI_ERR_OVERFLOW, e.what());
    } catch (const gwi::ConsistencyError& e) {
        return fail(GWI_ERR_CONSISTENCY, e.what());
    } catch (const gwi::IoError& e) {
        return fail(GWI_ERR_IO, e.what());
    } catch (const json::exception& e) {
        return fail(GWI_ERR_INVALID_ARGUMENT, e.what());
    } catch (const std::bad_alloc&) {
        return fail(GWI_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(GWI_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(GWI_ERR_INTERNAL, "unknown error");
    }
}

void require(bool ok, const char* what) {
    if (!ok) throw gwi::ValidationError(what);
}

char* copy_string(const std::string& text) {
    char* out = static_cast<char*>(std::malloc(text.size() + 1));
    if (out == nullptr) throw std::bad_alloc();
    std::memcpy(out, text.c_str(), text.size() + 1);
    return out;
}

void copy_matrix(const gwi::RealMatrix& m, double* out) {
    std::copy(m.data().begin(), m.data().end(), out);
}

const gwi::Trajectory& run_at(const gwi_trajectory* batch, size_t replica) {
    require(batch != nullptr, "trajectory handle is null");
    if (replica >= batch->runs.size()) throw gwi::ValidationError("replica index out of range");
    return batch->runs[replica];
}

json parse_json(const char* text, const char* what) {
    require(text != nullptr, what);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw gwi::ValidationError(std::string(what) + ": " + e.what());
    }
}

gwi::LimitSystem system_from_json(const json& j) {
    require(j.is_object(), "limit system must be a JSON object");
    gwi::LimitSystem s;
    s.case_value = j.at("case").get<int>();
    s.b = j.at("b").get<std::array<double, 3>>();
    s.v = j.at("v").get<std::array<double, 3>>();
    s.a21 = j.value("a21", 0.0);
    s.a31 = j.value("a31", 0.0);
    s.a32 = j.value("a32", 0.0);
    s.exponents = gwi::exponents_for_case(s.case_value);
    s.validate();
    return s;
}

json system_to_json(const gwi::LimitSystem& s) {
    return json{{"case", s.case_value}, {"b", s.b},     {"v", s.v},
                {"a21", s.a21},         {"a31", s.a31}, {"a32", s.a32},
                {"exponents", s.exponents}};
}

json one_based(const auto& indices) {
    json out = json::array();
    for (auto i : indices) out.push_back(i + 1);
    return out;
}

}  // namespace

extern "C" {

const char* gwi_version(void) { return GWI_VERSION_STRING; }

const char* gwi_last_error(void) { return last_error.c_str(); }

const char* gwi_status_name(gwi_status status) {
    switch (status) {
        case GWI_OK: return "ok";
        case GWI_ERR_INVALID_ARGUMENT: return "invalid_argument";
        case GWI_ERR_DIMENSION: return "dimension";
        case GWI_ERR_OVERFLOW: return "overflow";
        case GWI_ERR_CONSISTENCY: return "consistency";
        case GWI_ERR_IO: return "io";
        case GWI_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

void gwi_string_free(char* text) { std::free(text); }

gwi_status gwi_model_from_json(const char* text, gwi_model** out) {
    return guarded([&] {
        require(out != nullptr, "output pointer is null");
        *out = new gwi_model{gwi::model_from_json(parse_json(text, "model JSON"))};
    });
}

gwi_status gwi_model_from_file(const char* path, gwi_model** out) {
    if (path == nullptr) return fail(GWI_ERR_INVALID_ARGUMENT, "path is null");
    return guarded([&] {
        require(out != nullptr, "output pointer is null");
        *out = new gwi_model{gwi::load_model(path)};
    });
}

void gwi_model_free(gwi_model* model) { delete model; }

gwi_status gwi_model_to_json(const gwi_model* model, char** out) {
    return guarded([&] {
        require(model != nullptr && out != nullptr, "null argument");
        *out = copy_string(gwi::model_to_json(model->model).dump());
    });
}

gwi_status gwi_model_types(const gwi_model* model, size_t* out) {
    return guarded([&] {
        require(model != nullptr && out != nullptr, "null argument");
        *out = model->model.types();
    });
}

gwi_status gwi_model_mean_matrix(const gwi_model* model, double* out) {
    return guarded([&] {
        require(model != nullptr && out != nullptr, "null argument");
        copy_matrix(model->model.mean_matrix(), out);
    });
}

gwi_status gwi_model_immigration_mean(const gwi_model* model, double* out) {
    return guarded([&] {
        require(model != nullptr && out != nullptr, "null argument");
        const auto& b = model->model.immigration_mean();
        std::copy(b.begin(), b.end(), out);
    });
}

gwi_status gwi_model_variance(const gwi_model* model, size_t index, double* out) {
    return guarded([&] {
        require(model != nullptr && out != nullptr, "null argument");
        if (index > model->model.types()) throw gwi::ValidationError("variance index out of range");
        copy_matrix(index == 0 ? model->model.immigration_variance() : model->model.offspring_variance(index - 1),
                    out);
    });
}

gwi_status gwi_classify(const gwi_model* model, char** out_json) {
    return guarded([&] {
        require(model != nullptr && out_json != nullptr, "null argument");
        const gwi::RealMatrix& a = model->model.mean_matrix();
        const gwi::NormalForm nf = gwi::reducible_normal_form(a);
        json j{{"types", model->model.types()},
               {"criticality", std::string(gwi::to_string(gwi::classify_criticality(a)))},
               {"spectral_radius", gwi::spectral_radius(a)},
               {"strongly_critical", gwi::is_strongly_critical(a)},
               {"normal_form", {{"permutation", one_based(nf.perm)}, {"block_sizes", nf.block_sizes}}}};
        j["case"] = nullptr;
        if (model->model.types() == 3) {
            try {
                const gwi::CaseId c = gwi::detect_case(a);
                const auto e = gwi::exponents_for_case(c.value);
                j["case"] = json{{"value", c.value}, {"permutation", one_based(c.permutation)}, {"exponents", e}};
            } catch (const gwi::ValidationError& e) {
                j["case_error"] = e.what();
            }
        }
        *out_json = copy_string(j.dump());
    });
}

gwi_status gwi_simulate(const gwi_model* model, size_t steps, size_t replicas, uint64_t seed, unsigned threads,
                        int per_individual, gwi_trajectory** out) {
    return guarded([&] {
        require(model != nullptr && out != nullptr, "null argument");
        require(replicas >= 1, "replicas must be at least 1");
        auto batch = std::make_unique<gwi_trajectory>();
        batch->runs = gwi::simulate_batch(model->model, steps, replicas, seed, threads,
                                          per_individual ? gwi::SumMode::per_individual : gwi::SumMode::closed_form);
        *out = batch.release();
    });
}

void gwi_trajectory_free(gwi_trajectory* batch) { delete batch; }

gwi_status gwi_trajectory_shape(const gwi_trajectory* batch, size_t* replicas, size_t* steps, size_t* types) {
    return guarded([&] {
        require(batch != nullptr && !batch->runs.empty(), "trajectory handle is null or empty");
        if (replicas) *replicas = batch->runs.size();
        if (steps) *steps = batch->runs.front().steps();
        if (types) *types = batch->runs.front().types();
    });
}

gwi_status gwi_trajectory_states(const gwi_trajectory* batch, size_t replica, int64_t* out) {
    return guarded([&] {
        require(out != nullptr, "null argument");
        const gwi::Trajectory& tr = run_at(batch, replica);
        for (const auto& x : tr.states) out = std::copy(x.begin(), x.end(), out);
    });
}

gwi_status gwi_martingale_increments(const gwi_model* model, const gwi_trajectory* batch, size_t replica,
                                     double* out) {
    return guarded([&] {
        require(model != nullptr && out != nullptr, "null argument");
        const gwi::MartingalePath path = gwi::martingale_increments(model->model, run_at(batch, replica));
        for (const auto& m : path.increments) out = std::copy(m.begin(), m.end(), out);
    });
}

gwi_status gwi_decomposition(const gwi_model* model, const gwi_trajectory* batch, size_t replica, double* out,
                             double* max_residual) {
    return guarded([&] {
        require(model != nullptr && out != nullptr, "null argument");
        const gwi::DecompositionComponents d = gwi::decomposition_components(model->model, run_at(batch, replica));
        for (const auto* v : {&d.x1_1, &d.x2_1, &d.x2_2, &d.x3_1, &d.x3_2, &d.x3_3, &d.x3_4})
            out = std::copy(v->begin(), v->end(), out);
        if (max_residual) *max_residual = d.max_relative_residual;
    });
}

gwi_status gwi_identities_run(int64_t max_k, size_t trials, uint64_t seed, unsigned threads, char** out_json,
                              int* all_hold) {
    return guarded([&] {
        require(out_json != nullptr, "null argument");
        const gwi::IdentityBatteryResult r = gwi::run_identity_battery(max_k, trials, seed, threads);
        json j{{"max_k", max_k},
               {"trials", r.trials},
               {"seed", seed},
               {"failures", r.failures},
               {"all_hold", r.all_hold()}};
        *out_json = copy_string(j.dump());
        if (all_hold) *all_hold = r.all_hold() ? 1 : 0;
    });
}

gwi_status gwi_mean_vector(const gwi_model* model, int64_t k, double* out) {
    return guarded([&] {
        require(model != nullptr && out != nullptr, "null argument");
        const gwi::RealVector m = gwi::mean_vector(model->model, k);
        std::copy(m.begin(), m.end(), out);
    });
}

gwi_status gwi_variance_matrix(const gwi_model* model, int64_t k, double* out) {
    return guarded([&] {
        require(model != nullptr && out != nullptr, "null argument");
        copy_matrix(gwi::variance_matrix(model->model, k), out);
    });
}

gwi_status gwi_growth_exponents(const gwi_model* model, char** out_json) {
    return guarded([&] {
        require(model != nullptr && out_json != nullptr, "null argument");
        const gwi::GwiModel& m = model->model;
        const gwi::GrowthExponents g = gwi::growth_exponents(m.mean_matrix(), m.immigration_mean());
        const gwi::MomentGrowthTargets t = gwi::moment_growth_targets(m);
        const gwi::MeanPolynomial poly = gwi::mean_polynomial(m);
        json leading = json::array();
        json fourth = json::array();
        for (std::size_t i = 0; i < m.types(); ++i) {
            const gwi::LeadingTerm lt = gwi::leading_asymptotic(m, i);
            leading.push_back(json{{"degree", lt.degree}, {"coefficient", lt.coefficient}});
            fourth.push_back(t.fourth[i] ? json(*t.fourth[i]) : json(nullptr));
        }
        json j{{"eta", g.eta},
               {"first_immigrant", one_based(g.first_immigrant)},
               {"mean_polynomial", poly.coefficients},
               {"leading", leading},
               {"targets",
                {{"mean", t.mean},
                 {"cross", t.cross},
                 {"fourth", fourth},
                 {"sum_sup", t.sum_sup},
                 {"weighted_sum_sup", t.weighted_sum_sup}}}};
        *out_json = copy_string(j.dump());
    });
}

gwi_status gwi_limit_system_from_model(const gwi_model* model, char** out_json) {
    return guarded([&] {
        require(model != nullptr && out_json != nullptr, "null argument");
        const gwi::CaseId c = gwi::detect_case(model->model.mean_matrix());
        json j = system_to_json(gwi::LimitSystem::from_model(model->model, c));
        j["permutation"] = one_based(c.permutation);
        *out_json = copy_string(j.dump());
    });
}

gwi_status gwi_sde_grid_size(double horizon, double dt, size_t* out) {
    return guarded([&] {
        require(out != nullptr, "null argument");
        *out = gwi::uniform_grid(horizon, dt).size();
    });
}

gwi_status gwi_sde_simulate(const char* system_json, double horizon, double dt, size_t paths, uint64_t seed,
                            unsigned threads, double* out) {
    return guarded([&] {
        require(out != nullptr, "null argument");
        const gwi::LimitSystem s = system_from_json(parse_json(system_json, "limit system JSON"));
        const std::vector<double> grid = gwi::uniform_grid(horizon, dt);
        const std::size_t stride = grid.size() * 3;
        gwi::parallel_for(paths, threads, [&](std::size_t p) {
            const gwi::SdePath path = gwi::simulate_limit_system(s, grid, seed, p);
            double* dst = out + p * stride;
            for (const auto& x : path.values) dst = std::copy(x.begin(), x.end(), dst);
        });
    });
}

gwi_status gwi_converge_run(const gwi_model* model, const char* config_json, unsigned threads, char** report_json,
                            char** report_csv) {
    return guarded([&] {
        require(model != nullptr && report_json != nullptr && report_csv != nullptr, "null argument");
        gwi::ConvergenceConfig config = gwi::convergence_config_from_json(parse_json(config_json, "config JSON"));
        config.threads = threads;
        const gwi::ConvergenceReport report = gwi::run_convergence_experiment(model->model, config);
        char* j = copy_string(gwi::report_to_json(report).dump(2));
        try {
            *report_csv = copy_string(gwi::report_to_csv(report));
        } catch (...) {
            std::free(j);
            throw;
        }
        *report_json = j;
    });
}

gwi_status gwi_growth_fit(const gwi_model* model, const char* config_json, unsigned threads, char** out_json) {
    return guarded([&] {
        require(model != nullptr && out_json != nullptr, "null argument");
        const json cfg = parse_json(config_json, "growth config JSON");
        gwi::GrowthFitConfig c;
        c.n_list = cfg.value("n_list", c.n_list);
        c.replicas = cfg.value("replicas", c.replicas);
        c.seed = cfg.value("seed", c.seed);
        c.threads = threads;
        json fits = json::array();
        for (const auto& f : gwi::growth_fit(model->model, c))
            fits.push_back(json{{"quantity", std::string(gwi::to_string(f.quantity))},
                                {"coordinate", f.coordinate + 1},
                                {"estimates", f.estimates},
                                {"standard_errors", f.standard_errors},
                                {"slope", f.degenerate ? json(nullptr) : json(f.slope)},
                                {"target", f.target ? json(*f.target) : json(nullptr)},
                                {"degenerate", f.degenerate}});
        *out_json = copy_string(json{{"n_list", c.n_list}, {"replicas", c.replicas}, {"fits", fits}}.dump());
    });
}

gwi_status gwi_ks_two_sample(const double* xs, size_t n, const double* ys, size_t m, double* statistic,
                             double* p_value) {
    return guarded([&] {
        require(xs != nullptr && ys != nullptr && statistic != nullptr && p_value != nullptr, "null argument");
        const gwi::KsResult r = gwi::ks_two_sample({xs, n}, {ys, m});
        *statistic = r.statistic;
        *p_value = r.p_value;
    });
}

gwi_status gwi_wasserstein1(const double* xs, size_t n, const double* ys, size_t m, double* out) {
    return guarded([&] {
        require(xs != nullptr && ys != nullptr && out != nullptr, "null argument");
        *out = gwi::wasserstein1({xs, n}, {ys, m});
    });
}

}  // extern "C"
