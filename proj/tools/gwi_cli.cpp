// Command-line front end over the gwi C API.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gwi/format.hpp"
#include "gwi/gwi.h"

namespace {

using nlohmann::json;

// Input problems (exit 2) versus failures while running (exit 1).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct RunError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void check(gwi_status status) {
    if (status == GWI_OK) return;
    const std::string msg = std::string(gwi_status_name(status)) + ": " + gwi_last_error();
    if (status == GWI_ERR_INVALID_ARGUMENT || status == GWI_ERR_DIMENSION || status == GWI_ERR_IO)
        throw UsageError(msg);
    throw RunError(msg);
}

struct CString {
    char* p = nullptr;
    ~CString() { gwi_string_free(p); }
    std::string str() const { return p ? std::string(p) : std::string(); }
};

struct Model {
    gwi_model* h = nullptr;
    ~Model() { gwi_model_free(h); }
};

struct Batch {
    gwi_trajectory* h = nullptr;
    ~Batch() { gwi_trajectory_free(h); }
};

// Flag values, overlaid by --config, decide everything a run does.
struct Globals {
    std::uint64_t seed = 1;
    unsigned threads = 0;
    std::string out = "-";
    std::string format = "csv";
    std::string config;
};

class Run {
public:
    Run(const Globals& g, json params) : cfg_(std::move(params)) {
        cfg_["seed"] = g.seed;
        cfg_["threads"] = g.threads;
        cfg_["out"] = g.out;
        cfg_["format"] = g.format;
        if (!g.config.empty()) overlay(g.config);
        if (cfg_["format"] != "csv" && cfg_["format"] != "json") throw UsageError("format must be csv or json");
    }

    template <typename T>
    T get(const char* key) const {
        try {
            return cfg_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw UsageError(std::string("config key '") + key + "': " + e.what());
        }
    }

    bool has(const char* key) const { return cfg_.contains(key) && !cfg_.at(key).is_null(); }
    std::uint64_t seed() const { return get<std::uint64_t>("seed"); }
    unsigned threads() const { return get<unsigned>("threads"); }
    std::string out() const { return get<std::string>("out"); }
    bool json_format() const { return get<std::string>("format") == "json"; }

    // Configuration that determines the payload: everything except where it
    // goes and how many workers compute it.
    json payload_config() const {
        json c = cfg_;
        c.erase("threads");
        c.erase("out");
        return c;
    }

    std::string csv_header() const {
        return "# gwi " + std::string(gwi_version()) + " seed=" + std::to_string(seed()) +
               " config=" + gwi::hex64(gwi::fnv1a(payload_config().dump())) + "\n";
    }

    json provenance() const {
        return json{{"tool", "gwi"},
                    {"version", gwi_version()},
                    {"seed", seed()},
                    {"config_hash", gwi::hex64(gwi::fnv1a(payload_config().dump()))},
                    {"config", payload_config()}};
    }

    std::unique_ptr<Model> load_model() const {
        if (!has("model")) throw UsageError("a model file is required (--model)");
        auto m = std::make_unique<Model>();
        check(gwi_model_from_file(get<std::string>("model").c_str(), &m->h));
        return m;
    }

private:
    void overlay(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw UsageError("io: cannot open config file '" + path + "'");
        json file;
        try {
            in >> file;
        } catch (const json::parse_error& e) {
            throw UsageError("config file '" + path + "' is not valid JSON: " + std::string(e.what()));
        }
        if (!file.is_object()) throw UsageError("config file must hold a JSON object");
        for (auto it = file.begin(); it != file.end(); ++it) {
            if (!cfg_.contains(it.key())) throw UsageError("unknown config key '" + it.key() + "'");
            cfg_[it.key()] = it.value();
        }
    }

    json cfg_;
};

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        std::cout.flush();
        if (!std::cout) throw RunError("io: failed writing to standard output");
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UsageError("io: cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw RunError("io: failed writing '" + path + "'");
}

std::string join_csv(const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) line += ',';
        line += cells[i];
    }
    return line + "\n";
}

std::size_t model_types(const Model& m) {
    std::size_t p = 0;
    check(gwi_model_types(m.h, &p));
    return p;
}

// ---- classify ----------------------------------------------------------

void cmd_classify(const Run& run) {
    const auto model = run.load_model();
    CString out;
    check(gwi_classify(model->h, &out.p));
    json result = json::parse(out.str());
    if (run.json_format()) {
        result["provenance"] = run.provenance();
        write_text(run.out(), result.dump(2) + "\n");
        return;
    }
    std::string text = run.csv_header();
    text += "criticality,spectral_radius,strongly_critical,case,permutation,exponents\n";
    std::string perm, exps, case_value;
    if (!result["case"].is_null()) {
        case_value = std::to_string(result["case"]["value"].get<int>());
        for (const auto& p : result["case"]["permutation"]) perm += (perm.empty() ? "" : " ") + p.dump();
        for (const auto& e : result["case"]["exponents"]) exps += (exps.empty() ? "" : " ") + e.dump();
    }
    text += join_csv({result["criticality"].get<std::string>(),
                      gwi::format_double(result["spectral_radius"].get<double>()),
                      result["strongly_critical"].get<bool>() ? "true" : "false", case_value, perm, exps});
    write_text(run.out(), text);
}

// ---- simulate ----------------------------------------------------------

void cmd_simulate(const Run& run) {
    const auto model = run.load_model();
    const auto steps = run.get<std::size_t>("steps");
    const auto replicas = run.get<std::size_t>("replicas");
    const bool per_individual = run.get<bool>("per_individual");
    const std::string dir = run.get<std::string>("per_replica_dir");
    if (replicas < 1) throw UsageError("replicas must be at least 1");
    if (!dir.empty() && !std::filesystem::is_directory(dir))
        throw UsageError("io: per-replica directory '" + dir + "' does not exist");

    Batch batch;
    check(gwi_simulate(model->h, steps, replicas, run.seed(), run.threads(), per_individual ? 1 : 0, &batch.h));
    const std::size_t p = model_types(*model);
    std::vector<std::int64_t> states((steps + 1) * p);

    std::vector<std::string> columns{"k"};
    for (std::size_t i = 1; i <= p; ++i) columns.push_back("X_" + std::to_string(i));

    if (run.json_format()) {
        json runs = json::array();
        for (std::size_t r = 0; r < replicas; ++r) {
            check(gwi_trajectory_states(batch.h, r, states.data()));
            json rows = json::array();
            for (std::size_t k = 0; k <= steps; ++k)
                rows.push_back(std::vector<std::int64_t>(states.begin() + k * p, states.begin() + (k + 1) * p));
            runs.push_back(json{{"replica", r}, {"states", rows}});
        }
        write_text(run.out(), json{{"provenance", run.provenance()}, {"trajectories", runs}}.dump(2) + "\n");
        return;
    }

    const auto rows_for = [&](std::size_t r, bool with_replica) {
        check(gwi_trajectory_states(batch.h, r, states.data()));
        std::string text;
        for (std::size_t k = 0; k <= steps; ++k) {
            std::vector<std::string> cells;
            if (with_replica) cells.push_back(std::to_string(r));
            cells.push_back(std::to_string(k));
            for (std::size_t i = 0; i < p; ++i) cells.push_back(std::to_string(states[k * p + i]));
            text += join_csv(cells);
        }
        return text;
    };

    if (!dir.empty()) {
        for (std::size_t r = 0; r < replicas; ++r)
            write_text((std::filesystem::path(dir) / ("replica_" + std::to_string(r) + ".csv")).string(),
                       run.csv_header() + join_csv(columns) + rows_for(r, false));
        return;
    }
    const bool long_format = replicas > 1;
    if (long_format) columns.insert(columns.begin(), "replica");
    std::string text = run.csv_header() + join_csv(columns);
    for (std::size_t r = 0; r < replicas; ++r) text += rows_for(r, long_format);
    write_text(run.out(), text);
}

// ---- moments -----------------------------------------------------------

void cmd_moments(const Run& run) {
    const auto model = run.load_model();
    const auto k_max = run.get<std::int64_t>("k_max");
    if (k_max < 0) throw UsageError("k_max must be nonnegative");
    const std::size_t p = model_types(*model);

    std::optional<json> exponents;
    {
        CString out;
        const gwi_status st = gwi_growth_exponents(model->h, &out.p);
        if (st == GWI_OK) exponents = json::parse(out.str());
        else if (st != GWI_ERR_INVALID_ARGUMENT) check(st);
    }
    const std::string exp_path = run.get<std::string>("exponents_out");
    if (!exp_path.empty()) {
        if (!exponents) throw UsageError("growth exponents need a lower-unipotent mean matrix");
        json doc = *exponents;
        doc["provenance"] = run.provenance();
        write_text(exp_path, doc.dump(2) + "\n");
    }

    std::vector<double> mean(p), var(p * p);
    if (run.json_format()) {
        json rows = json::array();
        for (std::int64_t k = 0; k <= k_max; ++k) {
            check(gwi_mean_vector(model->h, k, mean.data()));
            check(gwi_variance_matrix(model->h, k, var.data()));
            json v = json::array();
            for (std::size_t i = 0; i < p; ++i) v.push_back(std::vector<double>(var.begin() + i * p, var.begin() + (i + 1) * p));
            rows.push_back(json{{"k", k}, {"mean", mean}, {"variance", v}});
        }
        json doc{{"provenance", run.provenance()}, {"rows", rows}};
        doc["exponents"] = exponents ? *exponents : json(nullptr);
        write_text(run.out(), doc.dump(2) + "\n");
        return;
    }
    std::vector<std::string> columns{"k"};
    for (std::size_t i = 1; i <= p; ++i) columns.push_back("EX_" + std::to_string(i));
    for (std::size_t i = 1; i <= p; ++i)
        for (std::size_t j = 1; j <= p; ++j) columns.push_back("VarX_" + std::to_string(i) + std::to_string(j));
    std::string text = run.csv_header() + join_csv(columns);
    for (std::int64_t k = 0; k <= k_max; ++k) {
        check(gwi_mean_vector(model->h, k, mean.data()));
        check(gwi_variance_matrix(model->h, k, var.data()));
        std::vector<std::string> cells{std::to_string(k)};
        for (double x : mean) cells.push_back(gwi::format_double(x));
        for (double x : var) cells.push_back(gwi::format_double(x));
        text += join_csv(cells);
    }
    write_text(run.out(), text);
}

// ---- sde ---------------------------------------------------------------

void cmd_sde(const Run& run) {
    json system;
    if (run.has("model") && !run.get<std::string>("model").empty()) {
        const auto model = run.load_model();
        CString out;
        check(gwi_limit_system_from_model(model->h, &out.p));
        system = json::parse(out.str());
    } else {
        system = json{{"case", run.get<int>("case")},
                      {"b", run.get<std::vector<double>>("b")},
                      {"v", run.get<std::vector<double>>("v")},
                      {"a21", run.get<double>("a21")},
                      {"a31", run.get<double>("a31")},
                      {"a32", run.get<double>("a32")}};
    }
    const auto dt = run.get<double>("dt");
    const auto horizon = run.get<double>("horizon");
    const auto paths = run.get<std::size_t>("paths");
    const auto thin = run.get<std::size_t>("thin");
    if (thin < 1) throw UsageError("thin must be at least 1");
    std::size_t points = 0;
    check(gwi_sde_grid_size(horizon, dt, &points));
    std::vector<double> values(paths * points * 3);
    const std::string sys_text = system.dump();
    check(gwi_sde_simulate(sys_text.c_str(), horizon, dt, paths, run.seed(), run.threads(), values.data()));

    const auto keep = [&](std::size_t m) { return m % thin == 0 || m + 1 == points; };
    const auto time_at = [&](std::size_t m) { return m + 1 == points ? horizon : static_cast<double>(m) * dt; };
    if (run.json_format()) {
        json out_paths = json::array();
        for (std::size_t p = 0; p < paths; ++p) {
            json rows = json::array();
            for (std::size_t m = 0; m < points; ++m) {
                if (!keep(m)) continue;
                const double* x = &values[(p * points + m) * 3];
                rows.push_back(json::array({time_at(m), x[0], x[1], x[2]}));
            }
            out_paths.push_back(json{{"path", p}, {"rows", rows}});
        }
        write_text(run.out(),
                   json{{"provenance", run.provenance()}, {"system", system}, {"paths", out_paths}}.dump(2) + "\n");
        return;
    }
    std::ostringstream text;
    text << run.csv_header() << "path,t,X1,X2,X3\n";
    for (std::size_t p = 0; p < paths; ++p)
        for (std::size_t m = 0; m < points; ++m) {
            if (!keep(m)) continue;
            const double* x = &values[(p * points + m) * 3];
            text << p << ',' << gwi::format_double(time_at(m)) << ',' << gwi::format_double(x[0]) << ','
                 << gwi::format_double(x[1]) << ',' << gwi::format_double(x[2]) << '\n';
        }
    write_text(run.out(), text.str());
}

// ---- identities --------------------------------------------------------

int cmd_identities(const Run& run) {
    CString out;
    int all_hold = 0;
    check(gwi_identities_run(run.get<std::int64_t>("max_k"), run.get<std::size_t>("trials"), run.seed(),
                             run.threads(), &out.p, &all_hold));
    json result = json::parse(out.str());
    if (run.json_format()) {
        result["provenance"] = run.provenance();
        write_text(run.out(), result.dump(2) + "\n");
    } else {
        const auto& f = result["failures"];
        write_text(run.out(), run.csv_header() + "max_k,trials,failures_1,failures_2,failures_3,all_hold\n" +
                                  join_csv({result["max_k"].dump(), result["trials"].dump(), f[0].dump(), f[1].dump(),
                                            f[2].dump(), all_hold ? "true" : "false"}));
    }
    return all_hold ? 0 : 1;
}

// ---- converge ----------------------------------------------------------

void cmd_converge(const Run& run) {
    const auto model = run.load_model();
    const std::string dir = run.out();
    if (dir.empty() || dir == "-") throw UsageError("converge needs --out <directory>");
    std::filesystem::create_directories(dir);
    json cfg{{"case", run.get<int>("case")},
             {"n_list", run.get<std::vector<std::int64_t>>("n_list")},
             {"t_points", run.get<std::vector<double>>("t_points")},
             {"replicas", run.get<std::size_t>("replicas")},
             {"sde_paths", run.get<std::size_t>("sde_paths")},
             {"dt", run.get<double>("dt")},
             {"seed", run.seed()},
             {"alpha", run.get<double>("alpha")},
             {"confidence", run.get<double>("confidence")}};
    CString report_json, report_csv;
    check(gwi_converge_run(model->h, cfg.dump().c_str(), run.threads(), &report_json.p, &report_csv.p));
    json report = json::parse(report_json.str());
    report["provenance"] = run.provenance();
    write_text((std::filesystem::path(dir) / "report.json").string(), report.dump(2) + "\n");
    write_text((std::filesystem::path(dir) / "report.csv").string(), run.csv_header() + report_csv.str());
}

// ---- growth ------------------------------------------------------------

void cmd_growth(const Run& run) {
    const auto model = run.load_model();
    json cfg{{"n_list", run.get<std::vector<std::int64_t>>("n_list")},
             {"replicas", run.get<std::size_t>("replicas")},
             {"seed", run.seed()}};
    CString out;
    check(gwi_growth_fit(model->h, cfg.dump().c_str(), run.threads(), &out.p));
    json result = json::parse(out.str());
    if (run.json_format()) {
        result["provenance"] = run.provenance();
        write_text(run.out(), result.dump(2) + "\n");
        return;
    }
    std::string text = run.csv_header() + "quantity,coordinate,n,estimate,standard_error,slope,target\n";
    const auto n_list = result["n_list"].get<std::vector<std::int64_t>>();
    for (const auto& f : result["fits"])
        for (std::size_t i = 0; i < n_list.size(); ++i)
            text += join_csv({f["quantity"].get<std::string>(), f["coordinate"].dump(), std::to_string(n_list[i]),
                              gwi::format_double(f["estimates"][i].get<double>()),
                              gwi::format_double(f["standard_errors"][i].get<double>()),
                              f["slope"].is_null() ? "" : gwi::format_double(f["slope"].get<double>()),
                              f["target"].is_null() ? "" : f["target"].dump()});
    write_text(run.out(), text);
}

int main_impl(int argc, char** argv) {
    CLI::App app{"Simulation and verification toolkit for Galton-Watson processes with immigration", "gwi"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", std::string(gwi_version()));
    Globals g;
    app.add_option("--seed", g.seed, "RNG seed (64-bit)")->capture_default_str();
    app.add_option("--threads", g.threads, "Worker threads, 0 = all cores")->capture_default_str();
    app.add_option("--out", g.out, "Output file (directory for converge); - is stdout")->capture_default_str();
    app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    app.add_option("--config", g.config, "JSON file whose keys override the flags");

    std::string model;
    auto add_model = [&](CLI::App* sub) { sub->add_option("--model", model, "Model JSON file"); };

    auto* classify = app.add_subcommand("classify", "Criticality, normal form, case and exponents");
    add_model(classify);

    auto* simulate = app.add_subcommand("simulate", "Simulate trajectories");
    add_model(simulate);
    std::size_t steps = 10, replicas = 1;
    bool per_individual = false;
    std::string per_replica_dir;
    simulate->add_option("--steps", steps, "Generations K")->capture_default_str();
    simulate->add_option("--replicas", replicas, "Independent replicas")->capture_default_str();
    simulate->add_flag("--per-individual", per_individual, "Draw every individual separately");
    simulate->add_option("--per-replica-dir", per_replica_dir, "Write one CSV per replica into this directory");

    auto* moments = app.add_subcommand("moments", "Exact mean and variance tables");
    add_model(moments);
    std::int64_t k_max = 20;
    std::string exponents_out;
    moments->add_option("--k-max", k_max, "Last generation in the table")->capture_default_str();
    moments->add_option("--exponents-out", exponents_out, "Write the growth-exponent JSON here");

    auto* sde = app.add_subcommand("sde", "Simulate a limit system");
    add_model(sde);
    int case_value = 1;
    std::vector<double> b{1, 1, 1}, v{1, 1, 1};
    double a21 = 0, a31 = 0, a32 = 0, dt = 1e-3, horizon = 1.0;
    std::size_t paths = 1, thin = 1;
    sde->add_option("--case", case_value, "Case 1-4 (ignored with --model)")->capture_default_str();
    sde->add_option("--b", b, "Immigration means b1 b2 b3")->expected(3)->delimiter(',');
    sde->add_option("--v", v, "Diffusion coefficients v1 v2 v3")->expected(3)->delimiter(',');
    sde->add_option("--a21", a21)->capture_default_str();
    sde->add_option("--a31", a31)->capture_default_str();
    sde->add_option("--a32", a32)->capture_default_str();
    sde->add_option("--dt", dt, "Time step")->capture_default_str();
    sde->add_option("--horizon", horizon, "Final time")->capture_default_str();
    sde->add_option("--paths", paths, "Number of paths")->capture_default_str();
    sde->add_option("--thin", thin, "Keep every m-th grid point")->capture_default_str();

    auto* identities = app.add_subcommand("identities", "Randomized weighted-sum identity battery");
    std::int64_t max_k = 100;
    std::size_t trials = 500;
    identities->add_option("--max-k", max_k)->capture_default_str();
    identities->add_option("--trials", trials)->capture_default_str();

    auto* converge = app.add_subcommand("converge", "Monte Carlo convergence experiment");
    add_model(converge);
    int conv_case = 0;
    std::vector<std::int64_t> n_list{125, 250, 500, 1000, 2000};
    std::vector<double> t_points{0.25, 0.5, 1.0};
    std::size_t conv_replicas = 2000, sde_paths = 2000;
    double conv_dt = 1e-3, alpha = 0.01, confidence = 0.95;
    converge->add_option("--case", conv_case, "Expected case, 0 = detect")->capture_default_str();
    converge->add_option("--n-list", n_list)->delimiter(',');
    converge->add_option("--t-points", t_points)->delimiter(',');
    converge->add_option("--replicas", conv_replicas)->capture_default_str();
    converge->add_option("--sde-paths", sde_paths)->capture_default_str();
    converge->add_option("--dt", conv_dt)->capture_default_str();
    converge->add_option("--alpha", alpha)->capture_default_str();
    converge->add_option("--confidence", confidence)->capture_default_str();

    auto* growth = app.add_subcommand("growth", "Growth-exponent fits of martingale moments");
    add_model(growth);
    std::vector<std::int64_t> growth_n{32, 64, 128, 256, 512};
    std::size_t growth_replicas = 100000;
    growth->add_option("--n-list", growth_n)->delimiter(',');
    growth->add_option("--replicas", growth_replicas)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: usage: " << e.what() << "\n";
        return 2;
    }

    const json model_field = model.empty() ? json(nullptr) : json(model);
    if (classify->parsed()) {
        cmd_classify(Run(g, {{"model", model_field}}));
    } else if (simulate->parsed()) {
        cmd_simulate(Run(g, {{"model", model_field},
                             {"steps", steps},
                             {"replicas", replicas},
                             {"per_individual", per_individual},
                             {"per_replica_dir", per_replica_dir}}));
    } else if (moments->parsed()) {
        cmd_moments(Run(g, {{"model", model_field}, {"k_max", k_max}, {"exponents_out", exponents_out}}));
    } else if (sde->parsed()) {
        cmd_sde(Run(g, {{"model", model_field},
                        {"case", case_value},
                        {"b", b},
                        {"v", v},
                        {"a21", a21},
                        {"a31", a31},
                        {"a32", a32},
                        {"dt", dt},
                        {"horizon", horizon},
                        {"paths", paths},
                        {"thin", thin}}));
    } else if (identities->parsed()) {
        return cmd_identities(Run(g, {{"max_k", max_k}, {"trials", trials}}));
    } else if (converge->parsed()) {
        cmd_converge(Run(g, {{"model", model_field},
                             {"case", conv_case},
                             {"n_list", n_list},
                             {"t_points", t_points},
                             {"replicas", conv_replicas},
                             {"sde_paths", sde_paths},
                             {"dt", conv_dt},
                             {"alpha", alpha},
                             {"confidence", confidence}}));
    } else if (growth->parsed()) {
        cmd_growth(Run(g, {{"model", model_field}, {"n_list", growth_n}, {"replicas", growth_replicas}}));
    }
    return 0;
}

std::string one_line(std::string s) {
    for (char& c : s)
        if (c == '\n' || c == '\r') c = ' ';
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return main_impl(argc, argv);
    } catch (const UsageError& e) {
        std::cerr << "error: " << one_line(e.what()) << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << one_line(e.what()) << "\n";
        return 1;
    }
}
