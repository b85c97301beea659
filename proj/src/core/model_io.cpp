#include "gwi/model_io.hpp"

#include <fstream>
#include <string>

#include "gwi/error.hpp"

namespace gwi {

namespace {

using nlohmann::json;

const json& field(const json& j, const char* name, const char* context) {
    if (!j.is_object() || !j.contains(name))
        throw ValidationError(std::string(context) + ": missing field '" + name + "'");
    return j.at(name);
}

template <typename T>
std::vector<T> vector_field(const json& params, const char* name, const char* kind) {
    const json& v = field(params, name, kind);
    if (!v.is_array()) throw ValidationError(std::string(kind) + ": '" + name + "' must be an array");
    std::vector<T> out;
    out.reserve(v.size());
    for (const auto& x : v) {
        if constexpr (std::is_integral_v<T>) {
            if (!x.is_number_integer()) throw ValidationError(std::string(kind) + ": '" + name + "' must hold integers");
        } else {
            if (!x.is_number()) throw ValidationError(std::string(kind) + ": '" + name + "' must hold numbers");
        }
        out.push_back(x.get<T>());
    }
    return out;
}

}  // namespace

DistributionSpec distribution_from_json(const json& j) {
    const json& kind_field = field(j, "kind", "distribution");
    if (!kind_field.is_string()) throw ValidationError("distribution: 'kind' must be a string");
    const std::string kind = kind_field.get<std::string>();
    const json& params = field(j, "params", "distribution");
    if (kind == "Deterministic")
        return DistributionSpec::deterministic(vector_field<std::int64_t>(params, "value", "Deterministic"));
    if (kind == "Poisson") return DistributionSpec::poisson(vector_field<double>(params, "mean", "Poisson"));
    if (kind == "Bernoulli") return DistributionSpec::bernoulli(vector_field<double>(params, "prob", "Bernoulli"));
    if (kind == "Geometric") return DistributionSpec::geometric(vector_field<double>(params, "prob", "Geometric"));
    if (kind == "JointTable") {
        const json& support = field(params, "support", "JointTable");
        if (!support.is_array()) throw ValidationError("JointTable: 'support' must be an array of arrays");
        std::vector<std::vector<std::int64_t>> points;
        for (const auto& row : support) {
            if (!row.is_array()) throw ValidationError("JointTable: 'support' must be an array of arrays");
            std::vector<std::int64_t> point;
            for (const auto& x : row) {
                if (!x.is_number_integer()) throw ValidationError("JointTable: support entries must be integers");
                point.push_back(x.get<std::int64_t>());
            }
            points.push_back(std::move(point));
        }
        return DistributionSpec::joint_table(std::move(points), vector_field<double>(params, "prob", "JointTable"));
    }
    throw ValidationError("distribution: unknown kind '" + kind + "'");
}

json distribution_to_json(const DistributionSpec& spec) {
    json params;
    std::visit(
        [&](const auto& law) {
            using T = std::decay_t<decltype(law)>;
            if constexpr (std::is_same_v<T, Deterministic>) params["value"] = law.value;
            else if constexpr (std::is_same_v<T, Poisson>) params["mean"] = law.mean;
            else if constexpr (std::is_same_v<T, Bernoulli> || std::is_same_v<T, Geometric>) params["prob"] = law.prob;
            else {
                params["support"] = law.support;
                params["prob"] = law.prob;
            }
        },
        spec.law());
    return json{{"kind", std::string(to_string(spec.kind()))}, {"params", params}};
}

GwiModel model_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("model: document must be a JSON object");
    const json& p_field = field(j, "p", "model");
    if (!p_field.is_number_integer() || p_field.get<long long>() < 1)
        throw ValidationError("model: 'p' must be a positive integer");
    const auto p = p_field.get<std::size_t>();
    const json& offspring = field(j, "offspring", "model");
    if (!offspring.is_array()) throw ValidationError("model: 'offspring' must be an array");
    if (offspring.size() != p)
        throw ValidationError("model: 'offspring' has " + std::to_string(offspring.size()) + " entries, expected " +
                              std::to_string(p));
    std::vector<DistributionSpec> laws;
    laws.reserve(p);
    for (const auto& o : offspring) laws.push_back(distribution_from_json(o));
    return GwiModel::build(std::move(laws), distribution_from_json(field(j, "immigration", "model")));
}

json model_to_json(const GwiModel& model) {
    json offspring = json::array();
    for (const auto& law : model.offspring()) offspring.push_back(distribution_to_json(law));
    return json{{"p", model.types()}, {"offspring", offspring}, {"immigration", distribution_to_json(model.immigration())}};
}

GwiModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open model file '" + path.string() + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ValidationError("model file '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return model_from_json(j);
}

}  // namespace gwi
