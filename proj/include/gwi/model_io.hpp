#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "gwi/model.hpp"

namespace gwi {

// Model file schema (see docs/model-format.md):
//   {"p": 3,
//    "offspring": [ {"kind": "Poisson", "params": {"mean": [1, 0.5, 0]}}, ... ],
//    "immigration": {"kind": "Poisson", "params": {"mean": [1, 1, 1]}}}
DistributionSpec distribution_from_json(const nlohmann::json& j);
nlohmann::json distribution_to_json(const DistributionSpec& spec);

GwiModel model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const GwiModel& model);

GwiModel load_model(const std::filesystem::path& path);

}  // namespace gwi
