#pragma once

// JSON experiment configuration.
//
// {
//   "plant": {"A": [[..]], "B": [[..]], "W": [[..]], "Q": [[..]], "R": [[..]]}
//         | {"generator": {"n": 3, "m": 2, "target_rho": 0.9, "seed": 1}},
//   "horizon": 100000, "trials": 20, "base_seed": 2024,
//   "checkpoint_stride": 1.2, "delta": 0.05, "slope_window": [1000, 100000],
//   "controller": {"schedule": "powers-of-two", "log_base": "e",
//                  "rank_tolerance": 1e-10,
//                  "dare": {"rtol": 1e-12, "max_iterations": 100000,
//                           "condition_cap": 1e12}},          // optional
//   "estimate_every_step": false, "verbose_monitors": false,
//   "write_trial_logs": true                                   // optional
// }
//
// Matrices are row-major nested arrays. Unknown keys are rejected.

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "alqr/harness.hpp"
#include "alqr/plant.hpp"

namespace alqr {

using Json = nlohmann::json;

Json matrix_to_json(const Matrix& M);
/// Throws ConfigInvalid(pointer) for ragged, empty or non-numeric arrays.
Matrix matrix_from_json(const Json& j, const std::string& pointer);

Json plant_to_json(const PlantSpec& plant);
PlantSpec plant_from_json(const Json& j, const std::string& pointer = "/plant");

Json controller_to_json(const ControllerConfig& config);
ControllerConfig controller_from_json(const Json& j, const std::string& pointer = "/controller");

ExperimentConfig config_from_json(const Json& j);
Json config_to_json(const ExperimentConfig& config);

/// Applies "dotted.path=value"; value is parsed as JSON when possible and
/// taken as a string otherwise.
void apply_override(Json& j, const std::string& assignment);

/// Throws IoError if unreadable, ConfigInvalid("") on malformed JSON.
Json load_json_file(const std::filesystem::path& path);

}  // namespace alqr
