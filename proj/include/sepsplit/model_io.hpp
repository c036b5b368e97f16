#pragma once

#include <string>

#include <json.hpp>

#include "sepsplit/model.hpp"

namespace sepsplit {

// Model file format (unknown fields are rejected):
// {
//   "name": "...",
//   "potential": {"kind": "polynomial"|"trigonometric",
//                 "coefficients": {"2": -0.5, "4": 0.25},
//                 "sin_coefficients": {...}},             // trigonometric only
//   "perturbation": {"kind": "polynomial"|"trigonometric",
//                    "terms": [{"x_power": 4, "y_power": 0,
//                               "fourier": {"cos": {"1": 0}, "sin": {"1": 1}}}],
//                    "linear": {"cos": {...}, "sin": {...}}},  // a(τ)x, trigonometric only
//   "eta": 0 | "p/q",
//   "mu": 1
// }
// Real values may be JSON numbers or decimal strings (strings keep full precision).
SystemModel parse_model(const nlohmann::json& j);
SystemModel parse_model_string(const std::string& text);
SystemModel load_model(const std::string& path);
nlohmann::json model_to_json(const SystemModel& m);

nlohmann::json real_to_json(const BigReal& x);
BigReal real_from_json(const nlohmann::json& j, const std::string& where);

}  // namespace sepsplit
