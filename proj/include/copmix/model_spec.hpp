#pragma once

#include <string>

#include "json.hpp"

#include "copmix/mixture.hpp"

namespace copmix {

inline constexpr const char* kVersion = "0.1.0";

// Declarative fit specification:
//   {"components": [{"copula":   {"family": "clayton", "rotation": 180,
//                                 "structure": "exchangeable",
//                                 "params": "fit" | [3.5]},
//                    "marginals": [{"family": "normal",
//                                   "params": "fit" | [0, 1],
//                                   "index": 5}, ...],
//                    "angle_deg": "fit" | 90.0 }, ...]}
// "params"/"angle_deg" are free when "fit"; "angle_deg" absent means no
// rotation angle; "rotation" (degrees, one of 0/90/180/270) and "structure"
// default to 0 and "exchangeable". Errors name the offending field.
MixtureSpec spec_from_json(const nlohmann::json& j);
nlohmann::json spec_to_json(const MixtureSpec& spec);

// Concrete model with all parameter values, loadable back:
//   {"weights": [...], "components": [{"copula": {..., "params": [...]},
//    "marginals": [...], "angle_deg": 123.4}, ...]}
nlohmann::json model_to_json(const MixtureModel& m);
MixtureModel model_from_json(const nlohmann::json& j);

// Fit outcome: model, loglik/trace, q, n, bic, convergence flags,
// assignments, warnings. Responsibilities are not serialized; a reloaded
// report carries an empty matrix there.
nlohmann::json report_to_json(const FitReport& rep);
FitReport report_from_json(const nlohmann::json& j);

std::string to_string(AngleMode m);

}  // namespace copmix
