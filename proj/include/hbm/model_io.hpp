#pragma once

#include <string>

#include <json.hpp>

#include "hbm/model.hpp"

namespace hbm {

/// Model document schema (all quantities SI):
///
///   {
///     "mass":      [[...], ...],          dense, row-major rows
///     "damping":   [[...], ...],
///     "stiffness": [[...], ...],
///     "connectors": [ {"type": "spring"|"dashpot", "dofs": [i] or [i, j],
///                      "value": c, "parameter": "c_ax"} ],
///     "elements": [ {"kind": "cubic"|"bilinear"|"trilinear_regularized"|"polynomial",
///                    "dofs": [i] or [i, j], "coefficients": [...],
///                    "velocity_coefficients": [...], "clearances": [...],
///                    "regularization": delta,
///                    "coefficient_parameters": ["", "k_stop", ...]} ],
///     "forcing": {"amplitude": [...], "harmonic": 1, "subharmonic": 1},
///     "parameters": {"F": 1.0, ...}
///   }
SystemModel model_from_json(const nlohmann::json& doc);
nlohmann::json model_to_json(const SystemModel& model);
SystemModel load_model(const std::string& path);

}  // namespace hbm
