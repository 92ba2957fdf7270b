#pragma once

// JSON model descriptors:
//
// {"kappa": 50, "a": 0.22,
//  "psi": {"type": "square_wave", "tau": 0.6, "period": 1},
//  "B": {"type": "one"},
//  "grid": {"dx": 0.001, "steps_per_period": 1000, "x_max": 3.22}}
//
// psi types: constant (level, period?), square_wave (tau, period) and
// shifted_square_wave (tau, period, epsilon). B types: one, tabulated
// (samples, spacing, nondecreasing?). x_max defaults to a + 3 periods.
// Unknown fields are rejected.

#include <string>

#include <json.hpp>

#include "fgrowth/model.hpp"

namespace fgrowth {

struct ModelDescriptor {
  DivisionKernel kernel;
  Grid grid;
};

/// Throws ModelError on missing, malformed or unknown fields, or when the
/// grid period steps_per_period * dx differs from the psi period.
ModelDescriptor parse_model(const nlohmann::json& j);
ModelDescriptor load_model(const std::string& path);

nlohmann::json to_json(const TimeModulation& psi);
nlohmann::json to_json(const AgeModulation& B);
nlohmann::json to_json(const DivisionKernel& k, const Grid& grid);

}  // namespace fgrowth
