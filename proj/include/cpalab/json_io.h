#pragma once

#include "cpalab/leakage.h"
#include "cpalab/tracegen.h"

#include <json.hpp>

namespace cpalab {

nlohmann::json to_json(const ArrayConfig &config);
/// Missing keys keep their defaults; unknown keys are rejected.
ArrayConfig array_config_from_json(const nlohmann::json &j);

nlohmann::json to_json(const WeightDistribution &dist);
WeightDistribution distribution_from_json(const nlohmann::json &j);

} // namespace cpalab
