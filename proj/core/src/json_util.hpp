#pragma once

// Internal helpers shared by the serialization code. Not installed.

#include <nlohmann/json.hpp>

#include "teamdiag/formula.hpp"

namespace teamdiag::detail {

nlohmann::json formula_to_json(const Formula& f);
Formula formula_from_json(const nlohmann::json& j);

}  // namespace teamdiag::detail
