#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace orl {

/// Validates `instance` against a JSON Schema document. Supports the subset
/// the run-config schema uses: type, enum, properties, required,
/// additionalProperties (boolean), items, minItems, minLength, minimum,
/// maximum, exclusiveMinimum, exclusiveMaximum and local "$ref"s of the
/// form "#/definitions/<name>". Returns every violation as "<path>: <message>".
std::vector<std::string> validate_json(const nlohmann::json& schema,
                                       const nlohmann::json& instance);

}  // namespace orl
