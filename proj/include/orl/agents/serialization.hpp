#pragma once

#include "json.hpp"
#include "orl/agents/td3_agent.hpp"

namespace orl {

// JSON field names match the run-config schema.

void to_json(nlohmann::json& j, const Td3Hyperparams& hp);
void from_json(const nlohmann::json& j, Td3Hyperparams& hp);
void to_json(nlohmann::json& j, const AdamConfig& c);
void from_json(const nlohmann::json& j, AdamConfig& c);
void to_json(nlohmann::json& j, const WeightConfig& c);
void from_json(const nlohmann::json& j, WeightConfig& c);
void to_json(nlohmann::json& j, const RegularizerSpec& spec);
void from_json(const nlohmann::json& j, RegularizerSpec& spec);
void to_json(nlohmann::json& j, const NormStats& stats);
void from_json(const nlohmann::json& j, NormStats& stats);
void to_json(nlohmann::json& j, const EvalResult& r);

}  // namespace orl
