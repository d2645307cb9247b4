#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "orl/agents/bc_trainer.hpp"
#include "orl/agents/td3_agent.hpp"
#include "orl/envs/envs.hpp"

namespace orl {

enum class AgentKind { kTd3Rkl, kTd3Bc, kBcMse, kBcRkl, kBcFkl, kBcRklStoch };

std::string_view to_string(AgentKind kind);
/// "td3rkl", "td3bc", "bc-mse", "bc-rkl", "bc-fkl" or "bc-rklstoch".
AgentKind parse_agent_kind(std::string_view name);

bool is_td3(AgentKind kind);
/// Regularizer an agent kind trains with.
RegularizerKind regularizer_for(AgentKind kind);
/// td3rkl and bc-rklstoch read a fitted behavior model.
bool needs_behavior(AgentKind kind);

struct EvaluationConfig {
  int episodes = 10;
  /// Evaluation episodes use seed + seed_offset so they never share a stream
  /// with training.
  std::uint64_t seed_offset = 1000;
};

struct RunConfig {
  EnvKind env = EnvKind::kTwinPeaks1D;
  std::filesystem::path dataset;
  std::optional<std::filesystem::path> behavior;
  AgentKind agent = AgentKind::kTd3Rkl;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;

  std::vector<int> hidden{256, 256};
  AdamConfig actor_optimizer;
  AdamConfig critic_optimizer;
  Td3Hyperparams td3;
  WeightConfig weights;
  RegularizerSpec regularizer;
  BcConfig bc;
  EvaluationConfig evaluation;
};

/// The published schema every config is checked against.
const nlohmann::json& run_config_schema();

/// Schema violations followed by cross-field errors. Does not touch the
/// filesystem.
std::vector<std::string> validate_run_config(const nlohmann::json& doc);

/// Validates and fills defaults. Throws ConfigError listing every problem.
RunConfig parse_run_config(const nlohmann::json& doc);

/// Throws ConfigError naming every referenced input path that is missing,
/// including a behavior model the agent needs but the config omits.
void check_run_paths(const RunConfig& config);

/// Full config with defaults filled in; parse_run_config(to_json(c)) == c.
nlohmann::json to_json(const RunConfig& config);

/// Reads a JSON config file. When `env_seed` holds a value (normally the
/// ORL_SEED environment variable) it replaces the seed in the file.
RunConfig load_run_config(const std::filesystem::path& path,
                          const char* env_seed = std::getenv("ORL_SEED"));

}  // namespace orl
