#include "orl/cli/run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "orl/agents/serialization.hpp"
#include "orl/cli/json_schema.hpp"
#include "orl/cli/schema_text.hpp"
#include "orl/errors.hpp"

namespace orl {

using nlohmann::json;

namespace {

struct AgentName {
  AgentKind kind;
  const char* name;
};

constexpr AgentName kAgentNames[] = {
    {AgentKind::kTd3Rkl, "td3rkl"}, {AgentKind::kTd3Bc, "td3bc"},
    {AgentKind::kBcMse, "bc-mse"},  {AgentKind::kBcRkl, "bc-rkl"},
    {AgentKind::kBcFkl, "bc-fkl"},  {AgentKind::kBcRklStoch, "bc-rklstoch"},
};

[[noreturn]] void throw_all(const std::vector<std::string>& errors) {
  std::ostringstream msg;
  msg << "invalid run config (" << errors.size() << " error" << (errors.size() == 1 ? "" : "s")
      << "):";
  for (const auto& e : errors) msg << "\n  " << e;
  throw ConfigError(msg.str());
}

}  // namespace

std::string_view to_string(AgentKind kind) {
  for (const auto& a : kAgentNames) {
    if (a.kind == kind) return a.name;
  }
  return "unknown";
}

AgentKind parse_agent_kind(std::string_view name) {
  for (const auto& a : kAgentNames) {
    if (name == a.name) return a.kind;
  }
  throw InvalidInput("unknown agent kind '" + std::string(name) + "'");
}

bool is_td3(AgentKind kind) { return kind == AgentKind::kTd3Rkl || kind == AgentKind::kTd3Bc; }

RegularizerKind regularizer_for(AgentKind kind) {
  switch (kind) {
    case AgentKind::kTd3Bc:
    case AgentKind::kBcMse:
      return RegularizerKind::kMseBc;
    case AgentKind::kTd3Rkl:
    case AgentKind::kBcRkl:
      return RegularizerKind::kRklContrastive;
    case AgentKind::kBcFkl:
      return RegularizerKind::kForwardKl;
    case AgentKind::kBcRklStoch:
      return RegularizerKind::kReverseKlStochastic;
  }
  throw InvalidInput("unknown agent kind");
}

bool needs_behavior(AgentKind kind) {
  return kind == AgentKind::kTd3Rkl || kind == AgentKind::kBcRklStoch;
}

const json& run_config_schema() {
  static const json schema = json::parse(generated::kRunConfigSchema);
  return schema;
}

std::vector<std::string> validate_run_config(const json& doc) {
  auto errors = validate_json(run_config_schema(), doc);
  if (!errors.empty()) return errors;

  const AgentKind agent = parse_agent_kind(doc.at("agent").get<std::string>());
  if (doc.contains("regularizer") && doc["regularizer"].contains("kind")) {
    const auto kind = parse_regularizer_kind(doc["regularizer"]["kind"].get<std::string>());
    if (kind != regularizer_for(agent)) {
      errors.push_back("/regularizer/kind: agent '" + std::string(to_string(agent)) +
                       "' trains with '" + std::string(to_string(regularizer_for(agent))) +
                       "', not '" + std::string(to_string(kind)) + "'");
    }
  }
  if (needs_behavior(agent) && !doc.contains("behavior")) {
    errors.push_back("/behavior: agent '" + std::string(to_string(agent)) +
                     "' needs a fitted behavior model directory");
  }
  return errors;
}

RunConfig parse_run_config(const json& doc) {
  const auto errors = validate_run_config(doc);
  if (!errors.empty()) throw_all(errors);

  RunConfig c;
  c.env = parse_env_kind(doc.at("env").get<std::string>());
  c.dataset = doc.at("dataset").get<std::string>();
  if (doc.contains("behavior")) c.behavior = std::filesystem::path(doc["behavior"].get<std::string>());
  c.agent = parse_agent_kind(doc.at("agent").get<std::string>());
  c.seed = doc.value("seed", std::uint64_t{0});
  c.output_dir = doc.at("output_dir").get<std::string>();
  if (doc.contains("network") && doc["network"].contains("hidden")) {
    c.hidden = doc["network"]["hidden"].get<std::vector<int>>();
  }
  if (doc.contains("actor_optimizer")) c.actor_optimizer = doc["actor_optimizer"].get<AdamConfig>();
  if (doc.contains("critic_optimizer")) {
    c.critic_optimizer = doc["critic_optimizer"].get<AdamConfig>();
  }
  if (doc.contains("td3")) c.td3 = doc["td3"].get<Td3Hyperparams>();
  if (doc.contains("weights")) c.weights = doc["weights"].get<WeightConfig>();
  c.regularizer.kind = regularizer_for(c.agent);
  if (doc.contains("regularizer")) {
    const auto& r = doc["regularizer"];
    c.regularizer.alpha = r.value("alpha", c.regularizer.alpha);
    c.regularizer.mc_samples = r.value("mc_samples", c.regularizer.mc_samples);
  }
  if (doc.contains("bc")) {
    const auto& b = doc["bc"];
    c.bc.epochs = b.value("epochs", c.bc.epochs);
    c.bc.batch_size = b.value("batch_size", c.bc.batch_size);
    c.bc.eval_every_epochs = b.value("eval_every_epochs", c.bc.eval_every_epochs);
    if (b.contains("optimizer")) c.bc.optimizer = b["optimizer"].get<AdamConfig>();
  }
  if (doc.contains("evaluation")) {
    const auto& e = doc["evaluation"];
    c.evaluation.episodes = e.value("episodes", c.evaluation.episodes);
    c.evaluation.seed_offset = e.value("seed_offset", c.evaluation.seed_offset);
  }
  return c;
}

void check_run_paths(const RunConfig& config) {
  std::vector<std::string> errors;
  if (!std::filesystem::is_regular_file(config.dataset)) {
    errors.push_back("/dataset: no such file " + config.dataset.string());
  }
  if (needs_behavior(config.agent) && !config.behavior) {
    errors.push_back("/behavior: agent " + std::string(to_string(config.agent)) +
                     " needs a fitted behavior model");
  }
  if (config.behavior) {
    for (const char* file : {"behavior.json", "behavior_mean.orlw", "behavior_logvar.orlw"}) {
      if (!std::filesystem::is_regular_file(*config.behavior / file)) {
        errors.push_back("/behavior: missing " + (*config.behavior / file).string());
      }
    }
  }
  if (!errors.empty()) throw_all(errors);
}

json to_json(const RunConfig& c) {
  json j = {
      {"env", std::string(to_string(c.env))},
      {"dataset", c.dataset.string()},
      {"agent", std::string(to_string(c.agent))},
      {"seed", c.seed},
      {"output_dir", c.output_dir.string()},
      {"network", {{"hidden", c.hidden}}},
      {"actor_optimizer", c.actor_optimizer},
      {"critic_optimizer", c.critic_optimizer},
      {"td3", c.td3},
      {"weights", c.weights},
      {"regularizer", c.regularizer},
      {"bc",
       {{"epochs", c.bc.epochs},
        {"batch_size", c.bc.batch_size},
        {"eval_every_epochs", c.bc.eval_every_epochs},
        {"optimizer", c.bc.optimizer}}},
      {"evaluation",
       {{"episodes", c.evaluation.episodes}, {"seed_offset", c.evaluation.seed_offset}}},
  };
  if (c.behavior) j["behavior"] = c.behavior->string();
  return j;
}

RunConfig load_run_config(const std::filesystem::path& path, const char* env_seed) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  if (env_seed != nullptr && *env_seed != '\0') {
    std::uint64_t seed = 0;
    const char* end = env_seed + std::char_traits<char>::length(env_seed);
    const auto [ptr, ec] = std::from_chars(env_seed, end, seed);
    if (ec != std::errc() || ptr != end) {
      throw ConfigError(std::string("ORL_SEED is not a non-negative integer: ") + env_seed);
    }
    if (doc.is_object()) doc["seed"] = seed;
  }
  return parse_run_config(doc);
}

}  // namespace orl
