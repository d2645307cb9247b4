#include <fstream>
#include <string>

#include "orl/agents/bc_trainer.hpp"
#include "orl/agents/serialization.hpp"
#include "orl/errors.hpp"
#include "orl/numkit/checkpoint.hpp"

namespace orl {
namespace {

using nlohmann::json;

template <typename T>
void read_optional(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

}  // namespace

void to_json(json& j, const Td3Hyperparams& hp) {
  j = {{"discount", hp.discount},         {"tau", hp.tau},
       {"policy_delay", hp.policy_delay}, {"smoothing_noise", hp.smoothing_noise},
       {"noise_clip", hp.noise_clip},     {"batch_size", hp.batch_size},
       {"total_steps", hp.total_steps},   {"q_norm_alpha", hp.q_norm_alpha},
       {"eval_interval", hp.eval_interval}};
}

void from_json(const json& j, Td3Hyperparams& hp) {
  read_optional(j, "discount", hp.discount);
  read_optional(j, "tau", hp.tau);
  read_optional(j, "policy_delay", hp.policy_delay);
  read_optional(j, "smoothing_noise", hp.smoothing_noise);
  read_optional(j, "noise_clip", hp.noise_clip);
  read_optional(j, "batch_size", hp.batch_size);
  read_optional(j, "total_steps", hp.total_steps);
  read_optional(j, "q_norm_alpha", hp.q_norm_alpha);
  read_optional(j, "eval_interval", hp.eval_interval);
}

void to_json(json& j, const AdamConfig& c) {
  j = {{"lr", c.lr}, {"beta1", c.beta1}, {"beta2", c.beta2}, {"eps", c.eps}};
}

void from_json(const json& j, AdamConfig& c) {
  read_optional(j, "lr", c.lr);
  read_optional(j, "beta1", c.beta1);
  read_optional(j, "beta2", c.beta2);
  read_optional(j, "eps", c.eps);
}

void to_json(json& j, const WeightConfig& c) { j = {{"zeta1", c.zeta1}, {"zeta2", c.zeta2}}; }

void from_json(const json& j, WeightConfig& c) {
  read_optional(j, "zeta1", c.zeta1);
  read_optional(j, "zeta2", c.zeta2);
}

void to_json(json& j, const RegularizerSpec& spec) {
  j = {{"kind", std::string(to_string(spec.kind))},
       {"alpha", spec.alpha},
       {"mc_samples", spec.mc_samples}};
}

void from_json(const json& j, RegularizerSpec& spec) {
  if (auto it = j.find("kind"); it != j.end()) {
    spec.kind = parse_regularizer_kind(it->get<std::string>());
  }
  read_optional(j, "alpha", spec.alpha);
  read_optional(j, "mc_samples", spec.mc_samples);
}

void to_json(json& j, const NormStats& stats) {
  j = {{"mean", std::vector<double>(stats.mean.data(), stats.mean.data() + stats.mean.size())},
       {"std", std::vector<double>(stats.std.data(), stats.std.data() + stats.std.size())}};
}

void from_json(const json& j, NormStats& stats) {
  const auto mean = j.at("mean").get<std::vector<double>>();
  const auto std = j.at("std").get<std::vector<double>>();
  stats.mean = Eigen::Map<const Vec>(mean.data(), static_cast<Eigen::Index>(mean.size()));
  stats.std = Eigen::Map<const Vec>(std.data(), static_cast<Eigen::Index>(std.size()));
}

void to_json(json& j, const EvalResult& r) {
  j = {{"mean_return", r.mean_return},
       {"std_return", r.std_return},
       {"normalized_score", r.normalized_score}};
}

void save_agent(const Td3Agent& agent, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_mlp(agent.actor(), dir / "actor.orlw");
  save_mlp(agent.critic1(), dir / "critic1.orlw");
  save_mlp(agent.critic2(), dir / "critic2.orlw");
  save_mlp(agent.target_actor(), dir / "target_actor.orlw");
  save_mlp(agent.target_critic1(), dir / "target_critic1.orlw");
  save_mlp(agent.target_critic2(), dir / "target_critic2.orlw");
  const auto& c = agent.config();
  const json meta = {
      {"objective", std::string(to_string(c.objective))},
      {"obs_dim", agent.actor().input_dim()},
      {"act_dim", agent.actor().output_dim()},
      {"action_bound", agent.action_bound()},
      {"hidden", c.hidden},
      {"td3", c.hp},
      {"actor_optimizer", c.actor_optimizer},
      {"critic_optimizer", c.critic_optimizer},
      {"weights", c.weights},
      {"regularizer", c.regularizer},
      {"seed", agent.seed()},
      {"step", agent.step()},
      {"actor_updates", agent.actor_updates()},
      {"state_stats", agent.stats()},
  };
  std::ofstream out(dir / "agent.json", std::ios::trunc);
  if (!out) throw Error("cannot write " + (dir / "agent.json").string());
  out << meta.dump(2) << '\n';
}

Td3Agent load_agent(const std::filesystem::path& dir,
                    std::shared_ptr<const GaussianBehaviorModel> behavior) {
  std::ifstream in(dir / "agent.json");
  if (!in) throw Error("missing agent checkpoint in " + dir.string());
  json meta;
  Td3AgentConfig config;
  NormStats stats;
  try {
    meta = json::parse(in);
    const auto objective = meta.at("objective").get<std::string>();
    if (objective != "td3bc" && objective != "td3rkl") {
      throw FormatError("unknown agent objective '" + objective + "'");
    }
    config.objective = objective == "td3bc" ? ActorObjective::kTd3Bc : ActorObjective::kTd3Rkl;
    config.hidden = meta.at("hidden").get<std::vector<int>>();
    config.hp = meta.at("td3").get<Td3Hyperparams>();
    config.actor_optimizer = meta.at("actor_optimizer").get<AdamConfig>();
    config.critic_optimizer = meta.at("critic_optimizer").get<AdamConfig>();
    config.weights = meta.at("weights").get<WeightConfig>();
    config.regularizer = meta.at("regularizer").get<RegularizerSpec>();
    stats = meta.at("state_stats").get<NormStats>();
  } catch (const json::exception& e) {
    throw FormatError("bad agent sidecar: " + std::string(e.what()));
  }
  // Evaluation does not need lambda(s); a TD3+RKL checkpoint loads without its behavior model.
  if (config.objective == ActorObjective::kTd3Rkl && !behavior) {
    config.objective = ActorObjective::kTd3Bc;
  }
  Td3Agent agent(meta.at("obs_dim").get<int>(), meta.at("act_dim").get<int>(),
                 meta.at("action_bound").get<double>(), stats, config, std::move(behavior),
                 meta.at("seed").get<std::uint64_t>());
  agent.restore(load_mlp(dir / "actor.orlw"), load_mlp(dir / "critic1.orlw"),
                load_mlp(dir / "critic2.orlw"), load_mlp(dir / "target_actor.orlw"),
                load_mlp(dir / "target_critic1.orlw"), load_mlp(dir / "target_critic2.orlw"),
                meta.at("step").get<std::int64_t>(), meta.at("actor_updates").get<std::int64_t>());
  return agent;
}

void save_bc_policy(const BcPolicy& policy, const NormStats& stats, double action_bound,
                    const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json meta = {{"action_bound", action_bound}, {"state_stats", stats}};
  if (const auto* net = std::get_if<MlpNet>(&policy)) {
    save_mlp(*net, dir / "policy.orlw");
    meta["policy"] = "deterministic";
  } else {
    const auto& gaussian = std::get<StochasticPolicy>(policy);
    save_mlp(gaussian.mean_net, dir / "policy_mean.orlw");
    save_mlp(gaussian.log_std_net, dir / "policy_log_std.orlw");
    meta["policy"] = "gaussian";
    meta["log_std_min"] = gaussian.log_std_min;
    meta["log_std_max"] = gaussian.log_std_max;
  }
  std::ofstream out(dir / "bc.json", std::ios::trunc);
  if (!out) throw Error("cannot write " + (dir / "bc.json").string());
  out << meta.dump(2) << '\n';
}

BcCheckpoint load_bc_policy(const std::filesystem::path& dir) {
  std::ifstream in(dir / "bc.json");
  if (!in) throw Error("missing BC checkpoint in " + dir.string());
  try {
    const json meta = json::parse(in);
    NormStats stats = meta.at("state_stats").get<NormStats>();
    const double bound = meta.at("action_bound").get<double>();
    const auto kind = meta.at("policy").get<std::string>();
    if (kind == "deterministic") {
      return {load_mlp(dir / "policy.orlw"), std::move(stats), bound};
    }
    if (kind != "gaussian") throw FormatError("unknown BC policy kind '" + kind + "'");
    StochasticPolicy gaussian{load_mlp(dir / "policy_mean.orlw"),
                              load_mlp(dir / "policy_log_std.orlw"),
                              meta.at("log_std_min").get<double>(),
                              meta.at("log_std_max").get<double>()};
    return {std::move(gaussian), std::move(stats), bound};
  } catch (const json::exception& e) {
    throw FormatError("bad BC sidecar: " + std::string(e.what()));
  }
}

}  // namespace orl
