#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "orl/agents/train_log.hpp"
#include "orl/behavior/behavior.hpp"
#include "orl/data/dataset.hpp"
#include "orl/numkit/adam.hpp"
#include "orl/numkit/mlp.hpp"
#include "orl/regularizers/regularizers.hpp"

namespace orl {

struct Td3Hyperparams {
  double discount = 0.99;
  double tau = 0.005;
  int policy_delay = 2;
  double smoothing_noise = 0.2;
  double noise_clip = 0.5;
  int batch_size = 256;
  std::int64_t total_steps = 50000;
  /// Scale of the RL term: lambda_Q = q_norm_alpha / mean |Q|.
  double q_norm_alpha = 2.5;
  int eval_interval = 1000;

  void validate() const;
};

enum class ActorObjective {
  /// Q term minus unweighted squared error to the dataset action.
  kTd3Bc,
  /// Q term minus lambda(s) times the contrastive reverse-KL regularizer.
  kTd3Rkl,
};

std::string_view to_string(ActorObjective objective);

struct Td3AgentConfig {
  ActorObjective objective = ActorObjective::kTd3Rkl;
  Td3Hyperparams hp;
  std::vector<int> hidden{256, 256};
  AdamConfig actor_optimizer;
  AdamConfig critic_optimizer;
  WeightConfig weights;
  /// Used by kTd3Rkl; must be rkl-contrastive.
  RegularizerSpec regularizer;
};

/// a' = clip(target_actor(s') + clip(eps, -c, c), -bound, bound), eps ~ N(0, sigma^2)
/// per entry. Noise is drawn column by column from `rng`.
Mat smoothed_target_action(const MlpNet& target_actor, const Mat& next_states,
                           double smoothing_noise, double noise_clip, double action_bound,
                           Rng& rng);

/// y = r + gamma * min(q1', q2') unless terminal, else y = r.
double critic_target(double reward, bool terminal, double discount, double q1_next,
                     double q2_next);

struct CriticLoss {
  double value = 0.0;
  Vec grad;
};

/// mean_i (Q(s_i, a_i) - y_i)^2 and its parameter gradient.
CriticLoss critic_mse_loss(const MlpNet& critic, const Mat& states, const Mat& actions,
                           const Vec& targets, bool with_grad = true);

struct ActorLoss {
  /// -lambda_Q mean Q + mean(w_i * reg_i), the quantity minimized.
  double value = 0.0;
  double q_scale = 0.0;
  double mean_abs_q = 0.0;
  double mean_weight = 0.0;
  Vec grad;
};

/// Actor loss on a normalized minibatch. `weights` are the per-sample BC
/// weights (lambda(s_i), or ones for TD3+BC). When `fixed_q_scale` is set it
/// replaces the batch estimate of lambda_Q; the scale is never differentiated.
ActorLoss td3_actor_loss(const MlpNet& actor, const MlpNet& critic, const Minibatch& batch,
                         const Vec& weights, ActorObjective objective, double alpha,
                         double q_norm_alpha, std::optional<double> fixed_q_scale = std::nullopt,
                         bool with_grad = true);

struct StepStats {
  double critic_loss = 0.0;
  std::optional<ActorLoss> actor;
};

/// Deterministic actor, twin critics, their target copies and optimizer state.
/// TD3+BC and TD3+RKL share every code path except the actor objective.
class Td3Agent {
 public:
  /// `behavior` is required for kTd3Rkl and must have been fitted with the
  /// same state normalization as `stats`.
  Td3Agent(int obs_dim, int act_dim, double action_bound, NormStats stats, Td3AgentConfig config,
           std::shared_ptr<const GaussianBehaviorModel> behavior, std::uint64_t seed);

  const Td3AgentConfig& config() const { return config_; }
  const NormStats& stats() const { return stats_; }
  double action_bound() const { return action_bound_; }
  std::uint64_t seed() const { return seed_; }
  std::int64_t step() const { return step_; }
  std::int64_t actor_updates() const { return actor_updates_; }

  const MlpNet& actor() const { return actor_; }
  const MlpNet& critic1() const { return critic1_; }
  const MlpNet& critic2() const { return critic2_; }
  const MlpNet& target_actor() const { return target_actor_; }
  const MlpNet& target_critic1() const { return target_critic1_; }
  const MlpNet& target_critic2() const { return target_critic2_; }
  MlpNet& mutable_actor() { return actor_; }
  MlpNet& mutable_critic1() { return critic1_; }
  MlpNet& mutable_critic2() { return critic2_; }

  /// Deterministic action for a raw (unnormalized) state.
  Vec act(const Vec& raw_state) const;
  Actor as_actor() const;

  /// True when minibatches must carry negative action pairs.
  bool uses_negatives() const;
  /// Per-sample BC weights on normalized states.
  Vec bc_weights(const Mat& normalized_states) const;

  /// Uniform minibatch from the agent's sampling stream, normalized.
  Minibatch sample(const OfflineDataset& dataset);
  /// Shared regression targets for both critics (uses target networks only).
  Vec critic_targets(const Minibatch& batch);
  /// One Adam step on each critic; returns the sum of the two MSE losses.
  double critic_update(const Minibatch& batch);
  ActorLoss actor_update(const Minibatch& batch);
  void update_targets();

  /// Critic update, then (every policy_delay-th step) actor and target updates.
  StepStats train_step(const OfflineDataset& dataset);

  /// Restores counters after loading networks from a checkpoint.
  void restore(MlpNet actor, MlpNet critic1, MlpNet critic2, MlpNet target_actor,
               MlpNet target_critic1, MlpNet target_critic2, std::int64_t step,
               std::int64_t actor_updates);

 private:
  Td3AgentConfig config_;
  NormStats stats_;
  double action_bound_;
  std::uint64_t seed_;
  std::shared_ptr<const GaussianBehaviorModel> behavior_;

  MlpNet actor_;
  MlpNet critic1_;
  MlpNet critic2_;
  MlpNet target_actor_;
  MlpNet target_critic1_;
  MlpNet target_critic2_;
  AdamState actor_opt_;
  AdamState critic1_opt_;
  AdamState critic2_opt_;

  Rng sample_rng_;
  Rng noise_rng_;
  std::int64_t step_ = 0;
  std::int64_t actor_updates_ = 0;
};

/// Runs critic updates until agent.step() == total_steps, logging every
/// eval_interval steps and at the final step. Throws TrainingError naming the
/// step on a non-finite loss.
TrainLog train(Td3Agent& agent, const OfflineDataset& dataset, const EvalHook& eval_hook = {},
               const RecordHook& on_record = {});

/// Networks as ORLW files plus `agent.json` (hyperparameters, counters,
/// normalization statistics).
void save_agent(const Td3Agent& agent, const std::filesystem::path& dir);
/// Loads a checkpoint for evaluation; optimizer state is not restored.
Td3Agent load_agent(const std::filesystem::path& dir,
                    std::shared_ptr<const GaussianBehaviorModel> behavior = nullptr);

}  // namespace orl
