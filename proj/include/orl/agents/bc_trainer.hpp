#pragma once

#include <filesystem>
#include <variant>

#include "orl/agents/train_log.hpp"
#include "orl/behavior/behavior.hpp"
#include "orl/data/dataset.hpp"
#include "orl/numkit/adam.hpp"
#include "orl/regularizers/regularizers.hpp"

namespace orl {

/// Deterministic actor (scaled-tanh MlpNet) or diagonal Gaussian policy.
using BcPolicy = std::variant<MlpNet, StochasticPolicy>;

struct BcConfig {
  int epochs = 50;
  int batch_size = 256;
  AdamConfig optimizer;
  /// Evaluate every this many epochs (0: only after the last epoch).
  int eval_every_epochs = 0;
};

struct BcLoss {
  double value = 0.0;
  /// Deterministic policies: actor gradient. Stochastic: mean-network gradient.
  Vec grad_primary;
  /// Stochastic policies only: log-std network gradient.
  Vec grad_secondary;
};

/// Mean regularizer loss over a normalized minibatch. `noise` supplies the
/// reparameterization draws for reverse-kl-stochastic (act_dim x K*N,
/// sample i uses columns [i*K, (i+1)*K)).
BcLoss bc_batch_loss(const BcPolicy& policy, const Minibatch& batch, const RegularizerSpec& spec,
                     const GaussianBehaviorModel* behavior, const Mat& noise,
                     bool with_grad = true);

/// Supervised training with one regularizer and no RL signal. Throws
/// InvalidInput when the regularizer and policy kinds disagree or reverse-KL lacks
/// a behavior model; TrainingError on divergence.
TrainLog train_bc_only(BcPolicy& policy, const OfflineDataset& dataset, const RegularizerSpec& spec,
                       const BcConfig& config, Rng& rng,
                       const GaussianBehaviorModel* behavior = nullptr,
                       const EvalHook& eval_hook = {}, const RecordHook& on_record = {});

/// Deterministic action of a BC policy on raw states (mean for Gaussians),
/// clipped to the bound.
Actor bc_actor(const BcPolicy& policy, const NormStats& stats, double action_bound = 1.0);

struct BcCheckpoint {
  BcPolicy policy;
  NormStats stats;
  double action_bound = 1.0;
};

/// `<dir>/policy.orlw` (deterministic) or `<dir>/policy_mean.orlw` and
/// `<dir>/policy_log_std.orlw` (Gaussian), plus `<dir>/bc.json`.
void save_bc_policy(const BcPolicy& policy, const NormStats& stats, double action_bound,
                    const std::filesystem::path& dir);
BcCheckpoint load_bc_policy(const std::filesystem::path& dir);

}  // namespace orl
