#include "orl/agents/td3_agent.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "orl/errors.hpp"

namespace orl {
namespace {

constexpr double kMinQScaleDenominator = 1e-8;

Mat stack_rows(const Mat& top, const Mat& bottom) {
  Mat out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

void require_finite(double value, const char* what) {
  if (!std::isfinite(value)) throw TrainingError(std::string("non-finite ") + what);
}

}  // namespace

void Td3Hyperparams::validate() const {
  if (!(discount >= 0.0 && discount <= 1.0)) throw InvalidInput("td3: discount must lie in [0, 1]");
  if (!(tau > 0.0 && tau <= 1.0)) throw InvalidInput("td3: tau must lie in (0, 1]");
  if (policy_delay < 1) throw InvalidInput("td3: policy delay must be >= 1");
  if (!(smoothing_noise >= 0.0)) throw InvalidInput("td3: smoothing noise must be >= 0");
  if (!(noise_clip >= 0.0)) throw InvalidInput("td3: noise clip must be >= 0");
  if (batch_size < 1) throw InvalidInput("td3: batch size must be >= 1");
  if (total_steps < 0) throw InvalidInput("td3: total steps must be >= 0");
  if (!(q_norm_alpha > 0.0)) throw InvalidInput("td3: q_norm_alpha must be positive");
  if (eval_interval < 1) throw InvalidInput("td3: eval interval must be >= 1");
}

std::string_view to_string(ActorObjective objective) {
  return objective == ActorObjective::kTd3Bc ? "td3bc" : "td3rkl";
}

Mat smoothed_target_action(const MlpNet& target_actor, const Mat& next_states,
                           double smoothing_noise, double noise_clip, double action_bound,
                           Rng& rng) {
  Mat actions = target_actor.forward(next_states);
  if (smoothing_noise > 0.0) {
    for (Eigen::Index c = 0; c < actions.cols(); ++c) {
      for (Eigen::Index r = 0; r < actions.rows(); ++r) {
        actions(r, c) += std::clamp(rng.normal(0.0, smoothing_noise), -noise_clip, noise_clip);
      }
    }
  }
  return actions.cwiseMax(-action_bound).cwiseMin(action_bound);
}

double critic_target(double reward, bool terminal, double discount, double q1_next,
                     double q2_next) {
  if (terminal) return reward;
  return reward + discount * std::min(q1_next, q2_next);
}

CriticLoss critic_mse_loss(const MlpNet& critic, const Mat& states, const Mat& actions,
                           const Vec& targets, bool with_grad) {
  const auto n = states.cols();
  if (actions.cols() != n || targets.size() != n || n == 0) {
    throw InvalidInput("critic loss: batch shapes disagree");
  }
  const ForwardPass pass = critic.forward_cached(stack_rows(states, actions));
  const Eigen::RowVectorXd residual = pass.output.row(0) - targets.transpose();
  CriticLoss loss;
  loss.value = residual.squaredNorm() / static_cast<double>(n);
  if (with_grad) {
    const Mat upstream = residual * (2.0 / static_cast<double>(n));
    loss.grad = critic.backward(pass, upstream).params;
  }
  return loss;
}

ActorLoss td3_actor_loss(const MlpNet& actor, const MlpNet& critic, const Minibatch& batch,
                         const Vec& weights, ActorObjective objective, double alpha,
                         double q_norm_alpha, std::optional<double> fixed_q_scale,
                         bool with_grad) {
  const auto n = batch.states.cols();
  if (n == 0 || weights.size() != n) throw InvalidInput("actor loss: weights/batch mismatch");
  const bool negatives = objective == ActorObjective::kTd3Rkl && alpha > 0.0;
  if (negatives && !batch.has_negatives()) {
    throw InvalidInput("actor loss: TD3+RKL with alpha > 0 needs negative action pairs");
  }
  const double inv_n = 1.0 / static_cast<double>(n);

  const ForwardPass actor_pass = actor.forward_cached(batch.states);
  const Mat& mu = actor_pass.output;
  const ForwardPass critic_pass = critic.forward_cached(stack_rows(batch.states, mu));
  const Eigen::RowVectorXd q = critic_pass.output.row(0);

  ActorLoss loss;
  loss.mean_abs_q = q.cwiseAbs().mean();
  loss.q_scale =
      fixed_q_scale ? *fixed_q_scale
                    : q_norm_alpha / std::max(loss.mean_abs_q, kMinQScaleDenominator);
  loss.mean_weight = weights.mean();

  Mat reg_grad(mu.rows(), n);
  double reg_sum = 0.0;
  Vec g;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec mu_i = mu.col(i);
    const Vec a_i = batch.actions.col(i);
    double reg = 0.0;
    if (objective == ActorObjective::kTd3Bc) {
      reg = mse_bc_loss(mu_i, a_i, &g);
    } else if (negatives) {
      reg = rkl_contrastive_loss(mu_i, a_i, batch.negatives1.col(i), batch.negatives2.col(i), alpha,
                                 &g);
    } else {
      // alpha == 0: the negative term vanishes and no negatives were drawn.
      reg = rkl_contrastive_loss(mu_i, a_i, a_i, a_i, alpha, &g);
    }
    reg_sum += weights[i] * reg;
    reg_grad.col(i) = weights[i] * g;
  }
  loss.value = -loss.q_scale * q.mean() + reg_sum * inv_n;

  if (with_grad) {
    const Mat q_upstream = Mat::Constant(1, n, -loss.q_scale * inv_n);
    const MlpGradient critic_grad = critic.backward(critic_pass, q_upstream);
    const Mat upstream = critic_grad.input.bottomRows(mu.rows()) + reg_grad * inv_n;
    loss.grad = actor.backward(actor_pass, upstream).params;
  }
  return loss;
}

Td3Agent::Td3Agent(int obs_dim, int act_dim, double action_bound, NormStats stats,
                   Td3AgentConfig config, std::shared_ptr<const GaussianBehaviorModel> behavior,
                   std::uint64_t seed)
    : config_(std::move(config)),
      stats_(std::move(stats)),
      action_bound_(action_bound),
      seed_(seed),
      behavior_(std::move(behavior)),
      sample_rng_(Rng(seed).split(1)),
      noise_rng_(Rng(seed).split(2)) {
  config_.hp.validate();
  config_.regularizer.validate();
  if (stats_.mean.size() != obs_dim || stats_.std.size() != obs_dim) {
    throw InvalidInput("td3 agent: normalization stats do not match obs_dim");
  }
  if (config_.objective == ActorObjective::kTd3Rkl) {
    if (config_.regularizer.kind != RegularizerKind::kRklContrastive) {
      throw InvalidInput("td3 agent: TD3+RKL requires the rkl-contrastive regularizer");
    }
    if (!behavior_) throw InvalidInput("td3 agent: TD3+RKL requires a fitted behavior model");
    if (behavior_->obs_dim() != obs_dim || behavior_->act_dim() != act_dim) {
      throw InvalidInput("td3 agent: behavior model dims do not match");
    }
    if (!(behavior_->stats == stats_)) {
      throw InvalidInput("td3 agent: behavior model was fitted with different state normalization");
    }
  }
  Rng init = Rng(seed).split(0);
  actor_ = MlpNet::make(layer_dims(obs_dim, config_.hidden, act_dim), OutputActivation::kScaledTanh,
                        action_bound, init);
  const auto critic_dims = layer_dims(obs_dim + act_dim, config_.hidden, 1);
  critic1_ = MlpNet::make(critic_dims, OutputActivation::kNone, 1.0, init);
  critic2_ = MlpNet::make(critic_dims, OutputActivation::kNone, 1.0, init);
  target_actor_ = actor_;
  target_critic1_ = critic1_;
  target_critic2_ = critic2_;
  actor_opt_ = AdamState(actor_.num_params(), config_.actor_optimizer);
  critic1_opt_ = AdamState(critic1_.num_params(), config_.critic_optimizer);
  critic2_opt_ = AdamState(critic2_.num_params(), config_.critic_optimizer);
}

Vec Td3Agent::act(const Vec& raw_state) const {
  const Vec a = actor_.forward(normalize_state(stats_, raw_state));
  return a.cwiseMax(-action_bound_).cwiseMin(action_bound_);
}

Actor Td3Agent::as_actor() const {
  return [this](const Vec& s) { return act(s); };
}

bool Td3Agent::uses_negatives() const {
  return config_.objective == ActorObjective::kTd3Rkl && config_.regularizer.alpha > 0.0;
}

Vec Td3Agent::bc_weights(const Mat& normalized_states) const {
  if (config_.objective == ActorObjective::kTd3Bc) return Vec::Ones(normalized_states.cols());
  const Vec betas = beta_hat(*behavior_, normalized_states);
  Vec weights(betas.size());
  for (Eigen::Index i = 0; i < betas.size(); ++i) {
    weights[i] = compute_lambda(config_.weights, betas[i]);
  }
  return weights;
}

Minibatch Td3Agent::sample(const OfflineDataset& dataset) {
  if (dataset.obs_dim() != actor_.input_dim() || dataset.act_dim() != actor_.output_dim()) {
    throw InvalidInput("td3 agent: dataset dims do not match the agent");
  }
  Minibatch batch = sample_minibatch(dataset, config_.hp.batch_size, sample_rng_, uses_negatives());
  normalize_minibatch(stats_, batch);
  return batch;
}

Vec Td3Agent::critic_targets(const Minibatch& batch) {
  const auto& hp = config_.hp;
  const Mat next_actions = smoothed_target_action(target_actor_, batch.next_states,
                                                  hp.smoothing_noise, hp.noise_clip,
                                                  action_bound_, noise_rng_);
  const Mat next_inputs = stack_rows(batch.next_states, next_actions);
  const Mat q1 = target_critic1_.forward(next_inputs);
  const Mat q2 = target_critic2_.forward(next_inputs);
  Vec targets(batch.rewards.size());
  for (Eigen::Index i = 0; i < targets.size(); ++i) {
    targets[i] = critic_target(batch.rewards[i], batch.terminals[i] != 0.0, hp.discount,
                               q1(0, i), q2(0, i));
  }
  return targets;
}

double Td3Agent::critic_update(const Minibatch& batch) {
  const Vec targets = critic_targets(batch);
  const CriticLoss l1 = critic_mse_loss(critic1_, batch.states, batch.actions, targets);
  const CriticLoss l2 = critic_mse_loss(critic2_, batch.states, batch.actions, targets);
  require_finite(l1.value + l2.value, "critic loss");
  adam_step(critic1_.params(), l1.grad, critic1_opt_);
  adam_step(critic2_.params(), l2.grad, critic2_opt_);
  ++step_;
  return l1.value + l2.value;
}

ActorLoss Td3Agent::actor_update(const Minibatch& batch) {
  const Vec weights = bc_weights(batch.states);
  ActorLoss loss = td3_actor_loss(actor_, critic1_, batch, weights, config_.objective,
                                  config_.regularizer.alpha, config_.hp.q_norm_alpha);
  require_finite(loss.value, "actor loss");
  adam_step(actor_.params(), loss.grad, actor_opt_);
  ++actor_updates_;
  return loss;
}

void Td3Agent::update_targets() {
  const double tau = config_.hp.tau;
  polyak_update(target_actor_.params(), actor_.params(), tau);
  polyak_update(target_critic1_.params(), critic1_.params(), tau);
  polyak_update(target_critic2_.params(), critic2_.params(), tau);
}

StepStats Td3Agent::train_step(const OfflineDataset& dataset) {
  const Minibatch batch = sample(dataset);
  StepStats stats;
  stats.critic_loss = critic_update(batch);
  if (step_ % config_.hp.policy_delay == 0) {
    stats.actor = actor_update(batch);
    update_targets();
  }
  return stats;
}

void Td3Agent::restore(MlpNet actor, MlpNet critic1, MlpNet critic2, MlpNet target_actor,
                       MlpNet target_critic1, MlpNet target_critic2, std::int64_t step,
                       std::int64_t actor_updates) {
  if (actor.dims() != actor_.dims() || critic1.dims() != critic1_.dims() ||
      critic2.dims() != critic2_.dims() || target_actor.dims() != actor_.dims() ||
      target_critic1.dims() != critic1_.dims() || target_critic2.dims() != critic2_.dims()) {
    throw InvalidInput("td3 agent: restored network shapes do not match");
  }
  actor_ = std::move(actor);
  critic1_ = std::move(critic1);
  critic2_ = std::move(critic2);
  target_actor_ = std::move(target_actor);
  target_critic1_ = std::move(target_critic1);
  target_critic2_ = std::move(target_critic2);
  step_ = step;
  actor_updates_ = actor_updates;
}

TrainLog train(Td3Agent& agent, const OfflineDataset& dataset, const EvalHook& eval_hook,
               const RecordHook& on_record) {
  const Td3Hyperparams& hp = agent.config().hp;
  TrainLog log;
  double critic_sum = 0.0, actor_sum = 0.0, weight_sum = 0.0, abs_q_sum = 0.0;
  std::int64_t critic_count = 0, actor_count = 0;

  while (agent.step() < hp.total_steps) {
    StepStats stats;
    try {
      stats = agent.train_step(dataset);
    } catch (const TrainingError& e) {
      throw TrainingError("training aborted at step " + std::to_string(agent.step() + 1) + ": " +
                          e.what());
    }
    critic_sum += stats.critic_loss;
    ++critic_count;
    if (stats.actor) {
      actor_sum += stats.actor->value;
      weight_sum += stats.actor->mean_weight;
      abs_q_sum += stats.actor->mean_abs_q;
      ++actor_count;
    }
    const std::int64_t t = agent.step();
    if (t % hp.eval_interval == 0 || t == hp.total_steps) {
      TrainRecord record;
      record.step = t;
      record.scalars["critic_loss"] = critic_sum / static_cast<double>(critic_count);
      if (actor_count > 0) {
        const auto k = static_cast<double>(actor_count);
        record.scalars["actor_loss"] = actor_sum / k;
        record.scalars["mean_lambda"] = weight_sum / k;
        record.scalars["mean_abs_q"] = abs_q_sum / k;
      }
      if (eval_hook) record.eval = eval_hook(agent.as_actor());
      if (on_record) on_record(record);
      log.records.push_back(std::move(record));
      critic_sum = actor_sum = weight_sum = abs_q_sum = 0.0;
      critic_count = actor_count = 0;
    }
  }
  log.critic_updates = agent.step();
  log.actor_updates = agent.actor_updates();
  return log;
}

bool operator==(const EvalResult& a, const EvalResult& b) {
  return a.mean_return == b.mean_return && a.std_return == b.std_return &&
         a.normalized_score == b.normalized_score;
}

bool operator==(const TrainRecord& a, const TrainRecord& b) {
  return a.step == b.step && a.scalars == b.scalars && a.eval == b.eval;
}

bool operator==(const TrainLog& a, const TrainLog& b) {
  return a.records == b.records && a.critic_updates == b.critic_updates &&
         a.actor_updates == b.actor_updates;
}

}  // namespace orl
