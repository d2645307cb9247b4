#include "orl/agents/bc_trainer.hpp"

#include <cmath>
#include <string>

#include "orl/errors.hpp"

namespace orl {
namespace {

struct Visitor {
  const Minibatch& batch;
  const RegularizerSpec& spec;
  const GaussianBehaviorModel* behavior;
  const Mat& noise;
  bool with_grad;

  BcLoss operator()(const MlpNet& actor) const {
    const auto n = batch.states.cols();
    const double inv_n = 1.0 / static_cast<double>(n);
    const bool negatives = spec.kind == RegularizerKind::kRklContrastive && spec.alpha > 0.0;
    if (negatives && !batch.has_negatives()) {
      throw InvalidInput("bc: rkl-contrastive with alpha > 0 needs negative action pairs");
    }
    const ForwardPass pass = actor.forward_cached(batch.states);
    Mat upstream(pass.output.rows(), n);
    BcLoss loss;
    Vec g;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vec mu = pass.output.col(i);
      const Vec a = batch.actions.col(i);
      double value = 0.0;
      if (spec.kind == RegularizerKind::kMseBc) {
        value = mse_bc_loss(mu, a, &g);
      } else if (negatives) {
        value = rkl_contrastive_loss(mu, a, batch.negatives1.col(i), batch.negatives2.col(i),
                                     spec.alpha, &g);
      } else {
        value = rkl_contrastive_loss(mu, a, a, a, spec.alpha, &g);
      }
      loss.value += value;
      upstream.col(i) = g * inv_n;
    }
    loss.value *= inv_n;
    if (with_grad) loss.grad_primary = actor.backward(pass, upstream).params;
    return loss;
  }

  BcLoss operator()(const StochasticPolicy& policy) const {
    const auto n = batch.states.cols();
    const double inv_n = 1.0 / static_cast<double>(n);
    const ForwardPass mean_pass = policy.mean_net.forward_cached(batch.states);
    const ForwardPass std_pass = policy.log_std_net.forward_cached(batch.states);
    const Mat& raw = std_pass.output;
    const Mat log_std = raw.cwiseMax(policy.log_std_min).cwiseMin(policy.log_std_max);

    Mat behavior_mean, behavior_log_var;
    const int k = spec.mc_samples;
    if (spec.kind == RegularizerKind::kReverseKlStochastic) {
      if (!behavior) throw InvalidInput("bc: reverse-kl-stochastic needs a behavior model");
      if (noise.rows() != policy.act_dim() || noise.cols() != static_cast<Eigen::Index>(k) * n) {
        throw InvalidInput("bc: reverse-kl noise must be act_dim x (K * batch)");
      }
      behavior_mean = behavior->mean_net.forward(batch.states);
      behavior_log_var = behavior->log_variance(batch.states);
    }

    Mat up_mean(policy.act_dim(), n);
    Mat up_std(policy.act_dim(), n);
    BcLoss loss;
    Vec gm, gs;
    for (Eigen::Index i = 0; i < n; ++i) {
      double value = 0.0;
      if (spec.kind == RegularizerKind::kForwardKl) {
        value = forward_kl_bc_loss(mean_pass.output.col(i), log_std.col(i), batch.actions.col(i),
                                   &gm, &gs);
      } else {
        value = reverse_kl_from_noise(mean_pass.output.col(i), log_std.col(i),
                                      behavior_mean.col(i), behavior_log_var.col(i),
                                      noise.middleCols(i * k, k), &gm, &gs);
      }
      loss.value += value;
      up_mean.col(i) = gm * inv_n;
      for (Eigen::Index j = 0; j < up_std.rows(); ++j) {
        const bool inside = raw(j, i) > policy.log_std_min && raw(j, i) < policy.log_std_max;
        up_std(j, i) = inside ? gs[j] * inv_n : 0.0;
      }
    }
    loss.value *= inv_n;
    if (with_grad) {
      loss.grad_primary = policy.mean_net.backward(mean_pass, up_mean).params;
      loss.grad_secondary = policy.log_std_net.backward(std_pass, up_std).params;
    }
    return loss;
  }
};

void check_kinds(const BcPolicy& policy, const RegularizerSpec& spec,
                 const GaussianBehaviorModel* behavior) {
  spec.validate();
  const bool stochastic_policy = std::holds_alternative<StochasticPolicy>(policy);
  if (spec.stochastic() != stochastic_policy) {
    throw InvalidInput(std::string("bc: regularizer '") + std::string(to_string(spec.kind)) +
                       "' does not match the policy kind");
  }
  if (spec.kind == RegularizerKind::kReverseKlStochastic && !behavior) {
    throw InvalidInput("bc: reverse-kl-stochastic needs a behavior model");
  }
}

}  // namespace

BcLoss bc_batch_loss(const BcPolicy& policy, const Minibatch& batch, const RegularizerSpec& spec,
                     const GaussianBehaviorModel* behavior, const Mat& noise, bool with_grad) {
  check_kinds(policy, spec, behavior);
  if (batch.states.cols() == 0) throw InvalidInput("bc: empty minibatch");
  return std::visit(Visitor{batch, spec, behavior, noise, with_grad}, policy);
}

TrainLog train_bc_only(BcPolicy& policy, const OfflineDataset& dataset, const RegularizerSpec& spec,
                       const BcConfig& config, Rng& rng, const GaussianBehaviorModel* behavior,
                       const EvalHook& eval_hook, const RecordHook& on_record) {
  check_kinds(policy, spec, behavior);
  if (dataset.empty()) throw InvalidInput("bc: dataset is empty");
  if (config.epochs <= 0 || config.batch_size <= 0) {
    throw InvalidInput("bc: epochs and batch size must be positive");
  }
  const NormStats& stats = dataset.stats();
  if (behavior && !(behavior->stats == stats)) {
    throw InvalidInput("bc: behavior model was fitted with different state normalization");
  }

  Rng sample_rng = rng.split(1);
  Rng noise_rng = rng.split(2);
  const bool negatives = spec.kind == RegularizerKind::kRklContrastive && spec.alpha > 0.0;
  const std::size_t steps_per_epoch =
      (dataset.size() + static_cast<std::size_t>(config.batch_size) - 1) /
      static_cast<std::size_t>(config.batch_size);

  AdamState primary_opt, secondary_opt;
  if (auto* actor = std::get_if<MlpNet>(&policy)) {
    primary_opt = AdamState(actor->num_params(), config.optimizer);
  } else {
    auto& sp = std::get<StochasticPolicy>(policy);
    primary_opt = AdamState(sp.mean_net.num_params(), config.optimizer);
    secondary_opt = AdamState(sp.log_std_net.num_params(), config.optimizer);
  }

  TrainLog log;
  Mat noise;
  std::int64_t step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    double epoch_sum = 0.0;
    for (std::size_t s = 0; s < steps_per_epoch; ++s) {
      Minibatch batch = sample_minibatch(dataset, config.batch_size, sample_rng, negatives);
      normalize_minibatch(stats, batch);
      if (spec.kind == RegularizerKind::kReverseKlStochastic) {
        noise.resize(dataset.act_dim(), static_cast<Eigen::Index>(spec.mc_samples) * batch.states.cols());
        for (Eigen::Index c = 0; c < noise.cols(); ++c) {
          for (Eigen::Index r = 0; r < noise.rows(); ++r) noise(r, c) = noise_rng.normal();
        }
      }
      const BcLoss loss = bc_batch_loss(policy, batch, spec, behavior, noise);
      ++step;
      if (!std::isfinite(loss.value)) {
        throw TrainingError("bc training aborted at step " + std::to_string(step) +
                            ": non-finite loss");
      }
      try {
        if (auto* actor = std::get_if<MlpNet>(&policy)) {
          adam_step(actor->params(), loss.grad_primary, primary_opt);
        } else {
          auto& sp = std::get<StochasticPolicy>(policy);
          adam_step(sp.mean_net.params(), loss.grad_primary, primary_opt);
          adam_step(sp.log_std_net.params(), loss.grad_secondary, secondary_opt);
        }
      } catch (const TrainingError& e) {
        throw TrainingError("bc training aborted at step " + std::to_string(step) + ": " +
                            e.what());
      }
      epoch_sum += loss.value;
    }
    const bool evaluate = epoch == config.epochs ||
                          (config.eval_every_epochs > 0 && epoch % config.eval_every_epochs == 0);
    TrainRecord record;
    record.step = step;
    record.scalars["bc_loss"] = epoch_sum / static_cast<double>(steps_per_epoch);
    if (evaluate && eval_hook) record.eval = eval_hook(bc_actor(policy, stats));
    if (on_record) on_record(record);
    log.records.push_back(std::move(record));
  }
  log.actor_updates = step;
  return log;
}

Actor bc_actor(const BcPolicy& policy, const NormStats& stats, double action_bound) {
  return [&policy, stats, action_bound](const Vec& s) {
    const Vec x = normalize_state(stats, s);
    const Vec a = std::holds_alternative<MlpNet>(policy) ? std::get<MlpNet>(policy).forward(x)
                                                        : std::get<StochasticPolicy>(policy).mean(x);
    return Vec(a.cwiseMax(-action_bound).cwiseMin(action_bound));
  };
}

}  // namespace orl
