#include "orl/numkit/adam.hpp"

#include <cmath>
#include <string>

#include "orl/errors.hpp"

namespace orl {

AdamState::AdamState(std::size_t num_params, const AdamConfig& cfg)
    : first_moment(Vec::Zero(static_cast<Eigen::Index>(num_params))),
      second_moment(Vec::Zero(static_cast<Eigen::Index>(num_params))),
      config(cfg) {
  if (!(cfg.lr > 0.0)) throw InvalidInput("adam: learning rate must be positive");
  if (!(cfg.beta1 > 0.0 && cfg.beta1 < 1.0) || !(cfg.beta2 > 0.0 && cfg.beta2 < 1.0)) {
    throw InvalidInput("adam: decay rates must lie in (0, 1)");
  }
  if (!(cfg.eps > 0.0)) throw InvalidInput("adam: eps must be positive");
}

void adam_step(Eigen::Ref<Vec> params, const Vec& grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    throw InvalidInput("adam: params, grads and state sizes differ");
  }
  if (!grads.allFinite()) {
    Eigen::Index bad = 0;
    while (bad < grads.size() && std::isfinite(grads[bad])) ++bad;
    throw TrainingError("adam: non-finite gradient at index " + std::to_string(bad) +
                        " (value " + std::to_string(grads[bad]) + ") before step " +
                        std::to_string(state.step + 1));
  }
  const AdamConfig& c = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);

  state.first_moment = c.beta1 * state.first_moment + (1.0 - c.beta1) * grads;
  state.second_moment = c.beta2 * state.second_moment + (1.0 - c.beta2) * grads.cwiseAbs2();
  params.array() -= c.lr * (state.first_moment.array() / correction1) /
                    ((state.second_moment.array() / correction2).sqrt() + c.eps);
}

void polyak_update(Eigen::Ref<Vec> target, const Vec& online, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw InvalidInput("polyak: tau must lie in (0, 1]");
  if (target.size() != online.size()) throw InvalidInput("polyak: shape mismatch");
  if (tau == 1.0) {
    target = online;
    return;
  }
  // Incremental form: an exact fixed point when target == online.
  target += tau * (online - target);
}

}  // namespace orl
