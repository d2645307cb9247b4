#pragma once

#include <cstdint>

#include "orl/numkit/types.hpp"

namespace orl {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamState() = default;
  AdamState(std::size_t num_params, const AdamConfig& config);

  Vec first_moment;
  Vec second_moment;
  std::int64_t step = 0;
  AdamConfig config;
};

/// Bias-corrected Adam update, in place. Throws TrainingError if any
/// gradient entry is non-finite; params and state are left untouched then.
void adam_step(Eigen::Ref<Vec> params, const Vec& grads, AdamState& state);

/// target <- tau * online + (1 - tau) * target. Requires tau in (0, 1].
void polyak_update(Eigen::Ref<Vec> target, const Vec& online, double tau);

}  // namespace orl
