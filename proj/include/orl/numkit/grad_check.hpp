#pragma once

#include <cstddef>
#include <functional>

#include "orl/numkit/rng.hpp"
#include "orl/numkit/types.hpp"

namespace orl {

/// Scalar loss of a parameter vector. When `grad` is non-null the analytic
/// gradient must be written to it.
using DifferentiableLoss = std::function<double(const Vec& params, Vec* grad)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
  std::size_t checked = 0;
};

struct GradCheckOptions {
  double step = 1e-6;
  /// Above this many parameters a seeded random subset of this size is checked.
  std::size_t max_checked = 10000;
  std::uint64_t subsample_seed = 0;
  /// Denominator floor of the relative error, so that coordinates whose
  /// true gradient is ~0 are judged on absolute round-off.
  double scale_floor = 1e-4;
};

/// Compares the analytic gradient of `loss` against central differences.
/// relative error = |analytic - numeric| / max(|analytic|, |numeric|, scale_floor)
GradCheckResult grad_check(const DifferentiableLoss& loss, const Vec& params,
                           const GradCheckOptions& options = {});

}  // namespace orl
