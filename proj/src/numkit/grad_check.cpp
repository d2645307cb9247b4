#include "orl/numkit/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "orl/errors.hpp"

namespace orl {

GradCheckResult grad_check(const DifferentiableLoss& loss, const Vec& params,
                           const GradCheckOptions& options) {
  const auto n = static_cast<std::size_t>(params.size());
  Vec analytic = Vec::Zero(params.size());
  loss(params, &analytic);
  if (analytic.size() != params.size()) throw InvalidInput("grad_check: gradient size mismatch");

  std::vector<std::size_t> coords(n);
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  if (n > options.max_checked) {
    Rng rng(options.subsample_seed, 0x6772616463686bULL);
    std::shuffle(coords.begin(), coords.end(), rng.engine());
    coords.resize(options.max_checked);
    std::sort(coords.begin(), coords.end());
  }

  GradCheckResult result;
  Vec probe = params;
  for (std::size_t i : coords) {
    const auto idx = static_cast<Eigen::Index>(i);
    const double original = probe[idx];
    probe[idx] = original + options.step;
    const double plus = loss(probe, nullptr);
    probe[idx] = original - options.step;
    const double minus = loss(probe, nullptr);
    probe[idx] = original;

    const double numeric = (plus - minus) / (2.0 * options.step);
    const double a = analytic[idx];
    const double denom = std::max({std::abs(a), std::abs(numeric), options.scale_floor});
    const double err = std::abs(a - numeric) / denom;
    if (err > result.max_rel_error || !std::isfinite(err)) {
      result.max_rel_error = std::isfinite(err) ? err : std::numeric_limits<double>::infinity();
      result.worst_index = i;
      result.analytic_at_worst = a;
      result.numeric_at_worst = numeric;
    }
    ++result.checked;
  }
  return result;
}

}  // namespace orl
