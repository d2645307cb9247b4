#pragma once

#include <string>
#include <string_view>

#include "orl/behavior/behavior.hpp"
#include "orl/numkit/mlp.hpp"
#include "orl/numkit/rng.hpp"

namespace orl {

enum class RegularizerKind { kMseBc, kRklContrastive, kForwardKl, kReverseKlStochastic };

std::string_view to_string(RegularizerKind kind);
/// Accepts "mse-bc", "rkl-contrastive", "forward-kl", "reverse-kl-stochastic".
RegularizerKind parse_regularizer_kind(std::string_view name);

struct RegularizerSpec {
  RegularizerKind kind = RegularizerKind::kRklContrastive;
  /// Weight of the negative-sample term (rkl-contrastive only).
  double alpha = 1.0;
  /// Reparameterized samples per state (reverse-kl-stochastic only).
  int mc_samples = 10;

  /// Throws InvalidInput if alpha < 0 or mc_samples < 1.
  void validate() const;
  bool stochastic() const {
    return kind == RegularizerKind::kForwardKl || kind == RegularizerKind::kReverseKlStochastic;
  }
};

/// sum_j (mu_j - a_j)^2
double mse_bc_loss(const Vec& mu, const Vec& a, Vec* grad_mu = nullptr);

/// sum_j [(mu_j - a_j)^2 - alpha (mu_j - n_j)^2] with n = (a1 + a2) / 2.
double rkl_contrastive_loss(const Vec& mu, const Vec& a, const Vec& a1, const Vec& a2,
                            double alpha, Vec* grad_mu = nullptr);

/// Diagonal Gaussian policy with separate mean and log-std networks.
/// Log-std is clamped to [log_std_min, log_std_max]; no tanh squashing.
struct StochasticPolicy {
  MlpNet mean_net;
  MlpNet log_std_net;
  double log_std_min = -5.0;
  double log_std_max = 2.0;

  static StochasticPolicy make(int obs_dim, int act_dim, std::span<const int> hidden, Rng& rng);

  int obs_dim() const { return mean_net.input_dim(); }
  int act_dim() const { return mean_net.output_dim(); }
  Vec mean(const Vec& s) const { return mean_net.forward(s); }
  Vec log_std(const Vec& s) const;
};

/// Sum over dims of log N(x; mean, exp(log_std)^2).
double diag_gaussian_log_density(const Vec& mean, const Vec& log_std, const Vec& x);

/// -log pi(a|s) for the policy at a normalized state.
double forward_kl_bc_loss(const StochasticPolicy& policy, const Vec& s, const Vec& a);
/// Same quantity from head outputs; gradients w.r.t. mean and (clamped) log-std.
double forward_kl_bc_loss(const Vec& mean, const Vec& log_std, const Vec& a,
                          Vec* grad_mean = nullptr, Vec* grad_log_std = nullptr);

/// Monte-Carlo reverse KL, (1/K) sum_k [log pi(a_k|s) - log pi_b(a_k|s)] with
/// a_k = mean + exp(log_std) * eps_k. `noise` holds eps_k as columns (act_dim x K).
/// Gradients are pathwise w.r.t. mean and log-std.
double reverse_kl_from_noise(const Vec& mean, const Vec& log_std, const Vec& behavior_mean,
                             const Vec& behavior_log_var, const Mat& noise,
                             Vec* grad_mean = nullptr, Vec* grad_log_std = nullptr);

/// Draws K standard-normal samples from `rng` and evaluates the estimator at a
/// normalized state. Throws InvalidInput if K <= 0.
double reverse_kl_stochastic_loss(const StochasticPolicy& policy,
                                  const GaussianBehaviorModel& behavior, const Vec& s, int K,
                                  Rng& rng);

/// KL(N(m1, s1^2) || N(m2, s2^2)) summed over dims, in closed form.
double gaussian_kl(const Vec& mean1, const Vec& std1, const Vec& mean2, const Vec& std2);

}  // namespace orl
