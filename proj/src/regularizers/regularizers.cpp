#include "orl/regularizers/regularizers.hpp"

#include <cmath>

#include "orl/errors.hpp"

namespace orl {
namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void require_same_size(const Vec& x, const Vec& y, const char* what) {
  if (x.size() != y.size()) throw InvalidInput(std::string(what) + ": dimension mismatch");
}

}  // namespace

std::string_view to_string(RegularizerKind kind) {
  switch (kind) {
    case RegularizerKind::kMseBc:
      return "mse-bc";
    case RegularizerKind::kRklContrastive:
      return "rkl-contrastive";
    case RegularizerKind::kForwardKl:
      return "forward-kl";
    case RegularizerKind::kReverseKlStochastic:
      return "reverse-kl-stochastic";
  }
  return "unknown";
}

RegularizerKind parse_regularizer_kind(std::string_view name) {
  if (name == "mse-bc") return RegularizerKind::kMseBc;
  if (name == "rkl-contrastive") return RegularizerKind::kRklContrastive;
  if (name == "forward-kl") return RegularizerKind::kForwardKl;
  if (name == "reverse-kl-stochastic") return RegularizerKind::kReverseKlStochastic;
  throw InvalidInput("unknown regularizer kind '" + std::string(name) + "'");
}

void RegularizerSpec::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw InvalidInput("regularizer: alpha must be finite and >= 0");
  }
  if (mc_samples < 1) throw InvalidInput("regularizer: mc_samples must be >= 1");
}

double mse_bc_loss(const Vec& mu, const Vec& a, Vec* grad_mu) {
  require_same_size(mu, a, "mse_bc_loss");
  const Vec diff = mu - a;
  if (grad_mu) *grad_mu = 2.0 * diff;
  return diff.squaredNorm();
}

double rkl_contrastive_loss(const Vec& mu, const Vec& a, const Vec& a1, const Vec& a2,
                            double alpha, Vec* grad_mu) {
  require_same_size(mu, a, "rkl_contrastive_loss");
  require_same_size(mu, a1, "rkl_contrastive_loss");
  require_same_size(mu, a2, "rkl_contrastive_loss");
  if (!(alpha >= 0.0)) throw InvalidInput("rkl_contrastive_loss: alpha must be >= 0");
  const Vec pos = mu - a;
  const Vec neg = mu - 0.5 * (a1 + a2);
  if (grad_mu) *grad_mu = 2.0 * pos - alpha * (2.0 * neg);
  return pos.squaredNorm() - alpha * neg.squaredNorm();
}

StochasticPolicy StochasticPolicy::make(int obs_dim, int act_dim, std::span<const int> hidden,
                                        Rng& rng) {
  StochasticPolicy policy;
  const auto dims = layer_dims(obs_dim, hidden, act_dim);
  policy.mean_net = MlpNet::make(dims, OutputActivation::kNone, 1.0, rng);
  policy.log_std_net = MlpNet::make(dims, OutputActivation::kNone, 1.0, rng);
  return policy;
}

Vec StochasticPolicy::log_std(const Vec& s) const {
  return log_std_net.forward(s).cwiseMax(log_std_min).cwiseMin(log_std_max);
}

double diag_gaussian_log_density(const Vec& mean, const Vec& log_std, const Vec& x) {
  require_same_size(mean, x, "log density");
  require_same_size(log_std, x, "log density");
  const Vec z = (x - mean).cwiseQuotient(log_std.array().exp().matrix());
  return -0.5 * kLog2Pi * static_cast<double>(x.size()) - log_std.sum() - 0.5 * z.squaredNorm();
}

double forward_kl_bc_loss(const Vec& mean, const Vec& log_std, const Vec& a, Vec* grad_mean,
                          Vec* grad_log_std) {
  require_same_size(mean, a, "forward_kl_bc_loss");
  require_same_size(log_std, a, "forward_kl_bc_loss");
  if (!mean.allFinite() || !log_std.allFinite() || !a.allFinite()) {
    throw InvalidInput("forward_kl_bc_loss: non-finite input");
  }
  const Vec inv_var = (-2.0 * log_std).array().exp();
  const Vec diff = a - mean;
  const Vec scaled_sq = diff.cwiseAbs2().cwiseProduct(inv_var);
  if (grad_mean) *grad_mean = -diff.cwiseProduct(inv_var);
  if (grad_log_std) *grad_log_std = (1.0 - scaled_sq.array()).matrix();
  return 0.5 * kLog2Pi * static_cast<double>(a.size()) + log_std.sum() + 0.5 * scaled_sq.sum();
}

double forward_kl_bc_loss(const StochasticPolicy& policy, const Vec& s, const Vec& a) {
  if (s.size() != policy.obs_dim() || a.size() != policy.act_dim()) {
    throw InvalidInput("forward_kl_bc_loss: dimension mismatch");
  }
  return forward_kl_bc_loss(policy.mean(s), policy.log_std(s), a);
}

double reverse_kl_from_noise(const Vec& mean, const Vec& log_std, const Vec& behavior_mean,
                             const Vec& behavior_log_var, const Mat& noise, Vec* grad_mean,
                             Vec* grad_log_std) {
  require_same_size(mean, log_std, "reverse_kl");
  require_same_size(mean, behavior_mean, "reverse_kl");
  require_same_size(mean, behavior_log_var, "reverse_kl");
  if (noise.rows() != mean.size() || noise.cols() < 1) {
    throw InvalidInput("reverse_kl: noise must be act_dim x K with K >= 1");
  }
  const auto k = static_cast<double>(noise.cols());
  const auto d = static_cast<double>(mean.size());
  const Vec std = log_std.array().exp();
  const Vec inv_var_b = (-behavior_log_var).array().exp();

  // log pi(a~) = -d/2 ln 2pi - sum log_std - |eps|^2 / 2 for a~ = mean + std * eps.
  double total = 0.0;
  Vec g_mean = Vec::Zero(mean.size());
  Vec g_log_std = Vec::Zero(mean.size());
  for (Eigen::Index c = 0; c < noise.cols(); ++c) {
    const Vec eps = noise.col(c);
    const Vec sample = mean + std.cwiseProduct(eps);
    const Vec diff_b = sample - behavior_mean;
    const double log_pi = -0.5 * kLog2Pi * d - log_std.sum() - 0.5 * eps.squaredNorm();
    const double log_b = -0.5 * kLog2Pi * d - 0.5 * behavior_log_var.sum() -
                         0.5 * diff_b.cwiseAbs2().cwiseProduct(inv_var_b).sum();
    total += log_pi - log_b;
    // d(-log_b)/d sample = diff_b / var_b; d sample/d mean = 1, d sample/d log_std = std * eps.
    const Vec pull = diff_b.cwiseProduct(inv_var_b);
    g_mean += pull;
    g_log_std += (pull.cwiseProduct(std).cwiseProduct(eps).array() - 1.0).matrix();
  }
  if (grad_mean) *grad_mean = g_mean / k;
  if (grad_log_std) *grad_log_std = g_log_std / k;
  return total / k;
}

double reverse_kl_stochastic_loss(const StochasticPolicy& policy,
                                  const GaussianBehaviorModel& behavior, const Vec& s, int K,
                                  Rng& rng) {
  if (K <= 0) throw InvalidInput("reverse_kl_stochastic_loss: K must be positive");
  if (s.size() != policy.obs_dim() || behavior.act_dim() != policy.act_dim()) {
    throw InvalidInput("reverse_kl_stochastic_loss: dimension mismatch");
  }
  Mat noise(policy.act_dim(), K);
  for (Eigen::Index c = 0; c < noise.cols(); ++c) {
    for (Eigen::Index r = 0; r < noise.rows(); ++r) noise(r, c) = rng.normal();
  }
  return reverse_kl_from_noise(policy.mean(s), policy.log_std(s), behavior.mean(s),
                               behavior.log_variance(s), noise);
}

double gaussian_kl(const Vec& mean1, const Vec& std1, const Vec& mean2, const Vec& std2) {
  require_same_size(mean1, std1, "gaussian_kl");
  require_same_size(mean1, mean2, "gaussian_kl");
  require_same_size(mean1, std2, "gaussian_kl");
  const auto var1 = std1.array().square();
  const auto var2 = std2.array().square();
  return ((std2.array() / std1.array()).log() +
          (var1 + (mean1 - mean2).array().square()) / (2.0 * var2) - 0.5)
      .sum();
}

}  // namespace orl
