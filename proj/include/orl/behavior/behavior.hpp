#pragma once

#include <filesystem>
#include <vector>

#include "orl/data/dataset.hpp"
#include "orl/numkit/adam.hpp"
#include "orl/numkit/mlp.hpp"

namespace orl {

struct BehaviorConfig {
  std::vector<int> hidden{256, 256};
  int epochs = 50;
  int batch_size = 256;
  AdamConfig optimizer{};
  double beta_min = -10.0;
  double beta_max = 4.0;
};

/// Diagonal Gaussian clone of the behavior policy, N(mu(s), exp(beta(s))).
///
/// Mean and log-variance come from two separate networks. Emitted
/// log-variances are hard-clamped to [beta_min, beta_max]. The model takes
/// normalized states; `stats` records the normalization it was fitted with.
struct GaussianBehaviorModel {
  MlpNet mean_net;
  MlpNet log_var_net;
  double beta_min = -10.0;
  double beta_max = 4.0;
  NormStats stats;

  static GaussianBehaviorModel make(int obs_dim, int act_dim, const BehaviorConfig& config,
                                    Rng& rng);

  int obs_dim() const { return mean_net.input_dim(); }
  int act_dim() const { return mean_net.output_dim(); }

  Vec mean(const Vec& s) const;
  /// Clamped log-variance per action dim.
  Vec log_variance(const Vec& s) const;
  Mat log_variance(const Mat& states) const;
};

/// Sum over dims of 0.5 [ln 2 pi + beta_j + (a_j - mu_j)^2 exp(-beta_j)].
/// Optional outputs receive d/dmu and d/dbeta.
double gaussian_nll(const Vec& mu, const Vec& beta, const Vec& a, Vec* grad_mu = nullptr,
                    Vec* grad_beta = nullptr);
double gaussian_nll(const GaussianBehaviorModel& model, const Vec& s, const Vec& a);

/// Mean NLL over a batch of normalized states and its parameter gradients
/// (mean network, log-variance network). Gradients through the clamp are
/// zero outside (beta_min, beta_max).
struct BehaviorLoss {
  double value = 0.0;
  Vec mean_grad;
  Vec log_var_grad;
};
BehaviorLoss behavior_nll_batch(const GaussianBehaviorModel& model, const Mat& states,
                                const Mat& actions, bool with_grad = true);

struct BehaviorFitReport {
  double initial_nll = 0.0;
  /// Mean minibatch NLL per epoch.
  std::vector<double> epoch_nll;
};

/// Maximum-likelihood fit on the dataset (states normalized with the
/// dataset's statistics). Throws TrainingError on a non-finite loss.
GaussianBehaviorModel fit_behavior(const OfflineDataset& dataset, const BehaviorConfig& config,
                                   Rng& rng, BehaviorFitReport* report = nullptr);

/// Mean over action dims of the clamped log-variance at a normalized state.
double beta_hat(const GaussianBehaviorModel& model, const Vec& s);
/// Batched beta_hat, one entry per column.
Vec beta_hat(const GaussianBehaviorModel& model, const Mat& states);

struct WeightConfig {
  double zeta1 = 10.0;
  double zeta2 = 5.0;
};

/// lambda = 1 / (1 + exp(zeta1 * beta_hat - zeta2)), evaluated without overflow.
double compute_lambda(const WeightConfig& config, double beta_hat);

/// zeta2 placing the sigmoid midpoint at `center` log-variance for the given
/// zeta1 (i.e. lambda(center) = 0.5).
double centered_zeta2(double zeta1, double center);

/// Checkpoint as `<dir>/behavior_mean.orlw`, `<dir>/behavior_logvar.orlw`
/// and `<dir>/behavior.json` (clamp bounds, normalization statistics).
void save_behavior(const GaussianBehaviorModel& model, const std::filesystem::path& dir);
GaussianBehaviorModel load_behavior(const std::filesystem::path& dir);

}  // namespace orl
