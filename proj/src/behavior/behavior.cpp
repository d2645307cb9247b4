#include "orl/behavior/behavior.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <string>

#include "json.hpp"
#include "orl/errors.hpp"
#include "orl/numkit/checkpoint.hpp"

namespace orl {
namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void check_behavior_dims(const GaussianBehaviorModel& model, Eigen::Index s, Eigen::Index a) {
  if (s != model.obs_dim() || a != model.act_dim()) {
    throw InvalidInput("behavior: state/action dims do not match the model");
  }
}

std::vector<double> to_std_vector(const Vec& v) { return {v.data(), v.data() + v.size()}; }

Vec to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

GaussianBehaviorModel GaussianBehaviorModel::make(int obs_dim, int act_dim,
                                                  const BehaviorConfig& config, Rng& rng) {
  if (!(config.beta_min < config.beta_max)) {
    throw InvalidInput("behavior: beta_min must be below beta_max");
  }
  GaussianBehaviorModel model;
  const auto dims = layer_dims(obs_dim, config.hidden, act_dim);
  model.mean_net = MlpNet::make(dims, OutputActivation::kNone, 1.0, rng);
  model.log_var_net = MlpNet::make(dims, OutputActivation::kNone, 1.0, rng);
  model.beta_min = config.beta_min;
  model.beta_max = config.beta_max;
  model.stats = {Vec::Zero(obs_dim), Vec::Ones(obs_dim)};
  return model;
}

Vec GaussianBehaviorModel::mean(const Vec& s) const { return mean_net.forward(s); }

Vec GaussianBehaviorModel::log_variance(const Vec& s) const {
  return log_var_net.forward(s).cwiseMax(beta_min).cwiseMin(beta_max);
}

Mat GaussianBehaviorModel::log_variance(const Mat& states) const {
  return log_var_net.forward(states).cwiseMax(beta_min).cwiseMin(beta_max);
}

double gaussian_nll(const Vec& mu, const Vec& beta, const Vec& a, Vec* grad_mu, Vec* grad_beta) {
  if (mu.size() != a.size() || beta.size() != a.size()) {
    throw InvalidInput("gaussian_nll: dimension mismatch");
  }
  if (!mu.allFinite() || !beta.allFinite() || !a.allFinite()) {
    throw InvalidInput("gaussian_nll: non-finite input");
  }
  const Vec diff = a - mu;
  const Vec inv_var = (-beta).array().exp();
  const Vec scaled_sq = diff.cwiseAbs2().cwiseProduct(inv_var);
  if (grad_mu) *grad_mu = -diff.cwiseProduct(inv_var);
  if (grad_beta) *grad_beta = (0.5 * (1.0 - scaled_sq.array())).matrix();
  return 0.5 * (kLog2Pi * static_cast<double>(a.size()) + beta.sum() + scaled_sq.sum());
}

double gaussian_nll(const GaussianBehaviorModel& model, const Vec& s, const Vec& a) {
  check_behavior_dims(model, s.size(), a.size());
  return gaussian_nll(model.mean(s), model.log_variance(s), a);
}

BehaviorLoss behavior_nll_batch(const GaussianBehaviorModel& model, const Mat& states,
                                const Mat& actions, bool with_grad) {
  check_behavior_dims(model, states.rows(), actions.rows());
  const auto n = states.cols();
  if (n == 0 || actions.cols() != n) throw InvalidInput("behavior: empty or ragged batch");

  const ForwardPass mean_pass = model.mean_net.forward_cached(states);
  const ForwardPass var_pass = model.log_var_net.forward_cached(states);
  const Mat& mu = mean_pass.output;
  const Mat& raw = var_pass.output;
  const Mat beta = raw.cwiseMax(model.beta_min).cwiseMin(model.beta_max);

  const Mat diff = actions - mu;
  const Mat inv_var = (-beta).array().exp();
  const Mat scaled_sq = diff.cwiseAbs2().cwiseProduct(inv_var);
  const double inv_n = 1.0 / static_cast<double>(n);

  BehaviorLoss loss;
  loss.value =
      0.5 * (kLog2Pi * static_cast<double>(actions.rows()) * static_cast<double>(n) + beta.sum() +
             scaled_sq.sum()) *
      inv_n;
  if (!std::isfinite(loss.value)) return loss;
  if (with_grad) {
    const Mat up_mu = -diff.cwiseProduct(inv_var) * inv_n;
    const Mat inside =
        ((raw.array() > model.beta_min) && (raw.array() < model.beta_max)).cast<double>();
    const Mat up_beta = (0.5 * (1.0 - scaled_sq.array()) * inside.array() * inv_n).matrix();
    loss.mean_grad = model.mean_net.backward(mean_pass, up_mu).params;
    loss.log_var_grad = model.log_var_net.backward(var_pass, up_beta).params;
  }
  return loss;
}

GaussianBehaviorModel fit_behavior(const OfflineDataset& dataset, const BehaviorConfig& config,
                                   Rng& rng, BehaviorFitReport* report) {
  if (dataset.empty()) throw InvalidInput("fit_behavior: dataset is empty");
  if (config.epochs <= 0 || config.batch_size <= 0) {
    throw InvalidInput("fit_behavior: epochs and batch size must be positive");
  }
  Rng init_rng = rng.split(0);
  Rng order_rng = rng.split(1);
  GaussianBehaviorModel model =
      GaussianBehaviorModel::make(dataset.obs_dim(), dataset.act_dim(), config, init_rng);
  model.stats = dataset.stats();

  const Mat states = normalize_states(model.stats, dataset.states());
  const Mat& actions = dataset.actions();
  const std::size_t n = dataset.size();
  const auto batch = static_cast<std::size_t>(config.batch_size);

  AdamState mean_opt(model.mean_net.num_params(), config.optimizer);
  AdamState var_opt(model.log_var_net.num_params(), config.optimizer);

  if (report) {
    report->epoch_nll.clear();
    report->initial_nll = behavior_nll_batch(model, states, actions, false).value;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Mat batch_states(states.rows(), 0);
  Mat batch_actions(actions.rows(), 0);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng.engine());
    double epoch_sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t len = std::min(batch, n - start);
      batch_states.resize(states.rows(), static_cast<Eigen::Index>(len));
      batch_actions.resize(actions.rows(), static_cast<Eigen::Index>(len));
      for (std::size_t i = 0; i < len; ++i) {
        const auto src = static_cast<Eigen::Index>(order[start + i]);
        batch_states.col(static_cast<Eigen::Index>(i)) = states.col(src);
        batch_actions.col(static_cast<Eigen::Index>(i)) = actions.col(src);
      }
      const BehaviorLoss loss = behavior_nll_batch(model, batch_states, batch_actions);
      if (!std::isfinite(loss.value)) {
        throw TrainingError("fit_behavior: non-finite NLL at epoch " + std::to_string(epoch) +
                            ", step " + std::to_string(steps));
      }
      adam_step(model.mean_net.params(), loss.mean_grad, mean_opt);
      adam_step(model.log_var_net.params(), loss.log_var_grad, var_opt);
      epoch_sum += loss.value;
      ++steps;
    }
    if (report) report->epoch_nll.push_back(epoch_sum / static_cast<double>(steps));
  }
  return model;
}

double beta_hat(const GaussianBehaviorModel& model, const Vec& s) {
  if (s.size() != model.obs_dim()) throw InvalidInput("beta_hat: state dim mismatch");
  return model.log_variance(s).mean();
}

Vec beta_hat(const GaussianBehaviorModel& model, const Mat& states) {
  if (states.rows() != model.obs_dim()) throw InvalidInput("beta_hat: state dim mismatch");
  return model.log_variance(states).colwise().mean().transpose();
}

double compute_lambda(const WeightConfig& config, double beta_hat) {
  const double x = config.zeta1 * beta_hat - config.zeta2;
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(x));
}

double centered_zeta2(double zeta1, double center) { return zeta1 * center; }

void save_behavior(const GaussianBehaviorModel& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_mlp(model.mean_net, dir / "behavior_mean.orlw");
  save_mlp(model.log_var_net, dir / "behavior_logvar.orlw");
  const nlohmann::json meta = {
      {"beta_min", model.beta_min},
      {"beta_max", model.beta_max},
      {"state_mean", to_std_vector(model.stats.mean)},
      {"state_std", to_std_vector(model.stats.std)},
      {"mean_weights", "behavior_mean.orlw"},
      {"log_var_weights", "behavior_logvar.orlw"},
  };
  std::ofstream out(dir / "behavior.json", std::ios::trunc);
  if (!out) throw Error("cannot write " + (dir / "behavior.json").string());
  out << meta.dump(2) << '\n';
}

GaussianBehaviorModel load_behavior(const std::filesystem::path& dir) {
  std::ifstream in(dir / "behavior.json");
  if (!in) throw Error("missing behavior checkpoint in " + dir.string());
  GaussianBehaviorModel model;
  try {
    const auto meta = nlohmann::json::parse(in);
    model.beta_min = meta.at("beta_min").get<double>();
    model.beta_max = meta.at("beta_max").get<double>();
    model.stats.mean = to_vec(meta.at("state_mean").get<std::vector<double>>());
    model.stats.std = to_vec(meta.at("state_std").get<std::vector<double>>());
    model.mean_net = load_mlp(dir / meta.at("mean_weights").get<std::string>());
    model.log_var_net = load_mlp(dir / meta.at("log_var_weights").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad behavior sidecar: " + std::string(e.what()));
  }
  if (model.mean_net.dims() != model.log_var_net.dims() ||
      model.stats.mean.size() != model.obs_dim()) {
    throw FormatError("behavior checkpoint networks disagree in shape");
  }
  return model;
}

}  // namespace orl
