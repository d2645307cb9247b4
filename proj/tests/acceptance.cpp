// Acceptance suite. Runs every criterion at its stated tolerance and prints
// one PASS/FAIL line each; exits nonzero if any criterion fails.
//
//   orl_acceptance [--only 4,5] [--artifacts DIR]
//
// With --artifacts, the runs behind criteria 4-7 leave their report and
// metrics files under DIR for the plotting scripts.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "orl/agents/bc_trainer.hpp"
#include "orl/agents/td3_agent.hpp"
#include "orl/behavior/behavior.hpp"
#include "orl/cli/commands.hpp"
#include "orl/cli/metrics.hpp"
#include "orl/data/dataset_io.hpp"
#include "orl/envs/envs.hpp"
#include "orl/regularizers/regularizers.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace orl;
using orl::test::fd_gradient;
using orl::test::max_rel_error;
using orl::test::random_mat;
using orl::test::random_vec;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

std::string join(const std::vector<double>& v, const char* format = "%.3f") {
  std::string out;
  for (double x : v) out += (out.empty() ? "" : " ") + fmt(format, x);
  return out;
}

/// Optional sink for files the plotting scripts read.
struct Artifacts {
  std::optional<fs::path> root;

  std::optional<fs::path> dir(const std::string& name) const {
    if (!root) return std::nullopt;
    const fs::path d = *root / name;
    fs::create_directories(d);
    return d;
  }
  RecordHook metrics(const std::string& name, std::unique_ptr<MetricsWriter>& holder) const {
    if (!root) return {};
    const fs::path p = *root / (name + ".jsonl");
    fs::create_directories(p.parent_path());
    fs::remove(p);
    holder = std::make_unique<MetricsWriter>(p);
    MetricsWriter* w = holder.get();
    return [w](const TrainRecord& r) { w->write(r); };
  }
};

// --- 1. gradient suite ------------------------------------------------------

struct GradTally {
  int instances = 0;
  double worst = 0.0;
  void add(double err) {
    ++instances;
    worst = std::max(worst, err);
  }
};

Minibatch random_batch(int obs, int act, int n, Rng& rng) {
  Minibatch b;
  b.states = random_mat(obs, n, rng, -2, 2);
  b.actions = random_mat(act, n, rng, -0.95, 0.95);
  b.rewards = random_vec(n, rng);
  b.next_states = random_mat(obs, n, rng, -2, 2);
  b.terminals = Vec::Zero(n);
  b.negatives1 = random_mat(act, n, rng, -0.95, 0.95);
  b.negatives2 = random_mat(act, n, rng, -0.95, 0.95);
  for (int i = 0; i < n; ++i) b.indices.push_back(static_cast<std::size_t>(i));
  return b;
}

/// Network with every parameter jittered, biases included.
MlpNet random_net(const std::vector<int>& dims, OutputActivation head, Rng& rng) {
  MlpNet net = MlpNet::make(dims, head, 1.0, rng);
  net.params() += random_vec(net.params().size(), rng, -0.1, 0.1);
  return net;
}

/// Smallest |pre-activation| of any rectifier unit over the columns of `x`.
/// Central differences are meaningless when a unit sits within the stencil
/// of its kink, so instances closer than a margin are redrawn.
double kink_distance(const MlpNet& net, Mat x) {
  double closest = std::numeric_limits<double>::infinity();
  for (int l = 0; l + 1 < net.num_layers(); ++l) {
    const Mat z = (net.weight(l) * x).colwise() + Vec(net.bias(l));
    closest = std::min(closest, z.cwiseAbs().minCoeff());
    x = z.cwiseMax(0.0);
  }
  return closest;
}

struct GradInstance {
  Minibatch batch;
  MlpNet critic;
  Vec targets;
  MlpNet actor;
  MlpNet actor_critic;
  Vec weights;
  GaussianBehaviorModel behavior;
  StochasticPolicy gauss;
  Mat noise;
  int mc_samples = 3;
};

GradInstance draw_instance(Rng& rng) {
  const int obs = 1 + static_cast<int>(rng.index(4));
  const int act = 1 + static_cast<int>(rng.index(3));
  const int n = 4 + static_cast<int>(rng.index(6));
  const std::vector<int> hidden{4 + static_cast<int>(rng.index(9)),
                                4 + static_cast<int>(rng.index(9))};
  GradInstance g;
  g.batch = random_batch(obs, act, n, rng);
  g.critic = random_net(layer_dims(obs + act, hidden, 1), OutputActivation::kNone, rng);
  g.targets = random_vec(n, rng, -3, 3);
  g.actor = random_net(layer_dims(obs, hidden, act), OutputActivation::kScaledTanh, rng);
  g.actor_critic = random_net(layer_dims(obs + act, hidden, 1), OutputActivation::kNone, rng);
  g.actor_critic.bias(g.actor_critic.num_layers() - 1)[0] += 1.0;
  g.weights = random_vec(n, rng, 0.05, 1.0);
  BehaviorConfig bcfg;
  bcfg.hidden = hidden;
  g.behavior = GaussianBehaviorModel::make(obs, act, bcfg, rng);
  g.behavior.mean_net = random_net(g.behavior.mean_net.dims(), OutputActivation::kNone, rng);
  g.behavior.log_var_net = random_net(g.behavior.log_var_net.dims(), OutputActivation::kNone, rng);
  g.behavior.stats = {Vec::Zero(obs), Vec::Ones(obs)};
  g.gauss = StochasticPolicy::make(obs, act, hidden, rng);
  g.gauss.mean_net = random_net(g.gauss.mean_net.dims(), OutputActivation::kNone, rng);
  g.gauss.log_std_net = random_net(g.gauss.log_std_net.dims(), OutputActivation::kNone, rng);
  g.noise = random_mat(act, g.mc_samples * n, rng, -2, 2);
  return g;
}

double kink_distance(const GradInstance& g) {
  Mat sa(g.batch.states.rows() + g.batch.actions.rows(), g.batch.states.cols());
  sa << g.batch.states, g.batch.actions;
  // The actor's own actions feed its critic; any action can reach it, so
  // check the data actions and the current policy output.
  Mat spi(sa.rows(), sa.cols());
  spi << g.batch.states, g.actor.forward(g.batch.states);
  const Mat& s = g.batch.states;
  return std::min({kink_distance(g.critic, sa), kink_distance(g.actor, s),
                   kink_distance(g.actor_critic, spi), kink_distance(g.behavior.mean_net, s),
                   kink_distance(g.behavior.log_var_net, s), kink_distance(g.gauss.mean_net, s),
                   kink_distance(g.gauss.log_std_net, s)});
}

Outcome criterion_gradients(const Artifacts&) {
  constexpr int kInstances = 20;
  constexpr double kTol = 1e-5;
  constexpr double kKinkMargin = 1e-4;
  std::map<std::string, GradTally> tally;
  int redrawn = 0;

  for (int i = 0; i < kInstances; ++i) {
    Rng rng(7000 + static_cast<std::uint64_t>(i));
    GradInstance g = draw_instance(rng);
    while (kink_distance(g) < kKinkMargin) {
      ++redrawn;
      g = draw_instance(rng);
    }
    const Minibatch& batch = g.batch;

    {  // critic MSE against fixed targets
      const CriticLoss loss = critic_mse_loss(g.critic, batch.states, batch.actions, g.targets);
      const auto f = [&](const Vec& p) {
        MlpNet c = g.critic;
        c.params() = p;
        return critic_mse_loss(c, batch.states, batch.actions, g.targets, false).value;
      };
      tally["critic MSE"].add(max_rel_error(loss.grad, fd_gradient(f, g.critic.params())));
    }

    const auto det_check = [&](const std::string& name, const RegularizerSpec& spec) {
      const BcLoss loss = bc_batch_loss(BcPolicy(g.actor), batch, spec, nullptr, Mat());
      const auto f = [&](const Vec& p) {
        MlpNet a = g.actor;
        a.params() = p;
        return bc_batch_loss(BcPolicy(a), batch, spec, nullptr, Mat(), false).value;
      };
      tally[name].add(max_rel_error(loss.grad_primary, fd_gradient(f, g.actor.params())));
    };
    det_check("MSE-BC", {RegularizerKind::kMseBc});
    for (double alpha : {0.0, 0.5, 1.0}) {
      det_check(fmt("RKL-contrastive a=%.1f", alpha), {RegularizerKind::kRklContrastive, alpha});
    }

    // The same regularizers inside the TD3 actor objective.
    for (auto [objective, alpha] :
         {std::pair{ActorObjective::kTd3Bc, 0.0}, std::pair{ActorObjective::kTd3Rkl, 0.0},
          std::pair{ActorObjective::kTd3Rkl, 0.5}, std::pair{ActorObjective::kTd3Rkl, 1.0}}) {
      const ActorLoss loss =
          td3_actor_loss(g.actor, g.actor_critic, batch, g.weights, objective, alpha, 2.5);
      const auto f = [&](const Vec& p) {
        MlpNet a = g.actor;
        a.params() = p;
        return td3_actor_loss(a, g.actor_critic, batch, g.weights, objective, alpha, 2.5,
                              loss.q_scale, false)
            .value;
      };
      tally["TD3 actor objective"].add(max_rel_error(loss.grad, fd_gradient(f, g.actor.params())));
    }

    {  // Gaussian NLL of the behavior model, both heads
      const BehaviorLoss loss = behavior_nll_batch(g.behavior, batch.states, batch.actions);
      const auto f_mean = [&](const Vec& p) {
        GaussianBehaviorModel m = g.behavior;
        m.mean_net.params() = p;
        return behavior_nll_batch(m, batch.states, batch.actions, false).value;
      };
      const auto f_var = [&](const Vec& p) {
        GaussianBehaviorModel m = g.behavior;
        m.log_var_net.params() = p;
        return behavior_nll_batch(m, batch.states, batch.actions, false).value;
      };
      tally["Gaussian NLL"].add(std::max(
          max_rel_error(loss.mean_grad, fd_gradient(f_mean, g.behavior.mean_net.params())),
          max_rel_error(loss.log_var_grad, fd_gradient(f_var, g.behavior.log_var_net.params()))));
    }

    for (auto [name, kind] : {std::pair{"forward-KL", RegularizerKind::kForwardKl},
                              std::pair{"reverse-KL MC", RegularizerKind::kReverseKlStochastic}}) {
      const RegularizerSpec spec{kind, 1.0, g.mc_samples};
      const BcLoss loss = bc_batch_loss(BcPolicy(g.gauss), batch, spec, &g.behavior, g.noise);
      const auto f_mean = [&](const Vec& p) {
        StochasticPolicy q = g.gauss;
        q.mean_net.params() = p;
        return bc_batch_loss(BcPolicy(q), batch, spec, &g.behavior, g.noise, false).value;
      };
      const auto f_std = [&](const Vec& p) {
        StochasticPolicy q = g.gauss;
        q.log_std_net.params() = p;
        return bc_batch_loss(BcPolicy(q), batch, spec, &g.behavior, g.noise, false).value;
      };
      tally[name].add(std::max(
          max_rel_error(loss.grad_primary, fd_gradient(f_mean, g.gauss.mean_net.params())),
          max_rel_error(loss.grad_secondary, fd_gradient(f_std, g.gauss.log_std_net.params()))));
    }
  }

  Outcome out{true, ""};
  for (const auto& [name, t] : tally) {
    out.pass = out.pass && t.instances >= kInstances && t.worst < kTol;
    out.detail += fmt("%s%s %d x %.1e", out.detail.empty() ? "" : "; ", name.c_str(),
                      t.instances, t.worst);
  }
  out.detail += fmt("; %d draws redrawn near a rectifier kink", redrawn);
  return out;
}

// --- 2. reduction identity --------------------------------------------------

Outcome criterion_reduction(const Artifacts&) {
  constexpr int kSteps = 2000;
  const OfflineDataset ds = collect_dataset(EnvKind::kPointMass2D, PolicyTier::kMedium, 20000, 21);
  BehaviorConfig bcfg;
  bcfg.hidden = {32, 32};
  bcfg.epochs = 1;
  Rng brng(22);
  const auto behavior = std::make_shared<const GaussianBehaviorModel>(fit_behavior(ds, bcfg, brng));

  Outcome out{true, ""};
  for (std::uint64_t seed : {1, 2}) {
    Td3AgentConfig rkl;
    rkl.objective = ActorObjective::kTd3Rkl;
    rkl.hidden = {64, 64};
    rkl.hp.total_steps = kSteps;
    rkl.regularizer = {RegularizerKind::kRklContrastive, 0.0};
    rkl.weights = {0.0, 1000.0};
    Td3AgentConfig bc = rkl;
    bc.objective = ActorObjective::kTd3Bc;
    bc.regularizer = {RegularizerKind::kMseBc};

    Td3Agent a(4, 2, 1.0, ds.stats(), rkl, behavior, seed);
    Td3Agent b(4, 2, 1.0, ds.stats(), bc, nullptr, seed);
    int diverged = 0;
    for (int t = 1; t <= kSteps && diverged == 0; ++t) {
      a.train_step(ds);
      b.train_step(ds);
      const bool same = a.actor() == b.actor() && a.critic1() == b.critic1() &&
                        a.critic2() == b.critic2() && a.target_actor() == b.target_actor() &&
                        a.target_critic1() == b.target_critic1() &&
                        a.target_critic2() == b.target_critic2();
      if (!same) diverged = t;
    }
    const bool ok = diverged == 0 && !a.uses_negatives() && a.actor_updates() == kSteps / 2;
    out.pass = out.pass && ok;
    out.detail += fmt("%sseed %llu: %s", out.detail.empty() ? "" : "; ",
                      static_cast<unsigned long long>(seed),
                      diverged ? fmt("diverged at step %d", diverged).c_str()
                               : fmt("bit-identical over %d steps", kSteps).c_str());
  }
  return out;
}

// --- 3. weight function -----------------------------------------------------

Outcome criterion_weights(const Artifacts&) {
  const WeightConfig w{10.0, 5.0};
  const double l_half = compute_lambda(w, 0.5);
  const double l0 = compute_lambda(w, 0.0);
  const double l1 = compute_lambda(w, 1.0);
  bool monotone = true;
  constexpr int kGrid = 1000;
  double prev = compute_lambda(w, -1.0);
  for (int i = 1; i < kGrid; ++i) {
    const double b = -1.0 + 3.0 * i / (kGrid - 1);
    const double l = compute_lambda(w, b);
    monotone = monotone && l < prev;
    prev = l;
  }
  const bool pass = l_half == 0.5 && std::abs(l0 - 0.9933071) < 1e-6 &&
                    std::abs(l1 - 0.0066929) < 1e-6 && monotone;
  return {pass, fmt("lambda(0.5)=%.17g lambda(0)=%.9f lambda(1)=%.9f, strictly decreasing on "
                    "%d points of [-1, 2]: %s",
                    l_half, l0, l1, kGrid, monotone ? "yes" : "no")};
}

// --- 4. uncertainty by state region -----------------------------------------

/// Moves every state of `ds` to one side of zero (TwinPeaks states are 1-d
/// and carry no information about the action).
OfflineDataset fold_states(const OfflineDataset& ds, double side) {
  DatasetBuilder b(ds.obs_dim(), ds.act_dim());
  b.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    Transition t = ds.transition(i);
    t.state[0] = side * std::abs(t.state[0]);
    t.next_state[0] = side * std::abs(t.next_state[0]);
    b.add(t);
  }
  return std::move(b).build(ds.manifest());
}

double median(Vec v) {
  std::vector<double> x(v.data(), v.data() + v.size());
  const auto mid = x.begin() + static_cast<std::ptrdiff_t>(x.size() / 2);
  std::nth_element(x.begin(), mid, x.end());
  return *mid;
}

Outcome criterion_uncertainty(const Artifacts& artifacts) {
  constexpr int kSeeds = 5;
  constexpr double kMargin = 0.2;
  Outcome out{true, ""};
  std::vector<double> gaps;
  for (int k = 0; k < kSeeds; ++k) {
    const std::uint64_t seed = 40 + static_cast<std::uint64_t>(k);
    // Region A (s < 0): bimodal expert actions. Region B (s >= 0): uniform
    // random actions. The expert's two modes give it the larger variance.
    const OfflineDataset region_a =
        fold_states(collect_dataset(EnvKind::kTwinPeaks1D, PolicyTier::kExpert, 10000, seed), -1.0);
    const OfflineDataset region_b = fold_states(
        collect_dataset(EnvKind::kTwinPeaks1D, PolicyTier::kRandom, 10000, seed + 100), 1.0);
    const OfflineDataset ds = mix_datasets(region_a, region_b);

    BehaviorConfig cfg;
    cfg.hidden = {64, 64};
    cfg.epochs = 30;
    cfg.optimizer.lr = 1e-3;
    Rng rng(seed + 200);
    const GaussianBehaviorModel model = fit_behavior(ds, cfg, rng);
    const Vec beta = beta_hat(model, normalize_states(ds.stats(), ds.states()));
    const WeightConfig w{10.0, centered_zeta2(10.0, median(beta))};

    double beta_a = 0.0, beta_b = 0.0, lam_a = 0.0, lam_b = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const double b = beta[static_cast<Eigen::Index>(i)];
      const double l = compute_lambda(w, b);
      if (i < region_a.size()) {
        beta_a += b;
        lam_a += l;
      } else {
        beta_b += b;
        lam_b += l;
      }
    }
    beta_a /= static_cast<double>(region_a.size());
    lam_a /= static_cast<double>(region_a.size());
    beta_b /= static_cast<double>(region_b.size());
    lam_b /= static_cast<double>(region_b.size());
    const bool ok = beta_a > beta_b && lam_b - lam_a > kMargin;
    out.pass = out.pass && ok;
    gaps.push_back(lam_b - lam_a);
    out.detail += fmt("%sbeta A/B %.2f/%.2f lambda A/B %.3f/%.3f", out.detail.empty() ? "" : "; ",
                      beta_a, beta_b, lam_a, lam_b);

    if (const auto d = artifacts.dir(fmt("uncertainty/seed_%d", k))) {
      std::ofstream(*d / "lambda_histogram.json") << to_json(lambda_report(model, ds, w, 20)).dump(2);
      const StateWeights sw = state_weights(model, ds, w);
      std::ofstream lines(*d / "state_weights.jsonl");
      for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto c = static_cast<Eigen::Index>(i);
        lines << nlohmann::json{{"index", i},
                                {"region", i < region_a.size() ? "A" : "B"},
                                {"state", ds.states()(0, c)},
                                {"beta_hat", sw.beta_hat[c]},
                                {"lambda", sw.lambda[c]}}
              << '\n';
      }
    }
  }
  out.detail = fmt("min lambda gap %.3f over %d seeds (", *std::min_element(gaps.begin(), gaps.end()),
                   kSeeds) +
               out.detail + ")";
  return out;
}

// --- 5. mode vs midpoint ----------------------------------------------------

Td3AgentConfig twinpeaks_td3(ActorObjective objective) {
  Td3AgentConfig c;
  c.objective = objective;
  c.hidden = {32, 32};
  c.hp.total_steps = 20000;
  c.hp.batch_size = 256;
  c.hp.eval_interval = 2000;
  c.hp.q_norm_alpha = 0.02;
  c.critic_optimizer.lr = 1e-3;
  c.regularizer = {objective == ActorObjective::kTd3Rkl ? RegularizerKind::kRklContrastive
                                                        : RegularizerKind::kMseBc,
                   1.0};
  return c;
}

Outcome criterion_modes(const Artifacts& artifacts) {
  constexpr int kSeeds = 5;
  const EnvSpec& spec = env_spec(EnvKind::kTwinPeaks1D);
  const OfflineDataset ds = collect_dataset(EnvKind::kTwinPeaks1D, PolicyTier::kExpert, 10000, 50);
  BehaviorConfig bcfg;
  bcfg.hidden = {32, 32};
  bcfg.epochs = 20;
  bcfg.optimizer.lr = 1e-3;
  Rng brng(51);
  const auto behavior = std::make_shared<const GaussianBehaviorModel>(fit_behavior(ds, bcfg, brng));

  int rkl_ok = 0, bc_ok = 0;
  std::string rkl_detail, bc_detail;
  for (int k = 0; k < kSeeds; ++k) {
    const std::uint64_t seed = 500 + static_cast<std::uint64_t>(k);
    for (auto objective : {ActorObjective::kTd3Rkl, ActorObjective::kTd3Bc}) {
      const bool is_rkl = objective == ActorObjective::kTd3Rkl;
      Td3Agent agent(1, 1, 1.0, ds.stats(), twinpeaks_td3(objective),
                     is_rkl ? behavior : nullptr, seed);
      std::unique_ptr<MetricsWriter> writer;
      const std::string name = fmt("modes/%s_seed_%d", is_rkl ? "td3rkl" : "td3bc", k);
      const EvalHook hook = [&](const Actor& actor) {
        return evaluate_policy(spec, actor, 20, seed + 1000);
      };
      train(agent, ds, artifacts.root ? hook : EvalHook{}, artifacts.metrics(name, writer));

      double mean_abs = 0.0;
      constexpr int kGrid = 201;
      for (int i = 0; i < kGrid; ++i) {
        mean_abs += std::abs(agent.act(Vec::Constant(1, -1.0 + 2.0 * i / (kGrid - 1)))[0]) / kGrid;
      }
      const double reward = evaluate_policy(spec, agent.as_actor(), 200, seed + 1000).mean_return;
      std::string& detail = is_rkl ? rkl_detail : bc_detail;
      detail += fmt("%s%.2f/%.2f", detail.empty() ? "" : " ", mean_abs, reward);
      if (is_rkl && mean_abs > 0.5 && reward > 0.5) ++rkl_ok;
      if (!is_rkl && mean_abs < 0.3 && reward < 0.1) ++bc_ok;
    }
  }
  return {rkl_ok >= 4 && bc_ok >= 4,
          fmt("TD3+RKL on a mode %d/5 (|mu|/reward %s); TD3+BC in the valley %d/5 (%s)", rkl_ok,
              rkl_detail.c_str(), bc_ok, bc_detail.c_str())};
}

// --- 6. mixed-dataset advantage ---------------------------------------------

constexpr int kPointMassSeeds = 5;

std::shared_ptr<const GaussianBehaviorModel> pointmass_behavior(const OfflineDataset& ds,
                                                                std::uint64_t seed) {
  BehaviorConfig cfg;
  cfg.hidden = {64, 64};
  cfg.epochs = 10;
  Rng rng(seed);
  return std::make_shared<const GaussianBehaviorModel>(fit_behavior(ds, cfg, rng));
}

std::vector<double> pointmass_td3_scores(const OfflineDataset& ds, ActorObjective objective,
                                         const std::shared_ptr<const GaussianBehaviorModel>& behavior,
                                         const WeightConfig& weights, const std::string& tag,
                                         const Artifacts& artifacts) {
  const EnvSpec& spec = env_spec(EnvKind::kPointMass2D);
  std::vector<double> scores;
  for (int k = 0; k < kPointMassSeeds; ++k) {
    const std::uint64_t seed = 600 + static_cast<std::uint64_t>(k);
    Td3AgentConfig c;
    c.objective = objective;
    c.hidden = {64, 64};
    c.hp.total_steps = 30000;
    c.hp.batch_size = 256;
    c.hp.eval_interval = 5000;
    c.weights = weights;
    c.regularizer = {objective == ActorObjective::kTd3Rkl ? RegularizerKind::kRklContrastive
                                                          : RegularizerKind::kMseBc,
                     0.5};
    Td3Agent agent(4, 2, 1.0, ds.stats(), c,
                   objective == ActorObjective::kTd3Rkl ? behavior : nullptr, seed);
    std::unique_ptr<MetricsWriter> writer;
    const EvalHook hook = [&](const Actor& actor) {
      return evaluate_policy(spec, actor, 10, seed + 1000);
    };
    train(agent, ds, artifacts.root ? hook : EvalHook{},
          artifacts.metrics(fmt("%s_seed_%d", tag.c_str(), k), writer));
    scores.push_back(evaluate_policy(spec, agent.as_actor(), 10, seed + 1000).normalized_score);
  }
  return scores;
}

WeightConfig centered_weights(const GaussianBehaviorModel& model, const OfflineDataset& ds) {
  return {10.0, centered_zeta2(10.0, median(beta_hat(model, normalize_states(ds.stats(), ds.states()))))};
}

Outcome criterion_mixed(const Artifacts& artifacts) {
  const OfflineDataset expert = collect_dataset(EnvKind::kPointMass2D, PolicyTier::kExpert, 100000, 61);
  const OfflineDataset mixed = mix_datasets(
      collect_dataset(EnvKind::kPointMass2D, PolicyTier::kRandom, 100000, 62), expert);

  const auto mixed_behavior = pointmass_behavior(mixed, 63);
  const auto expert_behavior = pointmass_behavior(expert, 64);
  // One zeta per environment, centered on the mixture where both variance levels occur.
  const WeightConfig env_w = centered_weights(*mixed_behavior, mixed);

  const auto rkl_mixed = pointmass_td3_scores(mixed, ActorObjective::kTd3Rkl, mixed_behavior,
                                              env_w, "mixed/td3rkl", artifacts);
  const auto bc_mixed =
      pointmass_td3_scores(mixed, ActorObjective::kTd3Bc, nullptr, {}, "mixed/td3bc", artifacts);
  const auto rkl_expert = pointmass_td3_scores(expert, ActorObjective::kTd3Rkl, expert_behavior,
                                               env_w, "expert/td3rkl", artifacts);
  const auto bc_expert =
      pointmass_td3_scores(expert, ActorObjective::kTd3Bc, nullptr, {}, "expert/td3bc", artifacts);

  const double rm = mean_of(rkl_mixed), bm = mean_of(bc_mixed);
  const double re = mean_of(rkl_expert), be = mean_of(bc_expert);
  return {rm >= bm && re >= 90.0 && be >= 90.0,
          fmt("mixture TD3+RKL %.2f [%s] vs TD3+BC %.2f [%s]; expert TD3+RKL %.2f, TD3+BC %.2f", rm,
              join(rkl_mixed, "%.1f").c_str(), bm, join(bc_mixed, "%.1f").c_str(), re, be)};
}

// --- 7. BC-only regularizers ------------------------------------------------

Outcome criterion_bc_only(const Artifacts& artifacts) {
  const EnvSpec& spec = env_spec(EnvKind::kPointMass2D);
  const OfflineDataset ds = collect_dataset(EnvKind::kPointMass2D, PolicyTier::kExpert, 100000, 71);
  const auto behavior = pointmass_behavior(ds, 72);
  const std::vector<int> hidden{64, 64};

  std::map<RegularizerKind, std::vector<double>> scores;
  for (const RegularizerSpec& reg :
       {RegularizerSpec{RegularizerKind::kMseBc}, RegularizerSpec{RegularizerKind::kRklContrastive, 0.25},
        RegularizerSpec{RegularizerKind::kReverseKlStochastic, 1.0, 10}}) {
    for (int k = 0; k < kPointMassSeeds; ++k) {
      const std::uint64_t seed = 700 + static_cast<std::uint64_t>(k);
      Rng rng(seed);
      Rng init = rng.split(0);
      BcPolicy policy =
          reg.stochastic()
              ? BcPolicy(StochasticPolicy::make(4, 2, hidden, init))
              : BcPolicy(MlpNet::make(layer_dims(4, hidden, 2), OutputActivation::kScaledTanh, 1.0, init));
      BcConfig cfg;
      cfg.epochs = 10;
      cfg.eval_every_epochs = 1;
      std::unique_ptr<MetricsWriter> writer;
      const EvalHook hook = [&](const Actor& actor) {
        return evaluate_policy(spec, actor, 10, seed + 1000);
      };
      train_bc_only(policy, ds, reg, cfg, rng, behavior.get(), artifacts.root ? hook : EvalHook{},
                    artifacts.metrics(fmt("bc_only/%s_seed_%d", std::string(to_string(reg.kind)).c_str(), k),
                                      writer));
      scores[reg.kind].push_back(
          evaluate_policy(spec, bc_actor(policy, ds.stats()), 10, seed + 1000).normalized_score);
    }
  }
  const double mse = mean_of(scores[RegularizerKind::kMseBc]);
  const double rkl = mean_of(scores[RegularizerKind::kRklContrastive]);
  const double rev = mean_of(scores[RegularizerKind::kReverseKlStochastic]);
  return {mse >= 85.0 && rkl >= 85.0 && rev < mse && rev < rkl,
          fmt("mse-bc %.3f, rkl-contrastive %.3f, reverse-kl-stochastic %.3f (per seed %s)", mse,
              rkl, rev, join(scores[RegularizerKind::kReverseKlStochastic]).c_str())};
}

// --- 8. data and formats ----------------------------------------------------

Outcome criterion_data(const Artifacts&) {
  orl::test::TempDir dir("acceptance");
  std::vector<std::string> failures;

  const OfflineDataset a = collect_dataset(EnvKind::kPointMass2D, PolicyTier::kRandom, 5000, 81);
  const OfflineDataset b = collect_dataset(EnvKind::kPointMass2D, PolicyTier::kExpert, 3000, 82);
  save_dataset(a, dir / "a.orld");
  const OfflineDataset back = load_dataset(dir / "a.orld");
  save_dataset(back, dir / "again.orld");
  const bool round_trip = back == a && orl::test::read_file(dir / "a.orld") ==
                                           orl::test::read_file(dir / "again.orld");
  if (!round_trip) failures.push_back("round trip");

  const OfflineDataset ab = mix_datasets(a, b);
  const OfflineDataset aab = mix_datasets(mix_datasets(a, a), b);
  const bool additive = ab.size() == a.size() + b.size() && ab.manifest().total() == ab.size() &&
                        aab.size() == 2 * a.size() + b.size();
  if (!additive) failures.push_back("mixing sizes");

  // Ten rows with distinct actions so every negative names its source row.
  DatasetBuilder tiny(1, 1);
  for (int i = 0; i < 10; ++i) {
    tiny.add({Vec::Constant(1, 0.0), Vec::Constant(1, 0.1 * i - 0.45), 0.0, Vec::Constant(1, 0.0), true});
  }
  const OfflineDataset rows = std::move(tiny).build(Manifest{"tiny", {{"tiny", 10, 0}}, 0});
  constexpr int kDraws = 100000;
  std::vector<double> c1(10, 0.0), c2(10, 0.0);
  Rng rng(83);
  for (int drawn = 0; drawn < kDraws; drawn += 100) {
    const Minibatch mb = sample_minibatch(rows, 100, rng);
    for (int j = 0; j < 100; ++j) {
      c1[static_cast<std::size_t>(std::lround((mb.negatives1(0, j) + 0.45) * 10))] += 1;
      c2[static_cast<std::size_t>(std::lround((mb.negatives2(0, j) + 0.45) * 10))] += 1;
    }
  }
  const double expected = kDraws / 10.0;
  const double sigma = std::sqrt(kDraws * 0.1 * 0.9);
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    worst = std::max({worst, std::abs(c1[i] - expected) / sigma, std::abs(c2[i] - expected) / sigma});
  }
  if (worst > 3.0) failures.push_back("negative uniformity");

  std::string detail = fmt("round trip bit-exact: %s; mixing additive: %s; negatives worst "
                           "deviation %.2f sigma over %d draws",
                           round_trip ? "yes" : "no", additive ? "yes" : "no", worst, kDraws);
  return {failures.empty(), detail};
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome(const Artifacts&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria for the orl toolkit"};
  std::vector<int> only;
  std::string artifacts_dir;
  app.add_option("--only", only, "Run just these criteria")->delimiter(',');
  app.add_option("--artifacts", artifacts_dir, "Keep reports and metrics of criteria 4-7 here");
  CLI11_PARSE(app, argc, argv);

  Artifacts artifacts;
  if (!artifacts_dir.empty()) artifacts.root = artifacts_dir;

  const std::vector<Criterion> criteria = {
      {1, "gradient suite", 60, criterion_gradients},
      {2, "reduction identity", 120, criterion_reduction},
      {3, "lambda weights", 1e9, criterion_weights},
      {4, "uncertainty by state region", 300, criterion_uncertainty},
      {5, "mode vs midpoint", 600, criterion_modes},
      {6, "mixed-dataset advantage", 1800, criterion_mixed},
      {7, "BC-only regularizers", 900, criterion_bc_only},
      {8, "data and formats", 1e9, criterion_data},
  };
  const std::set<int> selected(only.begin(), only.end());

  int failed = 0;
  for (const Criterion& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run(artifacts);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_seconds;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("criterion %d %s: %s  [%s] (%.1f s%s)\n", c.id, c.name, pass ? "PASS" : "FAIL",
                o.detail.c_str(), secs, in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
