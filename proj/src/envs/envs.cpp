#include "orl/envs/envs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <string>

#include "json.hpp"
#include "orl/errors.hpp"

namespace orl {
namespace {

constexpr double kPeak = 0.7;
constexpr double kPeakVariance = 0.01;
constexpr double kPointMassDt = 0.1;
constexpr double kGoalRadius = 0.05;
constexpr double kGoalBonus = 10.0;

Vec clip(const Vec& v, double bound) { return v.cwiseMax(-bound).cwiseMin(bound); }

double goal_distance(const Vec& p) { return std::hypot(p[0] - 1.0, p[1] - 1.0); }

}  // namespace

std::string_view to_string(EnvKind kind) {
  return kind == EnvKind::kTwinPeaks1D ? "twinpeaks1d" : "pointmass2d";
}

EnvKind parse_env_kind(std::string_view name) {
  if (name == "twinpeaks1d") return EnvKind::kTwinPeaks1D;
  if (name == "pointmass2d") return EnvKind::kPointMass2D;
  throw InvalidInput("unknown env '" + std::string(name) + "'");
}

std::string_view to_string(PolicyTier tier) {
  switch (tier) {
    case PolicyTier::kRandom:
      return "random";
    case PolicyTier::kMedium:
      return "medium";
    case PolicyTier::kExpert:
      return "expert";
  }
  return "unknown";
}

PolicyTier parse_policy_tier(std::string_view name) {
  if (name == "random") return PolicyTier::kRandom;
  if (name == "medium") return PolicyTier::kMedium;
  if (name == "expert") return PolicyTier::kExpert;
  throw InvalidInput("unknown policy '" + std::string(name) + "'");
}

double EnvSpec::normalized_score(double undiscounted_return) const {
  return 100.0 * (undiscounted_return - reference.random) / (reference.expert - reference.random);
}

EnvSpec env_spec(EnvKind kind, const ReferenceReturns& reference) {
  EnvSpec spec;
  spec.kind = kind;
  spec.name = std::string(to_string(kind));
  Environment env(kind);
  spec.obs_dim = env.obs_dim();
  spec.act_dim = env.act_dim();
  spec.horizon = env.horizon();
  spec.reference = reference;
  if (!(reference.expert > reference.random)) {
    throw InvalidInput("env spec: expert reference return must exceed random");
  }
  return spec;
}

const EnvSpec& env_spec(EnvKind kind) {
  static std::once_flag once;
  static EnvSpec specs[2];
  std::call_once(once, [] {
    specs[0] = env_spec(EnvKind::kTwinPeaks1D, measure_reference_returns(EnvKind::kTwinPeaks1D));
    specs[1] = env_spec(EnvKind::kPointMass2D, measure_reference_returns(EnvKind::kPointMass2D));
  });
  return specs[kind == EnvKind::kTwinPeaks1D ? 0 : 1];
}

double twinpeaks_reward(double a) {
  const double up = a - kPeak;
  const double down = a + kPeak;
  return std::exp(-up * up / (2.0 * kPeakVariance)) + std::exp(-down * down / (2.0 * kPeakVariance));
}

StepResult twinpeaks_step(const Vec& s, const Vec& a) {
  if (s.size() != 1 || a.size() != 1) throw InvalidInput("twinpeaks: expects 1-d state and action");
  return {s, twinpeaks_reward(a[0]), true};
}

StepResult pointmass_step(const Vec& s, const Vec& a) {
  if (s.size() != 4 || a.size() != 2) throw InvalidInput("pointmass: expects 4-d state, 2-d action");
  const Vec p = s.head<2>();
  const Vec v = s.tail<2>();
  const Vec v_next = clip(v + kPointMassDt * a, 1.0);
  const Vec p_next = clip(p + kPointMassDt * v_next, 2.0);
  StepResult out;
  out.next_state.resize(4);
  out.next_state << p_next, v_next;
  const double dist = goal_distance(p_next);
  out.reward = -dist;
  if (dist < kGoalRadius) {
    out.reward += kGoalBonus;
    out.terminal = true;
  }
  return out;
}

Environment::Environment(EnvKind kind) : kind_(kind) {}

int Environment::obs_dim() const { return kind_ == EnvKind::kTwinPeaks1D ? 1 : 4; }
int Environment::act_dim() const { return kind_ == EnvKind::kTwinPeaks1D ? 1 : 2; }
int Environment::horizon() const { return kind_ == EnvKind::kTwinPeaks1D ? 1 : 100; }

Vec Environment::reset(Rng& rng) {
  if (kind_ == EnvKind::kTwinPeaks1D) {
    state_ = Vec::Constant(1, rng.uniform(-1.0, 1.0));
  } else {
    state_.resize(4);
    state_ << -1.0, -1.0, 0.0, 0.0;
  }
  return state_;
}

StepResult Environment::step(const Vec& action) {
  if (action.size() != act_dim()) throw InvalidInput("env step: action dim mismatch");
  const Vec a = clip(action, 1.0);
  StepResult r = kind_ == EnvKind::kTwinPeaks1D ? twinpeaks_step(state_, a) : pointmass_step(state_, a);
  state_ = r.next_state;
  return r;
}

ScriptedPolicy scripted_policy(PolicyTier tier, EnvKind env) {
  if (env == EnvKind::kTwinPeaks1D) {
    if (tier == PolicyTier::kRandom) {
      return [](const Vec&, Rng& rng) { return Vec::Constant(1, rng.uniform(-1.0, 1.0)); };
    }
    const double spread = tier == PolicyTier::kExpert ? 0.05 : 0.25;
    return [spread](const Vec&, Rng& rng) {
      const double mode = rng.bernoulli(0.5) ? kPeak : -kPeak;
      return Vec::Constant(1, std::clamp(rng.normal(mode, spread), -1.0, 1.0));
    };
  }
  if (tier == PolicyTier::kRandom) {
    return [](const Vec&, Rng& rng) {
      Vec a(2);
      a[0] = rng.uniform(-1.0, 1.0);
      a[1] = rng.uniform(-1.0, 1.0);
      return a;
    };
  }
  const double noise = tier == PolicyTier::kExpert ? 0.1 : 0.5;
  return [noise](const Vec& s, Rng& rng) {
    const Vec p = s.head<2>();
    const Vec v = s.tail<2>();
    const Vec goal = Vec::Ones(2);
    Vec a = clip(2.0 * (goal - p) - v, 1.0);
    for (Eigen::Index j = 0; j < a.size(); ++j) a[j] += rng.normal(0.0, noise);
    return clip(a, 1.0);
  };
}

EpisodeResult run_episode(Environment& env, const std::function<Vec(const Vec&, Rng&)>& policy,
                          Rng& rng) {
  EpisodeResult result;
  Vec s = env.reset(rng);
  for (int t = 0; t < env.horizon(); ++t) {
    const StepResult step = env.step(policy(s, rng));
    result.total_return += step.reward;
    result.length += 1;
    s = step.next_state;
    if (step.terminal) {
      result.terminated_early = result.length < env.horizon();
      break;
    }
  }
  return result;
}

OfflineDataset collect_dataset(EnvKind kind, PolicyTier tier, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InvalidInput("collect_dataset: n must be >= 1");
  Environment env(kind);
  const ScriptedPolicy policy = scripted_policy(tier, kind);
  Rng env_rng = Rng(seed).split(0);
  Rng policy_rng = Rng(seed).split(1);

  DatasetBuilder builder(env.obs_dim(), env.act_dim());
  builder.reserve(n);
  while (builder.size() < n) {
    Vec s = env.reset(env_rng);
    for (int t = 0; t < env.horizon() && builder.size() < n; ++t) {
      const Vec a = policy(s, policy_rng);
      const StepResult step = env.step(a);
      builder.add({s, a, step.reward, step.next_state, step.terminal});
      s = step.next_state;
      if (step.terminal) break;
    }
  }
  Manifest manifest{std::string(to_string(kind)), {{std::string(to_string(tier)), n, seed}}, seed};
  return std::move(builder).build(std::move(manifest));
}

namespace {

EvalResult summarize(const EnvSpec& spec, const std::vector<double>& returns) {
  EvalResult r;
  const auto n = static_cast<double>(returns.size());
  for (double x : returns) r.mean_return += x;
  r.mean_return /= n;
  double sq = 0.0;
  for (double x : returns) sq += (x - r.mean_return) * (x - r.mean_return);
  r.std_return = std::sqrt(sq / n);
  r.normalized_score = spec.normalized_score(r.mean_return);
  return r;
}

std::vector<double> rollout_returns(EnvKind kind,
                                    const std::function<Vec(const Vec&, Rng&)>& policy,
                                    int episodes, std::uint64_t seed) {
  if (episodes <= 0) throw InvalidInput("evaluation: episodes must be positive");
  Environment env(kind);
  std::vector<double> returns;
  returns.reserve(static_cast<std::size_t>(episodes));
  for (int e = 0; e < episodes; ++e) {
    Rng rng = Rng(seed).split(static_cast<std::uint64_t>(e));
    returns.push_back(run_episode(env, policy, rng).total_return);
  }
  return returns;
}

}  // namespace

EvalResult evaluate_policy(const EnvSpec& spec, const Actor& actor, int episodes,
                           std::uint64_t seed) {
  const auto policy = [&actor](const Vec& s, Rng&) { return actor(s); };
  return summarize(spec, rollout_returns(spec.kind, policy, episodes, seed));
}

EvalResult evaluate_scripted(const EnvSpec& spec, PolicyTier tier, int episodes,
                             std::uint64_t seed) {
  return summarize(spec, rollout_returns(spec.kind, scripted_policy(tier, spec.kind), episodes, seed));
}

ReferenceReturns measure_reference_returns(EnvKind kind, int episodes, std::uint64_t seed) {
  const auto mean_return = [&](PolicyTier tier) {
    const auto returns = rollout_returns(kind, scripted_policy(tier, kind), episodes, seed);
    double sum = 0.0;
    for (double x : returns) sum += x;
    return sum / static_cast<double>(returns.size());
  };
  return {mean_return(PolicyTier::kRandom), mean_return(PolicyTier::kMedium),
          mean_return(PolicyTier::kExpert)};
}

void save_env_registry(const std::filesystem::path& path) {
  nlohmann::json j;
  for (EnvKind kind : {EnvKind::kTwinPeaks1D, EnvKind::kPointMass2D}) {
    const EnvSpec& spec = env_spec(kind);
    j[spec.name] = {{"random", spec.reference.random},
                    {"medium", spec.reference.medium},
                    {"expert", spec.reference.expert},
                    {"episodes", kReferenceEpisodes},
                    {"seed", kReferenceSeed}};
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

EnvSpec load_env_spec(const std::filesystem::path& registry, EnvKind kind) {
  std::ifstream in(registry);
  if (!in) throw Error("cannot open env registry " + registry.string());
  try {
    const auto j = nlohmann::json::parse(in).at(std::string(to_string(kind)));
    return env_spec(kind, {j.at("random").get<double>(), j.at("medium").get<double>(),
                           j.at("expert").get<double>()});
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad env registry " + registry.string() + ": " + e.what());
  }
}

}  // namespace orl
