#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

#include "orl/data/dataset.hpp"
#include "orl/numkit/rng.hpp"

namespace orl {

enum class EnvKind { kTwinPeaks1D, kPointMass2D };

std::string_view to_string(EnvKind kind);
/// "twinpeaks1d" or "pointmass2d"; throws InvalidInput otherwise.
EnvKind parse_env_kind(std::string_view name);

/// Undiscounted reference returns anchoring the normalized score.
struct ReferenceReturns {
  double random = 0.0;
  double medium = 0.0;
  double expert = 0.0;
};

struct EnvSpec {
  EnvKind kind = EnvKind::kTwinPeaks1D;
  std::string name;
  int obs_dim = 0;
  int act_dim = 0;
  int horizon = 1;
  double action_bound = 1.0;
  ReferenceReturns reference;

  /// 100 * (J - J_random) / (J_expert - J_random)
  double normalized_score(double undiscounted_return) const;
};

/// Spec with reference returns measured by `measure_reference_returns`
/// (computed once per process and cached).
const EnvSpec& env_spec(EnvKind kind);
/// Spec with caller-supplied reference returns; no measurement.
EnvSpec env_spec(EnvKind kind, const ReferenceReturns& reference);

struct StepResult {
  Vec next_state;
  double reward = 0.0;
  bool terminal = false;
};

/// Contextual bandit: reward has two narrow peaks at +-0.7 and a valley at 0.
StepResult twinpeaks_step(const Vec& s, const Vec& a);
double twinpeaks_reward(double a);

/// Double integrator in the plane, state (px, py, vx, vy), goal (1, 1).
StepResult pointmass_step(const Vec& s, const Vec& a);

class Environment {
 public:
  explicit Environment(EnvKind kind);

  EnvKind kind() const { return kind_; }
  int obs_dim() const;
  int act_dim() const;
  int horizon() const;

  Vec reset(Rng& rng);
  /// Clips the action to the bounds before stepping.
  StepResult step(const Vec& action);
  const Vec& state() const { return state_; }

 private:
  EnvKind kind_;
  Vec state_;
};

enum class PolicyTier { kRandom, kMedium, kExpert };

std::string_view to_string(PolicyTier tier);
PolicyTier parse_policy_tier(std::string_view name);

/// Behavior policy: maps a raw state to an action in bounds.
using ScriptedPolicy = std::function<Vec(const Vec& state, Rng& rng)>;
/// Deterministic policy evaluated on raw states.
using Actor = std::function<Vec(const Vec& state)>;

/// twinpeaks: random = U[-1, 1]; expert = equal mixture of N(+-0.7, 0.05^2);
/// medium = same mixture with std 0.25. pointmass: clip(2 (g - p) - v, +-1)
/// plus N(0, 0.5^2) (medium) or N(0, 0.1^2) (expert) noise; random = uniform
/// actions. All actions clipped to bounds.
ScriptedPolicy scripted_policy(PolicyTier tier, EnvKind env);

struct EpisodeResult {
  double total_return = 0.0;
  int length = 0;
  bool terminated_early = false;
};

EpisodeResult run_episode(Environment& env, const std::function<Vec(const Vec&, Rng&)>& policy,
                          Rng& rng);

/// Exactly n transitions from consecutive seeded rollouts; episodes cut at
/// the horizon (time-limit cuts are not marked terminal).
OfflineDataset collect_dataset(EnvKind env, PolicyTier tier, std::size_t n, std::uint64_t seed);

struct EvalResult {
  double mean_return = 0.0;
  double std_return = 0.0;
  double normalized_score = 0.0;
};

EvalResult evaluate_policy(const EnvSpec& spec, const Actor& actor, int episodes,
                           std::uint64_t seed);
/// Same, for a stochastic scripted policy (used to measure anchors).
EvalResult evaluate_scripted(const EnvSpec& spec, PolicyTier tier, int episodes,
                             std::uint64_t seed);

inline constexpr std::uint64_t kReferenceSeed = 20211;
inline constexpr int kReferenceEpisodes = 100;

/// Mean undiscounted return of each scripted tier over seeded episodes.
ReferenceReturns measure_reference_returns(EnvKind env, int episodes = kReferenceEpisodes,
                                           std::uint64_t seed = kReferenceSeed);

/// JSON registry: {"twinpeaks1d": {"random": .., "medium": .., "expert": ..}, ...}
void save_env_registry(const std::filesystem::path& path);
/// Specs for every env from a registry file.
EnvSpec load_env_spec(const std::filesystem::path& registry, EnvKind kind);

}  // namespace orl
