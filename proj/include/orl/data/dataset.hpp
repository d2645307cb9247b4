#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "orl/numkit/rng.hpp"
#include "orl/numkit/types.hpp"

namespace orl {

struct Transition {
  Vec state;
  Vec action;
  double reward = 0.0;
  Vec next_state;
  bool terminal = false;
};

/// One contiguous block of transitions produced by a single generating policy.
struct SourceRecord {
  std::string label;
  std::uint64_t count = 0;
  std::uint64_t seed = 0;

  bool operator==(const SourceRecord&) const = default;
};

/// Provenance. Sources are listed in storage order, so transition i belongs
/// to the source whose cumulative count range contains i.
struct Manifest {
  std::string env;
  std::vector<SourceRecord> sources;
  std::uint64_t seed = 0;

  std::uint64_t total() const;
  bool operator==(const Manifest&) const = default;
};

/// Per-dimension state normalization statistics.
struct NormStats {
  Vec mean;
  Vec std;

  bool operator==(const NormStats& other) const;
};

inline constexpr double kNormStdFloor = 1e-3;

/// Immutable columnar container of offline experience (one transition per column).
class OfflineDataset {
 public:
  OfflineDataset() = default;
  /// Validates every invariant; throws InvalidInput on violation.
  OfflineDataset(Mat states, Mat actions, Vec rewards, Mat next_states,
                 std::vector<std::uint8_t> terminals, Manifest manifest,
                 double action_bound = 1.0);

  std::size_t size() const { return static_cast<std::size_t>(rewards_.size()); }
  bool empty() const { return size() == 0; }
  int obs_dim() const { return static_cast<int>(states_.rows()); }
  int act_dim() const { return static_cast<int>(actions_.rows()); }

  const Mat& states() const { return states_; }
  const Mat& actions() const { return actions_; }
  const Vec& rewards() const { return rewards_; }
  const Mat& next_states() const { return next_states_; }
  const std::vector<std::uint8_t>& terminals() const { return terminals_; }
  const Manifest& manifest() const { return manifest_; }

  /// Throws InvalidInput when the dataset is empty.
  const NormStats& stats() const;
  bool has_stats() const { return stats_.has_value(); }

  Transition transition(std::size_t i) const;
  /// Index into manifest().sources of the block that holds transition i.
  std::size_t source_of(std::size_t i) const;

  bool operator==(const OfflineDataset& other) const;

 private:
  Mat states_;
  Mat actions_;
  Vec rewards_;
  Mat next_states_;
  std::vector<std::uint8_t> terminals_;
  Manifest manifest_;
  std::optional<NormStats> stats_;
};

/// Accumulates transitions, then freezes them into an OfflineDataset.
class DatasetBuilder {
 public:
  DatasetBuilder(int obs_dim, int act_dim);
  void reserve(std::size_t n);
  void add(const Transition& t);
  std::size_t size() const { return rewards_.size(); }
  OfflineDataset build(Manifest manifest, double action_bound = 1.0) &&;

 private:
  int obs_dim_;
  int act_dim_;
  std::vector<double> states_;
  std::vector<double> actions_;
  std::vector<double> rewards_;
  std::vector<double> next_states_;
  std::vector<std::uint8_t> terminals_;
};

/// Population mean/std over all states and next states, std floored at kNormStdFloor.
NormStats compute_norm_stats(const OfflineDataset& dataset);
NormStats compute_norm_stats(const Mat& states, const Mat& next_states);

Vec normalize_state(const NormStats& stats, const Vec& s);
Vec denormalize_state(const NormStats& stats, const Vec& s);
/// Column-wise normalization of a state batch.
Mat normalize_states(const NormStats& stats, const Mat& states);

/// Concatenation (a's rows first); manifest sources appended in order;
/// statistics recomputed on the mixture.
OfflineDataset mix_datasets(const OfflineDataset& a, const OfflineDataset& b);

struct Minibatch {
  std::vector<std::size_t> indices;
  Mat states;
  Mat actions;
  Vec rewards;
  Mat next_states;
  Vec terminals;  // 1.0 for terminal rows
  /// Negative action pairs (a1, a2) per row, drawn over the whole dataset
  /// irrespective of state. Empty when negatives were not requested.
  Mat negatives1;
  Mat negatives2;

  bool has_negatives() const { return negatives1.cols() > 0; }
};

/// n transition rows uniformly with replacement, then (when requested) 2n
/// action rows uniformly with replacement for the negative pairs.
Minibatch sample_minibatch(const OfflineDataset& dataset, int n, Rng& rng,
                           bool with_negatives = true);

/// Normalizes states and next states of a minibatch in place.
void normalize_minibatch(const NormStats& stats, Minibatch& batch);

}  // namespace orl
