#include "orl/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "orl/errors.hpp"

namespace orl {

std::uint64_t Manifest::total() const {
  std::uint64_t total = 0;
  for (const auto& s : sources) total += s.count;
  return total;
}

bool NormStats::operator==(const NormStats& other) const {
  return mean.size() == other.mean.size() && std.size() == other.std.size() &&
         mean == other.mean && std == other.std;
}

OfflineDataset::OfflineDataset(Mat states, Mat actions, Vec rewards, Mat next_states,
                               std::vector<std::uint8_t> terminals, Manifest manifest,
                               double action_bound)
    : states_(std::move(states)),
      actions_(std::move(actions)),
      rewards_(std::move(rewards)),
      next_states_(std::move(next_states)),
      terminals_(std::move(terminals)),
      manifest_(std::move(manifest)) {
  const Eigen::Index n = rewards_.size();
  if (states_.cols() != n || actions_.cols() != n || next_states_.cols() != n ||
      static_cast<Eigen::Index>(terminals_.size()) != n) {
    throw InvalidInput("dataset: column counts disagree");
  }
  if (next_states_.rows() != states_.rows()) {
    throw InvalidInput("dataset: state and next-state dims differ");
  }
  if (states_.rows() <= 0 || actions_.rows() <= 0) {
    throw InvalidInput("dataset: obs_dim and act_dim must be positive");
  }
  if (manifest_.total() != static_cast<std::uint64_t>(n)) {
    throw InvalidInput("dataset: manifest counts sum to " + std::to_string(manifest_.total()) +
                       " but dataset holds " + std::to_string(n) + " transitions");
  }
  if (!states_.allFinite() || !actions_.allFinite() || !rewards_.allFinite() ||
      !next_states_.allFinite()) {
    throw InvalidInput("dataset: non-finite values");
  }
  if (n > 0 && actions_.cwiseAbs().maxCoeff() > action_bound) {
    throw InvalidInput("dataset: action outside declared bounds");
  }
  if (n > 0) stats_ = compute_norm_stats(states_, next_states_);
}

const NormStats& OfflineDataset::stats() const {
  if (!stats_) throw InvalidInput("dataset: empty dataset has no normalization statistics");
  return *stats_;
}

Transition OfflineDataset::transition(std::size_t i) const {
  if (i >= size()) throw InvalidInput("dataset: transition index out of range");
  const auto c = static_cast<Eigen::Index>(i);
  return {states_.col(c), actions_.col(c), rewards_[c], next_states_.col(c), terminals_[i] != 0};
}

std::size_t OfflineDataset::source_of(std::size_t i) const {
  if (i >= size()) throw InvalidInput("dataset: transition index out of range");
  std::uint64_t end = 0;
  for (std::size_t k = 0; k < manifest_.sources.size(); ++k) {
    end += manifest_.sources[k].count;
    if (i < end) return k;
  }
  throw InvalidInput("dataset: manifest does not cover transition index");
}

bool OfflineDataset::operator==(const OfflineDataset& other) const {
  const auto same = [](const auto& x, const auto& y) {
    return x.rows() == y.rows() && x.cols() == y.cols() && x == y;
  };
  return same(states_, other.states_) && same(actions_, other.actions_) &&
         same(rewards_, other.rewards_) && same(next_states_, other.next_states_) &&
         terminals_ == other.terminals_ && manifest_ == other.manifest_ &&
         stats_ == other.stats_;
}

DatasetBuilder::DatasetBuilder(int obs_dim, int act_dim) : obs_dim_(obs_dim), act_dim_(act_dim) {
  if (obs_dim <= 0 || act_dim <= 0) throw InvalidInput("dataset: dims must be positive");
}

void DatasetBuilder::reserve(std::size_t n) {
  states_.reserve(n * static_cast<std::size_t>(obs_dim_));
  next_states_.reserve(n * static_cast<std::size_t>(obs_dim_));
  actions_.reserve(n * static_cast<std::size_t>(act_dim_));
  rewards_.reserve(n);
  terminals_.reserve(n);
}

void DatasetBuilder::add(const Transition& t) {
  if (t.state.size() != obs_dim_ || t.next_state.size() != obs_dim_ ||
      t.action.size() != act_dim_) {
    throw InvalidInput("dataset: transition dims do not match builder");
  }
  states_.insert(states_.end(), t.state.data(), t.state.data() + obs_dim_);
  actions_.insert(actions_.end(), t.action.data(), t.action.data() + act_dim_);
  rewards_.push_back(t.reward);
  next_states_.insert(next_states_.end(), t.next_state.data(), t.next_state.data() + obs_dim_);
  terminals_.push_back(t.terminal ? 1 : 0);
}

OfflineDataset DatasetBuilder::build(Manifest manifest, double action_bound) && {
  const auto n = static_cast<Eigen::Index>(rewards_.size());
  Mat states = Eigen::Map<const Mat>(states_.data(), obs_dim_, n);
  Mat actions = Eigen::Map<const Mat>(actions_.data(), act_dim_, n);
  Vec rewards = Eigen::Map<const Vec>(rewards_.data(), n);
  Mat next_states = Eigen::Map<const Mat>(next_states_.data(), obs_dim_, n);
  return OfflineDataset(std::move(states), std::move(actions), std::move(rewards),
                        std::move(next_states), std::move(terminals_), std::move(manifest),
                        action_bound);
}

NormStats compute_norm_stats(const Mat& states, const Mat& next_states) {
  const Eigen::Index count = states.cols() + next_states.cols();
  if (count == 0) throw InvalidInput("norm stats: dataset is empty");
  const double denom = static_cast<double>(count);
  NormStats stats;
  stats.mean = (states.rowwise().sum() + next_states.rowwise().sum()) / denom;
  const Vec sq = (states.colwise() - stats.mean).cwiseAbs2().rowwise().sum() +
                 (next_states.colwise() - stats.mean).cwiseAbs2().rowwise().sum();
  stats.std = (sq / denom).cwiseSqrt().cwiseMax(kNormStdFloor);
  return stats;
}

NormStats compute_norm_stats(const OfflineDataset& dataset) {
  return compute_norm_stats(dataset.states(), dataset.next_states());
}

Vec normalize_state(const NormStats& stats, const Vec& s) {
  if (s.size() != stats.mean.size()) throw InvalidInput("normalize: state dim mismatch");
  return (s - stats.mean).cwiseQuotient(stats.std);
}

Vec denormalize_state(const NormStats& stats, const Vec& s) {
  if (s.size() != stats.mean.size()) throw InvalidInput("denormalize: state dim mismatch");
  return s.cwiseProduct(stats.std) + stats.mean;
}

Mat normalize_states(const NormStats& stats, const Mat& states) {
  if (states.rows() != stats.mean.size()) throw InvalidInput("normalize: state dim mismatch");
  return (states.colwise() - stats.mean).array().colwise() / stats.std.array();
}

OfflineDataset mix_datasets(const OfflineDataset& a, const OfflineDataset& b) {
  if (a.obs_dim() != b.obs_dim() || a.act_dim() != b.act_dim()) {
    throw InvalidInput("mix: datasets have different obs/act dims");
  }
  if (a.manifest().env != b.manifest().env) {
    throw InvalidInput("mix: env mismatch ('" + a.manifest().env + "' vs '" + b.manifest().env +
                       "')");
  }
  const auto na = static_cast<Eigen::Index>(a.size());
  const auto nb = static_cast<Eigen::Index>(b.size());
  const auto cat = [&](const Mat& x, const Mat& y) {
    Mat out(x.rows(), na + nb);
    out << x, y;
    return out;
  };
  Vec rewards(na + nb);
  rewards << a.rewards(), b.rewards();
  std::vector<std::uint8_t> terminals = a.terminals();
  terminals.insert(terminals.end(), b.terminals().begin(), b.terminals().end());

  Manifest manifest = a.manifest();
  manifest.sources.insert(manifest.sources.end(), b.manifest().sources.begin(),
                          b.manifest().sources.end());
  return OfflineDataset(cat(a.states(), b.states()), cat(a.actions(), b.actions()),
                        std::move(rewards), cat(a.next_states(), b.next_states()),
                        std::move(terminals), std::move(manifest));
}

Minibatch sample_minibatch(const OfflineDataset& dataset, int n, Rng& rng, bool with_negatives) {
  if (n <= 0) throw InvalidInput("sample_minibatch: batch size must be positive");
  if (dataset.empty()) throw InvalidInput("sample_minibatch: dataset is empty");
  const std::size_t size = dataset.size();
  Minibatch batch;
  batch.indices.resize(static_cast<std::size_t>(n));
  for (auto& idx : batch.indices) idx = rng.index(size);

  batch.states.resize(dataset.obs_dim(), n);
  batch.next_states.resize(dataset.obs_dim(), n);
  batch.actions.resize(dataset.act_dim(), n);
  batch.rewards.resize(n);
  batch.terminals.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto c = static_cast<Eigen::Index>(batch.indices[static_cast<std::size_t>(i)]);
    batch.states.col(i) = dataset.states().col(c);
    batch.actions.col(i) = dataset.actions().col(c);
    batch.rewards[i] = dataset.rewards()[c];
    batch.next_states.col(i) = dataset.next_states().col(c);
    batch.terminals[i] = dataset.terminals()[static_cast<std::size_t>(c)] ? 1.0 : 0.0;
  }
  if (with_negatives) {
    batch.negatives1.resize(dataset.act_dim(), n);
    batch.negatives2.resize(dataset.act_dim(), n);
    for (int i = 0; i < n; ++i) {
      batch.negatives1.col(i) = dataset.actions().col(static_cast<Eigen::Index>(rng.index(size)));
    }
    for (int i = 0; i < n; ++i) {
      batch.negatives2.col(i) = dataset.actions().col(static_cast<Eigen::Index>(rng.index(size)));
    }
  }
  return batch;
}

void normalize_minibatch(const NormStats& stats, Minibatch& batch) {
  batch.states = normalize_states(stats, batch.states);
  batch.next_states = normalize_states(stats, batch.next_states);
}

}  // namespace orl
