#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "orl/behavior/behavior.hpp"
#include "orl/cli/run_config.hpp"
#include "orl/data/dataset.hpp"

namespace orl {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// 1 for configuration and input errors, 2 for everything else.
int exit_code_for(const std::exception& e);

struct CollectOptions {
  std::string env;
  std::string policy;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::filesystem::path out;
};

/// Rolls out a scripted policy tier and writes the dataset and its manifest.
OfflineDataset cmd_collect(const CollectOptions& options, std::ostream& log);

/// Concatenates two or more datasets in argument order.
OfflineDataset cmd_mix(const std::vector<std::filesystem::path>& inputs,
                       const std::filesystem::path& out, std::ostream& log);

struct FitBehaviorOptions {
  std::filesystem::path dataset;
  std::filesystem::path out;
  std::uint64_t seed = 0;
  BehaviorConfig config;
  WeightConfig weights;
  /// Replace zeta2 so that lambda = 0.5 at the median beta_hat of the data.
  bool center_zeta2 = false;
  int bins = 20;
};

struct SourceWeights {
  std::string label;
  std::uint64_t count = 0;
  double mean_beta_hat = 0.0;
  double mean_lambda = 0.0;
  std::vector<std::uint64_t> histogram;
};

/// Per-state BC weights over a dataset, binned on [0, 1] and split by
/// manifest source. Every histogram sums to its source's count.
struct LambdaReport {
  WeightConfig weights;
  double median_beta_hat = 0.0;
  std::vector<double> edges;
  std::vector<std::uint64_t> histogram;
  std::vector<SourceWeights> sources;
};

nlohmann::json to_json(const LambdaReport& report);

/// beta_hat and lambda for every state of `dataset` (column order).
struct StateWeights {
  Vec beta_hat;
  Vec lambda;
};
StateWeights state_weights(const GaussianBehaviorModel& model, const OfflineDataset& dataset,
                           const WeightConfig& weights);

LambdaReport lambda_report(const GaussianBehaviorModel& model, const OfflineDataset& dataset,
                           const WeightConfig& weights, int bins);

/// Fits the behavior model and writes to `out`: the checkpoint,
/// `lambda_histogram.json`, `state_weights.jsonl` (one line per state with
/// its source, raw state, beta_hat and lambda) and `fit_report.json`.
LambdaReport cmd_fit_behavior(const FitBehaviorOptions& options, std::ostream& log);

/// Trains one run. The output directory receives `config.json` (the full
/// config, defaults filled), `metrics.jsonl`, `checkpoint/` and
/// `summary.json`; the summary is also returned. Refuses a directory that
/// already holds metrics.
nlohmann::json cmd_train(const RunConfig& config, std::ostream& log);

/// Re-evaluates the checkpoint of a finished run directory.
EvalResult cmd_eval(const std::filesystem::path& run_dir, std::optional<int> episodes,
                    std::optional<std::uint64_t> seed, std::ostream& log);

struct ScoreAggregate {
  std::size_t count = 0;
  double mean = 0.0;
  /// Population standard deviation; exactly 0 for one run or equal scores.
  double std = 0.0;
};
ScoreAggregate aggregate_scores(const std::vector<double>& scores);

struct SweepRun {
  std::uint64_t seed = 0;
  std::filesystem::path run_dir;
  bool ok = false;
  double normalized_score = 0.0;
  std::string error;
};

struct SweepResult {
  std::vector<SweepRun> runs;
  ScoreAggregate aggregate;
  /// Some seeds failed; the aggregate covers the successful ones only.
  bool partial = false;
};

/// Runs the template once per seed in `<output_dir>/seed_<n>` on up to
/// `jobs` threads, then writes `sweep_summary.json` and `sweep_summary.tsv`
/// to the template's output directory.
SweepResult cmd_sweep(const RunConfig& config_template, const std::vector<std::uint64_t>& seeds,
                      int jobs, std::ostream& log);

}  // namespace orl
