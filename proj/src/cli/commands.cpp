#include "orl/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "orl/agents/bc_trainer.hpp"
#include "orl/agents/serialization.hpp"
#include "orl/agents/td3_agent.hpp"
#include "orl/cli/metrics.hpp"
#include "orl/data/dataset_io.hpp"
#include "orl/envs/envs.hpp"
#include "orl/errors.hpp"

namespace orl {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error("write to " + path.string() + " failed");
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

std::string describe(const Manifest& m) {
  std::string out = m.env + ", " + std::to_string(m.total()) + " transitions:";
  for (const auto& s : m.sources) {
    out += " " + s.label + "=" + std::to_string(s.count) + " (seed " + std::to_string(s.seed) + ")";
  }
  return out;
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

/// Dataset, environment and the dims the run will train with must agree.
void check_dataset_matches(const RunConfig& config, const OfflineDataset& dataset,
                           const EnvSpec& spec) {
  std::vector<std::string> errors;
  if (dataset.manifest().env != spec.name) {
    errors.push_back("dataset was collected on '" + dataset.manifest().env + "', config says '" +
                     spec.name + "'");
  }
  if (dataset.obs_dim() != spec.obs_dim || dataset.act_dim() != spec.act_dim) {
    errors.push_back("dataset dims do not match " + spec.name);
  }
  if (dataset.empty()) errors.push_back("dataset " + config.dataset.string() + " is empty");
  if (!errors.empty()) {
    std::string msg = "run config does not fit its dataset:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
}

std::string format_score(double mean, double std) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f±%.2f", mean, std);
  return buf;
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) != nullptr) return kExitUsage;
  if (dynamic_cast<const InvalidInput*>(&e) != nullptr) return kExitUsage;
  return kExitRuntime;
}

OfflineDataset cmd_collect(const CollectOptions& options, std::ostream& log) {
  const EnvKind env = parse_env_kind(options.env);
  const PolicyTier tier = parse_policy_tier(options.policy);
  if (options.n == 0) throw InvalidInput("collect: --n must be positive");
  OfflineDataset dataset = collect_dataset(env, tier, options.n, options.seed);
  ensure_parent(options.out);
  save_dataset(dataset, options.out);
  log << "wrote " << options.out.string() << ": " << describe(dataset.manifest()) << '\n';
  return dataset;
}

OfflineDataset cmd_mix(const std::vector<fs::path>& inputs, const fs::path& out,
                       std::ostream& log) {
  if (inputs.size() < 2) throw InvalidInput("mix: need at least two input datasets");
  OfflineDataset mixed = load_dataset(inputs.front());
  for (std::size_t i = 1; i < inputs.size(); ++i) {
    mixed = mix_datasets(mixed, load_dataset(inputs[i]));
  }
  ensure_parent(out);
  save_dataset(mixed, out);
  log << "wrote " << out.string() << ": " << describe(mixed.manifest()) << '\n';
  return mixed;
}

json to_json(const LambdaReport& report) {
  json sources = json::array();
  for (const auto& s : report.sources) {
    sources.push_back({{"label", s.label},
                       {"count", s.count},
                       {"mean_beta_hat", s.mean_beta_hat},
                       {"mean_lambda", s.mean_lambda},
                       {"histogram", s.histogram}});
  }
  return {{"weights", report.weights},
          {"median_beta_hat", report.median_beta_hat},
          {"bin_edges", report.edges},
          {"histogram", report.histogram},
          {"sources", sources}};
}

StateWeights state_weights(const GaussianBehaviorModel& model, const OfflineDataset& dataset,
                           const WeightConfig& weights) {
  StateWeights out;
  out.beta_hat = beta_hat(model, normalize_states(model.stats, dataset.states()));
  out.lambda.resize(out.beta_hat.size());
  for (Eigen::Index i = 0; i < out.beta_hat.size(); ++i) {
    out.lambda[i] = compute_lambda(weights, out.beta_hat[i]);
  }
  return out;
}

LambdaReport lambda_report(const GaussianBehaviorModel& model, const OfflineDataset& dataset,
                           const WeightConfig& weights, int bins) {
  if (bins < 1) throw InvalidInput("lambda report: bins must be >= 1");
  if (dataset.empty()) throw InvalidInput("lambda report: empty dataset");
  const StateWeights sw = state_weights(model, dataset, weights);

  LambdaReport report;
  report.weights = weights;
  std::vector<double> sorted = to_std(sw.beta_hat);
  const std::size_t mid = sorted.size() / 2;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid), sorted.end());
  report.median_beta_hat = sorted[mid];
  for (int b = 0; b <= bins; ++b) report.edges.push_back(static_cast<double>(b) / bins);
  report.histogram.assign(static_cast<std::size_t>(bins), 0);
  for (const auto& src : dataset.manifest().sources) {
    report.sources.push_back({src.label, src.count, 0.0, 0.0,
                              std::vector<std::uint64_t>(static_cast<std::size_t>(bins), 0)});
  }
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    const double lam = sw.lambda[idx];
    // Right-closed last bin so lambda == 1 is counted.
    const auto bin = std::min<std::size_t>(static_cast<std::size_t>(lam * bins),
                                           static_cast<std::size_t>(bins - 1));
    auto& src = report.sources[dataset.source_of(i)];
    ++report.histogram[bin];
    ++src.histogram[bin];
    src.mean_lambda += lam;
    src.mean_beta_hat += sw.beta_hat[idx];
  }
  for (auto& src : report.sources) {
    if (src.count > 0) {
      src.mean_lambda /= static_cast<double>(src.count);
      src.mean_beta_hat /= static_cast<double>(src.count);
    }
  }
  return report;
}

LambdaReport cmd_fit_behavior(const FitBehaviorOptions& options, std::ostream& log) {
  const OfflineDataset dataset = load_dataset(options.dataset);
  Rng rng(options.seed);
  BehaviorFitReport fit;
  const GaussianBehaviorModel model = fit_behavior(dataset, options.config, rng, &fit);
  fs::create_directories(options.out);
  save_behavior(model, options.out);

  WeightConfig weights = options.weights;
  if (options.center_zeta2) {
    const LambdaReport probe = lambda_report(model, dataset, weights, 1);
    weights.zeta2 = centered_zeta2(weights.zeta1, probe.median_beta_hat);
  }
  const LambdaReport report = lambda_report(model, dataset, weights, options.bins);
  write_json(options.out / "lambda_histogram.json", to_json(report));

  const StateWeights sw = state_weights(model, dataset, weights);
  std::ofstream lines(options.out / "state_weights.jsonl", std::ios::trunc);
  if (!lines) throw Error("cannot write state weights in " + options.out.string());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    const Vec s = dataset.states().col(idx);
    lines << json{{"index", i},
                  {"source", dataset.manifest().sources[dataset.source_of(i)].label},
                  {"state", to_std(s)},
                  {"beta_hat", sw.beta_hat[idx]},
                  {"lambda", sw.lambda[idx]}}
                 .dump()
          << '\n';
  }
  write_json(options.out / "fit_report.json",
             {{"dataset", options.dataset.string()},
              {"seed", options.seed},
              {"epochs", options.config.epochs},
              {"batch_size", options.config.batch_size},
              {"hidden", options.config.hidden},
              {"optimizer", options.config.optimizer},
              {"initial_nll", fit.initial_nll},
              {"epoch_nll", fit.epoch_nll},
              {"weights", weights}});

  log << "behavior model written to " << options.out.string() << " (final NLL "
      << (fit.epoch_nll.empty() ? fit.initial_nll : fit.epoch_nll.back()) << ")\n";
  log << "zeta1=" << weights.zeta1 << " zeta2=" << weights.zeta2
      << " median beta_hat=" << report.median_beta_hat << '\n';
  for (const auto& s : report.sources) {
    log << "  " << s.label << ": n=" << s.count << " mean beta_hat=" << s.mean_beta_hat
        << " mean lambda=" << s.mean_lambda << '\n';
  }
  return report;
}

json cmd_train(const RunConfig& config, std::ostream& log) {
  check_run_paths(config);
  const fs::path metrics_path = config.output_dir / "metrics.jsonl";
  if (fs::exists(metrics_path)) {
    throw ConfigError("output directory " + config.output_dir.string() +
                      " already holds a run (metrics.jsonl exists)");
  }
  const OfflineDataset dataset = load_dataset(config.dataset);
  const EnvSpec& spec = env_spec(config.env);
  check_dataset_matches(config, dataset, spec);

  std::shared_ptr<const GaussianBehaviorModel> behavior;
  if (needs_behavior(config.agent)) {
    behavior = std::make_shared<const GaussianBehaviorModel>(load_behavior(*config.behavior));
    if (!(behavior->stats == dataset.stats())) {
      throw ConfigError("behavior model " + config.behavior->string() +
                        " was fitted on a different dataset");
    }
  }

  fs::create_directories(config.output_dir);
  const json echo = to_json(config);
  write_json(config.output_dir / "config.json", echo);

  const std::uint64_t eval_seed = config.seed + config.evaluation.seed_offset;
  const EvalHook eval_hook = [&](const Actor& actor) {
    return evaluate_policy(spec, actor, config.evaluation.episodes, eval_seed);
  };
  MetricsWriter metrics(metrics_path);
  const RecordHook on_record = [&](const TrainRecord& r) {
    metrics.write(r);
    log << "step " << r.step;
    for (const auto& [name, value] : r.scalars) log << ' ' << name << '=' << value;
    if (r.eval) log << " score=" << r.eval->normalized_score;
    log << '\n';
  };

  const fs::path checkpoint = config.output_dir / "checkpoint";
  TrainLog train_log;
  Actor final_actor;
  std::optional<Td3Agent> agent;
  std::optional<BcPolicy> policy;
  if (is_td3(config.agent)) {
    Td3AgentConfig agent_config;
    agent_config.objective =
        config.agent == AgentKind::kTd3Rkl ? ActorObjective::kTd3Rkl : ActorObjective::kTd3Bc;
    agent_config.hp = config.td3;
    agent_config.hidden = config.hidden;
    agent_config.actor_optimizer = config.actor_optimizer;
    agent_config.critic_optimizer = config.critic_optimizer;
    agent_config.weights = config.weights;
    agent_config.regularizer = config.regularizer;
    agent.emplace(spec.obs_dim, spec.act_dim, spec.action_bound, dataset.stats(), agent_config,
                  behavior, config.seed);
    train_log = train(*agent, dataset, eval_hook, on_record);
    save_agent(*agent, checkpoint);
    final_actor = agent->as_actor();
  } else {
    Rng rng(config.seed);
    Rng init = rng.split(0);
    if (config.regularizer.stochastic()) {
      policy.emplace(StochasticPolicy::make(spec.obs_dim, spec.act_dim, config.hidden, init));
    } else {
      policy.emplace(MlpNet::make(layer_dims(spec.obs_dim, config.hidden, spec.act_dim),
                                  OutputActivation::kScaledTanh, spec.action_bound, init));
    }
    train_log = train_bc_only(*policy, dataset, config.regularizer, config.bc, rng,
                              behavior.get(), eval_hook, on_record);
    save_bc_policy(*policy, dataset.stats(), spec.action_bound, checkpoint);
    final_actor = bc_actor(*policy, dataset.stats(), spec.action_bound);
  }

  EvalResult final_eval;
  if (!train_log.records.empty() && train_log.records.back().eval) {
    final_eval = *train_log.records.back().eval;
  } else {
    final_eval = eval_hook(final_actor);
  }
  const json summary = {
      {"agent", std::string(to_string(config.agent))},
      {"env", spec.name},
      {"seed", config.seed},
      {"eval_seed", eval_seed},
      {"critic_updates", train_log.critic_updates},
      {"actor_updates", train_log.actor_updates},
      {"final_eval", final_eval},
      {"normalized_score", final_eval.normalized_score},
      {"reference_returns",
       {{"random", spec.reference.random}, {"expert", spec.reference.expert}}},
      {"config", echo},
  };
  write_json(config.output_dir / "summary.json", summary);
  log << "final normalized score " << final_eval.normalized_score << " (return "
      << final_eval.mean_return << " +- " << final_eval.std_return << ")\n";
  return summary;
}

EvalResult cmd_eval(const fs::path& run_dir, std::optional<int> episodes,
                    std::optional<std::uint64_t> seed, std::ostream& log) {
  const RunConfig config = parse_run_config(read_json(run_dir / "config.json"));
  const EnvSpec& spec = env_spec(config.env);
  const int n = episodes.value_or(config.evaluation.episodes);
  if (n < 1) throw InvalidInput("eval: episodes must be >= 1");
  const std::uint64_t eval_seed = seed.value_or(config.seed + config.evaluation.seed_offset);
  const fs::path checkpoint = run_dir / "checkpoint";
  EvalResult result;
  if (is_td3(config.agent)) {
    const Td3Agent agent = load_agent(checkpoint);
    result = evaluate_policy(spec, agent.as_actor(), n, eval_seed);
  } else {
    const BcCheckpoint bc = load_bc_policy(checkpoint);
    result = evaluate_policy(spec, bc_actor(bc.policy, bc.stats, bc.action_bound), n, eval_seed);
  }
  log << "episodes=" << n << " seed=" << eval_seed << " mean_return=" << result.mean_return
      << " std_return=" << result.std_return << " normalized_score=" << result.normalized_score
      << '\n';
  return result;
}

ScoreAggregate aggregate_scores(const std::vector<double>& scores) {
  ScoreAggregate agg;
  agg.count = scores.size();
  if (scores.empty()) return agg;
  // Shifting by the first score keeps equal scores exact.
  const double shift = scores.front();
  double sum = 0.0;
  for (double s : scores) sum += s - shift;
  const double mean_offset = sum / static_cast<double>(scores.size());
  double sq = 0.0;
  for (double s : scores) sq += (s - shift - mean_offset) * (s - shift - mean_offset);
  agg.mean = shift + mean_offset;
  agg.std = std::sqrt(sq / static_cast<double>(scores.size()));
  return agg;
}

SweepResult cmd_sweep(const RunConfig& config_template, const std::vector<std::uint64_t>& seeds,
                      int jobs, std::ostream& log) {
  if (seeds.empty()) throw ConfigError("sweep: need at least one seed");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw ConfigError("sweep: seeds must be distinct");
  }
  if (jobs < 1) throw ConfigError("sweep: jobs must be >= 1");
  check_run_paths(config_template);

  SweepResult result;
  result.runs.resize(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    result.runs[i].seed = seeds[i];
    result.runs[i].run_dir = config_template.output_dir / ("seed_" + std::to_string(seeds[i]));
  }

  // Each worker owns the runs it claims; nothing else is shared until join.
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < result.runs.size(); i = next++) {
      SweepRun& run = result.runs[i];
      RunConfig config = config_template;
      config.seed = run.seed;
      config.output_dir = run.run_dir;
      try {
        fs::create_directories(run.run_dir);
        std::ofstream run_log(run.run_dir / "train.log", std::ios::trunc);
        const json summary = cmd_train(config, run_log);
        run.normalized_score = summary.at("normalized_score").get<double>();
        run.ok = true;
      } catch (const std::exception& e) {
        run.error = e.what();
      }
    }
  };
  const int n_threads = std::min<int>(jobs, static_cast<int>(seeds.size()));
  std::vector<std::thread> threads;
  for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();

  std::vector<double> scores;
  json runs = json::array();
  for (const auto& run : result.runs) {
    if (run.ok) scores.push_back(run.normalized_score);
    json r = {{"seed", run.seed}, {"run_dir", run.run_dir.string()}, {"ok", run.ok}};
    if (run.ok) {
      r["normalized_score"] = run.normalized_score;
    } else {
      r["error"] = run.error;
    }
    runs.push_back(r);
    log << "seed " << run.seed << ": "
        << (run.ok ? "score " + std::to_string(run.normalized_score) : "FAILED: " + run.error)
        << '\n';
  }
  result.aggregate = aggregate_scores(scores);
  result.partial = scores.size() != seeds.size();

  fs::create_directories(config_template.output_dir);
  write_json(config_template.output_dir / "sweep_summary.json",
             {{"agent", std::string(to_string(config_template.agent))},
              {"env", std::string(to_string(config_template.env))},
              {"runs", runs},
              {"completed", result.aggregate.count},
              {"failed", seeds.size() - result.aggregate.count},
              {"partial", result.partial},
              {"mean", result.aggregate.mean},
              {"std", result.aggregate.std}});
  std::ofstream tsv(config_template.output_dir / "sweep_summary.tsv", std::ios::trunc);
  if (!tsv) throw Error("cannot write sweep summary in " + config_template.output_dir.string());
  tsv << "agent\tenv\tseeds\tcompleted\tscore\tpartial\n"
      << to_string(config_template.agent) << '\t' << to_string(config_template.env) << '\t'
      << seeds.size() << '\t' << result.aggregate.count << '\t'
      << format_score(result.aggregate.mean, result.aggregate.std) << '\t'
      << (result.partial ? "yes" : "no") << '\n';
  log << "aggregate over " << result.aggregate.count << " run(s): "
      << format_score(result.aggregate.mean, result.aggregate.std)
      << (result.partial ? " (PARTIAL: some seeds failed)" : "") << '\n';
  return result;
}

}  // namespace orl
