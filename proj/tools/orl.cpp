// orl: offline RL experiments from the command line.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "orl/cli/commands.hpp"
#include "orl/cli/run_config.hpp"
#include "orl/envs/envs.hpp"
#include "orl/errors.hpp"

namespace {

std::vector<int> parse_hidden(const std::string& text) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    int width = 0;
    try {
      width = std::stoi(item);
    } catch (const std::exception&) {
      throw orl::InvalidInput("--hidden: '" + item + "' is not an integer");
    }
    if (width < 1) throw orl::InvalidInput("--hidden: layer widths must be positive");
    out.push_back(width);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Offline RL with TD3+BC and uncertainty-weighted reverse-KL regularization"};
  app.require_subcommand(1);

  orl::CollectOptions collect;
  auto* collect_cmd = app.add_subcommand("collect", "Roll out a scripted policy into a dataset");
  collect_cmd->add_option("--env", collect.env, "twinpeaks1d | pointmass2d")->required();
  collect_cmd->add_option("--policy", collect.policy, "random | medium | expert")->required();
  collect_cmd->add_option("--n", collect.n, "Number of transitions")->required();
  collect_cmd->add_option("--seed", collect.seed, "Rollout seed");
  collect_cmd->add_option("--out", collect.out, "Output .orld file")->required();

  std::vector<std::string> mix_inputs;
  std::string mix_out;
  auto* mix_cmd = app.add_subcommand("mix", "Concatenate datasets collected on one env");
  mix_cmd->add_option("inputs", mix_inputs, "Two or more dataset files")->required();
  mix_cmd->add_option("--out", mix_out, "Output .orld file")->required();

  orl::FitBehaviorOptions fit;
  std::string fit_hidden = "256,256";
  auto* fit_cmd = app.add_subcommand("fit-behavior", "Fit the Gaussian behavior model and "
                                                     "report per-state BC weights");
  fit_cmd->add_option("--dataset", fit.dataset, "Dataset file")->required();
  fit_cmd->add_option("--out", fit.out, "Output directory")->required();
  fit_cmd->add_option("--seed", fit.seed, "Training seed");
  fit_cmd->add_option("--epochs", fit.config.epochs, "Passes over the data")->capture_default_str();
  fit_cmd->add_option("--batch-size", fit.config.batch_size)->capture_default_str();
  fit_cmd->add_option("--lr", fit.config.optimizer.lr)->capture_default_str();
  fit_cmd->add_option("--hidden", fit_hidden, "Comma-separated hidden widths")->capture_default_str();
  fit_cmd->add_option("--zeta1", fit.weights.zeta1)->capture_default_str();
  fit_cmd->add_option("--zeta2", fit.weights.zeta2)->capture_default_str();
  fit_cmd->add_flag("--center-zeta2", fit.center_zeta2,
                    "Set zeta2 so that lambda is 0.5 at the median log-variance");
  fit_cmd->add_option("--bins", fit.bins, "Histogram bins on [0, 1]")->capture_default_str();

  std::string train_config;
  auto* train_cmd = app.add_subcommand("train", "Train one run from a JSON config");
  train_cmd->add_option("config", train_config, "Run config file")->required();

  std::string eval_dir;
  std::optional<int> eval_episodes;
  std::optional<std::uint64_t> eval_seed;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a finished run's checkpoint");
  eval_cmd->add_option("run_dir", eval_dir, "Run directory written by train")->required();
  eval_cmd->add_option("--episodes", eval_episodes);
  eval_cmd->add_option("--seed", eval_seed);

  std::string sweep_config;
  std::vector<std::uint64_t> sweep_seeds;
  int sweep_jobs = 1;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a config template over several seeds");
  sweep_cmd->add_option("config", sweep_config, "Run config template")->required();
  sweep_cmd->add_option("--seeds", sweep_seeds, "Seeds, space separated")->required();
  sweep_cmd->add_option("--jobs", sweep_jobs, "Parallel runs")->capture_default_str();

  std::string registry_out;
  auto* registry_cmd =
      app.add_subcommand("registry", "Measure reference returns and write the env registry");
  registry_cmd->add_option("--out", registry_out, "Registry JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? orl::kExitOk : orl::kExitUsage;
  }

  try {
    if (*collect_cmd) {
      orl::cmd_collect(collect, std::cout);
    } else if (*mix_cmd) {
      std::vector<std::filesystem::path> inputs(mix_inputs.begin(), mix_inputs.end());
      orl::cmd_mix(inputs, mix_out, std::cout);
    } else if (*fit_cmd) {
      fit.config.hidden = parse_hidden(fit_hidden);
      orl::cmd_fit_behavior(fit, std::cout);
    } else if (*train_cmd) {
      orl::cmd_train(orl::load_run_config(train_config), std::cout);
    } else if (*eval_cmd) {
      orl::cmd_eval(eval_dir, eval_episodes, eval_seed, std::cout);
    } else if (*sweep_cmd) {
      const auto result =
          orl::cmd_sweep(orl::load_run_config(sweep_config, nullptr), sweep_seeds, sweep_jobs,
                         std::cout);
      if (result.partial) return orl::kExitRuntime;
    } else if (*registry_cmd) {
      orl::save_env_registry(registry_out);
      std::cout << "wrote " << registry_out << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return orl::exit_code_for(e);
  }
  return orl::kExitOk;
}
