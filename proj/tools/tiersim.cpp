// tiersim: run storage-tier migration scenarios and export plot data.
//
//   tiersim run <config> [--policies rule1,rl-ft] [--reps N] [--seed S] [--out DIR] [--workers N]
//   tiersim emit-plot <run_dir> --kind transfers|esr|heatmap [--timesteps 1,1000]
//   tiersim preset [name]
//
// TIERSIM_OUT_DIR sets the default output directory; --out takes precedence.
// Exit status: 0 success, 1 configuration error, 2 runtime error.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tiersim/experiment.hpp"

namespace {

constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

int cmd_run(const std::string& config, const std::vector<std::string>& policy_names, std::size_t reps,
            const std::optional<std::uint64_t>& seed, const std::string& out, std::size_t workers) {
  tiersim::ExperimentSpec spec;
  spec.config = config;
  spec.repetitions = reps;
  spec.seed = seed;
  spec.out_dir = out;
  spec.workers = workers;
  for (const auto& name : policy_names) {
    try {
      spec.policies.push_back(tiersim::parse_policy(name));
    } catch (const std::invalid_argument& e) {
      throw tiersim::ConfigError("policies", e.what());
    }
  }
  if (spec.policies.empty()) spec.policies.push_back(tiersim::load_scenario(config).policy);

  const auto records = tiersim::run_experiment(spec);
  for (const auto& r : records) {
    std::cout << r.dir.string() << "  mean transfers/step " << tiersim::format_number(r.summary.mean_total_transfers)
              << "  final ESR " << tiersim::format_number(r.summary.final_esr) << '\n';
  }
  std::cout << (spec.out_dir / "comparison.csv").string() << '\n';
  return 0;
}

int cmd_preset(const std::string& name) {
  if (name.empty()) {
    for (const auto& n : tiersim::preset_names()) std::cout << n << '\n';
    return 0;
  }
  const auto cfg = tiersim::preset(name);
  if (!cfg) throw tiersim::ConfigError("preset", "unknown preset '" + name + "'");
  std::cout << tiersim::to_json(*cfg).dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical storage migration simulator"};
  app.require_subcommand(1);

  const char* env_out = std::getenv("TIERSIM_OUT_DIR");
  std::string out_dir = env_out && *env_out ? env_out : "out";

  std::string config;
  std::vector<std::string> policies;
  std::size_t reps = 1;
  std::optional<std::uint64_t> seed;
  std::size_t workers = 0;
  auto* run = app.add_subcommand("run", "Run a scenario for one or more policies");
  run->add_option("config", config, "Preset name or path to a JSON scenario")->required();
  run->add_option("--policies", policies, "Comma-separated policy list (default: the scenario's policy)")
      ->delimiter(',');
  run->add_option("--reps", reps, "Repetitions per policy; repetition k uses seed + k");
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--out", out_dir, "Output directory (default: $TIERSIM_OUT_DIR or ./out)");
  run->add_option("--workers", workers, "Concurrent runs (0 = hardware threads)");

  std::string run_dir;
  std::string kind;
  std::vector<tiersim::Timestep> timesteps;
  auto* plot = app.add_subcommand("emit-plot", "Write a tidy CSV for plotting from a run directory");
  plot->add_option("run_dir", run_dir, "A <policy>-rep<k> directory produced by `run`")->required();
  plot->add_option("--kind", kind, "transfers, esr or heatmap")->required();
  plot->add_option("--timesteps", timesteps, "Heatmap timesteps to keep (default: all)")->delimiter(',');

  std::string preset_name;
  auto* presets = app.add_subcommand("preset", "List presets, or print one as JSON");
  presets->add_option("name", preset_name, "Preset to print");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*run) return cmd_run(config, policies, reps, seed, out_dir, workers);
    if (*plot) {
      const auto path = tiersim::emit_plot_data(run_dir, tiersim::parse_plot_kind(kind), timesteps);
      std::cout << path.string() << '\n';
      return 0;
    }
    if (*presets) return cmd_preset(preset_name);
  } catch (const tiersim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return 0;
}
