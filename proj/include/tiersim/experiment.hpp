#pragma once

// Policy x repetition sweeps over one scenario, their on-disk artifacts and
// the tidy CSVs derived from them.
//
// Run directory layout (<out>/<policy>-rep<k>/):
//   config.json         effective scenario, including the derived seed
//   metrics.jsonl       one MetricsFrame object per timestep
//   heatmap.csv         timestep,tier_id,slot_index,file_id,temperature,size
//   agent_params.csv    timestep,tier_id,p1..p8 (learning policies only)
//   summary.json        run aggregates
// plus <out>/comparison.csv with one row per run.

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tiersim/scenario_config.hpp"
#include "tiersim/sim_engine.hpp"

namespace tiersim {

struct ExperimentSpec {
  std::string config;                 // preset name or path to a JSON scenario
  std::vector<PolicyKind> policies;   // non-empty, no duplicates
  std::size_t repetitions = 1;        // rep k runs with seed + k
  std::optional<std::uint64_t> seed;  // overrides the scenario seed
  std::filesystem::path out_dir = "out";
  std::size_t workers = 0;            // 0 = hardware concurrency

  void validate() const;
};

struct RunRecord {
  PolicyKind policy = PolicyKind::rule1;
  std::size_t repetition = 0;
  std::filesystem::path dir;
  RunSummary summary;
};

// Names used for transfer directions in JSON and CSV output, 1-based tiers:
// up_1_2 is a move from the slowest tier to the next faster one.
std::string up_label(std::size_t lower_tier);
std::string down_label(std::size_t lower_tier);

nlohmann::json frame_json(const MetricsFrame& frame);
nlohmann::json summary_json(const RunSummary& summary);
std::string format_number(double v);

// Writes the per-run artifacts listed above into `dir`.
class RunWriter : public MetricsSink {
 public:
  explicit RunWriter(const std::filesystem::path& dir);
  ~RunWriter() override;
  RunWriter(const RunWriter&) = delete;
  RunWriter& operator=(const RunWriter&) = delete;

  void on_frame(const MetricsFrame& frame) override;
  void on_heatmap(const HeatmapSnapshot& snap) override;
  void on_agent_params(Timestep t, TierIndex tier, const RuleVector& p) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Runs one scenario into `dir` and returns its summary.
RunSummary run_to_directory(const ScenarioConfig& config, const std::filesystem::path& dir);

// Validates everything up front, then runs all (policy, repetition) pairs on
// a bounded worker pool and writes comparison.csv.
std::vector<RunRecord> run_experiment(const ExperimentSpec& spec);

void write_comparison_csv(const std::filesystem::path& path, std::span<const RunRecord> runs);

enum class PlotKind { transfers, esr, heatmap };
PlotKind parse_plot_kind(const std::string& s);
std::string to_string(PlotKind k);

// Writes <run_dir>/plot_<kind>.csv and returns its path. `timesteps` filters
// the heatmap kind (empty = all captured timesteps). Throws
// std::runtime_error when the run has no metrics to plot.
std::filesystem::path emit_plot_data(const std::filesystem::path& run_dir, PlotKind kind,
                                     std::span<const Timestep> timesteps = {});

}  // namespace tiersim
