#pragma once

// Timestep loop: inject, generate, serve, migrate, cool down, learn, record.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tiersim/baseline_policies.hpp"
#include "tiersim/rl_policy.hpp"
#include "tiersim/scenario_config.hpp"
#include "tiersim/storage_model.hpp"
#include "tiersim/workload.hpp"

namespace tiersim {

struct MetricsFrame {
  Timestep timestep = 0;
  std::vector<std::size_t> up;    // up[t]: moves from tier t to t + 1
  std::vector<std::size_t> down;  // down[t]: moves from tier t + 1 to t
  std::size_t requests = 0;
  std::size_t injected = 0;
  double estimated_system_response = 0.0;
  std::vector<double> occupancy;  // used / capacity per tier
  std::vector<double> mean_temperature;
  std::vector<std::size_t> file_count;

  std::size_t total_transfers() const;
};

struct HeatmapCell {
  TierIndex tier = 0;
  std::size_t slot = 0;
  FileId file{};
  double temperature = 0.0;
  Units size = 0;
};

// Placement in effect while serving `timestep` (captured before its
// migrations), residents listed per tier in file id order.
struct HeatmapSnapshot {
  Timestep timestep = 0;
  std::vector<HeatmapCell> cells;
};

HeatmapSnapshot heatmap_snapshot(const Hierarchy& hierarchy, Timestep timestep);

class MetricsSink {
 public:
  virtual ~MetricsSink() = default;
  virtual void on_frame(const MetricsFrame&) {}
  virtual void on_heatmap(const HeatmapSnapshot&) {}
  virtual void on_agent_params(Timestep, TierIndex, const RuleVector&) {}
};

struct RunSummary {
  std::string scenario;
  PolicyKind policy = PolicyKind::rule1;
  std::uint64_t seed = 0;
  Timestep timesteps = 0;
  std::size_t initial_files = 0;
  std::size_t injected_files = 0;
  std::size_t total_requests = 0;
  double initial_esr = 0.0;
  double final_esr = 0.0;
  std::vector<double> mean_up;
  std::vector<double> mean_down;
  double mean_total_transfers = 0.0;
  std::vector<double> final_occupancy;
  std::vector<double> final_mean_temperature;
  std::vector<std::size_t> final_file_count;
};

struct ServiceResult {
  std::vector<double> response;       // per arrival, in arrival order
  std::vector<TierIndex> served_by;   // tier each arrival was served from
  std::vector<double> pending;        // total service time enqueued per tier
};

// Single-server FIFO per tier in arrival-offset order; service time is
// size / speed of the file's current tier and the response adds the wait
// behind earlier same-tier requests of this timestep.
ServiceResult service_requests(const Hierarchy& hierarchy, std::span<const Request> arrivals);
inline ServiceResult service_requests(const Hierarchy& hierarchy, const RequestTrace& trace) {
  const auto a = trace.arrivals();
  return service_requests(hierarchy, a);
}

// Sum over files of temperature * size / speed of the file's tier.
double estimated_system_response(const Hierarchy& hierarchy);

// Executes an upgrade, first displacing the destination's coldest
// strictly-colder residents one tier down (and, recursively, the tiers below
// when they are full too). Returns the executed moves, or an empty list when
// no room can be made; the hierarchy is unchanged in that case.
std::vector<Move> execute_decision_with_eviction(Hierarchy& hierarchy, const PolicyDecision& decision);

// Runs the whole scenario. Throws ConfigError before the first timestep if
// the configuration is inconsistent.
RunSummary run_scenario(const ScenarioConfig& config, MetricsSink* sink = nullptr);

}  // namespace tiersim
