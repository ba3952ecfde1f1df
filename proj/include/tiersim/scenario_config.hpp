#pragma once

// Scenario description, its JSON form and the shipped presets.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tiersim/baseline_policies.hpp"
#include "tiersim/rl_policy.hpp"
#include "tiersim/storage_model.hpp"
#include "tiersim/workload.hpp"

namespace tiersim {

// Invalid scenario or experiment description; `field()` is the dotted path
// of the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class PolicyKind { rule1, rule2, rule3, rl_ft, rl_dt, rl_st };

inline constexpr PolicyKind kAllPolicies[] = {PolicyKind::rule1, PolicyKind::rule2, PolicyKind::rule3,
                                              PolicyKind::rl_ft, PolicyKind::rl_dt, PolicyKind::rl_st};

std::string to_string(PolicyKind p);
PolicyKind parse_policy(const std::string& s);

struct PolicyTraits {
  PlacementStrategy placement;
  bool learning;        // migration decided by the per-tier FRB agents
  bool size_sensitive;  // flip-to-hot probability scaled by file size
};

PolicyTraits traits(PolicyKind p);

struct RlSettings {
  std::array<double, kStateDims> a{};
  std::array<double, kStateDims> b{};
  // Normalization divisors for s2 and s3; derived from the scenario when unset.
  std::optional<double> scale_s2;
  std::optional<double> scale_s3;
  TdHyper hyper;
  double initial_p = 0.0;
  double tau = 1.0;
  bool cold_start_fallback = true;

  RlSettings();
};

struct ScenarioConfig {
  std::string name = "custom";
  std::uint64_t seed = 1;
  Timestep timesteps = 1000;
  std::vector<TierSpec> tiers;  // slowest first

  std::size_t file_count = 1000;
  SizeDistribution sizes;
  TemperatureRange initial_temperatures;

  WorkloadParams workload;
  RequestPattern pattern = RequestPattern::poisson;

  PolicyKind policy = PolicyKind::rule1;
  UpgradeTrigger rule_trigger = UpgradeTrigger::above_tier_mean;
  RlSettings rl;

  std::optional<InjectionSchedule> injection;

  // Timesteps whose start-of-step placement is captured as a heatmap; empty
  // means {1, timesteps}.
  std::vector<Timestep> heatmap_steps;
  bool check_invariants = true;

  void validate() const;

  double expected_requests_per_step() const;
  double scale_s2() const;
  double scale_s3() const;
  MembershipParams membership() const;
  std::vector<Timestep> effective_heatmap_steps() const;
};

nlohmann::json to_json(const ScenarioConfig& c);
// Throws ConfigError naming the offending field.
ScenarioConfig scenario_from_json(const nlohmann::json& j);
ScenarioConfig load_scenario(const std::string& path_or_preset);

// Presets: sim-1000, sim-1000-temp01, sim-1000-uniform, cloud-20000,
// cloud-20000-dynamic, cloud-2000-dynamic (desk scale).
std::vector<std::string> preset_names();
std::optional<ScenarioConfig> preset(const std::string& name);

}  // namespace tiersim
