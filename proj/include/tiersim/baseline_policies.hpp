#pragma once

// Initial placement strategies and the temperature-driven rule-based
// migration trigger shared by the three baseline policies.

#include <span>
#include <string>
#include <vector>

#include "tiersim/storage_model.hpp"
#include "tiersim/workload.hpp"

namespace tiersim {

enum class PlacementStrategy {
  fastest_first_80,  // fill each faster tier to 80% before moving down
  slowest_first,     // everything in the slowest tier, spilling upward
  distributed,       // 1% of files fastest, 10% next, rest slowest
};

std::string to_string(PlacementStrategy s);
PlacementStrategy parse_placement(const std::string& s);

// Places `files` in order into an empty hierarchy and returns their ids.
// Throws CapacityError naming the tier that ran out of room.
std::vector<FileId> initial_placement(std::span<const FileSpec> files, Hierarchy& hierarchy,
                                      PlacementStrategy strategy, Timestep created_step = 0);

enum class Action { upgrade, downgrade, stay };

struct PolicyDecision {
  FileId file{};
  Action action = Action::stay;
  TierIndex from = 0;
  TierIndex to = 0;
};

// When a requested file qualifies for the next faster tier.
enum class UpgradeTrigger {
  above_tier_mean,      // temperature > destination s1
  above_hot_threshold,  // temperature >= hot_threshold
};

std::string to_string(UpgradeTrigger t);
UpgradeTrigger parse_upgrade_trigger(const std::string& s);

bool rule_based_trigger(const FileRecord& file, const Hierarchy& hierarchy, UpgradeTrigger trigger,
                        double hot_threshold);

// Decision list for one request: the eviction cascade of
// Hierarchy::upgrade_plan (downgrades, deepest tier first) followed by the
// upgrade, or an empty list when the file stays. Apply it as one batch. The three rule-based
// variants share this logic; variant 3 differs only in its temperature
// dynamics.
std::vector<PolicyDecision> rule_based_decide(FileId requested, const Hierarchy& hierarchy,
                                              UpgradeTrigger trigger = UpgradeTrigger::above_tier_mean,
                                              double hot_threshold = 0.5);

}  // namespace tiersim
