#include "tiersim/baseline_policies.hpp"

#include <cmath>
#include <stdexcept>

namespace tiersim {

std::string to_string(PlacementStrategy s) {
  switch (s) {
    case PlacementStrategy::fastest_first_80: return "fastest_first_80";
    case PlacementStrategy::slowest_first: return "slowest_first";
    case PlacementStrategy::distributed: return "distributed";
  }
  return "?";
}

PlacementStrategy parse_placement(const std::string& s) {
  if (s == "fastest_first_80") return PlacementStrategy::fastest_first_80;
  if (s == "slowest_first") return PlacementStrategy::slowest_first;
  if (s == "distributed") return PlacementStrategy::distributed;
  throw std::invalid_argument("unknown placement strategy '" + s + "'");
}

std::string to_string(UpgradeTrigger t) {
  return t == UpgradeTrigger::above_tier_mean ? "above_tier_mean" : "above_hot_threshold";
}

UpgradeTrigger parse_upgrade_trigger(const std::string& s) {
  if (s == "above_tier_mean") return UpgradeTrigger::above_tier_mean;
  if (s == "above_hot_threshold") return UpgradeTrigger::above_hot_threshold;
  throw std::invalid_argument("unknown upgrade trigger '" + s + "'");
}

namespace {

// First tier at or below `start` (towards slower) that can take `size`
// without exceeding `limit(tier)`.
template <typename Limit>
std::optional<TierIndex> first_fit_downward(const Hierarchy& h, TierIndex start, Units size, Limit limit) {
  for (TierIndex t = start + 1; t-- > 0;) {
    if (h.used(t) + size <= limit(t)) return t;
  }
  return std::nullopt;
}

std::optional<TierIndex> first_fit_upward(const Hierarchy& h, TierIndex start, Units size) {
  for (TierIndex t = start; t < h.tier_count(); ++t) {
    if (h.free_space(t) >= size) return t;
  }
  return std::nullopt;
}

[[noreturn]] void exhausted(TierIndex tier, Units size) {
  throw CapacityError("initial placement: tier " + std::to_string(tier) +
                      " has no room left for a file of size " + std::to_string(size));
}

}  // namespace

std::vector<FileId> initial_placement(std::span<const FileSpec> files, Hierarchy& hierarchy,
                                      PlacementStrategy strategy, Timestep created_step) {
  if (hierarchy.size() != 0) throw std::invalid_argument("initial placement needs an empty hierarchy");
  std::vector<FileId> ids;
  ids.reserve(files.size());
  const TierIndex fast = hierarchy.fastest();

  switch (strategy) {
    case PlacementStrategy::fastest_first_80: {
      // Faster tiers are filled to 80% of capacity; the slowest tier takes
      // the remainder up to its full capacity.
      auto limit = [&](TierIndex t) {
        const Units cap = hierarchy.spec(t).capacity;
        return t == hierarchy.slowest() ? cap : static_cast<Units>(std::floor(0.8 * static_cast<double>(cap)));
      };
      for (const auto& f : files) {
        auto t = first_fit_downward(hierarchy, fast, f.size, limit);
        if (!t) exhausted(hierarchy.slowest(), f.size);
        ids.push_back(hierarchy.add_file(f.size, f.temperature, *t, created_step));
      }
      break;
    }
    case PlacementStrategy::slowest_first: {
      for (const auto& f : files) {
        auto t = first_fit_upward(hierarchy, hierarchy.slowest(), f.size);
        if (!t) exhausted(fast, f.size);
        ids.push_back(hierarchy.add_file(f.size, f.temperature, *t, created_step));
      }
      break;
    }
    case PlacementStrategy::distributed: {
      // Quotas by file count in insertion order: 1% to the fastest tier, 10%
      // to the next, the rest to the slowest. A file that does not fit its
      // assigned tier falls through to the next slower tier with room.
      const std::size_t n = files.size();
      std::vector<std::size_t> quota(hierarchy.tier_count(), 0);
      const double shares[] = {0.01, 0.10};
      std::size_t assigned = 0;
      for (std::size_t k = 0; k < 2 && k + 1 < hierarchy.tier_count(); ++k) {
        quota[fast - k] = static_cast<std::size_t>(std::floor(shares[k] * static_cast<double>(n)));
        assigned += quota[fast - k];
      }
      quota[hierarchy.slowest()] += n - std::min(n, assigned);
      std::size_t i = 0;
      for (TierIndex target = fast + 1; target-- > 0;) {
        for (std::size_t c = 0; c < quota[target] && i < n; ++c, ++i) {
          const auto& f = files[i];
          auto t = first_fit_downward(hierarchy, target, f.size,
                                      [&](TierIndex x) { return hierarchy.spec(x).capacity; });
          if (!t) exhausted(hierarchy.slowest(), f.size);
          ids.push_back(hierarchy.add_file(f.size, f.temperature, *t, created_step));
        }
      }
      break;
    }
  }
  return ids;
}

bool rule_based_trigger(const FileRecord& file, const Hierarchy& hierarchy, UpgradeTrigger trigger,
                        double hot_threshold) {
  if (file.tier >= hierarchy.fastest()) return false;
  if (trigger == UpgradeTrigger::above_hot_threshold) return file.temperature >= hot_threshold;
  return file.temperature > hierarchy.compute_tier_state(file.tier + 1, 0.0).s1;
}

std::vector<PolicyDecision> rule_based_decide(FileId requested, const Hierarchy& hierarchy,
                                              UpgradeTrigger trigger, double hot_threshold) {
  const auto& f = hierarchy.file(requested);
  std::vector<PolicyDecision> out;
  if (!rule_based_trigger(f, hierarchy, trigger, hot_threshold)) return out;
  const auto plan = hierarchy.upgrade_plan(requested);
  if (!plan) return out;
  for (const auto& m : *plan)
    out.push_back({m.file, m.to > m.from ? Action::upgrade : Action::downgrade, m.from, m.to});
  return out;
}

}  // namespace tiersim
