#pragma once

// Tier hierarchy, file metadata and the per-tier state vector.
//
// Tiers are indexed so that a higher index is faster and smaller; index 0 is
// the slowest tier and absorbs whatever the faster tiers push out. The
// metadata table is the single source of truth; each tier keeps a
// coldest-first ordered index of its residents plus running sums for s1/s2.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tiersim {

enum class FileId : std::uint32_t {};

constexpr std::uint32_t raw(FileId id) { return static_cast<std::uint32_t>(id); }

using TierIndex = std::size_t;
using Units = std::int64_t;
using Timestep = std::int64_t;

class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MetadataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FileRecord {
  FileId id{};
  Units size = 0;
  double temperature = 0.0;
  TierIndex tier = 0;
  Timestep created_step = 0;
  std::optional<Timestep> last_request_step;

  // Reference point for the cooldown window: never-requested files count
  // their idle time from creation.
  Timestep idle_since() const { return last_request_step.value_or(created_step); }
};

struct TierSpec {
  Units capacity = 0;
  double speed = 0.0;  // storage units per time unit
};

struct TierState {
  double s1 = 0.0;  // mean temperature
  double s2 = 0.0;  // mean temperature * size
  double s3 = 0.0;  // queuing time
  Units used = 0;
  std::size_t file_count = 0;
};

struct Move {
  FileId file{};
  TierIndex from = 0;
  TierIndex to = 0;
};

// s1 and s2 a tier would have after a hypothetical add and/or remove.
struct HypotheticalState {
  double s1 = 0.0;
  double s2 = 0.0;
};

class Hierarchy {
 public:
  // Ordering key of the coldest-first resident index: temperature ascending,
  // then size descending, then id ascending.
  struct ColdKey {
    double temperature;
    Units size;
    FileId id;
    bool operator<(const ColdKey& o) const {
      if (temperature != o.temperature) return temperature < o.temperature;
      if (size != o.size) return size > o.size;
      return raw(id) < raw(o.id);
    }
  };
  using Residents = std::set<ColdKey>;

  explicit Hierarchy(std::vector<TierSpec> tiers);

  std::size_t tier_count() const { return tiers_.size(); }
  TierIndex slowest() const { return 0; }
  TierIndex fastest() const { return tiers_.size() - 1; }
  const TierSpec& spec(TierIndex tier) const;
  std::span<const TierSpec> specs() const { return tiers_; }

  Units used(TierIndex tier) const { return tier_at(tier).used; }
  Units free_space(TierIndex tier) const { return spec(tier).capacity - used(tier); }
  std::size_t file_count(TierIndex tier) const { return tier_at(tier).residents.size(); }
  const Residents& residents(TierIndex tier) const { return tier_at(tier).residents; }

  std::size_t size() const { return files_.size(); }
  bool contains(FileId id) const { return raw(id) < files_.size(); }
  const FileRecord& file(FileId id) const;
  std::span<const FileRecord> files() const { return files_; }
  Units total_size() const { return total_size_; }
  double mean_file_size() const;

  // Creates a file directly in `tier`; ids are assigned densely in creation order.
  FileId add_file(Units size, double temperature, TierIndex tier, Timestep created_step);

  // Single move; refused with CapacityError if the destination lacks room.
  void move_file(FileId id, TierIndex dest);
  // Applies a batch atomically: capacities are checked on the final placement
  // only, so swaps between two full tiers are expressible. On error nothing
  // is changed.
  void apply_moves(std::span<const Move> moves);

  void set_temperature(FileId id, double temperature);
  void mark_requested(FileId id, Timestep step);

  std::optional<FileId> coldest_file(TierIndex tier) const;

  TierState compute_tier_state(TierIndex tier, double pending_service_time) const;
  HypotheticalState hypothetical_state(TierIndex tier, const FileRecord* add,
                                       std::optional<FileId> remove) const;
  double hypothetical_s1(TierIndex tier, const FileRecord* add,
                         std::optional<FileId> remove) const {
    return hypothetical_state(tier, add, remove).s1;
  }

  // Coldest residents of `tier` strictly colder than `incoming_temperature`
  // whose removal leaves at least `required_free` units free. nullopt when
  // the strictly-colder residents do not free enough room. `exclude` is never
  // selected.
  std::optional<std::vector<FileId>> eviction_plan(TierIndex tier, double incoming_temperature,
                                                   Units required_free,
                                                   std::optional<FileId> exclude = {}) const;

  // Moves that bring `file` one tier up: the destination's coldest residents
  // strictly colder than the file are pushed one tier down, recursively while
  // the tier below is full too, with each lower tier only displacing files
  // colder than the coldest file it receives. The file's own departure
  // counts as freed room in its source tier. The list ends with the upgrade
  // itself and must be applied as one batch (apply_moves). nullopt when no
  // room can be made; the slowest tier never evicts.
  std::optional<std::vector<Move>> upgrade_plan(FileId file) const;

  // Recomputes running sums from the metadata in id order, discarding
  // accumulated rounding drift.
  void refresh_aggregates();

  // Throws MetadataError describing the first violated invariant.
  void check_invariants() const;

 private:
  struct Tier {
    Units used = 0;
    double temp_sum = 0.0;
    double weighted_sum = 0.0;
    Residents residents;
  };

  const Tier& tier_at(TierIndex tier) const;
  Tier& tier_at(TierIndex tier);
  FileRecord& file_mut(FileId id);
  void detach(const FileRecord& f);
  void attach(const FileRecord& f);

  std::vector<TierSpec> tiers_;
  std::vector<Tier> state_;
  std::vector<FileRecord> files_;
  Units total_size_ = 0;
};

}  // namespace tiersim
