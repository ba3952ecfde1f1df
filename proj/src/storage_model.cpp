#include "tiersim/storage_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace tiersim {

namespace {

std::string tier_name(TierIndex tier) { return "tier " + std::to_string(tier); }

std::string file_name(FileId id) { return "file " + std::to_string(raw(id)); }

}  // namespace

Hierarchy::Hierarchy(std::vector<TierSpec> tiers) : tiers_(std::move(tiers)), state_(tiers_.size()) {
  if (tiers_.empty()) throw std::invalid_argument("hierarchy needs at least one tier");
  for (TierIndex t = 0; t < tiers_.size(); ++t) {
    const auto& s = tiers_[t];
    if (s.capacity <= 0) throw std::invalid_argument(tier_name(t) + ": capacity must be positive");
    if (!(s.speed > 0.0) || !std::isfinite(s.speed))
      throw std::invalid_argument(tier_name(t) + ": speed must be positive");
    if (t > 0) {
      if (s.capacity >= tiers_[t - 1].capacity)
        throw std::invalid_argument(tier_name(t) + ": capacity must shrink as tiers get faster");
      if (s.speed <= tiers_[t - 1].speed)
        throw std::invalid_argument(tier_name(t) + ": speed must grow with the tier index");
    }
  }
}

const TierSpec& Hierarchy::spec(TierIndex tier) const {
  if (tier >= tiers_.size()) throw std::out_of_range("unknown " + tier_name(tier));
  return tiers_[tier];
}

const Hierarchy::Tier& Hierarchy::tier_at(TierIndex tier) const {
  if (tier >= state_.size()) throw std::out_of_range("unknown " + tier_name(tier));
  return state_[tier];
}

Hierarchy::Tier& Hierarchy::tier_at(TierIndex tier) {
  if (tier >= state_.size()) throw std::out_of_range("unknown " + tier_name(tier));
  return state_[tier];
}

const FileRecord& Hierarchy::file(FileId id) const {
  if (!contains(id)) throw MetadataError("unknown " + file_name(id));
  return files_[raw(id)];
}

FileRecord& Hierarchy::file_mut(FileId id) {
  if (!contains(id)) throw MetadataError("unknown " + file_name(id));
  return files_[raw(id)];
}

double Hierarchy::mean_file_size() const {
  return files_.empty() ? 0.0 : static_cast<double>(total_size_) / static_cast<double>(files_.size());
}

void Hierarchy::detach(const FileRecord& f) {
  auto& t = state_[f.tier];
  t.residents.erase(ColdKey{f.temperature, f.size, f.id});
  t.used -= f.size;
  t.temp_sum -= f.temperature;
  t.weighted_sum -= f.temperature * static_cast<double>(f.size);
}

void Hierarchy::attach(const FileRecord& f) {
  auto& t = state_[f.tier];
  t.residents.insert(ColdKey{f.temperature, f.size, f.id});
  t.used += f.size;
  t.temp_sum += f.temperature;
  t.weighted_sum += f.temperature * static_cast<double>(f.size);
}

FileId Hierarchy::add_file(Units size, double temperature, TierIndex tier, Timestep created_step) {
  if (size <= 0) throw std::invalid_argument("file size must be positive");
  if (!(temperature >= 0.0 && temperature <= 1.0))
    throw std::invalid_argument("file temperature must lie in [0, 1]");
  if (size > free_space(tier))
    throw CapacityError(tier_name(tier) + " cannot hold a file of size " + std::to_string(size));
  FileRecord rec;
  rec.id = FileId{static_cast<std::uint32_t>(files_.size())};
  rec.size = size;
  rec.temperature = temperature;
  rec.tier = tier;
  rec.created_step = created_step;
  files_.push_back(rec);
  total_size_ += size;
  attach(files_.back());
  return rec.id;
}

void Hierarchy::move_file(FileId id, TierIndex dest) {
  const Move m{id, file(id).tier, dest};
  apply_moves(std::span<const Move>(&m, 1));
}

void Hierarchy::apply_moves(std::span<const Move> moves) {
  // Validate against a simulated placement first so a failure leaves no trace.
  std::unordered_map<std::uint32_t, TierIndex> placed;
  std::vector<Units> used(state_.size());
  for (TierIndex t = 0; t < state_.size(); ++t) used[t] = state_[t].used;
  for (const auto& m : moves) {
    const auto& f = file(m.file);
    auto it = placed.find(raw(m.file));
    const TierIndex current = it == placed.end() ? f.tier : it->second;
    if (m.to >= state_.size()) throw std::out_of_range("unknown destination " + tier_name(m.to));
    if (current != m.from)
      throw MetadataError(file_name(m.file) + " is in " + tier_name(current) + ", not " +
                          tier_name(m.from));
    if (m.to == current) throw MetadataError(file_name(m.file) + " is already in " + tier_name(m.to));
    used[current] -= f.size;
    used[m.to] += f.size;
    placed[raw(m.file)] = m.to;
  }
  for (TierIndex t = 0; t < state_.size(); ++t) {
    if (used[t] > tiers_[t].capacity)
      throw CapacityError(tier_name(t) + " would exceed its capacity (" + std::to_string(used[t]) +
                          " > " + std::to_string(tiers_[t].capacity) + ")");
  }
  for (const auto& m : moves) {
    auto& f = files_[raw(m.file)];
    detach(f);
    f.tier = m.to;
    attach(f);
  }
}

void Hierarchy::set_temperature(FileId id, double temperature) {
  if (!(temperature >= 0.0 && temperature <= 1.0))
    throw std::invalid_argument("file temperature must lie in [0, 1]");
  auto& f = file_mut(id);
  if (f.temperature == temperature) return;
  detach(f);
  f.temperature = temperature;
  attach(f);
}

void Hierarchy::mark_requested(FileId id, Timestep step) { file_mut(id).last_request_step = step; }

std::optional<FileId> Hierarchy::coldest_file(TierIndex tier) const {
  const auto& r = residents(tier);
  if (r.empty()) return std::nullopt;
  return r.begin()->id;
}

TierState Hierarchy::compute_tier_state(TierIndex tier, double pending_service_time) const {
  const auto& t = tier_at(tier);
  TierState s;
  s.used = t.used;
  s.file_count = t.residents.size();
  if (s.file_count > 0) {
    const auto n = static_cast<double>(s.file_count);
    s.s1 = t.temp_sum / n;
    s.s2 = t.weighted_sum / n;
  }
  s.s3 = pending_service_time;
  return s;
}

HypotheticalState Hierarchy::hypothetical_state(TierIndex tier, const FileRecord* add,
                                                std::optional<FileId> remove) const {
  const auto& t = tier_at(tier);
  double sum = t.temp_sum;
  double wsum = t.weighted_sum;
  auto n = static_cast<std::ptrdiff_t>(t.residents.size());
  if (add) {
    if (add->tier == tier)
      throw MetadataError(file_name(add->id) + " is already in " + tier_name(tier));
    sum += add->temperature;
    wsum += add->temperature * static_cast<double>(add->size);
    ++n;
  }
  if (remove) {
    const auto& f = file(*remove);
    if (f.tier != tier) throw MetadataError(file_name(*remove) + " is not in " + tier_name(tier));
    sum -= f.temperature;
    wsum -= f.temperature * static_cast<double>(f.size);
    --n;
  }
  if (n <= 0) return {};
  return {sum / static_cast<double>(n), wsum / static_cast<double>(n)};
}

std::optional<std::vector<FileId>> Hierarchy::eviction_plan(TierIndex tier, double incoming_temperature,
                                                            Units required_free,
                                                            std::optional<FileId> exclude) const {
  std::vector<FileId> plan;
  Units available = free_space(tier);
  for (const auto& key : residents(tier)) {
    if (available >= required_free) break;
    if (!(key.temperature < incoming_temperature)) break;
    if (exclude && key.id == *exclude) continue;
    plan.push_back(key.id);
    available += key.size;
  }
  if (available < required_free) return std::nullopt;
  return plan;
}

namespace {

struct Departure {
  TierIndex tier;
  Units size;
  FileId file;
};

std::optional<std::vector<Move>> make_room(const Hierarchy& h, TierIndex tier, Units required,
                                           double colder_than, const Departure& departing) {
  const bool source = tier == departing.tier;
  const Units credit = source ? departing.size : 0;
  if (h.free_space(tier) + credit >= required) return std::vector<Move>{};
  if (tier == h.slowest()) return std::nullopt;
  auto victims = h.eviction_plan(tier, colder_than, required - credit,
                                 source ? std::optional<FileId>(departing.file) : std::nullopt);
  if (!victims) return std::nullopt;
  Units total = 0;
  double coldest = std::numeric_limits<double>::infinity();
  for (FileId v : *victims) {
    const auto& f = h.file(v);
    total += f.size;
    coldest = std::min(coldest, f.temperature);
  }
  auto moves = make_room(h, tier - 1, total, coldest, departing);
  if (!moves) return std::nullopt;
  for (FileId v : *victims) moves->push_back({v, tier, tier - 1});
  return moves;
}

}  // namespace

std::optional<std::vector<Move>> Hierarchy::upgrade_plan(FileId id) const {
  const auto& f = file(id);
  if (f.tier >= fastest()) return std::nullopt;
  const TierIndex dest = f.tier + 1;
  auto moves = make_room(*this, dest, f.size, f.temperature, {f.tier, f.size, f.id});
  if (!moves) return std::nullopt;
  moves->push_back({f.id, f.tier, dest});
  return moves;
}

void Hierarchy::refresh_aggregates() {
  for (auto& t : state_) {
    t.temp_sum = 0.0;
    t.weighted_sum = 0.0;
    t.used = 0;
  }
  for (const auto& f : files_) {
    auto& t = state_[f.tier];
    t.used += f.size;
    t.temp_sum += f.temperature;
    t.weighted_sum += f.temperature * static_cast<double>(f.size);
  }
}

void Hierarchy::check_invariants() const {
  std::vector<Units> used(state_.size(), 0);
  std::vector<std::size_t> count(state_.size(), 0);
  for (const auto& f : files_) {
    if (f.tier >= state_.size()) throw MetadataError(file_name(f.id) + " references an unknown tier");
    if (!(f.temperature >= 0.0 && f.temperature <= 1.0))
      throw MetadataError(file_name(f.id) + " has temperature outside [0, 1]");
    if (f.size <= 0) throw MetadataError(file_name(f.id) + " has non-positive size");
    if (!state_[f.tier].residents.contains(ColdKey{f.temperature, f.size, f.id}))
      throw MetadataError(file_name(f.id) + " missing from the index of " + tier_name(f.tier));
    used[f.tier] += f.size;
    ++count[f.tier];
  }
  for (TierIndex t = 0; t < state_.size(); ++t) {
    if (count[t] != state_[t].residents.size())
      throw MetadataError(tier_name(t) + " index holds files not in the metadata");
    if (used[t] != state_[t].used) throw MetadataError(tier_name(t) + " used-space bookkeeping drifted");
    if (used[t] > tiers_[t].capacity) throw MetadataError(tier_name(t) + " exceeds its capacity");
  }
}

}  // namespace tiersim
