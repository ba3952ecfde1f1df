#include "tiersim/workload.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tiersim {

void WorkloadParams::validate() const {
  if (!(hot_rate >= 0.0) || !(cold_rate >= 0.0)) throw std::invalid_argument("workload: rates must be >= 0");
  if (!(p_become_hot >= 0.0 && p_become_hot <= 1.0))
    throw std::invalid_argument("workload: p_become_hot must lie in [0, 1]");
  if (!(hot_threshold >= 0.0 && hot_threshold <= 1.0))
    throw std::invalid_argument("workload: hot_threshold must lie in [0, 1]");
  if (cooldown_window < 1) throw std::invalid_argument("workload: cooldown_window must be >= 1");
  if (!(decay_step > 0.0 && decay_step <= 1.0))
    throw std::invalid_argument("workload: decay_step must lie in (0, 1]");
}

std::string to_string(RequestPattern p) { return p == RequestPattern::poisson ? "poisson" : "uniform"; }

RequestPattern parse_request_pattern(const std::string& s) {
  if (s == "poisson") return RequestPattern::poisson;
  if (s == "uniform") return RequestPattern::uniform;
  throw std::invalid_argument("unknown request pattern '" + s + "'");
}

std::size_t RequestTrace::total_requests() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.offsets.size();
  return n;
}

std::vector<Request> RequestTrace::arrivals() const {
  std::vector<Request> out;
  out.reserve(total_requests());
  for (const auto& e : entries)
    for (double o : e.offsets) out.push_back({e.file, o});
  std::stable_sort(out.begin(), out.end(),
                   [](const Request& a, const Request& b) { return a.offset < b.offset; });
  return out;
}

RequestTrace gen_poisson_requests(const Hierarchy& hierarchy, const WorkloadParams& params,
                                  Timestep timestep, Rng& rng) {
  RequestTrace trace;
  trace.timestep = timestep;
  std::poisson_distribution<int> hot(params.hot_rate);
  std::poisson_distribution<int> cold(params.cold_rate);
  std::uniform_real_distribution<double> offset(0.0, 1.0);
  for (const auto& f : hierarchy.files()) {
    const bool is_hot = f.temperature >= params.hot_threshold;
    const double rate = is_hot ? params.hot_rate : params.cold_rate;
    if (rate <= 0.0) continue;
    const int count = is_hot ? hot(rng) : cold(rng);
    if (count == 0) continue;
    RequestEntry e{f.id, {}};
    e.offsets.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) e.offsets.push_back(offset(rng));
    std::sort(e.offsets.begin(), e.offsets.end());
    trace.entries.push_back(std::move(e));
  }
  return trace;
}

RequestTrace gen_uniform_requests(const Hierarchy& hierarchy, const WorkloadParams& params,
                                  Timestep timestep, Rng& rng) {
  const std::size_t n = hierarchy.size();
  if (params.uniform_k > n)
    throw std::invalid_argument("uniform_k (" + std::to_string(params.uniform_k) +
                                ") exceeds the file population (" + std::to_string(n) + ")");
  RequestTrace trace;
  trace.timestep = timestep;
  std::vector<std::uint32_t> ids(n);
  std::iota(ids.begin(), ids.end(), 0U);
  std::vector<std::uint32_t> picked;
  picked.reserve(params.uniform_k);
  std::sample(ids.begin(), ids.end(), std::back_inserter(picked), params.uniform_k, rng);
  std::uniform_real_distribution<double> offset(0.0, 1.0);
  trace.entries.reserve(picked.size());
  for (auto id : picked) trace.entries.push_back({FileId{id}, {offset(rng)}});
  return trace;
}

void apply_temperature_dynamics(Hierarchy& hierarchy, const RequestTrace& trace, Timestep timestep,
                                const WorkloadParams& params, Rng& rng, bool size_sensitivity) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double mean_size = hierarchy.mean_file_size();
  for (const auto& e : trace.entries) {
    const auto& f = hierarchy.file(e.file);
    if (f.temperature < params.hot_threshold) {
      double p = params.p_become_hot;
      if (size_sensitivity) p *= std::min(1.0, mean_size / static_cast<double>(f.size));
      if (unit(rng) < p) {
        const double t = params.hot_threshold + (1.0 - params.hot_threshold) * unit(rng);
        hierarchy.set_temperature(e.file, std::min(t, 1.0));
      }
    }
    hierarchy.mark_requested(e.file, timestep);
  }
  for (const auto& f : hierarchy.files()) {
    if (timestep - f.idle_since() < params.cooldown_window || f.temperature <= 0.0) continue;
    hierarchy.set_temperature(f.id, std::max(0.0, f.temperature - params.decay_step));
  }
}

void SizeDistribution::validate() const {
  if (min <= 0 || max < min) throw std::invalid_argument("size distribution: need 0 < min <= max");
  if (kind == Kind::bounded_pareto && !(alpha > 0.0))
    throw std::invalid_argument("size distribution: pareto alpha must be positive");
}

double SizeDistribution::mean() const {
  const auto lo = static_cast<double>(min);
  const auto hi = static_cast<double>(max);
  if (kind == Kind::uniform || min == max) return 0.5 * (lo + hi);
  const double norm = 1.0 - std::pow(lo / hi, alpha);
  if (std::abs(alpha - 1.0) < 1e-12) return lo * std::log(hi / lo) / norm;
  return std::pow(lo, alpha) / norm * alpha / (alpha - 1.0) *
         (std::pow(lo, 1.0 - alpha) - std::pow(hi, 1.0 - alpha));
}

Units SizeDistribution::sample(Rng& rng) const {
  if (kind == Kind::uniform) return std::uniform_int_distribution<Units>(min, max)(rng);
  // Inverse CDF of the Pareto distribution truncated to [min, max].
  const auto lo = static_cast<double>(min);
  const auto hi = static_cast<double>(max);
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  const double la = std::pow(lo, alpha);
  const double ha = std::pow(hi, alpha);
  const double x = std::pow(-(u * ha - u * la - ha) / (ha * la), -1.0 / alpha);
  return std::clamp(static_cast<Units>(std::llround(x)), min, max);
}

std::string to_string(SizeDistribution::Kind k) {
  return k == SizeDistribution::Kind::uniform ? "uniform" : "bounded_pareto";
}

SizeDistribution::Kind parse_size_kind(const std::string& s) {
  if (s == "uniform") return SizeDistribution::Kind::uniform;
  if (s == "bounded_pareto") return SizeDistribution::Kind::bounded_pareto;
  throw std::invalid_argument("unknown size distribution '" + s + "'");
}

void TemperatureRange::validate() const {
  if (!(min >= 0.0 && max <= 1.0 && min <= max))
    throw std::invalid_argument("temperature range must satisfy 0 <= min <= max <= 1");
}

double TemperatureRange::sample(Rng& rng) const {
  if (min == max) return min;
  return std::uniform_real_distribution<double>(min, max)(rng);
}

std::vector<FileSpec> generate_population(std::size_t count, const SizeDistribution& sizes,
                                          const TemperatureRange& temps, Rng& rng) {
  std::vector<FileSpec> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    FileSpec f;
    f.size = sizes.sample(rng);
    f.temperature = temps.sample(rng);
    out.push_back(f);
  }
  return out;
}

void InjectionSchedule::validate() const {
  if (period < 1) throw std::invalid_argument("injection: period must be >= 1");
  sizes.validate();
  temperatures.validate();
}

bool InjectionSchedule::fires_at(Timestep timestep) const {
  if (batch_size == 0 || timestep <= 0 || timestep % period != 0) return false;
  if (total == 0) return true;
  const auto earlier_batches = static_cast<std::size_t>(timestep / period - 1);
  return earlier_batches * batch_size < total;
}

std::vector<FileId> inject_new_files(Hierarchy& hierarchy, Timestep timestep,
                                     const InjectionSchedule& schedule, Rng& rng) {
  std::vector<FileId> created;
  if (!schedule.fires_at(timestep)) return created;
  std::size_t count = schedule.batch_size;
  if (schedule.total != 0) {
    const auto already = static_cast<std::size_t>(timestep / schedule.period - 1) * schedule.batch_size;
    count = std::min(count, schedule.total - already);
  }
  created.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const Units size = schedule.sizes.sample(rng);
    const double temp = schedule.temperatures.sample(rng);
    std::optional<TierIndex> dest;
    for (TierIndex t = hierarchy.slowest(); t <= hierarchy.fastest(); ++t) {
      if (hierarchy.free_space(t) >= size) {
        dest = t;
        break;
      }
    }
    if (!dest)
      throw CapacityError("no tier can take an injected file of size " + std::to_string(size) +
                          " at timestep " + std::to_string(timestep));
    created.push_back(hierarchy.add_file(size, temp, *dest, timestep));
  }
  return created;
}

}  // namespace tiersim
