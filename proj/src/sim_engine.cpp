#include "tiersim/sim_engine.hpp"

#include <algorithm>
#include <limits>
#include <optional>

namespace tiersim {

std::size_t MetricsFrame::total_transfers() const {
  std::size_t n = 0;
  for (auto v : up) n += v;
  for (auto v : down) n += v;
  return n;
}

HeatmapSnapshot heatmap_snapshot(const Hierarchy& hierarchy, Timestep timestep) {
  HeatmapSnapshot snap;
  snap.timestep = timestep;
  snap.cells.reserve(hierarchy.size());
  std::vector<std::size_t> slot(hierarchy.tier_count(), 0);
  std::vector<std::vector<HeatmapCell>> per_tier(hierarchy.tier_count());
  for (const auto& f : hierarchy.files())
    per_tier[f.tier].push_back({f.tier, slot[f.tier]++, f.id, f.temperature, f.size});
  for (auto& cells : per_tier) snap.cells.insert(snap.cells.end(), cells.begin(), cells.end());
  return snap;
}

ServiceResult service_requests(const Hierarchy& hierarchy, std::span<const Request> arrivals) {
  ServiceResult out;
  out.pending.assign(hierarchy.tier_count(), 0.0);
  out.response.reserve(arrivals.size());
  out.served_by.reserve(arrivals.size());
  for (const auto& r : arrivals) {
    const auto& f = hierarchy.file(r.file);
    const double service = static_cast<double>(f.size) / hierarchy.spec(f.tier).speed;
    const double wait = out.pending[f.tier];
    out.pending[f.tier] += service;
    out.response.push_back(wait + service);
    out.served_by.push_back(f.tier);
  }
  return out;
}

double estimated_system_response(const Hierarchy& hierarchy) {
  double esr = 0.0;
  for (const auto& f : hierarchy.files())
    esr += f.temperature * static_cast<double>(f.size) / hierarchy.spec(f.tier).speed;
  return esr;
}

std::vector<Move> execute_decision_with_eviction(Hierarchy& hierarchy, const PolicyDecision& decision) {
  const auto& f = hierarchy.file(decision.file);
  if (decision.action != Action::upgrade) return {};
  if (f.tier != decision.from)
    throw MetadataError("decision for file " + std::to_string(raw(decision.file)) +
                        " was made against a stale placement");
  if (decision.to != decision.from + 1 || decision.to > hierarchy.fastest())
    throw MetadataError("upgrade must target the next faster tier");
  auto moves = hierarchy.upgrade_plan(f.id);
  if (!moves) return {};
  hierarchy.apply_moves(*moves);
  return std::move(*moves);
}

namespace {

class Simulation {
 public:
  Simulation(const ScenarioConfig& config, MetricsSink* sink)
      : cfg_(config),
        traits_(traits(config.policy)),
        sink_(sink),
        hierarchy_(config.tiers),
        request_rng_(make_rng(config.seed, Stream::requests)),
        dynamics_rng_(make_rng(config.seed, Stream::dynamics)),
        injection_rng_(make_rng(config.seed, Stream::injection)),
        heatmap_steps_(config.effective_heatmap_steps()) {
    auto population_rng = make_rng(config.seed, Stream::population);
    const auto files =
        generate_population(config.file_count, config.sizes, config.initial_temperatures, population_rng);
    initial_placement(files, hierarchy_, traits_.placement);
    if (traits_.learning) {
      const auto membership = config.membership();
      agents_.assign(hierarchy_.tier_count(), FrbAgent(membership, config.rl.hyper, config.rl.initial_p));
    }
    const std::size_t n = hierarchy_.tier_count();
    sum_up_.assign(n > 0 ? n - 1 : 0, 0);
    sum_down_.assign(n > 0 ? n - 1 : 0, 0);
  }

  RunSummary run() {
    RunSummary s;
    s.scenario = cfg_.name;
    s.policy = cfg_.policy;
    s.seed = cfg_.seed;
    s.timesteps = cfg_.timesteps;
    s.initial_files = hierarchy_.size();
    s.initial_esr = estimated_system_response(hierarchy_);
    if (cfg_.check_invariants) hierarchy_.check_invariants();

    for (Timestep t = 1; t <= cfg_.timesteps; ++t) step(t, s);

    s.final_esr = estimated_system_response(hierarchy_);
    const double steps = cfg_.timesteps > 0 ? static_cast<double>(cfg_.timesteps) : 1.0;
    std::size_t total = 0;
    for (std::size_t k = 0; k < sum_up_.size(); ++k) {
      s.mean_up.push_back(static_cast<double>(sum_up_[k]) / steps);
      s.mean_down.push_back(static_cast<double>(sum_down_[k]) / steps);
      total += sum_up_[k] + sum_down_[k];
    }
    s.mean_total_transfers = cfg_.timesteps > 0 ? static_cast<double>(total) / steps : 0.0;
    fill_tier_stats(s.final_occupancy, s.final_mean_temperature, s.final_file_count);
    return s;
  }

 private:
  void step(Timestep t, RunSummary& summary) {
    MetricsFrame frame;
    frame.timestep = t;
    frame.up.assign(sum_up_.size(), 0);
    frame.down.assign(sum_down_.size(), 0);

    if (cfg_.injection) {
      frame.injected = inject_new_files(hierarchy_, t, *cfg_.injection, injection_rng_).size();
      summary.injected_files += frame.injected;
    }

    if (sink_ && std::binary_search(heatmap_steps_.begin(), heatmap_steps_.end(), t))
      sink_->on_heatmap(heatmap_snapshot(hierarchy_, t));

    const RequestTrace trace = cfg_.pattern == RequestPattern::poisson
                                   ? gen_poisson_requests(hierarchy_, cfg_.workload, t, request_rng_)
                                   : gen_uniform_requests(hierarchy_, cfg_.workload, t, request_rng_);
    const std::vector<Request> arrivals = trace.arrivals();
    const ServiceResult served = service_requests(hierarchy_, arrivals);
    frame.requests = arrivals.size();
    summary.total_requests += arrivals.size();

    std::vector<StateVector> before;
    if (traits_.learning) {
      before.reserve(hierarchy_.tier_count());
      for (TierIndex k = 0; k < hierarchy_.tier_count(); ++k)
        before.push_back(state_vector(hierarchy_.compute_tier_state(k, served.pending[k])));
    }

    const bool fallback = traits_.learning && cfg_.rl.cold_start_fallback && t == 1;
    for (const auto& r : arrivals) {
      const auto& f = hierarchy_.file(r.file);
      if (f.tier >= hierarchy_.fastest()) continue;
      const TierIndex from = f.tier;
      bool upgrade = false;
      if (!traits_.learning || fallback) {
        const auto trigger = traits_.learning ? UpgradeTrigger::above_tier_mean : cfg_.rule_trigger;
        upgrade = !rule_based_decide(r.file, hierarchy_, trigger, cfg_.workload.hot_threshold).empty();
      } else {
        upgrade = decide_upgrade(r.file, from, from + 1, agents_[from], agents_[from + 1], hierarchy_,
                                 served.pending[from], served.pending[from + 1]);
      }
      if (!upgrade) continue;
      const auto moves = execute_decision_with_eviction(hierarchy_, {r.file, Action::upgrade, from, from + 1});
      for (const auto& m : moves) {
        if (m.to > m.from)
          ++frame.up[m.from];
        else
          ++frame.down[m.to];
      }
    }

    apply_temperature_dynamics(hierarchy_, trace, t, cfg_.workload, dynamics_rng_, traits_.size_sensitive);
    hierarchy_.refresh_aggregates();

    if (traits_.learning) learn(t, arrivals, served, before);

    if (cfg_.check_invariants) hierarchy_.check_invariants();

    for (std::size_t k = 0; k < sum_up_.size(); ++k) {
      sum_up_[k] += frame.up[k];
      sum_down_[k] += frame.down[k];
    }
    frame.estimated_system_response = estimated_system_response(hierarchy_);
    fill_tier_stats(frame.occupancy, frame.mean_temperature, frame.file_count);
    if (sink_) sink_->on_frame(frame);
  }

  void learn(Timestep t, const std::vector<Request>& arrivals, const ServiceResult& served,
             const std::vector<StateVector>& before) {
    const std::size_t n = hierarchy_.tier_count();
    std::vector<std::vector<double>> responses(n), times(n);
    for (std::size_t a = 0; a < arrivals.size(); ++a) {
      responses[served.served_by[a]].push_back(served.response[a]);
      times[served.served_by[a]].push_back(arrivals[a].offset);
    }
    for (TierIndex k = 0; k < n; ++k) {
      const double cost = compute_cost_signal({responses[k], times[k], 0.0, cfg_.rl.tau}, cfg_.rl.hyper.beta);
      const StateVector after = state_vector(hierarchy_.compute_tier_state(k, served.pending[k]));
      agents_[k].td_update(cost, before[k], after, cfg_.rl.tau);
      if (sink_) sink_->on_agent_params(t, k, agents_[k].params());
    }
  }

  void fill_tier_stats(std::vector<double>& occupancy, std::vector<double>& mean_temp,
                       std::vector<std::size_t>& count) const {
    occupancy.clear();
    mean_temp.clear();
    count.clear();
    for (TierIndex k = 0; k < hierarchy_.tier_count(); ++k) {
      const auto st = hierarchy_.compute_tier_state(k, 0.0);
      occupancy.push_back(static_cast<double>(st.used) / static_cast<double>(hierarchy_.spec(k).capacity));
      mean_temp.push_back(st.s1);
      count.push_back(st.file_count);
    }
  }

  const ScenarioConfig& cfg_;
  PolicyTraits traits_;
  MetricsSink* sink_;
  Hierarchy hierarchy_;
  Rng request_rng_;
  Rng dynamics_rng_;
  Rng injection_rng_;
  std::vector<Timestep> heatmap_steps_;
  std::vector<FrbAgent> agents_;
  std::vector<std::size_t> sum_up_;
  std::vector<std::size_t> sum_down_;
};

}  // namespace

RunSummary run_scenario(const ScenarioConfig& config, MetricsSink* sink) {
  config.validate();
  Simulation sim(config, sink);
  return sim.run();
}

}  // namespace tiersim
