#include "tiersim/scenario_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace tiersim {

using nlohmann::json;

std::string to_string(PolicyKind p) {
  switch (p) {
    case PolicyKind::rule1: return "rule1";
    case PolicyKind::rule2: return "rule2";
    case PolicyKind::rule3: return "rule3";
    case PolicyKind::rl_ft: return "rl-ft";
    case PolicyKind::rl_dt: return "rl-dt";
    case PolicyKind::rl_st: return "rl-st";
  }
  return "?";
}

PolicyKind parse_policy(const std::string& s) {
  for (PolicyKind p : kAllPolicies)
    if (to_string(p) == s) return p;
  throw std::invalid_argument("unknown policy '" + s + "' (expected rule1, rule2, rule3, rl-ft, rl-dt or rl-st)");
}

PolicyTraits traits(PolicyKind p) {
  switch (p) {
    case PolicyKind::rule1: return {PlacementStrategy::fastest_first_80, false, false};
    case PolicyKind::rule2: return {PlacementStrategy::slowest_first, false, false};
    case PolicyKind::rule3: return {PlacementStrategy::fastest_first_80, false, true};
    case PolicyKind::rl_ft: return {PlacementStrategy::fastest_first_80, true, false};
    case PolicyKind::rl_dt: return {PlacementStrategy::distributed, true, false};
    case PolicyKind::rl_st: return {PlacementStrategy::slowest_first, true, false};
  }
  return {PlacementStrategy::fastest_first_80, false, false};
}

RlSettings::RlSettings() {
  const auto d = MembershipParams::defaults();
  a = d.a;
  b = d.b;
}

void ScenarioConfig::validate() const {
  if (timesteps < 0) throw ConfigError("timesteps", "must be >= 0");
  if (tiers.empty()) throw ConfigError("tiers", "at least one tier is required");
  for (std::size_t t = 0; t < tiers.size(); ++t) {
    const std::string f = "tiers[" + std::to_string(t) + "]";
    if (tiers[t].capacity <= 0) throw ConfigError(f + ".capacity", "must be positive");
    if (!(tiers[t].speed > 0.0) || !std::isfinite(tiers[t].speed))
      throw ConfigError(f + ".speed", "must be positive");
    if (t > 0 && tiers[t].capacity >= tiers[t - 1].capacity)
      throw ConfigError(f + ".capacity", "must be smaller than the next slower tier's");
    if (t > 0 && tiers[t].speed <= tiers[t - 1].speed)
      throw ConfigError(f + ".speed", "must exceed the next slower tier's");
  }
  try {
    sizes.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("population.sizes", e.what());
  }
  try {
    initial_temperatures.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("population.temperature", e.what());
  }
  try {
    workload.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("workload", e.what());
  }
  if (pattern == RequestPattern::uniform && workload.uniform_k > file_count && !injection)
    throw ConfigError("workload.uniform_k", "exceeds the file population");
  Units total_capacity = 0;
  for (const auto& t : tiers) total_capacity += t.capacity;
  // Uniform sizes are bounded, so the worst case is checkable up front.
  if (sizes.kind == SizeDistribution::Kind::uniform &&
      static_cast<double>(file_count) * static_cast<double>(sizes.max) > static_cast<double>(total_capacity) &&
      !injection)
    throw ConfigError("population", "the largest possible population exceeds the total tier capacity");
  if (static_cast<double>(file_count) * sizes.mean() > static_cast<double>(total_capacity))
    throw ConfigError("population", "expected population size exceeds the total tier capacity");
  try {
    rl.hyper.validate();
    membership().validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("rl", e.what());
  }
  if (!(rl.tau > 0.0)) throw ConfigError("rl.tau", "must be positive");
  if (!std::isfinite(rl.initial_p)) throw ConfigError("rl.initial_p", "must be finite");
  if (injection) {
    try {
      injection->validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("injection", e.what());
    }
  }
  for (Timestep s : heatmap_steps)
    if (s < 1 || s > timesteps) throw ConfigError("output.heatmap_steps", "entries must lie in [1, timesteps]");
}

double ScenarioConfig::expected_requests_per_step() const {
  if (pattern == RequestPattern::uniform) return static_cast<double>(workload.uniform_k);
  const double lo = initial_temperatures.min;
  const double hi = initial_temperatures.max;
  double hot_fraction = 0.0;
  if (hi > lo)
    hot_fraction = std::clamp((hi - workload.hot_threshold) / (hi - lo), 0.0, 1.0);
  else
    hot_fraction = lo >= workload.hot_threshold ? 1.0 : 0.0;
  return static_cast<double>(file_count) *
         (hot_fraction * workload.hot_rate + (1.0 - hot_fraction) * workload.cold_rate);
}

double ScenarioConfig::scale_s2() const {
  if (rl.scale_s2) return *rl.scale_s2;
  return workload.hot_threshold * sizes.mean();
}

double ScenarioConfig::scale_s3() const {
  if (rl.scale_s3) return *rl.scale_s3;
  double mean_speed = 0.0;
  for (const auto& t : tiers) mean_speed += t.speed;
  mean_speed /= static_cast<double>(tiers.size());
  const double s = expected_requests_per_step() * sizes.mean() / mean_speed;
  return s > 0.0 ? s : 1.0;
}

MembershipParams ScenarioConfig::membership() const {
  MembershipParams m;
  m.a = rl.a;
  m.b = rl.b;
  m.scale = {1.0, scale_s2(), scale_s3()};
  return m;
}

std::vector<Timestep> ScenarioConfig::effective_heatmap_steps() const {
  std::vector<Timestep> out = heatmap_steps;
  if (out.empty() && timesteps > 0) out = {1, timesteps};
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json size_json(const SizeDistribution& s) {
  json j = {{"distribution", to_string(s.kind)}, {"min", s.min}, {"max", s.max}};
  if (s.kind == SizeDistribution::Kind::bounded_pareto) j["alpha"] = s.alpha;
  return j;
}

json temp_json(const TemperatureRange& t) { return {{"min", t.min}, {"max", t.max}}; }

// Walks a JSON object, reporting errors with the full field path and
// rejecting keys that were never read.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }
  ~Reader() = default;

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  // Absent or null entries still count as read.
  void mark(const std::string& key) { seen_.insert(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(field(key), "missing");
    return j_.at(key);
  }

  Reader object(const std::string& key) { return Reader(raw(key), field(key)); }

  double number(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number()) throw ConfigError(field(key), "expected a number");
    return v.get<double>();
  }
  double number(const std::string& key, double fallback) {
    if (!has(key)) {
      seen_.insert(key);
      return fallback;
    }
    return number(key);
  }
  std::int64_t integer(const std::string& key) {
    const auto& v = raw(key);
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>())
      return static_cast<std::int64_t>(v.get<double>());
    throw ConfigError(field(key), "expected an integer");
  }
  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    if (!has(key)) {
      seen_.insert(key);
      return fallback;
    }
    return integer(key);
  }
  std::string string(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_string()) throw ConfigError(field(key), "expected a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) {
      seen_.insert(key);
      return fallback;
    }
    return string(key);
  }
  bool boolean(const std::string& key, bool fallback) {
    seen_.insert(key);
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(field(key), "expected true or false");
    return v.get<bool>();
  }
  template <typename Parse>
  auto parsed(const std::string& key, const std::string& fallback, Parse parse) {
    const std::string s = string(key, fallback);
    try {
      return parse(s);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(field(key), e.what());
    }
  }

  void reject_unknown() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.contains(k)) throw ConfigError(field(k), "unknown field");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

SizeDistribution read_sizes(Reader r) {
  SizeDistribution s;
  s.kind = r.parsed("distribution", "uniform", parse_size_kind);
  s.min = r.integer("min");
  s.max = r.integer("max");
  s.alpha = r.number("alpha", 1.0);
  r.reject_unknown();
  return s;
}

TemperatureRange read_temps(Reader r, TemperatureRange fallback) {
  TemperatureRange t;
  t.min = r.number("min", fallback.min);
  t.max = r.number("max", fallback.max);
  r.reject_unknown();
  return t;
}

std::array<double, kStateDims> read_triple(Reader& r, const std::string& key,
                                           const std::array<double, kStateDims>& fallback) {
  if (!r.has(key)) {
    r.mark(key);
    return fallback;
  }
  const auto& v = r.raw(key);
  if (!v.is_array() || v.size() != kStateDims) throw ConfigError(r.field(key), "expected an array of 3 numbers");
  std::array<double, kStateDims> out{};
  for (std::size_t i = 0; i < kStateDims; ++i) {
    if (!v[i].is_number()) throw ConfigError(r.field(key) + "[" + std::to_string(i) + "]", "expected a number");
    out[i] = v[i].get<double>();
  }
  return out;
}

}  // namespace

json to_json(const ScenarioConfig& c) {
  json tiers = json::array();
  for (const auto& t : c.tiers) tiers.push_back({{"capacity", t.capacity}, {"speed", t.speed}});
  json rl = {{"a", c.rl.a},
             {"b", c.rl.b},
             {"lambda", c.rl.hyper.lambda},
             {"beta", c.rl.hyper.beta},
             {"alpha", c.rl.hyper.alpha},
             {"initial_p", c.rl.initial_p},
             {"tau", c.rl.tau},
             {"cold_start_fallback", c.rl.cold_start_fallback}};
  rl["scale_s2"] = c.rl.scale_s2 ? json(*c.rl.scale_s2) : json(nullptr);
  rl["scale_s3"] = c.rl.scale_s3 ? json(*c.rl.scale_s3) : json(nullptr);
  json j = {
      {"name", c.name},
      {"seed", c.seed},
      {"timesteps", c.timesteps},
      {"tiers", tiers},
      {"population",
       {{"count", c.file_count}, {"sizes", size_json(c.sizes)}, {"temperature", temp_json(c.initial_temperatures)}}},
      {"workload",
       {{"pattern", to_string(c.pattern)},
        {"hot_rate", c.workload.hot_rate},
        {"cold_rate", c.workload.cold_rate},
        {"hot_threshold", c.workload.hot_threshold},
        {"p_become_hot", c.workload.p_become_hot},
        {"cooldown_window", c.workload.cooldown_window},
        {"decay_step", c.workload.decay_step},
        {"uniform_k", c.workload.uniform_k}}},
      {"policy", {{"name", to_string(c.policy)}, {"rule_trigger", to_string(c.rule_trigger)}}},
      {"rl", rl},
      {"output", {{"heatmap_steps", c.heatmap_steps}}},
      {"check_invariants", c.check_invariants},
  };
  if (c.injection) {
    const auto& s = *c.injection;
    j["injection"] = {{"batch_size", s.batch_size},
                      {"period", s.period},
                      {"total", s.total},
                      {"sizes", size_json(s.sizes)},
                      {"temperature", temp_json(s.temperatures)}};
  }
  return j;
}

ScenarioConfig scenario_from_json(const json& j) {
  ScenarioConfig c;
  Reader root(j, "");
  c.name = root.string("name", c.name);
  const auto seed = root.integer("seed", 1);
  if (seed < 0) throw ConfigError("seed", "must be non-negative");
  c.seed = static_cast<std::uint64_t>(seed);
  c.timesteps = root.integer("timesteps", c.timesteps);

  const auto& tiers = root.raw("tiers");
  if (!tiers.is_array()) throw ConfigError("tiers", "expected an array, slowest tier first");
  for (std::size_t i = 0; i < tiers.size(); ++i) {
    Reader t(tiers[i], "tiers[" + std::to_string(i) + "]");
    c.tiers.push_back({t.integer("capacity"), t.number("speed")});
    t.reject_unknown();
  }

  {
    Reader p = root.object("population");
    const auto count = p.integer("count");
    if (count < 0) throw ConfigError("population.count", "must be non-negative");
    c.file_count = static_cast<std::size_t>(count);
    c.sizes = read_sizes(p.object("sizes"));
    if (p.has("temperature")) {
      c.initial_temperatures = read_temps(p.object("temperature"), c.initial_temperatures);
    } else {
      p.mark("temperature");
    }
    p.reject_unknown();
  }

  if (root.has("workload")) {
    Reader w = root.object("workload");
    c.pattern = w.parsed("pattern", "poisson", parse_request_pattern);
    c.workload.hot_rate = w.number("hot_rate", c.workload.hot_rate);
    c.workload.cold_rate = w.number("cold_rate", c.workload.cold_rate);
    c.workload.hot_threshold = w.number("hot_threshold", c.workload.hot_threshold);
    c.workload.p_become_hot = w.number("p_become_hot", c.workload.p_become_hot);
    c.workload.cooldown_window = w.integer("cooldown_window", c.workload.cooldown_window);
    c.workload.decay_step = w.number("decay_step", c.workload.decay_step);
    const auto k = w.integer("uniform_k", static_cast<std::int64_t>(c.workload.uniform_k));
    if (k < 0) throw ConfigError("workload.uniform_k", "must be non-negative");
    c.workload.uniform_k = static_cast<std::size_t>(k);
    w.reject_unknown();
  } else {
    root.mark("workload");
  }

  if (root.has("policy")) {
    Reader p = root.object("policy");
    c.policy = p.parsed("name", "rule1", parse_policy);
    c.rule_trigger = p.parsed("rule_trigger", "above_tier_mean", parse_upgrade_trigger);
    p.reject_unknown();
  } else {
    root.mark("policy");
  }

  if (root.has("rl")) {
    Reader r = root.object("rl");
    c.rl.a = read_triple(r, "a", c.rl.a);
    c.rl.b = read_triple(r, "b", c.rl.b);
    if (r.has("scale_s2")) c.rl.scale_s2 = r.number("scale_s2");
    else r.mark("scale_s2");
    if (r.has("scale_s3")) c.rl.scale_s3 = r.number("scale_s3");
    else r.mark("scale_s3");
    c.rl.hyper.lambda = r.number("lambda", c.rl.hyper.lambda);
    c.rl.hyper.beta = r.number("beta", c.rl.hyper.beta);
    c.rl.hyper.alpha = r.number("alpha", c.rl.hyper.alpha);
    c.rl.initial_p = r.number("initial_p", c.rl.initial_p);
    c.rl.tau = r.number("tau", c.rl.tau);
    c.rl.cold_start_fallback = r.boolean("cold_start_fallback", c.rl.cold_start_fallback);
    r.reject_unknown();
  } else {
    root.mark("rl");
  }

  if (root.has("injection")) {
    Reader r = root.object("injection");
    InjectionSchedule s;
    const auto batch = r.integer("batch_size", static_cast<std::int64_t>(s.batch_size));
    const auto total = r.integer("total", 0);
    if (batch < 0) throw ConfigError("injection.batch_size", "must be non-negative");
    if (total < 0) throw ConfigError("injection.total", "must be non-negative");
    s.batch_size = static_cast<std::size_t>(batch);
    s.total = static_cast<std::size_t>(total);
    s.period = r.integer("period", s.period);
    s.sizes = read_sizes(r.object("sizes"));
    if (r.has("temperature")) s.temperatures = read_temps(r.object("temperature"), s.temperatures);
    else r.mark("temperature");
    r.reject_unknown();
    c.injection = s;
  } else {
    root.mark("injection");
  }

  if (root.has("output")) {
    Reader o = root.object("output");
    if (o.has("heatmap_steps")) {
      const auto& v = o.raw("heatmap_steps");
      if (!v.is_array()) throw ConfigError("output.heatmap_steps", "expected an array of timesteps");
      for (const auto& s : v) {
        if (!s.is_number_integer()) throw ConfigError("output.heatmap_steps", "expected integers");
        c.heatmap_steps.push_back(s.get<Timestep>());
      }
    } else {
      o.mark("heatmap_steps");
    }
    o.reject_unknown();
  } else {
    root.mark("output");
  }
  c.check_invariants = root.boolean("check_invariants", c.check_invariants);
  root.reject_unknown();
  c.validate();
  return c;
}

ScenarioConfig load_scenario(const std::string& path_or_preset) {
  if (auto p = preset(path_or_preset)) return *p;
  std::ifstream in(path_or_preset);
  if (!in) throw ConfigError("<config>", "cannot open '" + path_or_preset + "' and no preset has that name");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("<config>", std::string("malformed JSON: ") + e.what());
  }
  return scenario_from_json(j);
}

// ---------------------------------------------------------------------------
// Presets

namespace {

ScenarioConfig sim_1000() {
  ScenarioConfig c;
  c.name = "sim-1000";
  c.seed = 2021;
  c.timesteps = 1000;
  c.tiers = {{10'000'000, 100.0}, {1'000'000, 500.0}, {100'000, 1000.0}};
  c.file_count = 1000;
  c.sizes = {SizeDistribution::Kind::uniform, 1, 10'000, 1.0};
  c.initial_temperatures = {0.4, 0.6};
  c.pattern = RequestPattern::poisson;
  c.rule_trigger = UpgradeTrigger::above_hot_threshold;
  return c;
}

constexpr Units kKB = 1'000;
constexpr Units kMB = 1'000'000;
constexpr Units kGB = 1'000'000'000;

ScenarioConfig cloud(std::size_t files, Units scale_down) {
  ScenarioConfig c;
  c.seed = 2021;
  c.timesteps = 1000;
  c.tiers = {{50 * kGB / scale_down, 100.0 * kMB}, {6 * kGB / scale_down, 500.0 * kMB}, {2 * kGB / scale_down, 1000.0 * kMB}};
  c.file_count = files;
  // Heavy-tailed sizes between 10 KB and 200 MB with a mean near 1 MB, so
  // 20,000 files total roughly 20 GB.
  c.sizes = {SizeDistribution::Kind::bounded_pareto, 10 * kKB, 200 * kMB, 0.55};
  c.initial_temperatures = {0.4, 0.6};
  c.pattern = RequestPattern::uniform;
  c.workload.uniform_k = static_cast<std::size_t>(1000 / scale_down);
  c.policy = PolicyKind::rl_ft;
  c.rule_trigger = UpgradeTrigger::above_hot_threshold;
  return c;
}

ScenarioConfig with_injection(ScenarioConfig c, std::size_t batch, std::size_t total) {
  InjectionSchedule s;
  s.batch_size = batch;
  s.period = 10;
  s.total = total;
  s.sizes = c.sizes;
  s.temperatures = {0.4, 0.6};
  c.injection = s;
  return c;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"sim-1000", "sim-1000-temp01", "sim-1000-uniform", "cloud-20000", "cloud-20000-dynamic",
          "cloud-2000-dynamic"};
}

std::optional<ScenarioConfig> preset(const std::string& name) {
  if (name == "sim-1000") return sim_1000();
  if (name == "sim-1000-temp01") {
    auto c = sim_1000();
    c.name = name;
    c.initial_temperatures = {0.0, 1.0};
    return c;
  }
  if (name == "sim-1000-uniform") {
    auto c = sim_1000();
    c.name = name;
    c.pattern = RequestPattern::uniform;
    c.workload.uniform_k = 200;
    return c;
  }
  if (name == "cloud-20000") {
    auto c = cloud(20'000, 1);
    c.name = name;
    return c;
  }
  if (name == "cloud-20000-dynamic") {
    auto c = with_injection(cloud(20'000, 1), 200, 20'000);
    c.name = name;
    return c;
  }
  if (name == "cloud-2000-dynamic") {
    auto c = with_injection(cloud(2'000, 10), 20, 2'000);
    c.name = name;
    return c;
  }
  return std::nullopt;
}

}  // namespace tiersim
