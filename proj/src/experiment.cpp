#include "tiersim/experiment.hpp"

#include <atomic>
#include <charconv>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

namespace tiersim {

namespace fs = std::filesystem;
using nlohmann::json;

void ExperimentSpec::validate() const {
  if (config.empty()) throw ConfigError("config", "a scenario preset or path is required");
  if (policies.empty()) throw ConfigError("policies", "at least one policy is required");
  if (repetitions < 1) throw ConfigError("reps", "must be >= 1");
  std::set<PolicyKind> seen;
  for (auto p : policies)
    if (!seen.insert(p).second) throw ConfigError("policies", "'" + to_string(p) + "' listed twice");
}

std::string up_label(std::size_t lower_tier) {
  return "up_" + std::to_string(lower_tier + 1) + "_" + std::to_string(lower_tier + 2);
}

std::string down_label(std::size_t lower_tier) {
  return "down_" + std::to_string(lower_tier + 2) + "_" + std::to_string(lower_tier + 1);
}

std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, end);
}

json frame_json(const MetricsFrame& f) {
  json j;
  j["timestep"] = f.timestep;
  for (std::size_t k = 0; k < f.up.size(); ++k) j["transfers_" + up_label(k)] = f.up[k];
  for (std::size_t k = f.down.size(); k-- > 0;) j["transfers_" + down_label(k)] = f.down[k];
  j["total_transfers"] = f.total_transfers();
  j["requests"] = f.requests;
  j["injected"] = f.injected;
  j["estimated_system_response"] = f.estimated_system_response;
  j["occupancy"] = f.occupancy;
  j["mean_temperature"] = f.mean_temperature;
  j["file_count"] = f.file_count;
  return j;
}

json summary_json(const RunSummary& s) {
  json j;
  j["scenario"] = s.scenario;
  j["policy"] = to_string(s.policy);
  j["seed"] = s.seed;
  j["timesteps"] = s.timesteps;
  j["initial_files"] = s.initial_files;
  j["injected_files"] = s.injected_files;
  j["total_requests"] = s.total_requests;
  j["initial_esr"] = s.initial_esr;
  j["final_esr"] = s.final_esr;
  json transfers;
  for (std::size_t k = 0; k < s.mean_up.size(); ++k) transfers[up_label(k)] = s.mean_up[k];
  for (std::size_t k = 0; k < s.mean_down.size(); ++k) transfers[down_label(k)] = s.mean_down[k];
  transfers["total"] = s.mean_total_transfers;
  j["mean_transfers_per_timestep"] = transfers;
  j["final_occupancy"] = s.final_occupancy;
  j["final_mean_temperature"] = s.final_mean_temperature;
  j["final_file_count"] = s.final_file_count;
  return j;
}

struct RunWriter::Impl {
  fs::path dir;
  std::ofstream metrics;
  std::ofstream heatmap;
  std::ofstream agents;
};

RunWriter::RunWriter(const fs::path& dir) : impl_(std::make_unique<Impl>()) {
  impl_->dir = dir;
  fs::create_directories(dir);
  fs::remove(dir / "agent_params.csv");
  impl_->metrics.open(dir / "metrics.jsonl", std::ios::binary | std::ios::trunc);
  impl_->heatmap.open(dir / "heatmap.csv", std::ios::binary | std::ios::trunc);
  if (!impl_->metrics || !impl_->heatmap) throw std::runtime_error("cannot write run artifacts in " + dir.string());
  impl_->heatmap << "timestep,tier_id,slot_index,file_id,temperature,size\n";
}

RunWriter::~RunWriter() = default;

void RunWriter::on_frame(const MetricsFrame& frame) { impl_->metrics << frame_json(frame).dump() << '\n'; }

void RunWriter::on_heatmap(const HeatmapSnapshot& snap) {
  auto& out = impl_->heatmap;
  for (const auto& c : snap.cells)
    out << snap.timestep << ',' << c.tier + 1 << ',' << c.slot << ',' << raw(c.file) << ','
        << format_number(c.temperature) << ',' << c.size << '\n';
}

void RunWriter::on_agent_params(Timestep t, TierIndex tier, const RuleVector& p) {
  auto& out = impl_->agents;
  if (!out.is_open()) {
    out.open(impl_->dir / "agent_params.csv", std::ios::binary | std::ios::trunc);
    out << "timestep,tier_id";
    for (std::size_t i = 1; i <= kRuleCount; ++i) out << ",p" << i;
    out << '\n';
  }
  out << t << ',' << tier + 1;
  for (double v : p) out << ',' << format_number(v);
  out << '\n';
}

RunSummary run_to_directory(const ScenarioConfig& config, const fs::path& dir) {
  config.validate();
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "config.json", std::ios::binary | std::ios::trunc);
    cfg << to_json(config).dump(2) << '\n';
  }
  RunSummary summary;
  {
    RunWriter writer(dir);
    summary = run_scenario(config, &writer);
  }
  std::ofstream out(dir / "summary.json", std::ios::binary | std::ios::trunc);
  out << summary_json(summary).dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write " + (dir / "summary.json").string());
  return summary;
}

void write_comparison_csv(const fs::path& path, std::span<const RunRecord> runs) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const std::size_t links = runs.empty() ? 0 : runs.front().summary.mean_up.size();
  const std::size_t tiers = runs.empty() ? 0 : runs.front().summary.final_occupancy.size();
  out << "policy,rep,seed";
  for (std::size_t k = 0; k < links; ++k) out << ",mean_" << up_label(k);
  for (std::size_t k = links; k-- > 0;) out << ",mean_" << down_label(k);
  out << ",mean_total_transfers,final_esr";
  for (std::size_t t = 0; t < tiers; ++t) out << ",final_occupancy_" << t + 1;
  out << '\n';
  for (const auto& r : runs) {
    const auto& s = r.summary;
    out << to_string(r.policy) << ',' << r.repetition << ',' << s.seed;
    for (std::size_t k = 0; k < links; ++k) out << ',' << format_number(s.mean_up[k]);
    for (std::size_t k = links; k-- > 0;) out << ',' << format_number(s.mean_down[k]);
    out << ',' << format_number(s.mean_total_transfers) << ',' << format_number(s.final_esr);
    for (std::size_t t = 0; t < tiers; ++t) out << ',' << format_number(s.final_occupancy[t]);
    out << '\n';
  }
}

std::vector<RunRecord> run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const ScenarioConfig base = load_scenario(spec.config);
  const std::uint64_t seed = spec.seed.value_or(base.seed);

  struct Job {
    ScenarioConfig config;
    RunRecord record;
  };
  std::vector<Job> jobs;
  for (PolicyKind p : spec.policies) {
    for (std::size_t rep = 0; rep < spec.repetitions; ++rep) {
      Job job{base, {}};
      job.config.policy = p;
      job.config.seed = seed + rep;
      job.config.validate();
      job.record.policy = p;
      job.record.repetition = rep;
      job.record.dir = spec.out_dir / (to_string(p) + "-rep" + std::to_string(rep));
      jobs.push_back(std::move(job));
    }
  }

  std::size_t workers = spec.workers != 0 ? spec.workers : std::max(1U, std::thread::hardware_concurrency());
  workers = std::min(workers, jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
          try {
            jobs[i].record.summary = run_to_directory(jobs[i].config, jobs[i].record.dir);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);

  std::vector<RunRecord> records;
  records.reserve(jobs.size());
  for (auto& j : jobs) records.push_back(std::move(j.record));
  write_comparison_csv(spec.out_dir / "comparison.csv", records);
  return records;
}

PlotKind parse_plot_kind(const std::string& s) {
  if (s == "transfers") return PlotKind::transfers;
  if (s == "esr") return PlotKind::esr;
  if (s == "heatmap") return PlotKind::heatmap;
  throw std::invalid_argument("unknown plot kind '" + s + "' (expected transfers, esr or heatmap)");
}

std::string to_string(PlotKind k) {
  switch (k) {
    case PlotKind::transfers: return "transfers";
    case PlotKind::esr: return "esr";
    case PlotKind::heatmap: return "heatmap";
  }
  return "?";
}

namespace {

std::vector<json> read_frames(const fs::path& run_dir) {
  std::ifstream in(run_dir / "metrics.jsonl");
  if (!in) throw std::runtime_error("no metrics.jsonl in " + run_dir.string());
  std::vector<json> frames;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) frames.push_back(json::parse(line));
  return frames;
}

std::string run_policy(const fs::path& run_dir) {
  std::ifstream in(run_dir / "summary.json");
  if (!in) throw std::runtime_error("no summary.json in " + run_dir.string());
  return json::parse(in).at("policy").get<std::string>();
}

}  // namespace

fs::path emit_plot_data(const fs::path& run_dir, PlotKind kind, std::span<const Timestep> timesteps) {
  const fs::path out_path = run_dir / ("plot_" + to_string(kind) + ".csv");

  if (kind == PlotKind::heatmap) {
    std::ifstream in(run_dir / "heatmap.csv");
    if (!in) throw std::runtime_error("no heatmap.csv in " + run_dir.string());
    std::string header;
    std::getline(in, header);
    const std::set<Timestep> keep(timesteps.begin(), timesteps.end());
    std::vector<std::string> rows;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const Timestep t = std::stoll(line.substr(0, line.find(',')));
      if (keep.empty() || keep.contains(t)) rows.push_back(line);
    }
    if (rows.empty()) throw std::runtime_error("no heatmap rows for the requested timesteps in " + run_dir.string());
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    out << header << '\n';
    for (const auto& r : rows) out << r << '\n';
    return out_path;
  }

  const auto frames = read_frames(run_dir);
  if (frames.empty()) throw std::runtime_error("run in " + run_dir.string() + " recorded no timesteps");
  const std::string policy = run_policy(run_dir);
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (kind == PlotKind::transfers) {
    out << "timestep,direction,count,policy\n";
    for (const auto& f : frames) {
      for (const auto& [key, value] : f.items()) {
        if (key.rfind("transfers_", 0) != 0) continue;
        out << f.at("timestep").get<Timestep>() << ',' << key.substr(10) << ',' << value.get<std::size_t>()
            << ',' << policy << '\n';
      }
    }
  } else {
    out << "timestep,esr,policy\n";
    for (const auto& f : frames)
      out << f.at("timestep").get<Timestep>() << ','
          << format_number(f.at("estimated_system_response").get<double>()) << ',' << policy << '\n';
  }
  return out_path;
}

}  // namespace tiersim
