#pragma once

// Request generation and the hot-cold temperature dynamics.

#include <cstddef>
#include <string>
#include <vector>

#include "tiersim/random.hpp"
#include "tiersim/storage_model.hpp"

namespace tiersim {

struct WorkloadParams {
  double hot_rate = 0.5;    // Poisson requests per timestep for a hot file
  double cold_rate = 0.01;  // same for a cold file
  double hot_threshold = 0.5;
  double p_become_hot = 0.3;
  Timestep cooldown_window = 10;
  double decay_step = 0.1;
  std::size_t uniform_k = 200;

  void validate() const;
};

enum class RequestPattern { poisson, uniform };

std::string to_string(RequestPattern p);
RequestPattern parse_request_pattern(const std::string& s);

struct RequestEntry {
  FileId file{};
  std::vector<double> offsets;  // arrival offsets within the timestep, sorted, in [0, 1)
};

struct Request {
  FileId file{};
  double offset = 0.0;
};

struct RequestTrace {
  Timestep timestep = 0;
  std::vector<RequestEntry> entries;  // ascending file id, one per requested file

  std::size_t total_requests() const;
  // All requests ordered by arrival offset (file id breaks ties).
  std::vector<Request> arrivals() const;
};

RequestTrace gen_poisson_requests(const Hierarchy& hierarchy, const WorkloadParams& params,
                                  Timestep timestep, Rng& rng);

// Throws std::invalid_argument when uniform_k exceeds the population.
RequestTrace gen_uniform_requests(const Hierarchy& hierarchy, const WorkloadParams& params,
                                  Timestep timestep, Rng& rng);

// Cold requested files may flip hot (to a uniform draw in
// [hot_threshold, 1]); files idle for at least cooldown_window steps lose
// decay_step, floored at 0. With size_sensitivity the flip probability is
// scaled by min(1, mean_file_size / size).
void apply_temperature_dynamics(Hierarchy& hierarchy, const RequestTrace& trace, Timestep timestep,
                                const WorkloadParams& params, Rng& rng, bool size_sensitivity);

struct SizeDistribution {
  enum class Kind { uniform, bounded_pareto };
  Kind kind = Kind::uniform;
  Units min = 1;
  Units max = 10'000;
  double alpha = 1.0;  // shape, bounded_pareto only

  void validate() const;
  double mean() const;
  Units sample(Rng& rng) const;
};

std::string to_string(SizeDistribution::Kind k);
SizeDistribution::Kind parse_size_kind(const std::string& s);

struct TemperatureRange {
  double min = 0.4;
  double max = 0.6;

  void validate() const;
  double sample(Rng& rng) const;
};

struct FileSpec {
  Units size = 0;
  double temperature = 0.0;
};

std::vector<FileSpec> generate_population(std::size_t count, const SizeDistribution& sizes,
                                          const TemperatureRange& temps, Rng& rng);

struct InjectionSchedule {
  std::size_t batch_size = 200;
  Timestep period = 10;
  std::size_t total = 0;  // files available for injection; 0 = unlimited
  SizeDistribution sizes;
  TemperatureRange temperatures;

  void validate() const;
  bool fires_at(Timestep timestep) const;
};

// Creates the scheduled batch in the slowest tier, spilling to the next
// faster tier with room. Throws CapacityError if a file fits nowhere.
std::vector<FileId> inject_new_files(Hierarchy& hierarchy, Timestep timestep,
                                     const InjectionSchedule& schedule, Rng& rng);

}  // namespace tiersim
