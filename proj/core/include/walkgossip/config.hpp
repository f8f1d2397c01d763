#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "walkgossip/data.hpp"
#include "walkgossip/graph.hpp"

namespace wg {

/// Schema violation in an experiment configuration. The message names the field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class AlgorithmKind { mw, gossip };
std::string_view to_string(AlgorithmKind kind);

enum class SweepAxis { walks, alpha, topology, nodes };
std::string_view to_string(SweepAxis axis);
/// Accepts R, alpha, topology, V.
SweepAxis parse_sweep_axis(std::string_view name);

struct TopologySection {
  TopologyKind kind = TopologyKind::cycle;
  std::size_t nodes = 0;
  std::optional<double> edge_probability;
  std::optional<std::uint64_t> seed;  ///< defaults to the run seed

  friend bool operator==(const TopologySection&, const TopologySection&) = default;
};

struct AlgorithmSection {
  AlgorithmKind name = AlgorithmKind::mw;
  std::size_t walks = 1;
  double eta = 0.0;
  std::size_t batch = 1;
  std::optional<std::uint64_t> model_bits;  ///< defaults to 32 bits per parameter
  double mean_delay = 1.0;
  std::optional<double> compute_fraction;
  bool hub_mixing = true;
  std::optional<double> lr_decay;
  std::uint64_t lr_decay_every = 0;

  friend bool operator==(const AlgorithmSection&, const AlgorithmSection&) = default;
};

struct DataSection {
  Task task = Task::least_squares;
  std::size_t n_per_node = 0;
  std::size_t model_dim = 0;
  double hetero_shift = 0.0;
  std::optional<double> alpha;  ///< selects the Dirichlet label-skew generator
  std::size_t classes = 10;
  double noise_std = 0.0;
  double reg = 0.0;
  std::optional<std::uint64_t> seed;  ///< defaults to the run seed
  std::optional<std::string> load;    ///< shard file replacing the generator

  friend bool operator==(const DataSection&, const DataSection&) = default;
};

struct RunSection {
  std::optional<std::uint64_t> max_iterations;
  std::optional<double> max_sim_time;
  std::uint64_t eval_interval = 1;
  std::vector<std::uint64_t> seeds{1};
  std::string output = "out";
  bool sidecar = false;
  double x0 = 0.0;  ///< every coordinate of the initial model

  friend bool operator==(const RunSection&, const RunSection&) = default;
};

struct AnalyzeSection {
  std::vector<std::size_t> sizes;  ///< empty: use topology.nodes
  std::uint64_t mc_samples = 0;
  std::uint64_t mc_max_steps = 1'000'000;
  std::uint64_t mc_seed = 1;

  friend bool operator==(const AnalyzeSection&, const AnalyzeSection&) = default;
};

struct SweepSection {
  std::optional<SweepAxis> axis;
  std::vector<std::string> values;

  friend bool operator==(const SweepSection&, const SweepSection&) = default;
};

struct ExperimentConfig {
  TopologySection topology;
  std::optional<AlgorithmSection> algorithm;
  std::optional<DataSection> data;
  std::optional<RunSection> run;
  std::optional<AnalyzeSection> analyze;
  std::optional<SweepSection> sweep;

  std::uint64_t model_bits() const;
  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Parses YAML text. Unknown keys, wrong types and missing required fields
/// throw ConfigError naming the dotted field path.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical YAML; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

/// Checks the sections a `run`/`sweep` needs and their cross-field rules.
void validate_for_run(const ExperimentConfig& config);

}  // namespace wg
