#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "walkgossip/algorithms.hpp"
#include "walkgossip/chain_analysis.hpp"
#include "walkgossip/config.hpp"
#include "walkgossip/engine.hpp"

namespace wg {

Topology make_topology(const ExperimentConfig& config, std::uint64_t run_seed);
Objective make_objective(const ExperimentConfig& config, std::uint64_t run_seed);

/// "mw-R4" or "gossip".
std::string algorithm_label(const ExperimentConfig& config);
std::string run_id(const ExperimentConfig& config, std::uint64_t seed);

/// One per-iteration sidecar row.
struct IterationTrace {
  std::uint64_t t = 0;
  std::size_t actor = 0;
  std::size_t node = 0;
  std::uint64_t tau = 0;
};

struct RunOutput {
  RunResult result;
  std::vector<IterationTrace> trace;  ///< filled when the config asks for a sidecar
};

/// Builds topology, data and stepper from the config and runs one seed.
RunOutput execute(const ExperimentConfig& config, std::uint64_t seed);

/// Writes `content` next to `path` and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// The config as '#'-prefixed lines, preceded by the CSV schema tag.
std::string provenance_header(const ExperimentConfig& config);

std::string records_csv(const ExperimentConfig& config, std::uint64_t seed,
                        const std::vector<RunRecord>& records);

struct AnalyzeRow {
  TopologyKind kind = TopologyKind::cycle;
  std::size_t nodes = 0;
  SpectralGaps gaps;
  ReturnMoments exact;
  std::optional<MomentErrors> mc_error;
  std::optional<ReturnMoments> mc;
};

std::vector<AnalyzeRow> analyze(const ExperimentConfig& config);
std::string analyze_table(const std::vector<AnalyzeRow>& rows);
std::string analyze_csv(const std::vector<AnalyzeRow>& rows);

/// Copy of `config` with one sweep axis set to `value`.
ExperimentConfig apply_axis(const ExperimentConfig& config, SweepAxis axis, const std::string& value);

struct SweepPoint {
  std::string axis_value;
  std::uint64_t seed = 0;
  std::string run_id;
  std::vector<RunRecord> records;
};

/// Cartesian product of axis values and seeds, run on `jobs` workers.
std::vector<SweepPoint> sweep(const ExperimentConfig& config, SweepAxis axis,
                              const std::vector<std::string>& values, unsigned jobs);
std::string sweep_csv(const ExperimentConfig& config, SweepAxis axis,
                      const std::vector<SweepPoint>& points);

/// Runs `tasks` closures on up to `jobs` threads; rethrows the first failure.
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& task);

}  // namespace wg
