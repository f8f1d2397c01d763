// walkgossip: analyze mixing chains, run and sweep decentralized SGD simulations.
//
//   walkgossip analyze --config exp.yaml [--out DIR]
//   walkgossip run     --config exp.yaml [--out DIR] [--seeds 1,2,3] [--jobs N]
//   walkgossip sweep   --config exp.yaml --axis R --values 1,5,15 [--out DIR] [--jobs N]
//
// Exit codes: 0 success, 2 configuration error, 3 runtime invariant violation.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "walkgossip/config.hpp"
#include "walkgossip/errors.hpp"
#include "walkgossip/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Options {
  std::string config_path;
  std::string out_dir;
  std::vector<std::uint64_t> seeds;
  unsigned jobs = 1;
  std::string axis;
  std::vector<std::string> values;
  std::string dump_data;
};

std::filesystem::path output_dir(const wg::ExperimentConfig& config, const Options& opt) {
  if (!opt.out_dir.empty()) return opt.out_dir;
  return config.run ? config.run->output : std::string("out");
}

wg::ExperimentConfig load(const Options& opt) {
  auto config = wg::load_config(opt.config_path);
  if (!opt.seeds.empty()) {
    if (!config.run) throw wg::ConfigError("--seeds given but the config has no 'run' section");
    config.run->seeds = opt.seeds;
  }
  return config;
}

int cmd_analyze(const Options& opt) {
  const auto config = load(opt);
  const auto rows = wg::analyze(config);
  std::cout << wg::analyze_table(rows);
  const auto dir = output_dir(config, opt);
  wg::write_file_atomic(dir / "analyze.csv", wg::analyze_csv(rows));
  return 0;
}

int cmd_run(const Options& opt) {
  const auto config = load(opt);
  wg::validate_for_run(config);
  const auto dir = output_dir(config, opt);
  if (!opt.dump_data.empty())
    wg::save_objective(wg::make_objective(config, config.run->seeds.front()), opt.dump_data);

  const auto& seeds = config.run->seeds;
  wg::parallel_for(seeds.size(), opt.jobs, [&](std::size_t i) {
    const std::uint64_t seed = seeds[i];
    const auto out = wg::execute(config, seed);
    const std::string id = wg::run_id(config, seed);
    wg::write_file_atomic(dir / (id + ".csv"), wg::records_csv(config, seed, out.result.records));
    if (config.run->sidecar) {
      std::string side = "t,actor,node,tau\n";
      for (const auto& tr : out.trace) side += fmt::format("{},{},{},{}\n", tr.t, tr.actor, tr.node, tr.tau);
      wg::write_file_atomic(dir / (id + ".events.csv"), side);
    }
  });
  for (auto seed : seeds) std::cout << (dir / (wg::run_id(config, seed) + ".csv")).string() << "\n";
  return 0;
}

int cmd_sweep(const Options& opt) {
  const auto config = load(opt);
  std::optional<wg::SweepAxis> axis;
  std::vector<std::string> values;
  if (config.sweep) {
    axis = config.sweep->axis;
    values = config.sweep->values;
  }
  if (!opt.axis.empty()) axis = wg::parse_sweep_axis(opt.axis);
  if (!opt.values.empty()) values = opt.values;
  if (!axis) throw wg::ConfigError("sweep needs an axis (--axis or 'sweep.axis')");

  const auto points = wg::sweep(config, *axis, values, opt.jobs);
  const auto path = output_dir(config, opt) / fmt::format("sweep_{}.csv", wg::to_string(*axis));
  wg::write_file_atomic(path, wg::sweep_csv(config, *axis, points));
  std::cout << path.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-walk and asynchronous gossip SGD simulator"};
  app.require_subcommand(1);
  Options opt;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "Experiment config (YAML)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out_dir, "Output directory (overrides run.output)");
    sub->add_option("--jobs", opt.jobs, "Worker threads")->check(CLI::PositiveNumber);
  };
  auto* analyze = app.add_subcommand("analyze", "Spectral gaps and return-time moments");
  common(analyze);
  auto* run = app.add_subcommand("run", "Run one simulation per seed");
  common(run);
  run->add_option("--seeds", opt.seeds, "Comma-separated seeds (overrides run.seeds)")->delimiter(',');
  run->add_option("--dump-data", opt.dump_data, "Write the generated shards to a binary file");
  auto* sweep = app.add_subcommand("sweep", "Cartesian sweep over one axis and the seeds");
  common(sweep);
  sweep->add_option("--seeds", opt.seeds, "Comma-separated seeds (overrides run.seeds)")->delimiter(',');
  sweep->add_option("--axis", opt.axis, "R, alpha, topology or V");
  sweep->add_option("--values", opt.values, "Comma-separated axis values")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (analyze->parsed()) return cmd_analyze(opt);
    if (run->parsed()) return cmd_run(opt);
    return cmd_sweep(opt);
  } catch (const wg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const wg::InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const wg::RunAborted& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
