#include "walkgossip/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "walkgossip/errors.hpp"

namespace wg {

Topology make_topology(const ExperimentConfig& config, std::uint64_t run_seed) {
  const auto& t = config.topology;
  try {
    return build_topology(t.kind, t.nodes, t.edge_probability, t.seed.value_or(run_seed));
  } catch (const InvalidArgument& e) {
    throw ConfigError(fmt::format("'topology': {}", e.what()));
  }
}

Objective make_objective(const ExperimentConfig& config, std::uint64_t run_seed) {
  if (!config.data) throw ConfigError("missing required section 'data'");
  const auto& d = *config.data;
  const std::size_t v = config.topology.nodes;
  try {
    if (d.load) {
      Objective loaded = load_objective(*d.load);
      if (loaded.node_count() != v)
        throw ConfigError(fmt::format("'data.load' holds {} shards for {} nodes", loaded.node_count(), v));
      return loaded;
    }
    const std::uint64_t seed = d.seed.value_or(run_seed);
    if (d.alpha) {
      DirichletSpec spec;
      spec.node_count = v;
      spec.n_per_node = d.n_per_node;
      spec.model_dim = d.model_dim;
      spec.classes = d.classes;
      spec.alpha = *d.alpha;
      spec.noise_std = d.noise_std;
      spec.reg = d.reg;
      spec.seed = seed;
      return make_dirichlet_logistic(spec);
    }
    SyntheticSpec spec;
    spec.task = d.task;
    spec.node_count = v;
    spec.n_per_node = d.n_per_node;
    spec.model_dim = d.model_dim;
    spec.hetero_shift = d.hetero_shift;
    spec.noise_std = d.noise_std;
    spec.reg = d.reg;
    spec.seed = seed;
    return make_synthetic(spec);
  } catch (const InvalidArgument& e) {
    throw ConfigError(fmt::format("'data': {}", e.what()));
  }
}

std::string algorithm_label(const ExperimentConfig& config) {
  const auto& a = *config.algorithm;
  return a.name == AlgorithmKind::mw ? fmt::format("mw-R{}", a.walks) : std::string("gossip");
}

std::string run_id(const ExperimentConfig& config, std::uint64_t seed) {
  return fmt::format("{}-{}-V{}-s{}", algorithm_label(config), to_string(config.topology.kind),
                     config.topology.nodes, seed);
}

RunOutput execute(const ExperimentConfig& config, std::uint64_t seed) {
  validate_for_run(config);
  const auto& a = *config.algorithm;
  const auto& r = *config.run;

  const Topology topology = make_topology(config, seed);
  const MixingMatrix p = metropolis_hastings(topology);
  const Objective objective = make_objective(config, seed);
  const Vector x0 = Vector::Constant(static_cast<Eigen::Index>(objective.model_dim()), r.x0);

  const LearningRate lr{a.eta, a.lr_decay, a.lr_decay_every};
  EngineConfig engine;
  engine.delays.mean_delay = a.mean_delay;
  engine.delays.compute_fraction = a.compute_fraction;
  engine.model_bits = config.model_bits();
  const StopCriterion stop{r.max_iterations, r.max_sim_time};

  RunOutput out;
  IterationObserver observer;
  if (r.sidecar) {
    observer = [&out](const Event& e, std::uint64_t t, const StepOutcome& o) {
      out.trace.push_back({t, e.actor, o.node, o.staleness.value_or(0)});
    };
  }

  try {
    if (a.name == AlgorithmKind::mw) {
      MultiWalk stepper(topology, p, objective, x0, {a.walks, lr, a.batch, a.hub_mixing}, seed);
      out.result = run(engine, stepper, stop, r.eval_interval, seed, observer);
    } else {
      AsyncGossip stepper(topology, p, objective, x0, {lr, a.batch}, seed);
      out.result = run(engine, stepper, stop, r.eval_interval, seed, observer);
    }
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += fmt::format(".tmp{}", std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(fmt::format("cannot write {}", tmp.string()));
    out << content;
    if (!out) throw std::runtime_error(fmt::format("failed writing {}", tmp.string()));
  }
  std::filesystem::rename(tmp, path);
}

std::string provenance_header(const ExperimentConfig& config) {
  std::string out = fmt::format("# {}\n", kCsvSchema);
  std::istringstream lines(serialize_config(config));
  for (std::string line; std::getline(lines, line);) out += "# " + line + "\n";
  return out;
}

std::string records_csv(const ExperimentConfig& config, std::uint64_t seed,
                        const std::vector<RunRecord>& records) {
  std::string out = provenance_header(config);
  out += kCsvColumns;
  out += '\n';
  const std::string id = run_id(config, seed);
  const std::string algo(to_string(config.algorithm->name));
  for (const auto& r : records) {
    out += csv_row(r, id, algo, seed);
    out += '\n';
  }
  return out;
}

std::vector<AnalyzeRow> analyze(const ExperimentConfig& config) {
  std::vector<std::size_t> sizes{config.topology.nodes};
  AnalyzeSection section;
  if (config.analyze) {
    section = *config.analyze;
    if (!section.sizes.empty()) sizes = section.sizes;
  }
  std::vector<AnalyzeRow> rows;
  for (std::size_t v : sizes) {
    ExperimentConfig at = config;
    at.topology.nodes = v;
    const Topology topology = make_topology(at, at.topology.seed.value_or(1));
    const MixingMatrix p = metropolis_hastings(topology);
    AnalyzeRow row;
    row.kind = topology.kind();
    row.nodes = v;
    row.gaps = spectral_gaps(p);
    row.exact = return_moments_exact(p, 0);
    if (section.mc_samples > 0) {
      auto mc = return_moments_mc(p, 0, section.mc_samples, section.mc_max_steps, section.mc_seed);
      row.mc_error = mc.moments.standard_error;
      row.mc = mc.moments;
    }
    rows.push_back(row);
  }
  return rows;
}

std::string analyze_table(const std::vector<AnalyzeRow>& rows) {
  std::string out = fmt::format("{:<12} {:>5} {:>14} {:>14} {:>12} {:>16} {:>12}\n", "topology", "V",
                                "p", "p'", "E[h]", "H^2", "mc_stderr");
  for (const auto& r : rows) {
    const std::string err = r.mc_error ? fmt::format("{:.4g}", r.mc_error->second) : "-";
    out += fmt::format("{:<12} {:>5} {:>14.8g} {:>14.8g} {:>12.6g} {:>16.8g} {:>12}\n",
                       to_string(r.kind), r.nodes, r.gaps.p, r.gaps.p_prime, r.exact.mean,
                       r.exact.second, err);
  }
  return out;
}

std::string analyze_csv(const std::vector<AnalyzeRow>& rows) {
  std::string out = "topology,V,p,p_prime,mean,second,mc_mean,mc_second,mc_stderr_mean,mc_stderr_second\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", to_string(r.kind), r.nodes,
                       format_number(r.gaps.p), format_number(r.gaps.p_prime),
                       format_number(r.exact.mean), format_number(r.exact.second),
                       r.mc ? format_number(r.mc->mean) : "", r.mc ? format_number(r.mc->second) : "",
                       r.mc_error ? format_number(r.mc_error->mean) : "",
                       r.mc_error ? format_number(r.mc_error->second) : "");
  }
  return out;
}

ExperimentConfig apply_axis(const ExperimentConfig& config, SweepAxis axis, const std::string& value) {
  ExperimentConfig out = config;
  auto as_count = [&](const char* what) {
    if (value.empty() || value.find_first_not_of("0123456789") != std::string::npos)
      throw ConfigError(fmt::format("sweep value '{}' for {} is not a positive integer", value, what));
    return static_cast<std::size_t>(std::stoull(value));
  };
  switch (axis) {
    case SweepAxis::walks:
      if (!out.algorithm) throw ConfigError("missing required section 'algorithm'");
      out.algorithm->walks = as_count("R");
      break;
    case SweepAxis::nodes:
      out.topology.nodes = as_count("V");
      break;
    case SweepAxis::topology:
      try {
        out.topology.kind = parse_topology_kind(value);
      } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
      }
      if (out.topology.kind != TopologyKind::erdos_renyi) out.topology.edge_probability.reset();
      break;
    case SweepAxis::alpha: {
      if (!out.data) throw ConfigError("missing required section 'data'");
      if (out.data->task != Task::logistic)
        throw ConfigError("the alpha axis needs 'data.task: logistic'");
      try {
        std::size_t used = 0;
        out.data->alpha = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
      } catch (const std::exception&) {
        throw ConfigError(fmt::format("sweep value '{}' for alpha is not a number", value));
      }
      break;
    }
  }
  return out;
}

void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& task) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

std::vector<SweepPoint> sweep(const ExperimentConfig& config, SweepAxis axis,
                              const std::vector<std::string>& values, unsigned jobs) {
  if (values.empty()) throw ConfigError(fmt::format("sweep axis {} has no values", to_string(axis)));
  validate_for_run(config);
  const auto& seeds = config.run->seeds;

  std::vector<ExperimentConfig> variants;
  for (const auto& v : values) {
    variants.push_back(apply_axis(config, axis, v));
    validate_for_run(variants.back());
  }

  std::vector<SweepPoint> points(values.size() * seeds.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    for (std::size_t k = 0; k < seeds.size(); ++k) {
      SweepPoint& p = points[i * seeds.size() + k];
      p.axis_value = values[i];
      p.seed = seeds[k];
      p.run_id = fmt::format("{}={}-{}", to_string(axis), values[i], run_id(variants[i], seeds[k]));
    }
  parallel_for(points.size(), jobs, [&](std::size_t n) {
    const std::size_t i = n / seeds.size();
    points[n].records = execute(variants[i], points[n].seed).result.records;
  });
  return points;
}

std::string sweep_csv(const ExperimentConfig& config, SweepAxis axis,
                      const std::vector<SweepPoint>& points) {
  std::string out = provenance_header(config);
  out += fmt::format("# sweep axis {}\n", to_string(axis));
  out += fmt::format("axis,axis_value,{}\n", kCsvColumns);
  for (const auto& p : points) {
    const ExperimentConfig variant = apply_axis(config, axis, p.axis_value);
    const std::string algo(to_string(variant.algorithm->name));
    for (const auto& r : p.records)
      out += fmt::format("{},{},{}\n", to_string(axis), p.axis_value, csv_row(r, p.run_id, algo, p.seed));
  }
  return out;
}

}  // namespace wg
