#include "walkgossip/config.hpp"

#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "walkgossip/errors.hpp"

namespace wg {

std::string_view to_string(AlgorithmKind kind) { return kind == AlgorithmKind::mw ? "mw" : "gossip"; }

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::walks: return "R";
    case SweepAxis::alpha: return "alpha";
    case SweepAxis::topology: return "topology";
    case SweepAxis::nodes: return "V";
  }
  return "?";
}

SweepAxis parse_sweep_axis(std::string_view name) {
  for (auto axis : {SweepAxis::walks, SweepAxis::alpha, SweepAxis::topology, SweepAxis::nodes})
    if (to_string(axis) == name) return axis;
  throw ConfigError(fmt::format("unknown sweep axis '{}' (expected R, alpha, topology or V)", name));
}

std::uint64_t ExperimentConfig::model_bits() const {
  if (algorithm && algorithm->model_bits) return *algorithm->model_bits;
  return data ? 32 * static_cast<std::uint64_t>(data->model_dim) : 32;
}

namespace {

// Reads fields off one YAML mapping, remembering which keys were consumed.
class Section {
 public:
  Section(const YAML::Node& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.IsMap()) throw ConfigError(fmt::format("'{}' must be a mapping", path_));
  }

  bool has(const std::string& key) const { return node_[key].IsDefined() && !node_[key].IsNull(); }

  template <typename T>
  T required(const std::string& key) {
    if (!has(key)) throw ConfigError(fmt::format("missing required field '{}.{}'", path_, key));
    return read<T>(key);
  }

  template <typename T>
  std::optional<T> optional(const std::string& key) {
    if (!has(key)) {
      used_.insert(key);
      return std::nullopt;
    }
    return read<T>(key);
  }

  template <typename T>
  T value_or(const std::string& key, T fallback) {
    auto v = optional<T>(key);
    return v ? *v : fallback;
  }

  template <typename T>
  std::vector<T> list(const std::string& key) {
    used_.insert(key);
    if (!has(key)) return {};
    YAML::Node seq = node_[key];
    if (!seq.IsSequence()) throw ConfigError(fmt::format("'{}.{}' must be a list", path_, key));
    std::vector<T> out;
    for (std::size_t i = 0; i < seq.size(); ++i)
      out.push_back(convert<T>(seq[i], fmt::format("{}.{}[{}]", path_, key, i)));
    return out;
  }

  void reject_unknown() const {
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!used_.count(key)) throw ConfigError(fmt::format("unknown field '{}.{}'", path_, key));
    }
  }

 private:
  template <typename T>
  T read(const std::string& key) {
    used_.insert(key);
    return convert<T>(node_[key], path_ + "." + key);
  }

  template <typename T>
  static T convert(const YAML::Node& n, const std::string& where) {
    if (!n.IsScalar()) throw ConfigError(fmt::format("'{}' must be a scalar", where));
    try {
      if constexpr (std::is_same_v<T, std::uint64_t> || std::is_same_v<T, std::size_t>) {
        const auto raw = n.as<std::string>();
        if (raw.empty() || raw.find_first_not_of("0123456789") != std::string::npos)
          throw ConfigError(fmt::format("'{}' must be a nonnegative integer, got '{}'", where, raw));
        return static_cast<T>(n.as<unsigned long long>());
      } else {
        return n.as<T>();
      }
    } catch (const YAML::Exception&) {
      throw ConfigError(fmt::format("'{}' has the wrong type (value '{}')", where, n.Scalar()));
    }
  }

  YAML::Node node_;
  std::string path_;
  std::set<std::string> used_;
};

template <typename F>
auto wrap(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const InvalidArgument& e) {
    throw ConfigError(fmt::format("'{}': {}", where, e.what()));
  }
}

TopologySection parse_topology(const YAML::Node& node) {
  Section s(node, "topology");
  TopologySection t;
  t.kind = wrap("topology.kind", [&] { return parse_topology_kind(s.required<std::string>("kind")); });
  t.nodes = s.required<std::size_t>("nodes");
  t.edge_probability = s.optional<double>("edge_probability");
  t.seed = s.optional<std::uint64_t>("seed");
  s.reject_unknown();
  return t;
}

AlgorithmSection parse_algorithm(const YAML::Node& node) {
  Section s(node, "algorithm");
  AlgorithmSection a;
  const auto name = s.required<std::string>("name");
  if (name == "mw") a.name = AlgorithmKind::mw;
  else if (name == "gossip") a.name = AlgorithmKind::gossip;
  else throw ConfigError(fmt::format("'algorithm.name' must be mw or gossip, got '{}'", name));
  a.walks = s.value_or<std::size_t>("walks", 1);
  a.eta = s.required<double>("eta");
  a.batch = s.required<std::size_t>("batch");
  a.model_bits = s.optional<std::uint64_t>("model_bits");
  a.mean_delay = s.value_or<double>("mean_delay", 1.0);
  a.compute_fraction = s.optional<double>("compute_fraction");
  a.hub_mixing = s.value_or<bool>("hub_mixing", true);
  a.lr_decay = s.optional<double>("lr_decay");
  a.lr_decay_every = s.value_or<std::uint64_t>("lr_decay_every", 0);
  s.reject_unknown();
  return a;
}

DataSection parse_data(const YAML::Node& node) {
  Section s(node, "data");
  DataSection d;
  d.task = wrap("data.task", [&] { return parse_task(s.required<std::string>("task")); });
  d.n_per_node = s.required<std::size_t>("n_per_node");
  d.model_dim = s.required<std::size_t>("model_dim");
  d.hetero_shift = s.value_or<double>("hetero_shift", 0.0);
  d.alpha = s.optional<double>("alpha");
  d.classes = s.value_or<std::size_t>("classes", 10);
  d.noise_std = s.value_or<double>("noise_std", 0.0);
  d.reg = s.value_or<double>("reg", 0.0);
  d.seed = s.optional<std::uint64_t>("seed");
  d.load = s.optional<std::string>("load");
  s.reject_unknown();
  return d;
}

RunSection parse_run(const YAML::Node& node) {
  Section s(node, "run");
  RunSection r;
  r.max_iterations = s.optional<std::uint64_t>("max_iterations");
  r.max_sim_time = s.optional<double>("max_sim_time");
  if (r.max_iterations.has_value() == r.max_sim_time.has_value())
    throw ConfigError("'run' needs exactly one of 'run.max_iterations' and 'run.max_sim_time'");
  r.eval_interval = s.required<std::uint64_t>("eval_interval");
  if (s.has("seeds")) r.seeds = s.list<std::uint64_t>("seeds");
  else s.list<std::uint64_t>("seeds");
  r.output = s.value_or<std::string>("output", "out");
  r.sidecar = s.value_or<bool>("sidecar", false);
  r.x0 = s.value_or<double>("x0", 0.0);
  s.reject_unknown();
  return r;
}

AnalyzeSection parse_analyze(const YAML::Node& node) {
  Section s(node, "analyze");
  AnalyzeSection a;
  a.sizes = s.list<std::size_t>("sizes");
  a.mc_samples = s.value_or<std::uint64_t>("mc_samples", 0);
  a.mc_max_steps = s.value_or<std::uint64_t>("mc_max_steps", 1'000'000);
  a.mc_seed = s.value_or<std::uint64_t>("mc_seed", 1);
  s.reject_unknown();
  return a;
}

SweepSection parse_sweep(const YAML::Node& node) {
  Section s(node, "sweep");
  SweepSection w;
  if (auto axis = s.optional<std::string>("axis")) w.axis = parse_sweep_axis(*axis);
  w.values = s.list<std::string>("values");
  s.reject_unknown();
  return w;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ConfigError(fmt::format("malformed config: {}", e.what()));
  }
  if (!root.IsMap()) throw ConfigError("config must be a mapping of sections");
  for (const auto& kv : root) {
    const auto key = kv.first.as<std::string>();
    static const std::set<std::string> known{"topology", "algorithm", "data", "run", "analyze", "sweep"};
    if (!known.count(key)) throw ConfigError(fmt::format("unknown section '{}'", key));
  }
  if (!root["topology"]) throw ConfigError("missing required section 'topology'");

  ExperimentConfig c;
  c.topology = parse_topology(root["topology"]);
  if (root["algorithm"]) c.algorithm = parse_algorithm(root["algorithm"]);
  if (root["data"]) c.data = parse_data(root["data"]);
  if (root["run"]) c.run = parse_run(root["run"]);
  if (root["analyze"]) c.analyze = parse_analyze(root["analyze"]);
  if (root["sweep"]) c.sweep = parse_sweep(root["sweep"]);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config '{}'", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

namespace {

template <typename T>
void emit_opt(YAML::Emitter& out, const char* key, const std::optional<T>& v) {
  if (v) out << YAML::Key << key << YAML::Value << *v;
}

template <typename T>
void emit_list(YAML::Emitter& out, const char* key, const std::vector<T>& values) {
  out << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (const auto& v : values) out << v;
  out << YAML::EndSeq;
}

}  // namespace

std::string serialize_config(const ExperimentConfig& c) {
  YAML::Emitter out;
  out.SetDoublePrecision(std::numeric_limits<double>::max_digits10);
  out << YAML::BeginMap;

  out << YAML::Key << "topology" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value << std::string(to_string(c.topology.kind));
  out << YAML::Key << "nodes" << YAML::Value << c.topology.nodes;
  emit_opt(out, "edge_probability", c.topology.edge_probability);
  emit_opt(out, "seed", c.topology.seed);
  out << YAML::EndMap;

  if (const auto& a = c.algorithm) {
    out << YAML::Key << "algorithm" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << std::string(to_string(a->name));
    out << YAML::Key << "walks" << YAML::Value << a->walks;
    out << YAML::Key << "eta" << YAML::Value << a->eta;
    out << YAML::Key << "batch" << YAML::Value << a->batch;
    emit_opt(out, "model_bits", a->model_bits);
    out << YAML::Key << "mean_delay" << YAML::Value << a->mean_delay;
    emit_opt(out, "compute_fraction", a->compute_fraction);
    out << YAML::Key << "hub_mixing" << YAML::Value << a->hub_mixing;
    emit_opt(out, "lr_decay", a->lr_decay);
    out << YAML::Key << "lr_decay_every" << YAML::Value << a->lr_decay_every;
    out << YAML::EndMap;
  }

  if (const auto& d = c.data) {
    out << YAML::Key << "data" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "task" << YAML::Value << std::string(to_string(d->task));
    out << YAML::Key << "n_per_node" << YAML::Value << d->n_per_node;
    out << YAML::Key << "model_dim" << YAML::Value << d->model_dim;
    out << YAML::Key << "hetero_shift" << YAML::Value << d->hetero_shift;
    emit_opt(out, "alpha", d->alpha);
    out << YAML::Key << "classes" << YAML::Value << d->classes;
    out << YAML::Key << "noise_std" << YAML::Value << d->noise_std;
    out << YAML::Key << "reg" << YAML::Value << d->reg;
    emit_opt(out, "seed", d->seed);
    emit_opt(out, "load", d->load);
    out << YAML::EndMap;
  }

  if (const auto& r = c.run) {
    out << YAML::Key << "run" << YAML::Value << YAML::BeginMap;
    emit_opt(out, "max_iterations", r->max_iterations);
    emit_opt(out, "max_sim_time", r->max_sim_time);
    out << YAML::Key << "eval_interval" << YAML::Value << r->eval_interval;
    emit_list(out, "seeds", r->seeds);
    out << YAML::Key << "output" << YAML::Value << r->output;
    out << YAML::Key << "sidecar" << YAML::Value << r->sidecar;
    out << YAML::Key << "x0" << YAML::Value << r->x0;
    out << YAML::EndMap;
  }

  if (const auto& a = c.analyze) {
    out << YAML::Key << "analyze" << YAML::Value << YAML::BeginMap;
    emit_list(out, "sizes", a->sizes);
    out << YAML::Key << "mc_samples" << YAML::Value << a->mc_samples;
    out << YAML::Key << "mc_max_steps" << YAML::Value << a->mc_max_steps;
    out << YAML::Key << "mc_seed" << YAML::Value << a->mc_seed;
    out << YAML::EndMap;
  }

  if (const auto& w = c.sweep) {
    out << YAML::Key << "sweep" << YAML::Value << YAML::BeginMap;
    if (w->axis) out << YAML::Key << "axis" << YAML::Value << std::string(to_string(*w->axis));
    emit_list(out, "values", w->values);
    out << YAML::EndMap;
  }

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

void validate_for_run(const ExperimentConfig& c) {
  if (!c.algorithm) throw ConfigError("missing required section 'algorithm'");
  if (!c.data) throw ConfigError("missing required section 'data'");
  if (!c.run) throw ConfigError("missing required section 'run'");
  const auto& a = *c.algorithm;
  const auto& d = *c.data;
  const auto& r = *c.run;
  if (a.name == AlgorithmKind::mw && (a.walks == 0 || a.walks > c.topology.nodes))
    throw ConfigError(fmt::format("'algorithm.walks' must lie in [1, topology.nodes = {}]", c.topology.nodes));
  if (!(a.eta >= 0.0)) throw ConfigError("'algorithm.eta' must be >= 0");
  if (a.batch == 0) throw ConfigError("'algorithm.batch' must be >= 1");
  if (!(a.mean_delay > 0.0)) throw ConfigError("'algorithm.mean_delay' must be > 0");
  if (a.compute_fraction && !(*a.compute_fraction > 0.0 && *a.compute_fraction < 1.0))
    throw ConfigError("'algorithm.compute_fraction' must lie in (0, 1)");
  if (a.lr_decay && (!(*a.lr_decay > 0.0 && *a.lr_decay <= 1.0) || a.lr_decay_every == 0))
    throw ConfigError("'algorithm.lr_decay' needs a factor in (0, 1] and 'algorithm.lr_decay_every' > 0");
  if (d.n_per_node == 0) throw ConfigError("'data.n_per_node' must be >= 1");
  if (d.model_dim == 0) throw ConfigError("'data.model_dim' must be >= 1");
  if (d.alpha && d.task != Task::logistic)
    throw ConfigError("'data.alpha' applies to the logistic task only");
  if (d.alpha && !(*d.alpha > 0.0)) throw ConfigError("'data.alpha' must be > 0");
  if (!(d.hetero_shift >= 0.0)) throw ConfigError("'data.hetero_shift' must be >= 0");
  if (!(d.noise_std >= 0.0)) throw ConfigError("'data.noise_std' must be >= 0");
  if (r.eval_interval == 0) throw ConfigError("'run.eval_interval' must be >= 1");
  if (r.seeds.empty()) throw ConfigError("'run.seeds' must not be empty");
}

}  // namespace wg
