#include "walkgossip/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

#include "walkgossip/errors.hpp"

namespace wg {

std::string_view to_string(Task task) {
  return task == Task::least_squares ? "least_squares" : "logistic";
}

Task parse_task(std::string_view name) {
  if (name == "least_squares") return Task::least_squares;
  if (name == "logistic") return Task::logistic;
  throw InvalidArgument(fmt::format("unknown task '{}' (expected least_squares or logistic)", name));
}

namespace {

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Per-sample residual r such that the sample gradient is r·a.
double sample_residual(Task task, double margin, double target) {
  return task == Task::least_squares ? margin - target : sigmoid(margin) - target;
}

// Σ over `rows` of the sample gradients, divided by rows.size(), plus reg·x.
// Both the full and the minibatch gradient go through this loop so that a
// full-size batch reproduces the full gradient exactly.
template <typename Rows>
Vector averaged_gradient(Task task, const Shard& shard, const Rows& rows, std::size_t count,
                         const Vector& x, double reg) {
  Vector g = Vector::Zero(x.size());
  for (std::size_t k = 0; k < count; ++k) {
    const auto i = static_cast<Eigen::Index>(rows(k));
    const double margin = shard.features.row(i).dot(x);
    g.noalias() += sample_residual(task, margin, shard.targets[i]) * shard.features.row(i).transpose();
  }
  g /= static_cast<double>(count);
  if (reg != 0.0) g += reg * x;
  return g;
}

Vector unit_vector(std::size_t dim, RngStream& rng) {
  Vector u(static_cast<Eigen::Index>(dim));
  do {
    for (auto& c : u) c = rng.normal();
  } while (u.norm() == 0.0);
  return u / u.norm();
}

void check_shard(const Shard& s, Task task, std::size_t dim) {
  if (s.features.rows() == 0) throw InvalidArgument(fmt::format("shard of node {} is empty", s.node));
  if (static_cast<std::size_t>(s.features.cols()) != dim)
    throw InvalidArgument(fmt::format("shard of node {} has dimension {}, expected {}", s.node,
                                      s.features.cols(), dim));
  if (s.targets.size() != s.features.rows())
    throw InvalidArgument(fmt::format("shard of node {} has mismatched target count", s.node));
  if (!s.features.allFinite() || !s.targets.allFinite())
    throw InvalidArgument(fmt::format("shard of node {} has non-finite values", s.node));
  if (task == Task::logistic)
    for (double y : s.targets)
      if (y != 0.0 && y != 1.0)
        throw InvalidArgument(fmt::format("logistic targets of node {} must be 0 or 1", s.node));
}

}  // namespace

Objective::Objective(Task task, std::vector<Shard> shards, double reg)
    : task_(task), shards_(std::move(shards)), reg_(reg) {
  if (shards_.empty()) throw InvalidArgument("objective needs at least one shard");
  if (!(reg_ >= 0.0)) throw InvalidArgument("regularization weight must be >= 0");
  model_dim_ = static_cast<std::size_t>(shards_.front().features.cols());
  if (model_dim_ == 0) throw InvalidArgument("model dimension must be positive");
  for (std::size_t v = 0; v < shards_.size(); ++v) {
    shards_[v].node = v;
    check_shard(shards_[v], task_, model_dim_);
  }

  if (task_ == Task::least_squares) {
    const auto d = static_cast<Eigen::Index>(model_dim_);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
    Vector rhs = Vector::Zero(d);
    for (const auto& s : shards_) {
      const double w = 1.0 / static_cast<double>(s.size());
      h.noalias() += w * s.features.transpose() * s.features;
      rhs.noalias() += w * s.features.transpose() * s.targets;
    }
    const double v = static_cast<double>(shards_.size());
    h /= v;
    rhs /= v;
    h.diagonal().array() += reg_;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
      Vector x = ldlt.solve(rhs);
      if (x.allFinite()) optimum_ = std::move(x);
    }
  }
}

std::size_t Objective::min_shard_size() const noexcept {
  std::size_t best = shards_.front().size();
  for (const auto& s : shards_) best = std::min(best, s.size());
  return best;
}

double Objective::local_loss(NodeId v, const Vector& x) const {
  const Shard& s = shard(v);
  const Vector margins = s.features * x;
  double total = 0.0;
  for (Eigen::Index i = 0; i < margins.size(); ++i) {
    if (task_ == Task::least_squares) {
      const double r = margins[i] - s.targets[i];
      total += 0.5 * r * r;
    } else {
      total += softplus(margins[i]) - s.targets[i] * margins[i];
    }
  }
  return total / static_cast<double>(s.size()) + 0.5 * reg_ * x.squaredNorm();
}

Vector Objective::local_gradient(NodeId v, const Vector& x) const {
  const Shard& s = shard(v);
  return averaged_gradient(task_, s, [](std::size_t k) { return k; }, s.size(), x, reg_);
}

double global_loss(const Objective& objective, const Vector& x) {
  double total = 0.0;
  for (NodeId v = 0; v < objective.node_count(); ++v) total += objective.local_loss(v, x);
  return total / static_cast<double>(objective.node_count());
}

Vector global_gradient(const Objective& objective, const Vector& x) {
  Vector g = Vector::Zero(x.size());
  for (NodeId v = 0; v < objective.node_count(); ++v) g += objective.local_gradient(v, x);
  return g / static_cast<double>(objective.node_count());
}

double global_grad_norm(const Objective& objective, const Vector& x) {
  return global_gradient(objective, x).squaredNorm();
}

double diversity(const Objective& objective, const Vector& x) {
  const Vector g = global_gradient(objective, x);
  double worst = 0.0;
  for (NodeId v = 0; v < objective.node_count(); ++v)
    worst = std::max(worst, (objective.local_gradient(v, x) - g).squaredNorm());
  return worst;
}

Vector stochastic_gradient(const Objective& objective, NodeId v, const Vector& x,
                           std::size_t batch_size, RngStream& rng) {
  const Shard& s = objective.shard(v);
  const std::size_t n = s.size();
  if (batch_size == 0 || batch_size > n)
    throw InvalidArgument(fmt::format("batch size {} not in [1, {}] for node {}", batch_size, n, v));
  std::vector<std::size_t> picked;
  picked.reserve(batch_size);
  // Selection sampling keeps indices in ascending order.
  std::size_t needed = batch_size;
  for (std::size_t i = 0; i < n && needed > 0; ++i) {
    if (rng.below(n - i) < needed) {
      picked.push_back(i);
      --needed;
    }
  }
  return averaged_gradient(objective.task(), s, [&](std::size_t k) { return picked[k]; },
                           picked.size(), x, objective.reg());
}

Objective make_synthetic(const SyntheticSpec& spec) {
  if (spec.node_count == 0 || spec.n_per_node == 0 || spec.model_dim == 0)
    throw InvalidArgument("synthetic sizes must be positive");
  if (!(spec.hetero_shift >= 0.0) || !(spec.noise_std >= 0.0))
    throw InvalidArgument("hetero_shift and noise_std must be >= 0");

  const auto d = static_cast<Eigen::Index>(spec.model_dim);
  RngStream planted(spec.seed, "data.planted");
  const Vector w_star = unit_vector(spec.model_dim, planted);

  std::vector<Shard> shards(spec.node_count);
  for (NodeId v = 0; v < spec.node_count; ++v) {
    RngStream shift_rng(spec.seed, "data.shift", v);
    RngStream sample_rng(spec.seed, "data.samples", v);
    const Vector w_v = w_star + spec.hetero_shift * unit_vector(spec.model_dim, shift_rng);

    Shard& s = shards[v];
    s.node = v;
    const auto n = static_cast<Eigen::Index>(spec.n_per_node);
    s.features.resize(n, d);
    s.targets.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) s.features(i, j) = sample_rng.normal();
      const double clean = s.features.row(i).dot(w_v);
      const double noise = spec.noise_std > 0.0 ? spec.noise_std * sample_rng.normal() : 0.0;
      s.targets[i] = spec.task == Task::least_squares ? clean + noise
                                                      : (clean + noise > 0.0 ? 1.0 : 0.0);
    }
  }
  return Objective(spec.task, std::move(shards), spec.reg);
}

namespace {

std::vector<std::size_t> largest_remainder(const std::vector<double>& shares, std::size_t total) {
  const std::size_t k = shares.size();
  std::vector<std::size_t> counts(k);
  std::vector<std::pair<double, std::size_t>> remainders(k);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double exact = shares[i] * static_cast<double>(total);
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[i];
    remainders[i] = {exact - static_cast<double>(counts[i]), i};
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < total; ++i, ++assigned) ++counts[remainders[i % k].second];
  // floor() can overshoot only through rounding of shares summing above 1.
  while (assigned > total) {
    auto it = std::max_element(counts.begin(), counts.end());
    --*it;
    --assigned;
  }
  return counts;
}

std::vector<double> dirichlet_shares(std::size_t k, double alpha, RngStream& rng) {
  std::vector<double> g(k);
  double sum = 0.0;
  do {
    sum = 0.0;
    for (auto& x : g) {
      x = rng.gamma(alpha);
      sum += x;
    }
  } while (!(sum > 0.0));
  for (auto& x : g) x /= sum;
  return g;
}

}  // namespace

std::vector<std::vector<std::size_t>> dirichlet_partition(std::span<const int> class_labels,
                                                          std::size_t node_count, double alpha,
                                                          std::uint64_t seed) {
  if (!(alpha > 0.0)) throw InvalidArgument("alpha must be > 0");
  if (node_count == 0) throw InvalidArgument("node_count must be >= 1");
  if (class_labels.empty()) throw InvalidArgument("no samples to partition");

  int max_label = -1;
  for (int c : class_labels) {
    if (c < 0) throw InvalidArgument("class labels must be nonnegative");
    max_label = std::max(max_label, c);
  }
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(max_label) + 1);
  for (std::size_t i = 0; i < class_labels.size(); ++i)
    by_class[static_cast<std::size_t>(class_labels[i])].push_back(i);
  for (std::size_t c = 0; c < by_class.size(); ++c)
    if (by_class[c].empty())
      throw InvalidArgument(fmt::format("class {} has no samples", c));

  for (int attempt = 0; attempt < kPartitionMaxAttempts; ++attempt) {
    RngStream rng(seed, "dirichlet_partition", static_cast<std::uint64_t>(attempt));
    std::vector<std::vector<std::size_t>> parts(node_count);
    for (auto members : by_class) {
      std::shuffle(members.begin(), members.end(), rng);
      const auto counts = largest_remainder(dirichlet_shares(node_count, alpha, rng), members.size());
      std::size_t offset = 0;
      for (std::size_t v = 0; v < node_count; ++v) {
        parts[v].insert(parts[v].end(), members.begin() + static_cast<std::ptrdiff_t>(offset),
                        members.begin() + static_cast<std::ptrdiff_t>(offset + counts[v]));
        offset += counts[v];
      }
    }
    if (std::all_of(parts.begin(), parts.end(), [](const auto& p) { return !p.empty(); })) {
      for (auto& p : parts) std::sort(p.begin(), p.end());
      return parts;
    }
  }
  throw NumericalError(fmt::format(
      "dirichlet partition left a node empty in {} attempts (alpha {}, V {}, seed {})",
      kPartitionMaxAttempts, alpha, node_count, seed));
}

Objective make_dirichlet_logistic(const DirichletSpec& spec) {
  if (spec.node_count == 0 || spec.n_per_node == 0 || spec.model_dim == 0 || spec.classes == 0)
    throw InvalidArgument("dirichlet sizes must be positive");
  const std::size_t total = spec.node_count * spec.n_per_node;
  if (total < spec.classes) throw InvalidArgument("fewer samples than classes");
  const auto d = static_cast<Eigen::Index>(spec.model_dim);

  RngStream planted(spec.seed, "data.planted");
  const Vector w_star = unit_vector(spec.model_dim, planted);
  std::vector<Vector> centers;
  for (std::size_t c = 0; c < spec.classes; ++c) {
    RngStream center_rng(spec.seed, "data.center", c);
    centers.push_back(2.0 * unit_vector(spec.model_dim, center_rng));
  }

  RngStream sample_rng(spec.seed, "data.pool");
  Eigen::MatrixXd pool(static_cast<Eigen::Index>(total), d);
  Vector targets(static_cast<Eigen::Index>(total));
  std::vector<int> labels(total);
  for (std::size_t i = 0; i < total; ++i) {
    const std::size_t c = i % spec.classes;
    labels[i] = static_cast<int>(c);
    const auto row = static_cast<Eigen::Index>(i);
    for (Eigen::Index j = 0; j < d; ++j) pool(row, j) = centers[c][j] + sample_rng.normal();
    const double noise = spec.noise_std > 0.0 ? spec.noise_std * sample_rng.normal() : 0.0;
    targets[row] = pool.row(row).dot(w_star) + noise > 0.0 ? 1.0 : 0.0;
  }

  const auto parts = dirichlet_partition(labels, spec.node_count, spec.alpha, spec.seed);
  std::vector<Shard> shards(spec.node_count);
  for (NodeId v = 0; v < spec.node_count; ++v) {
    const auto& idx = parts[v];
    shards[v].node = v;
    shards[v].features.resize(static_cast<Eigen::Index>(idx.size()), d);
    shards[v].targets.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      shards[v].features.row(static_cast<Eigen::Index>(k)) = pool.row(static_cast<Eigen::Index>(idx[k]));
      shards[v].targets[static_cast<Eigen::Index>(k)] = targets[static_cast<Eigen::Index>(idx[k])];
    }
  }
  return Objective(Task::logistic, std::move(shards), spec.reg);
}

namespace {

constexpr std::array<char, 8> kShardMagic{'W', 'G', 'S', 'H', 'A', 'R', 'D', '1'};

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw InvalidArgument("truncated shard file");
  return value;
}

}  // namespace

void save_objective(const Objective& objective, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument(fmt::format("cannot open {} for writing", path.string()));
  out.write(kShardMagic.data(), kShardMagic.size());
  put<std::uint64_t>(out, objective.node_count());
  put<std::uint64_t>(out, objective.model_dim());
  put<std::uint32_t>(out, objective.task() == Task::least_squares ? 0u : 1u);
  put<std::uint32_t>(out, 0u);
  put<double>(out, objective.reg());
  for (const auto& s : objective.shards()) {
    put<std::uint64_t>(out, s.size());
    for (Eigen::Index i = 0; i < s.features.rows(); ++i)
      for (Eigen::Index j = 0; j < s.features.cols(); ++j) put<double>(out, s.features(i, j));
    for (Eigen::Index i = 0; i < s.targets.size(); ++i) put<double>(out, s.targets[i]);
  }
  if (!out) throw InvalidArgument(fmt::format("failed writing {}", path.string()));
}

Objective load_objective(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument(fmt::format("cannot open {}", path.string()));
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kShardMagic) throw InvalidArgument(fmt::format("{} is not a shard file", path.string()));
  const auto v = get<std::uint64_t>(in);
  const auto d = get<std::uint64_t>(in);
  const auto task_code = get<std::uint32_t>(in);
  get<std::uint32_t>(in);
  const auto reg = get<double>(in);
  if (task_code > 1) throw InvalidArgument("unknown task code in shard file");
  std::vector<Shard> shards(v);
  for (std::uint64_t node = 0; node < v; ++node) {
    const auto n = static_cast<Eigen::Index>(get<std::uint64_t>(in));
    Shard& s = shards[node];
    s.node = node;
    s.features.resize(n, static_cast<Eigen::Index>(d));
    s.targets.resize(n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(d); ++j) s.features(i, j) = get<double>(in);
    for (Eigen::Index i = 0; i < n; ++i) s.targets[i] = get<double>(in);
  }
  return Objective(task_code == 0 ? Task::least_squares : Task::logistic, std::move(shards), reg);
}

}  // namespace wg
