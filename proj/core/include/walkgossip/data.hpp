#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "walkgossip/graph.hpp"
#include "walkgossip/rng.hpp"

namespace wg {

using Vector = Eigen::VectorXd;

enum class Task { least_squares, logistic };

std::string_view to_string(Task task);
Task parse_task(std::string_view name);

/// The local dataset of one node: n samples of dimension model_dim.
struct Shard {
  NodeId node = 0;
  Eigen::MatrixXd features;  ///< n × model_dim
  Vector targets;            ///< n; {0, 1} for logistic
  std::size_t size() const noexcept { return static_cast<std::size_t>(features.rows()); }
};

/// f(x) = (1/V) Σ_v f_v(x) + (reg/2)‖x‖², with f_v the sample average of
///   least squares: ½ (aᵀx - b)²
///   logistic:      log(1 + e^{aᵀx}) - y aᵀx
/// Immutable after construction.
class Objective {
 public:
  Objective(Task task, std::vector<Shard> shards, double reg = 0.0);

  Task task() const noexcept { return task_; }
  double reg() const noexcept { return reg_; }
  std::size_t node_count() const noexcept { return shards_.size(); }
  std::size_t model_dim() const noexcept { return model_dim_; }
  const Shard& shard(NodeId v) const { return shards_.at(v); }
  std::span<const Shard> shards() const noexcept { return shards_; }
  std::size_t min_shard_size() const noexcept;

  double local_loss(NodeId v, const Vector& x) const;
  Vector local_gradient(NodeId v, const Vector& x) const;

  /// Closed-form minimizer; present for least squares only.
  const std::optional<Vector>& optimum() const noexcept { return optimum_; }

 private:
  Task task_;
  std::vector<Shard> shards_;
  double reg_;
  std::size_t model_dim_;
  std::optional<Vector> optimum_;
};

double global_loss(const Objective& objective, const Vector& x);
Vector global_gradient(const Objective& objective, const Vector& x);
/// ‖∇f(x)‖², the squared norm of the full global gradient.
double global_grad_norm(const Objective& objective, const Vector& x);
/// max_v ‖∇f_v(x) - ∇f(x)‖², the measured data diversity at x.
double diversity(const Objective& objective, const Vector& x);

/// Minibatch gradient of node v's loss over `batch_size` samples drawn
/// without replacement. Unbiased for ∇f_v; batch_size = n reproduces
/// local_gradient bit for bit.
Vector stochastic_gradient(const Objective& objective, NodeId v, const Vector& x,
                           std::size_t batch_size, RngStream& rng);

struct SyntheticSpec {
  Task task = Task::least_squares;
  std::size_t node_count = 1;
  std::size_t n_per_node = 1;
  std::size_t model_dim = 1;
  double hetero_shift = 0.0;
  double noise_std = 0.0;
  double reg = 0.0;
  std::uint64_t seed = 0;
};

/// Planted-optimum data: node v's optimum is w* + hetero_shift·u_v with u_v a
/// pseudo-random unit vector. Least squares targets are aᵀw_v + noise;
/// logistic targets are 1[aᵀw_v + noise > 0].
Objective make_synthetic(const SyntheticSpec& spec);

/// Per-node index lists covering 0..labels.size()-1 exactly once. Node
/// shares of each class are Dirichlet(alpha·1_V); counts are rounded with
/// largest-remainder correction. A partition leaving any node empty is
/// redrawn, up to kPartitionMaxAttempts times.
std::vector<std::vector<std::size_t>> dirichlet_partition(std::span<const int> class_labels,
                                                          std::size_t node_count, double alpha,
                                                          std::uint64_t seed);

inline constexpr int kPartitionMaxAttempts = 100;

struct DirichletSpec {
  std::size_t node_count = 1;
  std::size_t n_per_node = 1;  ///< average; the pool holds node_count·n_per_node samples
  std::size_t model_dim = 2;
  std::size_t classes = 10;
  double alpha = 1.0;
  double noise_std = 0.0;
  double reg = 0.0;
  std::uint64_t seed = 0;
};

/// Logistic task over a pool of class-clustered samples, split across nodes
/// with dirichlet_partition on the class labels.
Objective make_dirichlet_logistic(const DirichletSpec& spec);

/// Flat little-endian dump: magic, V, model_dim, task, reg, then per node
/// n followed by row-major features and targets.
void save_objective(const Objective& objective, const std::filesystem::path& path);
Objective load_objective(const std::filesystem::path& path);

}  // namespace wg
