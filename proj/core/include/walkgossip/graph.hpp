#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "walkgossip/rng.hpp"

namespace wg {

using NodeId = std::size_t;

enum class TopologyKind { cycle, complete, torus2d, erdos_renyi };

std::string_view to_string(TopologyKind kind);
/// Throws InvalidArgument for unknown names.
TopologyKind parse_topology_kind(std::string_view name);

/// Undirected, simple, connected graph over nodes 0..V-1.
class Topology {
 public:
  Topology(TopologyKind kind, std::vector<std::vector<NodeId>> neighbors);

  TopologyKind kind() const noexcept { return kind_; }
  std::size_t node_count() const noexcept { return neighbors_.size(); }
  std::span<const NodeId> neighbors(NodeId i) const { return neighbors_.at(i); }
  std::size_t degree(NodeId i) const { return neighbors_.at(i).size(); }
  std::size_t edge_count() const noexcept;
  bool adjacent(NodeId i, NodeId j) const;

  friend bool operator==(const Topology&, const Topology&) = default;

 private:
  TopologyKind kind_;
  std::vector<std::vector<NodeId>> neighbors_;
};

/// Breadth-first reachability from node 0 over an adjacency list.
bool is_connected(std::span<const std::vector<NodeId>> neighbors);

inline constexpr int kErdosRenyiMaxAttempts = 1000;

/// Builds one of the supported topologies.
///
/// Erdős–Rényi graphs are drawn edge by edge with `edge_probability` and
/// rejected as a whole until connected, so the result is distributed as
/// G(V, p) conditioned on connectivity. Gives up after
/// kErdosRenyiMaxAttempts draws and names the seed in the error.
Topology build_topology(TopologyKind kind, std::size_t node_count,
                        std::optional<double> edge_probability = std::nullopt,
                        std::uint64_t seed = 0);

/// Dense V×V doubly stochastic matrix. Row i is the next-node distribution
/// of a walk at i, and the averaging weights of node i under gossip.
class MixingMatrix {
 public:
  /// Validates nonnegativity and unit row/column sums (within kStochasticTol).
  explicit MixingMatrix(Eigen::MatrixXd entries);

  static constexpr double kStochasticTol = 1e-12;

  std::size_t size() const noexcept { return static_cast<std::size_t>(entries_.rows()); }
  double operator()(NodeId i, NodeId j) const { return entries_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)); }
  const Eigen::MatrixXd& dense() const noexcept { return entries_; }
  bool is_symmetric() const;

  /// Largest |row sum - 1| or |column sum - 1|.
  double stochastic_defect() const;

 private:
  Eigen::MatrixXd entries_;
};

/// p_ij = min{1/(deg(i)+1), 1/(deg(j)+1)} on edges, leftover mass on the diagonal.
MixingMatrix metropolis_hastings(const Topology& topology);

/// Number of strictly positive off-diagonal entries.
std::size_t offdiag_nnz(const MixingMatrix& p);

/// Inverse-CDF sampler over the rows of a transition matrix. Only the
/// support of each row is stored; the self-loop is included.
class TransitionSampler {
 public:
  explicit TransitionSampler(const MixingMatrix& p);

  NodeId next(NodeId from, RngStream& rng) const { return next(from, rng.uniform()); }

  NodeId next(NodeId from, double u) const {
    const std::size_t begin = offsets_[from], end = offsets_[from + 1];
    const double* cdf = cdf_.data();
    std::size_t k = begin;
    if (end - begin <= 32) {
      // Branchless count; the exit of an early-out scan is unpredictable.
      for (std::size_t i = begin; i < end; ++i) k += cdf[i] <= u;
    } else {
      k = static_cast<std::size_t>(std::upper_bound(cdf + begin, cdf + end, u) - cdf);
    }
    return targets_[k];
  }

 private:
  // Row i occupies [offsets_[i], offsets_[i + 1]); the last cdf entry of a row is exactly 1.
  std::vector<std::size_t> offsets_;
  std::vector<double> cdf_;
  std::vector<NodeId> targets_;
};

}  // namespace wg
