#include "walkgossip/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fmt/format.h>

#include "walkgossip/errors.hpp"

namespace wg {

std::string_view to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::cycle: return "cycle";
    case TopologyKind::complete: return "complete";
    case TopologyKind::torus2d: return "torus2d";
    case TopologyKind::erdos_renyi: return "erdos_renyi";
  }
  return "unknown";
}

TopologyKind parse_topology_kind(std::string_view name) {
  for (auto kind : {TopologyKind::cycle, TopologyKind::complete, TopologyKind::torus2d,
                    TopologyKind::erdos_renyi}) {
    if (to_string(kind) == name) return kind;
  }
  throw InvalidArgument(fmt::format(
      "unknown topology kind '{}' (expected cycle, complete, torus2d or erdos_renyi)", name));
}

bool is_connected(std::span<const std::vector<NodeId>> neighbors) {
  if (neighbors.empty()) return false;
  std::vector<char> seen(neighbors.size(), 0);
  std::deque<NodeId> frontier{0};
  seen[0] = 1;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    NodeId u = frontier.front();
    frontier.pop_front();
    for (NodeId w : neighbors[u]) {
      if (!seen[w]) {
        seen[w] = 1;
        ++reached;
        frontier.push_back(w);
      }
    }
  }
  return reached == neighbors.size();
}

Topology::Topology(TopologyKind kind, std::vector<std::vector<NodeId>> neighbors)
    : kind_(kind), neighbors_(std::move(neighbors)) {
  const std::size_t v = neighbors_.size();
  if (v == 0) throw InvalidArgument("topology needs at least one node");
  for (NodeId i = 0; i < v; ++i) {
    auto& list = neighbors_[i];
    std::sort(list.begin(), list.end());
    if (std::adjacent_find(list.begin(), list.end()) != list.end())
      throw InvalidArgument(fmt::format("node {} has a duplicate neighbor", i));
    for (NodeId j : list) {
      if (j >= v) throw InvalidArgument(fmt::format("node {} lists out-of-range neighbor {}", i, j));
      if (j == i) throw InvalidArgument(fmt::format("node {} has a self-edge", i));
    }
  }
  for (NodeId i = 0; i < v; ++i)
    for (NodeId j : neighbors_[i])
      if (!std::binary_search(neighbors_[j].begin(), neighbors_[j].end(), i))
        throw InvalidArgument(fmt::format("edge {}-{} is not symmetric", i, j));
  if (!is_connected(neighbors_)) throw InvalidArgument("topology is not connected");
}

std::size_t Topology::edge_count() const noexcept {
  std::size_t twice = 0;
  for (const auto& list : neighbors_) twice += list.size();
  return twice / 2;
}

bool Topology::adjacent(NodeId i, NodeId j) const {
  const auto& list = neighbors_.at(i);
  return std::binary_search(list.begin(), list.end(), j);
}

namespace {

void link(std::vector<std::vector<NodeId>>& adj, NodeId a, NodeId b) {
  if (a == b) return;
  if (std::find(adj[a].begin(), adj[a].end(), b) != adj[a].end()) return;
  adj[a].push_back(b);
  adj[b].push_back(a);
}

std::vector<std::vector<NodeId>> cycle_adjacency(std::size_t v) {
  std::vector<std::vector<NodeId>> adj(v);
  for (NodeId i = 0; i < v; ++i) link(adj, i, (i + 1) % v);
  return adj;
}

std::vector<std::vector<NodeId>> complete_adjacency(std::size_t v) {
  std::vector<std::vector<NodeId>> adj(v);
  for (NodeId i = 0; i < v; ++i)
    for (NodeId j = i + 1; j < v; ++j) link(adj, i, j);
  return adj;
}

std::vector<std::vector<NodeId>> torus_adjacency(std::size_t side) {
  const std::size_t v = side * side;
  std::vector<std::vector<NodeId>> adj(v);
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) {
      NodeId id = r * side + c;
      link(adj, id, r * side + (c + 1) % side);
      link(adj, id, ((r + 1) % side) * side + c);
    }
  }
  return adj;
}

}  // namespace

Topology build_topology(TopologyKind kind, std::size_t node_count,
                        std::optional<double> edge_probability, std::uint64_t seed) {
  if (edge_probability && kind != TopologyKind::erdos_renyi)
    throw InvalidArgument(fmt::format("edge_probability only applies to erdos_renyi, not {}",
                                      to_string(kind)));
  switch (kind) {
    case TopologyKind::cycle:
      if (node_count < 2) throw InvalidArgument("cycle needs V >= 2");
      return Topology(kind, cycle_adjacency(node_count));
    case TopologyKind::complete:
      if (node_count < 2) throw InvalidArgument("complete graph needs V >= 2");
      return Topology(kind, complete_adjacency(node_count));
    case TopologyKind::torus2d: {
      auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(node_count))));
      if (side < 2 || side * side != node_count)
        throw InvalidArgument(fmt::format("torus2d needs V = k^2 with k >= 2, got V = {}", node_count));
      return Topology(kind, torus_adjacency(side));
    }
    case TopologyKind::erdos_renyi: {
      if (!edge_probability) throw InvalidArgument("erdos_renyi requires edge_probability");
      const double p = *edge_probability;
      if (!(p > 0.0 && p <= 1.0))
        throw InvalidArgument(fmt::format("edge_probability must lie in (0, 1], got {}", p));
      if (node_count < 2) throw InvalidArgument("erdos_renyi needs V >= 2");
      RngStream rng(seed, "erdos_renyi");
      for (int attempt = 1; attempt <= kErdosRenyiMaxAttempts; ++attempt) {
        std::vector<std::vector<NodeId>> adj(node_count);
        for (NodeId i = 0; i < node_count; ++i)
          for (NodeId j = i + 1; j < node_count; ++j)
            if (rng.uniform() < p) link(adj, i, j);
        if (is_connected(adj)) return Topology(kind, std::move(adj));
      }
      throw NumericalError(fmt::format(
          "erdos_renyi(V={}, p={}) not connected after {} attempts (seed {})", node_count, p,
          kErdosRenyiMaxAttempts, seed));
    }
  }
  throw InvalidArgument("unsupported topology kind");
}

MixingMatrix::MixingMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  if (entries_.rows() == 0 || entries_.rows() != entries_.cols())
    throw InvalidArgument("mixing matrix must be square and nonempty");
  if (!entries_.allFinite() || entries_.minCoeff() < 0.0 || entries_.maxCoeff() > 1.0)
    throw InvalidArgument("mixing matrix entries must lie in [0, 1]");
  const double defect = stochastic_defect();
  if (defect > kStochasticTol)
    throw InvalidArgument(fmt::format("mixing matrix is not doubly stochastic (defect {:.3e})", defect));
}

bool MixingMatrix::is_symmetric() const { return entries_ == entries_.transpose(); }

double MixingMatrix::stochastic_defect() const {
  const double rows = (entries_.rowwise().sum().array() - 1.0).abs().maxCoeff();
  const double cols = (entries_.colwise().sum().array() - 1.0).abs().maxCoeff();
  return std::max(rows, cols);
}

MixingMatrix metropolis_hastings(const Topology& topology) {
  const auto v = static_cast<Eigen::Index>(topology.node_count());
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(v, v);
  for (Eigen::Index i = 0; i < v; ++i) {
    const double wi = 1.0 / static_cast<double>(topology.degree(static_cast<NodeId>(i)) + 1);
    double off = 0.0;
    for (NodeId j : topology.neighbors(static_cast<NodeId>(i))) {
      const double wj = 1.0 / static_cast<double>(topology.degree(j) + 1);
      const double w = std::min(wi, wj);
      p(i, static_cast<Eigen::Index>(j)) = w;
      off += w;
    }
    p(i, i) = 1.0 - off;
  }
  return MixingMatrix(std::move(p));
}

std::size_t offdiag_nnz(const MixingMatrix& p) {
  const auto& m = p.dense();
  std::size_t count = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (i != j && m(i, j) > 0.0) ++count;
  return count;
}

TransitionSampler::TransitionSampler(const MixingMatrix& p) {
  const auto& m = p.dense();
  offsets_.reserve(p.size() + 1);
  offsets_.push_back(0);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (m(i, j) > 0.0) {
        acc += m(i, j);
        targets_.push_back(static_cast<NodeId>(j));
        cdf_.push_back(acc);
      }
    }
    if (cdf_.size() == offsets_.back() || std::abs(acc - 1.0) > 1e-9)
      throw InvalidArgument(fmt::format("row {} of the transition matrix sums to {}", i, acc));
    // Absorb rounding so every u in [0, 1) lands in the support.
    cdf_.back() = 1.0;
    offsets_.push_back(cdf_.size());
  }
}

}  // namespace wg
