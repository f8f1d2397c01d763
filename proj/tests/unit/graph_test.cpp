#include <algorithm>
#include <string>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "walkgossip/errors.hpp"
#include "walkgossip/graph.hpp"

namespace wg {
namespace {

std::vector<NodeId> neighbor_list(const Topology& t, NodeId i) {
  auto n = t.neighbors(i);
  return {n.begin(), n.end()};
}

TEST(Topology, CycleNeighbors) {
  const Topology t = build_topology(TopologyKind::cycle, 5);
  EXPECT_EQ(neighbor_list(t, 0), (std::vector<NodeId>{1, 4}));
  EXPECT_EQ(t.edge_count(), 5u);
}

TEST(Topology, CompleteDegrees) {
  const Topology t = build_topology(TopologyKind::complete, 4);
  for (NodeId i = 0; i < 4; ++i) EXPECT_EQ(t.degree(i), 3u);
  EXPECT_EQ(t.edge_count(), 6u);
}

TEST(Topology, TorusIsFourRegular) {
  const Topology t = build_topology(TopologyKind::torus2d, 16);
  for (NodeId i = 0; i < 16; ++i) EXPECT_EQ(t.degree(i), 4u);
  // node 5 = (1,1) touches (0,1), (2,1), (1,0), (1,2)
  EXPECT_EQ(neighbor_list(t, 5), (std::vector<NodeId>{1, 4, 6, 9}));
  // 2x2 wraps onto itself: each node has two distinct neighbors
  const Topology small = build_topology(TopologyKind::torus2d, 4);
  for (NodeId i = 0; i < 4; ++i) EXPECT_EQ(small.degree(i), 2u);
}

TEST(Topology, ErdosRenyiDeterministic) {
  const Topology a = build_topology(TopologyKind::erdos_renyi, 20, 0.3, 42);
  const Topology b = build_topology(TopologyKind::erdos_renyi, 20, 0.3, 42);
  EXPECT_EQ(a, b);
  std::vector<std::vector<NodeId>> adj;
  for (NodeId i = 0; i < 20; ++i) adj.push_back(neighbor_list(a, i));
  EXPECT_TRUE(is_connected(adj));
  const Topology c = build_topology(TopologyKind::erdos_renyi, 20, 0.3, 43);
  EXPECT_FALSE(a == c);
}

TEST(Topology, InvalidArguments) {
  EXPECT_THROW(build_topology(TopologyKind::cycle, 1), InvalidArgument);
  EXPECT_THROW(build_topology(TopologyKind::complete, 0), InvalidArgument);
  EXPECT_THROW(build_topology(TopologyKind::torus2d, 15), InvalidArgument);
  EXPECT_THROW(build_topology(TopologyKind::torus2d, 1), InvalidArgument);
  EXPECT_THROW(build_topology(TopologyKind::erdos_renyi, 10), InvalidArgument);
  EXPECT_THROW(build_topology(TopologyKind::erdos_renyi, 10, 0.0), InvalidArgument);
  EXPECT_THROW(build_topology(TopologyKind::erdos_renyi, 10, 1.5), InvalidArgument);
  EXPECT_THROW(parse_topology_kind("ring"), InvalidArgument);
  EXPECT_EQ(parse_topology_kind("torus2d"), TopologyKind::torus2d);
}

TEST(Topology, RejectsMalformedAdjacency) {
  EXPECT_THROW(Topology(TopologyKind::cycle, {{1}, {}}), InvalidArgument);           // asymmetric
  EXPECT_THROW(Topology(TopologyKind::cycle, {{0, 1}, {0}}), InvalidArgument);       // self loop
  EXPECT_THROW(Topology(TopologyKind::cycle, {{1}, {0}, {3}, {2}}), InvalidArgument);  // disconnected
}

TEST(Topology, ErdosRenyiGivesUpAndNamesSeed) {
  try {
    build_topology(TopologyKind::erdos_renyi, 60, 0.001, 977);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("977"), std::string::npos) << e.what();
  }
}

TEST(Mixing, CompleteIsUniform) {
  const MixingMatrix p = metropolis_hastings(build_topology(TopologyKind::complete, 4));
  for (NodeId i = 0; i < 4; ++i)
    for (NodeId j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(p(i, j), 0.25);
}

TEST(Mixing, CycleThirds) {
  const MixingMatrix p = metropolis_hastings(build_topology(TopologyKind::cycle, 5));
  for (NodeId i = 0; i < 5; ++i)
    for (NodeId j = 0; j < 5; ++j) {
      const bool near = i == j || (i + 1) % 5 == j || (j + 1) % 5 == i;
      EXPECT_NEAR(p(i, j), near ? 1.0 / 3.0 : 0.0, 1e-15) << i << "," << j;
    }
}

TEST(Mixing, TwoNodeHalves) {
  const MixingMatrix p = metropolis_hastings(build_topology(TopologyKind::complete, 2));
  for (NodeId i = 0; i < 2; ++i)
    for (NodeId j = 0; j < 2; ++j) EXPECT_EQ(p(i, j), 0.5);
}

TEST(Mixing, OffdiagNnz) {
  EXPECT_EQ(offdiag_nnz(metropolis_hastings(build_topology(TopologyKind::complete, 4))), 12u);
  EXPECT_EQ(offdiag_nnz(metropolis_hastings(build_topology(TopologyKind::cycle, 5))), 10u);
  EXPECT_EQ(offdiag_nnz(MixingMatrix(Eigen::MatrixXd::Identity(6, 6))), 0u);
}

TEST(Mixing, RejectsNonStochastic) {
  Eigen::MatrixXd m(2, 2);
  m << 0.6, 0.4, 0.5, 0.5;
  EXPECT_THROW(MixingMatrix{m}, InvalidArgument);
  m << 1.2, -0.2, -0.2, 1.2;
  EXPECT_THROW(MixingMatrix{m}, InvalidArgument);
}

std::vector<Topology> zoo() {
  std::vector<Topology> out;
  for (std::size_t v : {2, 3, 7, 10, 33}) {
    out.push_back(build_topology(TopologyKind::cycle, v));
    out.push_back(build_topology(TopologyKind::complete, v));
  }
  for (std::size_t v : {4, 9, 16, 64}) out.push_back(build_topology(TopologyKind::torus2d, v));
  for (std::uint64_t seed = 0; seed < 20; ++seed)
    for (double q : {0.15, 0.4, 0.9})
      out.push_back(build_topology(TopologyKind::erdos_renyi, 12 + seed, q, seed));
  return out;
}

TEST(MixingProperty, StochasticSymmetricSupportedConnected) {
  for (const Topology& t : zoo()) {
    const MixingMatrix p = metropolis_hastings(t);
    const std::size_t v = t.node_count();
    EXPECT_LE(p.stochastic_defect(), 1e-12);
    std::vector<std::vector<NodeId>> adj;
    for (NodeId i = 0; i < v; ++i) {
      adj.push_back(neighbor_list(t, i));
      for (NodeId j = 0; j < v; ++j) {
        ASSERT_GE(p(i, j), 0.0);
        ASSERT_EQ(p(i, j), p(j, i));  // bitwise
        if (i != j) {
          if (t.adjacent(i, j)) ASSERT_GT(p(i, j), 0.0);
          else ASSERT_EQ(p(i, j), 0.0);
        }
      }
      // row and column sums checked independently of the library's defect
      EXPECT_NEAR(p.dense().row(Eigen::Index(i)).sum(), 1.0, 1e-12);
      EXPECT_NEAR(p.dense().col(Eigen::Index(i)).sum(), 1.0, 1e-12);
    }
    EXPECT_TRUE(is_connected(adj));
    EXPECT_TRUE(p.is_symmetric());
  }
}

TEST(MixingProperty, RegenerationIsByteIdentical) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Topology a = build_topology(TopologyKind::erdos_renyi, 25, 0.2, seed);
    const Topology b = build_topology(TopologyKind::erdos_renyi, 25, 0.2, seed);
    ASSERT_EQ(a, b);
    EXPECT_TRUE(oracle::same_bytes(metropolis_hastings(a).dense(), metropolis_hastings(b).dense()));
  }
}

TEST(Sampler, InverseCdf) {
  const MixingMatrix p = metropolis_hastings(build_topology(TopologyKind::cycle, 5));
  const TransitionSampler s(p);
  EXPECT_EQ(s.next(0, 0.0), 0u);
  EXPECT_EQ(s.next(0, 0.5), 1u);
  EXPECT_EQ(s.next(0, 0.999999), 4u);
  EXPECT_EQ(s.next(2, 0.1), 1u);
}

TEST(Sampler, EmpiricalRowMatchesP) {
  const MixingMatrix p = metropolis_hastings(build_topology(TopologyKind::erdos_renyi, 8, 0.5, 3));
  const TransitionSampler s(p);
  RngStream rng(9, "sampler");
  const int n = 200000;
  std::vector<int> hits(8, 0);
  for (int k = 0; k < n; ++k) ++hits[s.next(3, rng)];
  for (NodeId j = 0; j < 8; ++j) {
    const double q = p(3, j);
    const double se = std::sqrt(q * (1 - q) / n) + 1e-12;
    EXPECT_NEAR(hits[j] / double(n), q, 5 * se) << j;
  }
}

}  // namespace
}  // namespace wg
