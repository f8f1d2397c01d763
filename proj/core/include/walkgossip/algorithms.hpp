#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "walkgossip/data.hpp"
#include "walkgossip/engine.hpp"
#include "walkgossip/graph.hpp"
#include "walkgossip/rng.hpp"

namespace wg {

/// Constant step size, optionally decayed by `decay` every `decay_every` iterations.
struct LearningRate {
  double eta = 0.01;
  std::optional<double> decay;
  std::uint64_t decay_every = 0;

  double at(std::uint64_t iteration) const;
  static LearningRate constant(double eta) { return {eta, std::nullopt, 0}; }
};

/// x_new = u_latest + (x - u_own)/R, evaluated as the increment
/// x + [(u_latest - u_own) - (1 - 1/R)(x - u_own)] so that identical
/// inputs (R = 1, or all models equal) leave x bitwise unchanged.
Vector hub_mix(const Vector& x, const Vector& u_latest, const Vector& u_own, std::size_t walks);

struct WalkState {
  NodeId node = 0;
  Vector model;
  std::uint64_t model_index = 0;  ///< global index t of x^r_t; τ = t - model_index
};

struct HubState {
  std::vector<Vector> copies;  ///< u^r
  std::size_t last = 0;        ///< l, 0-based walk id
};

/// Asynchronous multi-walk SGD. Walk r (0-based) starts at node r; walk
/// models mix only at node 0 through the hub copies.
class MultiWalk final : public Stepper {
 public:
  struct Options {
    std::size_t walks = 1;
    LearningRate lr;
    std::size_t batch = 1;
    bool hub_mixing = true;
  };

  MultiWalk(const Topology& topology, const MixingMatrix& p, const Objective& objective,
            const Vector& x0, const Options& options, std::uint64_t seed);

  std::size_t actor_count() const override { return walks_.size(); }
  EventKind event_kind() const override { return EventKind::walk_iteration_done; }
  StepOutcome step(const Event& event, std::uint64_t iteration) override;
  MetricsSnapshot evaluate() const override;

  const std::vector<WalkState>& walks() const noexcept { return walks_; }
  const HubState& hub() const noexcept { return hub_; }
  /// Models as columns, one per walk.
  Eigen::MatrixXd models() const;
  /// Replaces walk and hub state, e.g. to resume from a checkpoint.
  void restore(std::vector<WalkState> walks, HubState hub);

 private:
  const Objective& objective_;
  TransitionSampler sampler_;
  Options options_;
  std::vector<WalkState> walks_;
  HubState hub_;
  std::vector<RngStream> move_rng_;
  std::vector<RngStream> grad_rng_;
};

/// Asynchronous gossip (AD-PSGD): every node computes on a snapshot of its
/// own model; on completion the stale gradient is applied locally and all
/// node models are mixed through P.
class AsyncGossip final : public Stepper {
 public:
  struct Options {
    LearningRate lr;
    std::size_t batch = 1;
  };

  AsyncGossip(const Topology& topology, const MixingMatrix& p, const Objective& objective,
              const Vector& x0, const Options& options, std::uint64_t seed);

  std::size_t actor_count() const override { return static_cast<std::size_t>(models_.cols()); }
  EventKind event_kind() const override { return EventKind::node_gradient_done; }
  StepOutcome step(const Event& event, std::uint64_t iteration) override;
  MetricsSnapshot evaluate() const override;

  /// Node models as columns.
  const Eigen::MatrixXd& models() const noexcept { return models_; }
  const Eigen::MatrixXd& anchors() const noexcept { return anchors_; }
  std::size_t messages_per_iteration() const noexcept { return messages_; }

  /// x_i ← x_i + Σ_{j≠i} p_ij (x_j - x_i) for every column, i.e. X ← X Pᵀ for
  /// row-stochastic P.
  void mix();

 private:
  struct Link {
    NodeId peer;
    double weight;
  };

  const Objective& objective_;
  Options options_;
  std::vector<std::vector<Link>> links_;
  std::size_t messages_;
  Eigen::MatrixXd models_;
  Eigen::MatrixXd anchors_;
  std::vector<std::uint64_t> anchor_index_;
  std::vector<RngStream> grad_rng_;
  Eigen::MatrixXd scratch_;
};

}  // namespace wg
