#include "walkgossip/algorithms.hpp"

#include <cmath>

#include <fmt/format.h>

#include "walkgossip/errors.hpp"
#include "walkgossip/metrics.hpp"

namespace wg {

double LearningRate::at(std::uint64_t iteration) const {
  if (!decay || decay_every == 0) return eta;
  return eta * std::pow(*decay, static_cast<double>(iteration / decay_every));
}

Vector hub_mix(const Vector& x, const Vector& u_latest, const Vector& u_own, std::size_t walks) {
  const double keep = 1.0 - 1.0 / static_cast<double>(walks);
  return x + ((u_latest - u_own) - keep * (x - u_own));
}

namespace {

void check_common(const Topology& topology, const MixingMatrix& p, const Objective& objective,
                  const Vector& x0, std::size_t batch, const LearningRate& lr) {
  const std::size_t v = topology.node_count();
  if (p.size() != v)
    throw InvalidArgument(fmt::format("mixing matrix is {}x{} for a {}-node graph", p.size(), p.size(), v));
  if (objective.node_count() != v)
    throw InvalidArgument(fmt::format("objective has {} shards for a {}-node graph",
                                      objective.node_count(), v));
  if (static_cast<std::size_t>(x0.size()) != objective.model_dim())
    throw InvalidArgument(fmt::format("x0 has dimension {}, model has {}", x0.size(),
                                      objective.model_dim()));
  if (!x0.allFinite()) throw InvalidArgument("x0 must be finite");
  if (batch == 0 || batch > objective.min_shard_size())
    throw InvalidArgument(fmt::format("batch {} not in [1, {}] (smallest shard)", batch,
                                      objective.min_shard_size()));
  if (!(lr.eta >= 0.0) || !std::isfinite(lr.eta)) throw InvalidArgument("eta must be finite and >= 0");
  if (lr.decay && (!(*lr.decay > 0.0 && *lr.decay <= 1.0) || lr.decay_every == 0))
    throw InvalidArgument("lr decay needs a factor in (0, 1] and a positive period");
  for (NodeId i = 0; i < v; ++i)
    for (NodeId j = 0; j < v; ++j)
      if (i != j && p(i, j) > 0.0 && !topology.adjacent(i, j))
        throw InvalidArgument(fmt::format("P has weight on non-edge {}-{}", i, j));
}

void check_finite(const Vector& x, const char* what) {
  if (!x.allFinite()) throw InvariantViolation(fmt::format("{} became non-finite", what));
}

}  // namespace

MultiWalk::MultiWalk(const Topology& topology, const MixingMatrix& p, const Objective& objective,
                     const Vector& x0, const Options& options, std::uint64_t seed)
    : objective_(objective), sampler_(p), options_(options) {
  check_common(topology, p, objective, x0, options.batch, options.lr);
  const std::size_t r = options.walks;
  if (r == 0 || r > topology.node_count())
    throw InvalidArgument(fmt::format("walk count R = {} must lie in [1, V = {}]", r,
                                      topology.node_count()));
  walks_.resize(r);
  for (std::size_t k = 0; k < r; ++k) {
    walks_[k] = WalkState{k, x0, 0};
    move_rng_.emplace_back(seed, "walk_moves", k);
    grad_rng_.emplace_back(seed, "gradients", k);
  }
  hub_.copies.assign(r, x0);
  hub_.last = 0;
}

StepOutcome MultiWalk::step(const Event& event, std::uint64_t iteration) {
  const std::size_t r = event.actor;
  if (r >= walks_.size()) throw InvariantViolation(fmt::format("event for unknown walk {}", r));
  WalkState& walk = walks_[r];
  const NodeId v = walk.node;

  const std::uint64_t staleness = iteration - walk.model_index;
  const double eta = options_.lr.at(iteration);
  walk.model -= eta * stochastic_gradient(objective_, v, walk.model, options_.batch, grad_rng_[r]);

  if (v == 0 && options_.hub_mixing) {
    walk.model = hub_mix(walk.model, hub_.copies[hub_.last], hub_.copies[r], walks_.size());
    hub_.copies[r] = walk.model;
    hub_.last = r;
  }
  check_finite(walk.model, "walk model");

  walk.node = sampler_.next(v, move_rng_[r]);
  walk.model_index = iteration + 1;
  return StepOutcome{1, staleness, v};
}

Eigen::MatrixXd MultiWalk::models() const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(objective_.model_dim()),
                    static_cast<Eigen::Index>(walks_.size()));
  for (std::size_t k = 0; k < walks_.size(); ++k) m.col(static_cast<Eigen::Index>(k)) = walks_[k].model;
  return m;
}

MetricsSnapshot MultiWalk::evaluate() const {
  return wg::evaluate(models(), &hub_.copies[hub_.last], objective_);
}

void MultiWalk::restore(std::vector<WalkState> walks, HubState hub) {
  if (walks.size() != walks_.size() || hub.copies.size() != walks_.size() || hub.last >= walks_.size())
    throw InvalidArgument("restored state has the wrong number of walks");
  walks_ = std::move(walks);
  hub_ = std::move(hub);
}

AsyncGossip::AsyncGossip(const Topology& topology, const MixingMatrix& p, const Objective& objective,
                         const Vector& x0, const Options& options, std::uint64_t seed)
    : objective_(objective), options_(options), messages_(offdiag_nnz(p)) {
  check_common(topology, p, objective, x0, options.batch, options.lr);
  const std::size_t v = topology.node_count();
  links_.resize(v);
  for (NodeId i = 0; i < v; ++i)
    for (NodeId j = 0; j < v; ++j)
      if (i != j && p(i, j) > 0.0) links_[i].push_back({j, p(i, j)});

  models_ = x0.replicate(1, static_cast<Eigen::Index>(v));
  anchors_ = models_;
  anchor_index_.assign(v, 0);
  for (NodeId i = 0; i < v; ++i) grad_rng_.emplace_back(seed, "gradients", i);
}

void AsyncGossip::mix() {
  scratch_ = models_;
  for (std::size_t i = 0; i < links_.size(); ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    auto xi = models_.col(col);
    Vector pull = Vector::Zero(models_.rows());
    for (const Link& link : links_[i])
      pull.noalias() += link.weight * (models_.col(static_cast<Eigen::Index>(link.peer)) - xi);
    scratch_.col(col) = xi + pull;
  }
  models_.swap(scratch_);
}

StepOutcome AsyncGossip::step(const Event& event, std::uint64_t iteration) {
  const NodeId v = event.actor;
  if (v >= links_.size()) throw InvariantViolation(fmt::format("event for unknown node {}", v));
  const auto col = static_cast<Eigen::Index>(v);

  const std::uint64_t staleness = iteration - anchor_index_[v];
  const Vector anchor = anchors_.col(col);
  const double eta = options_.lr.at(iteration);
  models_.col(col) -= eta * stochastic_gradient(objective_, v, anchor, options_.batch, grad_rng_[v]);
  mix();
  check_finite(models_.col(col), "node model");

  anchors_.col(col) = models_.col(col);
  anchor_index_[v] = iteration + 1;
  return StepOutcome{messages_, staleness, v};
}

MetricsSnapshot AsyncGossip::evaluate() const { return wg::evaluate(models_, nullptr, objective_); }

}  // namespace wg
