#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <vector>

#include "walkgossip/metrics.hpp"
#include "walkgossip/rng.hpp"

namespace wg {

using ActorId = std::size_t;

enum class EventKind { walk_iteration_done, node_gradient_done };

struct Event {
  double fire_time = 0.0;
  std::uint64_t seq = 0;
  ActorId actor = 0;
  EventKind kind = EventKind::walk_iteration_done;
};

/// Per-iteration delay of an actor. By default one exponential of mean
/// `mean_delay` covers computation and communication. With
/// `compute_fraction` set, the delay is the sum of two independent
/// exponentials with means f·d and (1-f)·d.
struct DelayModel {
  double mean_delay = 1.0;
  std::optional<double> compute_fraction;
  std::vector<double> per_actor_mean;  ///< overrides mean_delay when non-empty

  double mean_for(ActorId actor) const;
  double draw(ActorId actor, RngStream& rng) const;
};

/// Min-queue over (fire_time, seq). Sequence numbers are handed out in
/// insertion order, so simultaneous events pop in the order they were scheduled.
class EventQueue {
 public:
  Event schedule_next(ActorId actor, EventKind kind, double now, const DelayModel& delays,
                      RngStream& rng);
  Event push(ActorId actor, EventKind kind, double fire_time);
  Event pop();
  const Event& top() const { return heap_.top(); }
  bool empty() const noexcept { return heap_.empty(); }
  std::size_t size() const noexcept { return heap_.size(); }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.fire_time != b.fire_time ? a.fire_time > b.fire_time : a.seq > b.seq;
    }
  };
  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  std::uint64_t next_seq_ = 0;
};

struct StepOutcome {
  std::uint64_t messages = 0;
  std::optional<std::uint64_t> staleness;  ///< τ_t when the algorithm tracks it
  std::size_t node = 0;                    ///< node that executed the iteration
};

/// An algorithm as seen by the engine: one actor per clock, one step per event.
class Stepper {
 public:
  virtual ~Stepper() = default;
  virtual std::size_t actor_count() const = 0;
  virtual EventKind event_kind() const = 0;
  /// Executes iteration `iteration` triggered by `event`. Throws
  /// InvariantViolation to abort the run.
  virtual StepOutcome step(const Event& event, std::uint64_t iteration) = 0;
  virtual MetricsSnapshot evaluate() const = 0;
};

struct StopCriterion {
  std::optional<std::uint64_t> max_iterations;
  std::optional<double> max_sim_time;

  static StopCriterion iterations(std::uint64_t n) { return {n, std::nullopt}; }
  static StopCriterion sim_time(double z) { return {std::nullopt, z}; }
};

struct EngineConfig {
  DelayModel delays;
  std::uint64_t model_bits = 1;
};

struct Accounting {
  std::uint64_t iterations = 0;
  double sim_time = 0.0;
  std::uint64_t bits = 0;
  std::uint64_t gradient_evals = 0;
};

struct RunResult {
  std::vector<RunRecord> records;
  Accounting accounting;
};

using IterationObserver =
    std::function<void(const Event&, std::uint64_t iteration, const StepOutcome&)>;

/// Drives `stepper` until the stop criterion. Emits a record at t = 0, every
/// `eval_interval` iterations, and at the final iteration. Clock delays come
/// from per-actor streams derived from `seed`, so the run is a pure function
/// of its inputs. Throws RunAborted with the iteration index when the
/// stepper reports an invariant violation.
RunResult run(const EngineConfig& config, Stepper& stepper, const StopCriterion& stop,
              std::uint64_t eval_interval, std::uint64_t seed,
              const IterationObserver& observer = {});

}  // namespace wg
