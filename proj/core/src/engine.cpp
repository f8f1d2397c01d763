#include "walkgossip/engine.hpp"

#include <fmt/format.h>

#include "walkgossip/errors.hpp"

namespace wg {

double DelayModel::mean_for(ActorId actor) const {
  return per_actor_mean.empty() ? mean_delay : per_actor_mean.at(actor);
}

double DelayModel::draw(ActorId actor, RngStream& rng) const {
  const double mean = mean_for(actor);
  if (!compute_fraction) return rng.exponential(mean);
  const double f = *compute_fraction;
  return rng.exponential(f * mean) + rng.exponential((1.0 - f) * mean);
}

Event EventQueue::push(ActorId actor, EventKind kind, double fire_time) {
  Event e{fire_time, next_seq_++, actor, kind};
  heap_.push(e);
  return e;
}

Event EventQueue::schedule_next(ActorId actor, EventKind kind, double now,
                                const DelayModel& delays, RngStream& rng) {
  return push(actor, kind, now + delays.draw(actor, rng));
}

Event EventQueue::pop() {
  Event e = heap_.top();
  heap_.pop();
  return e;
}

namespace {

void validate(const EngineConfig& config, const Stepper& stepper, const StopCriterion& stop,
              std::uint64_t eval_interval) {
  if (stop.max_iterations.has_value() == stop.max_sim_time.has_value())
    throw InvalidArgument("exactly one of max_iterations and max_sim_time must be set");
  if (stop.max_sim_time && !(*stop.max_sim_time >= 0.0))
    throw InvalidArgument("max_sim_time must be >= 0");
  if (eval_interval == 0) throw InvalidArgument("eval_interval must be >= 1");
  const auto& d = config.delays;
  if (!(d.mean_delay > 0.0)) throw InvalidArgument("mean_delay must be > 0");
  if (d.compute_fraction && !(*d.compute_fraction > 0.0 && *d.compute_fraction < 1.0))
    throw InvalidArgument("compute_fraction must lie in (0, 1)");
  if (!d.per_actor_mean.empty()) {
    if (d.per_actor_mean.size() != stepper.actor_count())
      throw InvalidArgument(fmt::format("per-actor delays: {} given for {} actors",
                                        d.per_actor_mean.size(), stepper.actor_count()));
    for (double m : d.per_actor_mean)
      if (!(m > 0.0)) throw InvalidArgument("per-actor mean delays must be > 0");
  }
  if (stepper.actor_count() == 0) throw InvalidArgument("stepper has no actors");
}

}  // namespace

RunResult run(const EngineConfig& config, Stepper& stepper, const StopCriterion& stop,
              std::uint64_t eval_interval, std::uint64_t seed, const IterationObserver& observer) {
  validate(config, stepper, stop, eval_interval);

  const std::size_t actors = stepper.actor_count();
  std::vector<RngStream> clocks;
  clocks.reserve(actors);
  for (ActorId a = 0; a < actors; ++a) clocks.emplace_back(seed, "delays", a);

  EventQueue queue;
  for (ActorId a = 0; a < actors; ++a)
    queue.schedule_next(a, stepper.event_kind(), 0.0, config.delays, clocks[a]);

  RunResult result;
  Accounting& acc = result.accounting;
  double tau_sum = 0.0;
  std::uint64_t tau_count = 0;

  auto emit = [&] {
    const MetricsSnapshot m = stepper.evaluate();
    RunRecord r;
    r.t = acc.iterations;
    r.sim_time = acc.sim_time;
    r.bits = acc.bits;
    r.loss = m.loss;
    r.grad_norm = m.grad_norm;
    r.loss_hub = m.loss_hub;
    r.spread = m.spread;
    if (tau_count > 0) r.tau_mean = tau_sum / static_cast<double>(tau_count);
    result.records.push_back(r);
    tau_sum = 0.0;
    tau_count = 0;
  };

  emit();
  auto keep_going = [&] {
    if (stop.max_iterations) return acc.iterations < *stop.max_iterations;
    return !queue.empty() && queue.top().fire_time <= *stop.max_sim_time;
  };

  while (keep_going()) {
    const Event event = queue.pop();
    const std::uint64_t t = acc.iterations;
    StepOutcome outcome;
    try {
      outcome = stepper.step(event, t);
    } catch (const InvariantViolation& e) {
      throw RunAborted(t, e.what());
    }
    acc.iterations = t + 1;
    acc.sim_time = event.fire_time;
    acc.bits += config.model_bits * outcome.messages;
    ++acc.gradient_evals;
    if (outcome.staleness) {
      tau_sum += static_cast<double>(*outcome.staleness);
      ++tau_count;
    }
    if (observer) observer(event, t, outcome);
    queue.schedule_next(event.actor, event.kind, event.fire_time, config.delays, clocks[event.actor]);
    if (acc.iterations % eval_interval == 0) emit();
  }
  if (result.records.back().t != acc.iterations) emit();
  return result;
}

}  // namespace wg
