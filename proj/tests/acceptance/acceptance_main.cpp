// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance            run every criterion
//   acceptance A3 A7      run a subset
//
// Exit status is nonzero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "walkgossip/algorithms.hpp"
#include "walkgossip/chain_analysis.hpp"
#include "walkgossip/data.hpp"
#include "walkgossip/engine.hpp"
#include "walkgossip/graph.hpp"
#include "walkgossip/errors.hpp"
#include "walkgossip/metrics.hpp"

namespace {

using namespace wg;

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

MixingMatrix mh(TopologyKind kind, std::size_t v) { return metropolis_hastings(build_topology(kind, v)); }

// ---------------------------------------------------------------------------
// Simulation helpers

struct Problem {
  Topology topology;
  MixingMatrix p;
  Objective objective;
};

Problem least_squares_problem(TopologyKind kind, std::size_t v, std::size_t n, std::size_t dim,
                              double shift, double noise, std::uint64_t seed) {
  Topology t = build_topology(kind, v, std::nullopt, seed);
  MixingMatrix p = metropolis_hastings(t);
  SyntheticSpec s;
  s.task = Task::least_squares;
  s.node_count = v;
  s.n_per_node = n;
  s.model_dim = dim;
  s.hetero_shift = shift;
  s.noise_std = noise;
  s.seed = seed;
  return Problem{std::move(t), std::move(p), make_synthetic(s)};
}

struct RunSpec {
  bool gossip = false;
  std::size_t walks = 1;
  double eta = 0.01;
  std::size_t batch = 1;
  bool hub_mixing = true;
  std::uint64_t iterations = 1000;
  std::uint64_t eval_interval = 10;
  std::uint64_t model_bits = 1;
  double x0 = 0.0;
};

RunResult simulate(const Problem& pr, const RunSpec& spec, std::uint64_t seed,
                   const IterationObserver& observer = {}) {
  const Vector x0 = Vector::Constant(static_cast<Eigen::Index>(pr.objective.model_dim()), spec.x0);
  EngineConfig engine;
  engine.model_bits = spec.model_bits;
  const StopCriterion stop = StopCriterion::iterations(spec.iterations);
  if (spec.gossip) {
    AsyncGossip g(pr.topology, pr.p, pr.objective, x0, {LearningRate::constant(spec.eta), spec.batch}, seed);
    return run(engine, g, stop, spec.eval_interval, seed, observer);
  }
  MultiWalk mw(pr.topology, pr.p, pr.objective, x0,
               {spec.walks, LearningRate::constant(spec.eta), spec.batch, spec.hub_mixing}, seed);
  return run(engine, mw, stop, spec.eval_interval, seed, observer);
}

// ---------------------------------------------------------------------------

Verdict a1() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t n : {2, 5, 20, 64}) {
    const ReturnMoments r = return_moments_exact(mh(TopologyKind::complete, n));
    const double V = double(n);
    v.require(rel(r.mean, V) <= 1e-6 && rel(r.second, 2 * V * V - V) <= 1e-6,
              fmt("V=%zu gave (%.10g, %.10g), want (%g, %g)", n, r.mean, r.second, V, 2 * V * V - V));
    if (n == 20) v.note(fmt("V=20 -> (%.9g, %.9g)", r.mean, r.second));
  }
  const double elapsed = seconds_since(t0);
  v.require(elapsed < 1.0, fmt("took %.2f s (limit 1 s)", elapsed));
  return v;
}

Verdict a2() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (std::size_t n = 4; n <= 64; n += 2) {
    const CycleRecurrence a = return_moments_cycle_analytic(n);
    const ReturnMoments e = return_moments_exact(mh(TopologyKind::cycle, n));
    worst = std::max({worst, rel(a.moments.mean, e.mean), rel(a.moments.second, e.second)});
  }
  v.require(worst <= 1e-9, fmt("analytic vs exact max rel diff %.2e", worst));
  v.note(fmt("analytic == exact to %.1e for even V in [4,64]", worst));

  std::size_t m1_mismatch = 0;
  for (std::size_t n = 4; n <= 64; n += 2) {
    const double stated = 1.5 * double(n) + 1.5;
    if (return_moments_cycle_analytic(n).m1 != stated) ++m1_mismatch;
  }
  const CycleRecurrence ten = return_moments_cycle_analytic(10);
  v.require(m1_mismatch == 0, fmt("m1 = 3V/2 + 3/2 fails for %zu of 31 sizes (V=10: m1 = %.4g, formula %.4g, "
                                  "m0 = 1 + (2/3) m1 = V forces 3V/2 - 3/2)",
                                  m1_mismatch, ten.m1, 16.5));

  std::vector<double> ratio;
  for (std::size_t n : {8, 16, 32, 64}) ratio.push_back(return_moments_cycle_analytic(n).moments.second / std::pow(double(n), 3));
  const auto [lo, hi] = std::minmax_element(ratio.begin(), ratio.end());
  v.require(*hi / *lo <= 3.0, fmt("second/V^3 spread %.3f > 3", *hi / *lo));
  v.note(fmt("second/V^3 in [%.4f, %.4f]", *lo, *hi));

  const double elapsed = seconds_since(t0);
  v.require(elapsed < 5.0, fmt("took %.2f s (limit 5 s)", elapsed));
  return v;
}

Verdict a3() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const unsigned shards = std::max(1u, std::thread::hardware_concurrency());
  struct Chain {
    const char* name;
    MixingMatrix p;
  };
  const std::vector<Chain> chains{{"complete-20", mh(TopologyKind::complete, 20)},
                                  {"cycle-10", mh(TopologyKind::cycle, 10)}};
  for (const Chain& c : chains) {
    const ReturnMoments e = return_moments_exact(c.p);
    int ok = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
      const MonteCarloReturn r = return_moments_mc(c.p, 0, 1'000'000, 1'000'000, seed, shards);
      const MomentErrors& se = *r.moments.standard_error;
      if (std::abs(r.moments.mean - e.mean) <= 4 * se.mean && std::abs(r.moments.second - e.second) <= 4 * se.second)
        ++ok;
    }
    v.require(ok >= 95, fmt("%s: %d/100 seeds within 4 stderr", c.name, ok));
    v.note(fmt("%s %d/100", c.name, ok));
  }
  const double elapsed = seconds_since(t0);
  v.require(elapsed < 120.0, fmt("took %.1f s (limit 120 s)", elapsed));
  return v;
}

Verdict a4() {
  Verdict v;
  for (std::size_t n : {5, 20, 64}) {
    const SpectralGaps g = spectral_gaps(mh(TopologyKind::complete, n));
    v.require(std::abs(g.p - 1) <= 1e-10 && std::abs(g.p_prime - 1) <= 1e-10,
              fmt("complete-%zu gaps (%.12g, %.12g)", n, g.p, g.p_prime));
  }
  const double circulant = 1.0 - (1.0 / 3.0 + (2.0 / 3.0) * std::cos(2.0 * std::numbers::pi / 20.0));
  const SpectralGaps c20 = spectral_gaps(mh(TopologyKind::cycle, 20));
  v.require(std::abs(c20.p_prime - circulant) <= 1e-8,
            fmt("cycle-20 p' = %.12g, circulant %.12g", c20.p_prime, circulant));

  std::vector<double> scaled;
  for (std::size_t n : {10, 20, 40}) scaled.push_back(spectral_gaps(mh(TopologyKind::cycle, n)).p * double(n * n));
  const auto [lo, hi] = std::minmax_element(scaled.begin(), scaled.end());
  const double mid = 0.5 * (*lo + *hi);
  v.require(*hi <= 1.3 * mid && *lo >= 0.7 * mid, fmt("p*V^2 range [%.3f, %.3f]", *lo, *hi));
  v.note(fmt("p*V^2 = %.2f, %.2f, %.2f", scaled[0], scaled[1], scaled[2]));
  return v;
}

Verdict a5() {
  Verdict v;
  struct Case {
    const char* name;
    TopologyKind kind;
    std::size_t nodes;
    RunSpec spec;
  };
  const std::vector<Case> cases{
      {"mw R=1 cycle-10", TopologyKind::cycle, 10, {false, 1, 0.05, 2, true, 3000, 7, 320}},
      {"mw R=5 torus-16", TopologyKind::torus2d, 16, {false, 5, 0.05, 2, true, 3000, 1, 4096}},
      {"gossip cycle-10", TopologyKind::cycle, 10, {true, 1, 0.05, 2, true, 3000, 7, 320}},
      {"gossip complete-12", TopologyKind::complete, 12, {true, 1, 0.05, 2, true, 3000, 1, 4096}},
  };
  for (const Case& c : cases) {
    const Problem pr = least_squares_problem(c.kind, c.nodes, 10, 4, 1.0, 0.1, 3);
    const std::uint64_t per = c.spec.gossip ? offdiag_nnz(pr.p) : 1;
    std::size_t bad = 0;
    const RunResult r = simulate(pr, c.spec, 3);
    for (const RunRecord& rec : r.records)
      if (rec.bits != rec.t * c.spec.model_bits * per) ++bad;
    v.require(bad == 0 && r.accounting.bits == c.spec.iterations * c.spec.model_bits * per,
              fmt("%s: %zu records off", c.name, bad));
  }
  v.note(fmt("B(t) exact on every record of %zu runs", cases.size()));
  return v;
}

Verdict a6() {
  Verdict v;
  const Problem pr = least_squares_problem(TopologyKind::cycle, 8, 4, 2, 0.0, 0.0, 1);
  for (std::size_t walks : {1, 2, 4}) {
    double mean = 0.0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
      const RunResult r = simulate(pr, {false, walks, 0.01, 1, true, 10000, 10000, 1}, seed);
      mean += r.accounting.sim_time / 10000.0 / 50.0;
    }
    const double expect = 1.0 / double(walks);
    v.require(std::abs(mean - expect) <= 0.05 * expect, fmt("R=%zu: Z_T/T = %.4f vs %.4f", walks, mean, expect));
    v.note(fmt("R=%zu Z_T/T=%.4f", walks, mean));
  }
  const double bound = 2.0 * std::exp(-0.2 * 0.2 * 2000 / 2);
  for (std::size_t walks : {1, 2, 4}) {
    int violations = 0;
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
      const RunResult r = simulate(pr, {false, walks, 0.01, 1, true, 2000, 2000, 1}, seed);
      const double center = 2000.0 / double(walks);
      if (std::abs(r.accounting.sim_time - center) >= 0.2 * center) ++violations;
    }
    v.require(violations == 0, fmt("R=%zu: %d/200 deviation events", walks, violations));
  }
  v.note(fmt("0/200 deviation events at t=2000 (bound %.1e)", bound));
  return v;
}

// ---------------------------------------------------------------------------
// Convergence criteria. Targets are squared gradient norms.

// iid least squares, cycle-16
constexpr std::size_t kA7Nodes = 16, kA7Samples = 50, kA7Dim = 10;
constexpr double kA7Noise = 0.1, kA7TargetFraction = 1e-3;
constexpr double kA7EtaMw = 0.02, kA7EtaGossip = 0.1;
constexpr std::uint64_t kA7Budget = 20000;

Verdict a7() {
  Verdict v;
  struct Arm {
    const char* name;
    RunSpec spec;
  };
  const std::vector<Arm> arms{{"mw R=4", {false, 4, kA7EtaMw, 1, true, kA7Budget, 100, 1}},
                              {"gossip", {true, 1, kA7EtaGossip, 1, true, kA7Budget, 100, 1}}};
  for (const Arm& arm : arms) {
    int reached = 0;
    double slowest = 0.0;
    std::vector<double> hits;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const Problem pr = least_squares_problem(TopologyKind::cycle, kA7Nodes, kA7Samples, kA7Dim, 0.0, kA7Noise, seed);
      const double target = kA7TargetFraction * pr.objective.optimum()->squaredNorm();
      const auto t0 = std::chrono::steady_clock::now();
      const RunResult r = simulate(pr, arm.spec, seed);
      slowest = std::max(slowest, seconds_since(t0));
      const auto hit = time_to_target(r.records, target);
      if (hit) {
        ++reached;
        hits.push_back(double(hit->iterations));
      }
    }
    v.require(reached >= 9, fmt("%s reached target in %d/10 seeds", arm.name, reached));
    v.require(slowest < 60.0, fmt("%s slowest run %.1f s (limit 60 s)", arm.name, slowest));
    v.note(fmt("%s %d/10, median t=%.0f, eta=%g", arm.name, reached, hits.empty() ? kInf : median(hits),
               arm.spec.eta));
  }
  return v;
}

// Iterations-to-target; not reached or diverged counts as +inf.
double iterations_to(const Problem& pr, const RunSpec& spec, std::uint64_t seed, double target) {
  try {
    const auto hit = time_to_target(simulate(pr, spec, seed).records, target);
    return hit ? double(hit->iterations) : kInf;
  } catch (const RunAborted&) {
    return kInf;
  }
}

// Both arms share the step size and start from x0 = 3*1; the target is a
// fraction of the squared gradient norm there.
constexpr std::size_t kA8Samples = 50, kA8Dim = 10;
constexpr double kA8Start = 3.0, kA8Target = 0.1;
// cycle-20, moderate heterogeneity
constexpr double kA8CycleShift = 1.0, kA8CycleEta = 0.01;
// complete-20, extreme heterogeneity
constexpr double kA8CompleteShift = 10.0, kA8CompleteEta = 0.1;
constexpr std::uint64_t kA8Budget = 40000;

Verdict a8() {
  Verdict v;
  auto medians = [&](TopologyKind kind, double shift, double eta, std::size_t walks) {
    std::vector<double> mw, gossip;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const Problem pr = least_squares_problem(kind, 20, kA8Samples, kA8Dim, shift, 0.0, seed);
      const double target = kA8Target * global_grad_norm(pr.objective, Vector::Constant(kA8Dim, kA8Start));
      mw.push_back(iterations_to(pr, {false, walks, eta, 1, true, kA8Budget, 50, 1, kA8Start}, seed, target));
      gossip.push_back(iterations_to(pr, {true, 1, eta, 1, true, kA8Budget, 50, 1, kA8Start}, seed, target));
    }
    return std::pair{median(mw), median(gossip)};
  };
  const auto [cycle_mw, cycle_gossip] = medians(TopologyKind::cycle, kA8CycleShift, kA8CycleEta, 1);
  v.require(cycle_mw < cycle_gossip, fmt("cycle-20: mw R=1 median %.0f not below gossip %.0f", cycle_mw, cycle_gossip));
  v.note(fmt("cycle-20 median iters: mw R=1 %.0f < gossip %.0f", cycle_mw, cycle_gossip));

  const auto [full_mw, full_gossip] =
      medians(TopologyKind::complete, kA8CompleteShift, kA8CompleteEta, 15);
  v.require(full_gossip < full_mw,
            fmt("complete-20: gossip median %.0f not below mw R=15 %.0f", full_gossip, full_mw));
  v.note(fmt("complete-20 median iters: gossip %.0f < mw R=15 %.0f", full_gossip, full_mw));
  return v;
}

// iid least squares; the step size grows with the number of concurrent
// workers so the consensus moves the same distance per iteration.
constexpr std::size_t kA10Samples = 50, kA10Dim = 10;
constexpr double kA10Noise = 0.1, kA10Target = 1e-2;
constexpr double kA10EtaPerWalk = 0.01, kA10EtaPerNode = 0.05;
constexpr std::uint64_t kA10Budget = 40000;

Verdict a10() {
  Verdict v;
  auto median_time = [&](TopologyKind kind, std::size_t nodes, bool gossip, std::size_t walks, double eta) {
    std::vector<double> z;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const Problem pr = least_squares_problem(kind, nodes, kA10Samples, kA10Dim, 0.0, kA10Noise, seed);
      const double target = kA10Target * global_grad_norm(pr.objective, Vector::Zero(kA10Dim));
      const RunResult r = simulate(pr, {gossip, walks, eta, 1, true, kA10Budget, 10, 1}, seed);
      const auto hit = time_to_target(r.records, target);
      z.push_back(hit ? hit->sim_time : kInf);
    }
    return median(z);
  };
  const double r2 = median_time(TopologyKind::cycle, 16, false, 2, 2 * kA10EtaPerWalk);
  const double r4 = median_time(TopologyKind::cycle, 16, false, 4, 4 * kA10EtaPerWalk);
  const double mw_factor = r2 / r4;
  v.require(mw_factor >= 1.6 && mw_factor <= 2.4, fmt("mw R 2->4 speed-up %.3f outside [1.6, 2.4]", mw_factor));
  v.note(fmt("mw R=2 %.1f, R=4 %.1f, factor %.2f", r2, r4, mw_factor));

  const double v8 = median_time(TopologyKind::cycle, 8, true, 1, 8 * kA10EtaPerNode / 8);
  const double v16 = median_time(TopologyKind::cycle, 16, true, 1, 16 * kA10EtaPerNode / 8);
  const double g_factor = v8 / v16;
  v.require(g_factor >= 1.5 && g_factor <= 2.5, fmt("gossip V 8->16 speed-up %.3f outside [1.5, 2.5]", g_factor));
  v.note(fmt("gossip V=8 %.1f, V=16 %.1f, factor %.2f", v8, v16, g_factor));
  return v;
}

Verdict a9() {
  Verdict v;
  const Problem pr = least_squares_problem(TopologyKind::cycle, 10, 20, 5, 1.0, 0.1, 2);
  const Vector x0 = (Vector(5) << 0.5, -1.0, 0.25, 3.0, -0.125).finished();
  {
    MultiWalk mw(pr.topology, pr.p, pr.objective, x0, {3, LearningRate::constant(0.0), 2, true}, 2);
    run(EngineConfig{}, mw, StopCriterion::iterations(10000), 1000, 2);
    bool same = true;
    for (const auto& w : mw.walks()) same = same && w.model == x0;
    for (const auto& u : mw.hub().copies) same = same && u == x0;
    v.require(same, "mw eta=0 moved a model");
  }
  {
    AsyncGossip g(pr.topology, pr.p, pr.objective, x0, {LearningRate::constant(0.0), 2}, 2);
    run(EngineConfig{}, g, StopCriterion::iterations(10000), 1000, 2);
    bool same = true;
    for (Eigen::Index c = 0; c < g.models().cols(); ++c) same = same && Vector(g.models().col(c)) == x0;
    v.require(same, "gossip eta=0 moved a model");
  }
  {
    MultiWalk with(pr.topology, pr.p, pr.objective, x0, {1, LearningRate::constant(0.05), 2, true}, 4);
    MultiWalk without(pr.topology, pr.p, pr.objective, x0, {1, LearningRate::constant(0.05), 2, false}, 4);
    std::vector<Vector> a, b;
    run(EngineConfig{}, with, StopCriterion::iterations(10000), 1000, 4,
        [&](const Event&, std::uint64_t, const StepOutcome&) { a.push_back(with.walks()[0].model); });
    run(EngineConfig{}, without, StopCriterion::iterations(10000), 1000, 4,
        [&](const Event&, std::uint64_t, const StepOutcome&) { b.push_back(without.walks()[0].model); });
    v.require(a == b, "R=1 trajectory differs with hub mixing skipped");
  }
  v.note("eta=0 fixed point over 1e4 iterations; R=1 hub mixing bitwise no-op");
  return v;
}

struct Criterion {
  const char* id;
  const char* title;
  std::function<Verdict()> check;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {"A1", "complete-chain return moments", a1},
      {"A2", "cycle recurrences", a2},
      {"A3", "Monte-Carlo return moments", a3},
      {"A4", "spectral gaps", a4},
      {"A5", "communication accounting", a5},
      {"A6", "wall-clock model", a6},
      {"A7", "convergence on iid least squares", a7},
      {"A8", "topology trend", a8},
      {"A9", "degeneracy identities", a9},
      {"A10", "linear speed-up", a10},
  };
  std::vector<std::string> selected(argv + 1, argv + argc);

  int failures = 0;
  for (const Criterion& c : all) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict verdict;
    try {
      verdict = c.check();
    } catch (const std::exception& e) {
      verdict.require(false, std::string("exception: ") + e.what());
    }
    failures += !verdict.pass;
    std::printf("%-4s %s  %s: %s [%.2f s]\n", c.id, verdict.pass ? "PASS" : "FAIL", c.title, verdict.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
