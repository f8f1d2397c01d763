#include "walkgossip/chain_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <thread>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <fmt/format.h>

#include "walkgossip/errors.hpp"

namespace wg {

namespace {

constexpr double kEigenTol = 1e-10;
constexpr double kSolveTol = 1e-9;

// Eigenvalues of a symmetric matrix in ascending order; fails loudly if the
// decomposition residual is above kEigenTol.
Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
  if (solver.info() != Eigen::Success)
    throw NumericalError("symmetric eigensolver did not converge");
  const Eigen::MatrixXd& vecs = solver.eigenvectors();
  const double residual =
      (a * vecs - vecs * solver.eigenvalues().asDiagonal()).cwiseAbs().maxCoeff();
  if (residual > kEigenTol)
    throw NumericalError(fmt::format("eigen decomposition residual {:.3e} above {:.0e}", residual,
                                     kEigenTol));
  return solver.eigenvalues();
}

double second_largest(Eigen::VectorXd values) {
  std::sort(values.begin(), values.end(), std::greater<>());
  return values.size() > 1 ? values[1] : 0.0;
}

double clamp_unit(double x) { return std::clamp(x, 0.0, 1.0); }

// Every state reaches `target` and is reachable from it through the support of P.
bool strongly_connected_through(const Eigen::MatrixXd& p, NodeId target) {
  const auto v = static_cast<std::size_t>(p.rows());
  auto reach = [&](bool forward) {
    std::vector<char> seen(v, 0);
    std::deque<std::size_t> frontier{target};
    seen[target] = 1;
    std::size_t count = 1;
    while (!frontier.empty()) {
      auto u = frontier.front();
      frontier.pop_front();
      for (std::size_t w = 0; w < v; ++w) {
        const double edge = forward ? p(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(w))
                                    : p(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(u));
        if (edge > 0.0 && !seen[w]) {
          seen[w] = 1;
          ++count;
          frontier.push_back(w);
        }
      }
    }
    return count == v;
  };
  return reach(true) && reach(false);
}

double relative_residual(const Eigen::MatrixXd& a, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& b) {
  const double scale = a.cwiseAbs().rowwise().sum().maxCoeff() * x.cwiseAbs().maxCoeff() +
                       b.cwiseAbs().maxCoeff();
  return (a * x - b).cwiseAbs().maxCoeff() / scale;
}

}  // namespace

SpectralGaps spectral_gaps(const MixingMatrix& p) {
  if (p.size() < 2) throw InvalidArgument("spectral gaps need V >= 2");
  const Eigen::MatrixXd& m = p.dense();

  double lambda2 = 0.0;
  if (p.is_symmetric()) {
    lambda2 = second_largest(symmetric_eigenvalues(m));
  } else {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
    if (solver.info() != Eigen::Success)
      throw NumericalError("general eigensolver did not converge");
    lambda2 = second_largest(solver.eigenvalues().real());
  }
  const Eigen::MatrixXd gram = m.transpose() * m;
  const double gram_lambda2 = second_largest(symmetric_eigenvalues(gram));

  return SpectralGaps{clamp_unit(1.0 - gram_lambda2), clamp_unit(1.0 - lambda2)};
}

HittingMoments hitting_moments(const MixingMatrix& p, NodeId target) {
  const Eigen::MatrixXd& m = p.dense();
  const auto v = static_cast<Eigen::Index>(p.size());
  const auto t = static_cast<Eigen::Index>(target);
  if (t >= v) throw InvalidArgument(fmt::format("target node {} out of range", target));
  if (!strongly_connected_through(m, target))
    throw NumericalError("chain is reducible: hitting-time system is singular");

  // Reindex the non-target states 0..V-2.
  std::vector<Eigen::Index> others;
  for (Eigen::Index i = 0; i < v; ++i)
    if (i != t) others.push_back(i);
  const auto n = static_cast<Eigen::Index>(others.size());

  Eigen::VectorXd m_first = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd m_second = Eigen::VectorXd::Zero(n);
  if (n > 0) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index c = 0; c < n; ++c) a(r, c) -= m(others[r], others[c]);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);

    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    m_first = lu.solve(ones);
    const Eigen::VectorXd rhs2 = 2.0 * m_first - ones;
    m_second = lu.solve(rhs2);

    const double res = std::max(relative_residual(a, m_first, ones),
                                relative_residual(a, m_second, rhs2));
    if (!m_first.allFinite() || !m_second.allFinite() || res > kSolveTol)
      throw NumericalError(fmt::format("hitting-time solve residual {:.3e} above {:.0e}", res,
                                       kSolveTol));
  }

  // One more first step from the target itself.
  double mean = 1.0;
  double leave = 0.0;
  double second_tail = 0.0;
  for (Eigen::Index r = 0; r < n; ++r) {
    const double w = m(t, others[r]);
    leave += w * m_first[r];
    second_tail += w * m_second[r];
  }
  mean += leave;

  HittingMoments out{Vector(v), Vector(v)};
  out.first[t] = mean;
  out.second[t] = 2.0 * mean - 1.0 + second_tail;
  for (Eigen::Index r = 0; r < n; ++r) {
    out.first[others[r]] = m_first[r];
    out.second[others[r]] = m_second[r];
  }
  return out;
}

ReturnMoments return_moments_exact(const MixingMatrix& p, NodeId target) {
  const HittingMoments h = hitting_moments(p, target);
  const auto t = static_cast<Eigen::Index>(target);
  return ReturnMoments{h.first[t], h.second[t], std::nullopt};
}

CycleRecurrence return_moments_cycle_analytic(std::size_t node_count) {
  if (node_count < 4 || node_count % 2 != 0)
    throw InvalidArgument(fmt::format(
        "cycle recurrences need an even V >= 4, got V = {}", node_count));
  const double v = static_cast<double>(node_count);
  const std::size_t half = node_count / 2;

  // m_2 = 3V/2 - 9/2 + m_1 closes m_1 = 3/2 + m_2/2.
  const double m2_offset = 1.5 * v - 4.5;
  const double m1 = 2.0 * (1.5 + 0.5 * m2_offset);

  std::vector<double> first(half + 1, 0.0);
  first[0] = 1.0 + (2.0 / 3.0) * m1;
  first[1] = m1;
  // m_k = 3(V/2 - k) + 3/2 + m_{k-1}
  for (std::size_t k = 2; k <= half; ++k)
    first[k] = first[k - 1] + 3.0 * static_cast<double>(half - k) + 1.5;

  // M_1 = 6 Σ_{i=1}^{V/2-1} m_i + 3 m_{V/2} - 3(V/2 - 1) - 3/2
  double sum = 0.0;
  for (std::size_t i = 1; i < half; ++i) sum += first[i];
  const double big_m1 = 6.0 * sum + 3.0 * first[half] - 3.0 * static_cast<double>(half - 1) - 1.5;
  const double big_m0 = 1.0 + (4.0 / 3.0) * m1 + (2.0 / 3.0) * big_m1;

  CycleRecurrence out;
  out.moments = ReturnMoments{first[0], big_m0, std::nullopt};
  out.first = std::move(first);
  out.m1 = m1;
  out.M1 = big_m1;
  return out;
}

namespace {

// Running moments of h and h² with Chan's pairwise merge.
struct Accumulator {
  std::uint64_t n = 0;
  double mean_h = 0.0, m2_h = 0.0;
  double mean_h2 = 0.0, m2_h2 = 0.0;
  std::uint64_t truncated = 0;

  void add(double h) {
    ++n;
    const double h2 = h * h;
    const double d1 = h - mean_h;
    mean_h += d1 / static_cast<double>(n);
    m2_h += d1 * (h - mean_h);
    const double d2 = h2 - mean_h2;
    mean_h2 += d2 / static_cast<double>(n);
    m2_h2 += d2 * (h2 - mean_h2);
  }

  void merge(const Accumulator& o) {
    truncated += o.truncated;
    if (o.n == 0) return;
    if (n == 0) {
      const auto trunc = truncated;
      *this = o;
      truncated = trunc;
      return;
    }
    const double na = static_cast<double>(n), nb = static_cast<double>(o.n);
    const double total = na + nb;
    const double d1 = o.mean_h - mean_h;
    const double d2 = o.mean_h2 - mean_h2;
    mean_h += d1 * nb / total;
    mean_h2 += d2 * nb / total;
    m2_h += o.m2_h + d1 * d1 * na * nb / total;
    m2_h2 += o.m2_h2 + d2 * d2 * na * nb / total;
    n += o.n;
  }
};

Accumulator run_excursions(const TransitionSampler& sampler, NodeId target, std::uint64_t count,
                           std::uint64_t max_steps, RngStream rng) {
  Accumulator acc;
  for (std::uint64_t s = 0; s < count; ++s) {
    NodeId at = target;
    std::uint64_t steps = 0;
    do {
      at = sampler.next(at, rng);
      ++steps;
    } while (at != target && steps < max_steps);
    if (at == target)
      acc.add(static_cast<double>(steps));
    else
      ++acc.truncated;
  }
  return acc;
}

}  // namespace

MonteCarloReturn return_moments_mc(const MixingMatrix& p, NodeId target, std::uint64_t n_samples,
                                   std::uint64_t max_steps, std::uint64_t seed, unsigned shards) {
  if (n_samples == 0) throw InvalidArgument("n_samples must be >= 1");
  if (max_steps == 0) throw InvalidArgument("max_steps must be >= 1");
  if (target >= p.size()) throw InvalidArgument(fmt::format("target node {} out of range", target));
  shards = std::max(1u, static_cast<unsigned>(std::min<std::uint64_t>(shards, n_samples)));

  const TransitionSampler sampler(p);
  std::vector<Accumulator> parts(shards);
  auto shard_size = [&](unsigned k) {
    return n_samples / shards + (k < n_samples % shards ? 1 : 0);
  };
  if (shards == 1) {
    parts[0] = run_excursions(sampler, target, n_samples, max_steps, RngStream(seed, "return_mc", 0));
  } else {
    std::vector<std::thread> workers;
    workers.reserve(shards);
    for (unsigned k = 0; k < shards; ++k)
      workers.emplace_back([&, k] {
        parts[k] = run_excursions(sampler, target, shard_size(k), max_steps,
                                  RngStream(seed, "return_mc", k));
      });
    for (auto& w : workers) w.join();
  }

  Accumulator total;
  for (const auto& part : parts) total.merge(part);

  // 0.1% truncation budget.
  if (total.truncated * 1000 > n_samples)
    throw NumericalError(fmt::format("{} of {} excursions exceeded max_steps = {}", total.truncated,
                                     n_samples, max_steps));
  if (total.n == 0) throw NumericalError("no excursion returned to the target");

  const double nn = static_cast<double>(total.n);
  MomentErrors err;
  if (total.n > 1) {
    err.mean = std::sqrt(total.m2_h / (nn - 1.0) / nn);
    err.second = std::sqrt(total.m2_h2 / (nn - 1.0) / nn);
  }
  MonteCarloReturn out;
  out.moments = ReturnMoments{total.mean_h, total.mean_h2, err};
  out.samples = total.n;
  out.truncated = total.truncated;
  return out;
}

}  // namespace wg
