#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "walkgossip/data.hpp"
#include "walkgossip/graph.hpp"

namespace wg {

/// p is the gap of PᵀP, p_prime the gap of P. Both are 1 minus the
/// second-largest eigenvalue taken by algebraic value, not modulus.
struct SpectralGaps {
  double p = 0.0;
  double p_prime = 0.0;
};

SpectralGaps spectral_gaps(const MixingMatrix& p);

/// Standard errors of a Monte-Carlo moment estimate.
struct MomentErrors {
  double mean = 0.0;
  double second = 0.0;
};

/// Moments of the first return time h of a walk to its start node.
struct ReturnMoments {
  double mean = 0.0;    ///< E[h], in iterations
  double second = 0.0;  ///< E[h²]
  std::optional<MomentErrors> standard_error;  ///< set only by the Monte-Carlo estimator
};

/// First and second moments of the hitting time T of `target` from every
/// state i (T ≥ 1, so entry `target` holds the return-time moments).
struct HittingMoments {
  Vector first;   ///< m_i = E[T | X_0 = i]
  Vector second;  ///< M_i = E[T² | X_0 = i]
};

/// First-step analysis: m_i = 1 + Σ_{j≠t} p_ij m_j and
/// M_i = Σ_j p_ij E[(1 + T'_j)²] = 2 m_i - 1 + Σ_{j≠t} p_ij M_j,
/// solved by partial-pivot LU over the V-1 non-target states.
/// Throws NumericalError if the chain is reducible or the residual exceeds 1e-9.
HittingMoments hitting_moments(const MixingMatrix& p, NodeId target = 0);
ReturnMoments return_moments_exact(const MixingMatrix& p, NodeId target = 0);

/// Result of the closed-form cycle recurrences. `first` holds m_0..m_{V/2};
/// M_1 is the only intermediate second moment the recurrences need.
struct CycleRecurrence {
  ReturnMoments moments;
  std::vector<double> first;
  double m1 = 0.0;
  double M1 = 0.0;
};

/// Hitting-time moments of the lazy 1/3-1/3-1/3 walk on an even cycle,
/// unrolled from the symmetric half-cycle recurrences. Throws
/// InvalidArgument for odd V or V < 4.
CycleRecurrence return_moments_cycle_analytic(std::size_t node_count);

struct MonteCarloReturn {
  ReturnMoments moments;
  std::uint64_t samples = 0;
  std::uint64_t truncated = 0;
};

/// Empirical first-return moments over `n_samples` excursions from `target`.
/// Samples are split into `shards` independently seeded streams and merged
/// by moment aggregation; the result depends on (seed, shards) only.
/// Throws NumericalError if more than 0.1% of excursions hit `max_steps`.
MonteCarloReturn return_moments_mc(const MixingMatrix& p, NodeId target, std::uint64_t n_samples,
                                   std::uint64_t max_steps, std::uint64_t seed,
                                   unsigned shards = 1);

}  // namespace wg
