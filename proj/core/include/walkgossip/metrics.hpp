#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "walkgossip/data.hpp"

namespace wg {

/// What evaluate() reads off an algorithm state.
struct MetricsSnapshot {
  double loss = 0.0;       ///< f at the consensus model
  double grad_norm = 0.0;  ///< ‖∇f‖² at the consensus model
  std::optional<double> loss_hub;  ///< f at the hub model u^l (multi-walk only)
  double spread = 0.0;     ///< max pairwise distance between models
};

/// One metrics row per evaluation point.
struct RunRecord {
  std::uint64_t t = 0;
  double sim_time = 0.0;
  std::uint64_t bits = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  std::optional<double> loss_hub;
  double spread = 0.0;
  std::optional<double> tau_mean;  ///< mean staleness since the previous record

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

/// Column-wise mean of a model matrix (one model per column).
Vector consensus(const Eigen::MatrixXd& models);
double max_pairwise_distance(const Eigen::MatrixXd& models);

/// Full-data metrics at the consensus of `models`; the hub model, when
/// given, is evaluated as well. Reads only.
MetricsSnapshot evaluate(const Eigen::MatrixXd& models, const Vector* hub,
                         const Objective& objective);

struct TargetHit {
  std::uint64_t iterations = 0;
  double sim_time = 0.0;
  std::uint64_t bits = 0;
};

/// First record with grad_norm ≤ target. No interpolation between records.
std::optional<TargetHit> time_to_target(std::span<const RunRecord> records, double target);

inline constexpr std::string_view kCsvSchema = "walkgossip-metrics/1";
inline constexpr std::string_view kCsvColumns =
    "run_id,algo,t,Z,B,loss,grad_norm,loss_hub,spread,tau_mean,seed";

/// Shortest decimal that round-trips; empty for nullopt.
std::string format_number(double x);
std::string format_optional(const std::optional<double>& x);

std::string csv_row(const RunRecord& record, std::string_view run_id, std::string_view algo,
                    std::uint64_t seed);

}  // namespace wg
