#include "walkgossip/metrics.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace wg {

Vector consensus(const Eigen::MatrixXd& models) { return models.rowwise().mean(); }

double max_pairwise_distance(const Eigen::MatrixXd& models) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < models.cols(); ++i)
    for (Eigen::Index j = i + 1; j < models.cols(); ++j)
      worst = std::max(worst, (models.col(i) - models.col(j)).norm());
  return worst;
}

MetricsSnapshot evaluate(const Eigen::MatrixXd& models, const Vector* hub,
                         const Objective& objective) {
  const Vector center = consensus(models);
  MetricsSnapshot out;
  out.loss = global_loss(objective, center);
  out.grad_norm = global_grad_norm(objective, center);
  if (hub != nullptr) out.loss_hub = global_loss(objective, *hub);
  out.spread = max_pairwise_distance(models);
  return out;
}

std::optional<TargetHit> time_to_target(std::span<const RunRecord> records, double target) {
  for (const auto& r : records)
    if (r.grad_norm <= target) return TargetHit{r.t, r.sim_time, r.bits};
  return std::nullopt;
}

std::string format_number(double x) { return fmt::format("{}", x); }

std::string format_optional(const std::optional<double>& x) {
  return x ? format_number(*x) : std::string{};
}

std::string csv_row(const RunRecord& r, std::string_view run_id, std::string_view algo,
                    std::uint64_t seed) {
  return fmt::format("{},{},{},{},{},{},{},{},{},{},{}", run_id, algo, r.t, format_number(r.sim_time),
                     r.bits, format_number(r.loss), format_number(r.grad_norm),
                     format_optional(r.loss_hub), format_number(r.spread),
                     format_optional(r.tau_mean), seed);
}

}  // namespace wg
