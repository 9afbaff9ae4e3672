#pragma once

#include <optional>
#include <span>
#include <vector>

#include "tbm/domain.hpp"
#include "tbm/mlp.hpp"
#include "tbm/neighbors.hpp"

namespace tbm::credibility {

struct NeighborErrors {
  double e1 = 0.0;  // |f(x_j) - y_j|
  double e2 = 0.0;  // |<grad_CoP f(x_j), dCoP_j> - (y_{j+1} - y_j)|
};

// Errors of `model` at a historic sample and its successor. Records are raw;
// the model's scaler maps them into its input space, so dCoP is measured in
// standardized units. Scores are raw optimality values.
// Throws Error(NoSuccessor) when `successor` is null.
NeighborErrors neighbor_errors(const mlp::MlpModel& model, const SensorRecord& at, double score,
                               const SensorRecord* successor, double successor_score);

// clip((e - q5) / (q95 - q5), 0, 1); a step at q5 when q5 == q95.
double normalize_error(double e, double q5, double q95) noexcept;

// 1 - (e1n + e2n) / 2
double trust(double e1_norm, double e2_norm) noexcept;

// (1/n) * sum_j w_j * T_j over the given neighbours.
double weighted_trust(std::span<const double> weights, std::span<const double> trusts,
                      std::size_t n);

// Nearest-rank 5th/95th percentiles of e1 and e2 over the samples in
// `records` that have a successor; successors may point at samples that are
// not part of the split. The fingerprint covers the samples used.
// Throws Error(InsufficientData).
CredibilityCalibration calibrate(const mlp::MlpModel& model, std::span<const SensorRecord> records,
                                 std::span<const double> scores,
                                 std::span<const std::optional<std::size_t>> successor_of);

// Trust values precomputed for every historic sample with a successor, and
// a CxP index over just those samples. Queries therefore skip ineligible
// neighbours and fall through to the next nearest eligible ones.
class CredibilityScorer {
 public:
  // `width` is the kernel width of the full corpus index; `stats` must be
  // the scaler that index uses. Throws Error(TooFewEligibleNeighbors).
  static CredibilityScorer build(const mlp::MlpModel& model, const CredibilityCalibration& cal,
                                 std::span<const SensorRecord> records,
                                 std::span<const double> scores,
                                 std::span<const std::optional<std::size_t>> successor_of,
                                 const FeatureStats& stats, double width,
                                 std::size_t n_neighbors = neighbors::kDefaultNeighbors);

  double score(const CxpVector& cxp_raw) const;

  const neighbors::NeighborIndex& index() const noexcept { return index_; }
  std::span<const double> trusts() const noexcept { return trusts_; }
  std::size_t n_neighbors() const noexcept { return n_; }

 private:
  neighbors::NeighborIndex index_;
  std::vector<double> trusts_;  // aligned with index_ records
  std::size_t n_ = neighbors::kDefaultNeighbors;
};

}  // namespace tbm::credibility
