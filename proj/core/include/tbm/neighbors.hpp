#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "tbm/domain.hpp"

namespace tbm::neighbors {

inline constexpr std::size_t kDefaultNeighbors = 15;
inline constexpr double kMinKernelWidth = 1e-6;

struct Neighbor {
  std::size_t index;  // position in the indexed corpus
  double distance;
};

// Exact Euclidean k-NN over standardized CxP vectors. Immutable after build;
// safe for concurrent queries.
class NeighborIndex {
 public:
  // `records` are kept in raw units; `stats` standardizes their CxP part.
  // The kernel width is fitted unless `width` is given.
  // Throws Error(TooFewPoints) with fewer than n_neighbors + 1 records.
  static NeighborIndex build(std::vector<SensorRecord> records, const FeatureStats& stats,
                             std::size_t n_neighbors = kDefaultNeighbors,
                             std::optional<double> width = std::nullopt);

  // k nearest by distance, ties by insertion order. `exclude` drops one
  // position (self-exclusion during validation). Throws Error(KExceedsIndex).
  std::vector<Neighbor> query(const CxpVector& cxp_raw, std::size_t k,
                              std::optional<std::size_t> exclude = std::nullopt) const;
  std::vector<Neighbor> query_standardized(std::span<const double> cxp_z, std::size_t k,
                                           std::optional<std::size_t> exclude = std::nullopt) const;

  std::size_t size() const noexcept { return records_->size(); }
  std::size_t n_neighbors() const noexcept { return n_neighbors_; }
  double kernel_width() const noexcept { return kernel_width_; }
  // True when the fitted width was zero and got floored.
  bool degenerate_kernel() const noexcept { return degenerate_; }

  const SensorRecord& record(std::size_t i) const { return (*records_)[i]; }
  std::span<const SensorRecord> records() const noexcept { return *records_; }
  std::span<const double> point(std::size_t i) const noexcept {
    return {points_.data() + i * kNumCxp, kNumCxp};
  }
  const FeatureStats& stats() const noexcept { return stats_; }
  CxpVector standardize_cxp(const CxpVector& raw) const noexcept;

 private:
  std::shared_ptr<const std::vector<SensorRecord>> records_;
  std::vector<double> points_;  // n x 19, row-major, standardized
  FeatureStats stats_;
  std::size_t n_neighbors_ = kDefaultNeighbors;
  double kernel_width_ = 0.0;
  bool degenerate_ = false;
};

// exp(-d^2 / B^2) with d the Euclidean distance.
double gaussian_weight(std::span<const double> a, std::span<const double> b, double width);
double gaussian_weight_from_distance(double distance, double width) noexcept;

// Average over points of the std of the distances to their n nearest other
// points (self excluded by position).
double kernel_width(std::span<const double> points_row_major, std::size_t dim, std::size_t n);

struct BaselineResult {
  CopVector delta{};  // raw CoP units
  bool no_improvement = false;
};

// Gaussian-weighted mean CoP offset toward the CxP-nearest historic samples
// that scored strictly higher than the current one, divided by the full
// neighbour count. `scores[i]` is the raw optimality of index record i.
BaselineResult baseline_recommend(const NeighborIndex& index, const SensorRecord& current,
                                  double current_score, std::span<const double> scores,
                                  std::optional<std::size_t> exclude = std::nullopt);

}  // namespace tbm::neighbors
