#include "tbm/neighbors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tbm/errors.hpp"
#include "tbm/stats.hpp"

namespace tbm::neighbors {

namespace {

double squared_distance(const double* a, const double* b, std::size_t dim) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

double kernel_width(std::span<const double> points, std::size_t dim, std::size_t n) {
  const std::size_t count = points.size() / dim;
  if (count < n + 1) {
    throw Error(ErrorCode::TooFewPoints, "kernel width needs at least " + std::to_string(n + 1) +
                                             " points, got " + std::to_string(count));
  }
  std::vector<double> dist(count - 1);
  double total = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t m = 0;
    for (std::size_t j = 0; j < count; ++j) {
      if (j == i) continue;
      dist[m++] = squared_distance(&points[i * dim], &points[j * dim], dim);
    }
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(n - 1), dist.end());
    std::vector<double> nearest(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(n));
    for (double& d : nearest) d = std::sqrt(d);
    total += stats::population_std(nearest);
  }
  return total / static_cast<double>(count);
}

NeighborIndex NeighborIndex::build(std::vector<SensorRecord> records, const FeatureStats& stats,
                                   std::size_t n_neighbors, std::optional<double> width) {
  if (n_neighbors == 0) throw Error(ErrorCode::InvalidConfig, "n_neighbors must be >= 1");
  if (records.size() < n_neighbors + 1) {
    throw Error(ErrorCode::TooFewPoints, "neighbour index needs at least " +
                                             std::to_string(n_neighbors + 1) + " records, got " +
                                             std::to_string(records.size()));
  }
  NeighborIndex index;
  index.stats_ = stats;
  index.n_neighbors_ = n_neighbors;
  index.points_.reserve(records.size() * kNumCxp);
  for (const auto& r : records) {
    const CxpVector z = index.standardize_cxp(r.cxp);
    index.points_.insert(index.points_.end(), z.begin(), z.end());
  }
  index.records_ = std::make_shared<const std::vector<SensorRecord>>(std::move(records));

  const double fitted = width ? *width : neighbors::kernel_width(index.points_, kNumCxp, n_neighbors);
  index.degenerate_ = !(fitted >= kMinKernelWidth);
  index.kernel_width_ = index.degenerate_ ? kMinKernelWidth : fitted;
  return index;
}

CxpVector NeighborIndex::standardize_cxp(const CxpVector& raw) const noexcept {
  CxpVector z{};
  for (std::size_t j = 0; j < kNumCxp; ++j) {
    z[j] = (raw[j] - stats_.mean[kNumCop + j]) / stats_.stddev[kNumCop + j];
  }
  return z;
}

std::vector<Neighbor> NeighborIndex::query(const CxpVector& cxp_raw, std::size_t k,
                                           std::optional<std::size_t> exclude) const {
  const CxpVector z = standardize_cxp(cxp_raw);
  return query_standardized(z, k, exclude);
}

std::vector<Neighbor> NeighborIndex::query_standardized(std::span<const double> cxp_z,
                                                        std::size_t k,
                                                        std::optional<std::size_t> exclude) const {
  const std::size_t n = size();
  const std::size_t available = n - (exclude && *exclude < n ? 1 : 0);
  if (k > available) {
    throw Error(ErrorCode::KExceedsIndex, "k=" + std::to_string(k) + " exceeds the " +
                                              std::to_string(available) + " indexed points");
  }
  std::vector<std::pair<double, std::size_t>> d2;
  d2.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (exclude && *exclude == i) continue;
    d2.emplace_back(squared_distance(cxp_z.data(), &points_[i * kNumCxp], kNumCxp), i);
  }
  const auto mid = d2.begin() + static_cast<std::ptrdiff_t>(k);
  std::partial_sort(d2.begin(), mid, d2.end());
  std::vector<Neighbor> out;
  out.reserve(k);
  for (auto it = d2.begin(); it != mid; ++it) out.push_back({it->second, std::sqrt(it->first)});
  return out;
}

double gaussian_weight_from_distance(double distance, double width) noexcept {
  return std::exp(-(distance * distance) / (width * width));
}

double gaussian_weight(std::span<const double> a, std::span<const double> b, double width) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimensionMismatch, "gaussian_weight needs equal-length vectors");
  }
  if (!(width > 0.0)) throw Error(ErrorCode::InvalidConfig, "kernel width must be > 0");
  const double d2 = squared_distance(a.data(), b.data(), a.size());
  return std::exp(-d2 / (width * width));
}

BaselineResult baseline_recommend(const NeighborIndex& index, const SensorRecord& current,
                                  double current_score, std::span<const double> scores,
                                  std::optional<std::size_t> exclude) {
  if (scores.size() != index.size()) {
    throw Error(ErrorCode::DimensionMismatch, "one score per indexed record is required");
  }
  const std::size_t n = index.n_neighbors();
  std::vector<Neighbor> nbrs;
  try {
    nbrs = index.query(current.cxp, n, exclude);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::KExceedsIndex) throw;
    throw Error(ErrorCode::TooFewPoints, e.what());
  }
  BaselineResult result;
  bool any = false;
  for (const auto& nb : nbrs) {
    if (!(scores[nb.index] > current_score)) continue;
    any = true;
    const double w = gaussian_weight_from_distance(nb.distance, index.kernel_width());
    const auto& cop = index.record(nb.index).cop;
    for (std::size_t j = 0; j < kNumCop; ++j) result.delta[j] += w * (cop[j] - current.cop[j]);
  }
  for (double& d : result.delta) d /= static_cast<double>(n);
  result.no_improvement = !any;
  return result;
}

}  // namespace tbm::neighbors
