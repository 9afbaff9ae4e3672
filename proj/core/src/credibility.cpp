#include "tbm/credibility.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tbm/errors.hpp"
#include "tbm/ingest.hpp"
#include "tbm/stats.hpp"

namespace tbm::credibility {

NeighborErrors neighbor_errors(const mlp::MlpModel& model, const SensorRecord& at, double score,
                               const SensorRecord* successor, double successor_score) {
  if (successor == nullptr) throw Error(ErrorCode::NoSuccessor, "sample has no successor");
  const FeatureVector x = ingest::standardize(features_of(at), model.feature_scaler);
  const FeatureVector x_next = ingest::standardize(features_of(*successor), model.feature_scaler);

  NeighborErrors out;
  out.e1 = std::abs(mlp::predict(model, x) - score);
  const auto grad = mlp::input_gradient(model, x);
  double taylor = 0.0;
  for (std::size_t j = 0; j < kNumCop; ++j) taylor += grad[j] * (x_next[j] - x[j]);
  out.e2 = std::abs(taylor - (successor_score - score));
  return out;
}

double normalize_error(double e, double q5, double q95) noexcept {
  if (q95 == q5) return e <= q5 ? 0.0 : 1.0;
  return std::clamp((e - q5) / (q95 - q5), 0.0, 1.0);
}

double trust(double e1_norm, double e2_norm) noexcept {
  return 1.0 - 0.5 * (e1_norm + e2_norm);
}

double weighted_trust(std::span<const double> weights, std::span<const double> trusts,
                      std::size_t n) {
  if (weights.size() != trusts.size()) {
    throw Error(ErrorCode::DimensionMismatch, "one weight per trust value is required");
  }
  if (n == 0) throw Error(ErrorCode::InvalidConfig, "neighbour count must be >= 1");
  double sum = 0.0;
  for (std::size_t j = 0; j < weights.size(); ++j) sum += weights[j] * trusts[j];
  return sum / static_cast<double>(n);
}

namespace {

void check_aligned(std::size_t records, std::size_t scores, std::size_t successors) {
  if (records != scores || records != successors) {
    throw Error(ErrorCode::DimensionMismatch,
                "records, scores and successors must have the same length");
  }
}

std::vector<NeighborErrors> all_errors(const mlp::MlpModel& model,
                                       std::span<const SensorRecord> records,
                                       std::span<const double> scores,
                                       std::span<const std::optional<std::size_t>> successor_of,
                                       std::vector<std::size_t>& eligible) {
  std::vector<NeighborErrors> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!successor_of[i]) continue;
    const std::size_t s = *successor_of[i];
    out.push_back(neighbor_errors(model, records[i], scores[i], &records[s], scores[s]));
    eligible.push_back(i);
  }
  return out;
}

}  // namespace

CredibilityCalibration calibrate(const mlp::MlpModel& model, std::span<const SensorRecord> records,
                                 std::span<const double> scores,
                                 std::span<const std::optional<std::size_t>> successor_of) {
  check_aligned(records.size(), scores.size(), successor_of.size());
  std::vector<std::size_t> eligible;
  const auto errors = all_errors(model, records, scores, successor_of, eligible);
  if (errors.empty()) {
    throw Error(ErrorCode::InsufficientData, "no sample with a successor to calibrate on");
  }
  std::vector<double> e1, e2;
  for (const auto& e : errors) {
    e1.push_back(e.e1);
    e2.push_back(e.e2);
  }
  CredibilityCalibration cal;
  cal.q5 = {stats::percentile_nearest_rank(e1, 5.0), stats::percentile_nearest_rank(e2, 5.0)};
  cal.q95 = {stats::percentile_nearest_rank(e1, 95.0), stats::percentile_nearest_rank(e2, 95.0)};
  std::vector<SensorRecord> used;
  used.reserve(eligible.size());
  for (std::size_t i : eligible) used.push_back(records[i]);
  cal.split_fingerprint = stats::fingerprint(used);
  return cal;
}

CredibilityScorer CredibilityScorer::build(const mlp::MlpModel& model,
                                           const CredibilityCalibration& cal,
                                           std::span<const SensorRecord> records,
                                           std::span<const double> scores,
                                           std::span<const std::optional<std::size_t>> successor_of,
                                           const FeatureStats& stats, double width,
                                           std::size_t n_neighbors) {
  check_aligned(records.size(), scores.size(), successor_of.size());
  std::vector<std::size_t> eligible;
  const auto errors = all_errors(model, records, scores, successor_of, eligible);
  if (n_neighbors == 0) throw Error(ErrorCode::InvalidConfig, "neighbour count must be >= 1");
  if (eligible.size() < std::max<std::size_t>(n_neighbors, 2)) {
    throw Error(ErrorCode::TooFewEligibleNeighbors,
                "credibility needs " + std::to_string(n_neighbors) +
                    " samples with successors, got " + std::to_string(eligible.size()));
  }
  CredibilityScorer scorer;
  std::vector<SensorRecord> kept;
  kept.reserve(eligible.size());
  scorer.trusts_.reserve(eligible.size());
  for (std::size_t k = 0; k < eligible.size(); ++k) {
    kept.push_back(records[eligible[k]]);
    scorer.trusts_.push_back(trust(normalize_error(errors[k].e1, cal.q5[0], cal.q95[0]),
                                   normalize_error(errors[k].e2, cal.q5[1], cal.q95[1])));
  }
  // The width is supplied, so the index's own neighbour count only sets its
  // minimum size.
  scorer.n_ = n_neighbors;
  scorer.index_ = neighbors::NeighborIndex::build(std::move(kept), stats, 1, width);
  return scorer;
}

double CredibilityScorer::score(const CxpVector& cxp_raw) const {
  const auto nbrs = index_.query(cxp_raw, n_);
  std::vector<double> w, t;
  w.reserve(nbrs.size());
  t.reserve(nbrs.size());
  for (const auto& nb : nbrs) {
    w.push_back(neighbors::gaussian_weight_from_distance(nb.distance, index_.kernel_width()));
    t.push_back(trusts_[nb.index]);
  }
  return std::clamp(weighted_trust(w, t, n_), 0.0, 1.0);
}

}  // namespace tbm::credibility
