#include "tbm/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "tbm/credibility.hpp"
#include "tbm/errors.hpp"
#include "tbm/optimality.hpp"
#include "tbm/stats.hpp"

namespace tbm::pipeline {

IngestResult ingest_drives(std::span<const std::vector<SensorRecord>> drives,
                           const IngestConfig& cfg) {
  IngestResult out;
  for (std::size_t d = 0; d < drives.size(); ++d) {
    auto cleaned = ingest::cleanse(drives[d], cfg.cleanse);
    out.report += cleaned.report;

    ingest::ActionSeries actions;
    if (cleaned.records.size() >= cfg.actions.min_records) {
      actions = ingest::reconstruct_actions(cleaned.records, cfg.actions);
    }
    const auto smoothed = ingest::smooth(cleaned.records, cfg.smooth);

    std::vector<ingest::ActionFlags> flags(smoothed.size());
    for (std::size_t j = 0; j < kNumCop; ++j) {
      for (std::size_t i : actions.indices[j]) flags[i][j] = true;
    }
    for (std::size_t i = 0; i < smoothed.size(); ++i) {
      out.corpus.push_back({static_cast<int>(d), smoothed[i], flags[i]});
    }
    out.actions.push_back(std::move(actions));
  }
  for (GroundClass gc : kGroundClasses) {
    const auto rows = class_corpus(out.corpus, gc);
    if (rows.size() >= 2) out.stats[gc] = ingest::fit_feature_stats(ingest::records_of(rows));
  }
  return out;
}

std::vector<ingest::CorpusRecord> class_corpus(std::span<const ingest::CorpusRecord> corpus,
                                               GroundClass gc) {
  std::vector<ingest::CorpusRecord> out;
  for (const auto& c : corpus) {
    if (c.record.ground_class == gc) out.push_back(c);
  }
  return out;
}

std::vector<double> scores_of(std::span<const SensorRecord> records,
                              const OptimalityParams& params) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    out.push_back(optimality::raw_score(r.advance_rate, r.working_pressure, params));
  }
  return out;
}

namespace {

mlp::Dataset make_dataset(std::span<const SensorRecord> records, std::span<const double> scores,
                          std::span<const std::size_t> rows, const FeatureStats& scaler) {
  mlp::Dataset data;
  data.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(kNumFeatures));
  data.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const FeatureVector z = ingest::standardize(features_of(records[rows[k]]), scaler);
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      data.x(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(f)) = z[f];
    }
    data.y(static_cast<Eigen::Index>(k)) = scores[rows[k]];
  }
  return data;
}

}  // namespace

TrainResult train_class(std::span<const ingest::CorpusRecord> class_rows,
                        const OptimalityParams& params, const TrainOptions& opts) {
  if (class_rows.empty()) throw Error(ErrorCode::InsufficientData, "empty class corpus");
  const GroundClass gc = class_rows.front().record.ground_class;
  for (const auto& c : class_rows) {
    if (c.record.ground_class != gc) {
      throw Error(ErrorCode::InvalidConfig, "train_class needs rows of a single ground class");
    }
  }
  const double held = opts.validation_fraction + opts.test_fraction;
  if (!(opts.validation_fraction > 0.0 && opts.test_fraction >= 0.0 && held < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "split fractions must leave a training share");
  }

  const auto records = ingest::records_of(class_rows);
  const auto scores = scores_of(records, params);
  const std::size_t n = records.size();

  TrainResult result;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(opts.config.seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_val = static_cast<std::size_t>(std::floor(opts.validation_fraction * static_cast<double>(n)));
  const auto n_test = static_cast<std::size_t>(std::floor(opts.test_fraction * static_cast<double>(n)));
  if (n_val == 0 || n - n_val - n_test < 2) {
    throw Error(ErrorCode::InsufficientData, "too few samples to split for " +
                                                 std::string(to_string(gc)));
  }
  result.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  result.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test),
                           order.begin() + static_cast<std::ptrdiff_t>(n_test + n_val));
  result.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test + n_val), order.end());
  // Sorted positions keep the datasets independent of the shuffle's
  // interleaving beyond set membership.
  std::sort(result.train.begin(), result.train.end());
  std::sort(result.validation.begin(), result.validation.end());
  std::sort(result.test.begin(), result.test.end());

  std::vector<SensorRecord> train_records;
  train_records.reserve(result.train.size());
  for (std::size_t i : result.train) train_records.push_back(records[i]);
  const FeatureStats scaler = ingest::fit_feature_stats(train_records);
  const mlp::Dataset train = make_dataset(records, scores, result.train, scaler);

  mlp::TrainConfig cfg = opts.config;
  if (opts.grid) {
    mlp::GridSpec grid = *opts.grid;
    grid.base.seed = opts.config.seed;
    result.grid = mlp::kfold_grid_search(train, grid);
    cfg = result.grid->best;
  }
  result.model = mlp::train(train, cfg);
  result.model.feature_scaler = scaler;
  result.model.ground_class = gc;
  result.model.corpus_fingerprint = stats::fingerprint(records);

  std::vector<std::optional<std::size_t>> succ(n);
  const auto all_succ = ingest::successors(class_rows);
  for (std::size_t i : result.validation) succ[i] = all_succ[i];
  result.model.calibration = credibility::calibrate(result.model, records, scores, succ);

  if (!result.test.empty()) {
    const mlp::Dataset test = make_dataset(records, scores, result.test, scaler);
    result.test_rmse = std::sqrt(mlp::mean_squared_error(result.model, test));
  }
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  result.score_range = *hi - *lo;
  return result;
}

ValidationReport validate_registry(const advisor::Registry& registry,
                                   std::span<const ingest::CorpusRecord> corpus,
                                   const ValidationOptions& opts) {
  ValidationReport report;
  for (const auto& [gc, entry] : registry.entries()) {
    const auto rows = class_corpus(corpus, gc);
    if (rows.empty()) continue;
    const auto records = ingest::records_of(rows);
    const auto scores = scores_of(records, entry.optimality);
    const auto index = neighbors::NeighborIndex::build(records, entry.model.feature_scaler,
                                                       opts.config.n_neighbors);

    const auto gb = validate::gradient_recommender(registry, gc, records);
    report.sv["GB"].rows[gc] = validate::synchronized_validation(rows, scores, gb, opts.config);
    report.cv["GB"].rows[gc] = validate::contextual_validation(index, scores, gb, opts.config);
    if (opts.baseline) {
      const auto nn = validate::baseline_recommender(index, scores);
      report.sv["NN"].rows[gc] = validate::synchronized_validation(rows, scores, nn, opts.config);
      report.cv["NN"].rows[gc] = validate::contextual_validation(index, scores, nn, opts.config);
    }
  }
  return report;
}

}  // namespace tbm::pipeline
