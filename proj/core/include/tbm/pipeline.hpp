#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "tbm/advisor.hpp"
#include "tbm/domain.hpp"
#include "tbm/ingest.hpp"
#include "tbm/mlp.hpp"
#include "tbm/validate.hpp"

// Stage functions shared by the command-line tool and the test suites.
namespace tbm::pipeline {

struct IngestConfig {
  ingest::CleanseConfig cleanse;
  ingest::SmoothConfig smooth;
  ingest::ActionConfig actions;
};

struct IngestResult {
  std::vector<ingest::CorpusRecord> corpus;  // raw units, smoothed
  ingest::CleansingReport report;
  std::vector<ingest::ActionSeries> actions;  // one per drive
  std::map<GroundClass, FeatureStats> stats;  // fitted per class over the corpus
};

// Per drive: cleanse, detect operator actions on the cleansed log, smooth.
// Drives shorter than the action minimum get no action flags.
IngestResult ingest_drives(std::span<const std::vector<SensorRecord>> drives,
                           const IngestConfig& cfg = {});

// Corpus rows of one ground class, in corpus order.
std::vector<ingest::CorpusRecord> class_corpus(std::span<const ingest::CorpusRecord> corpus,
                                               GroundClass gc);

struct TrainOptions {
  mlp::TrainConfig config;
  std::optional<mlp::GridSpec> grid;  // overrides architecture/rates when set
  double validation_fraction = 0.15;  // calibrates credibility
  double test_fraction = 0.15;        // held out for the fit check
};

struct TrainResult {
  mlp::MlpModel model;
  std::vector<std::size_t> train, validation, test;  // positions in the class corpus
  double test_rmse = 0.0;
  double score_range = 0.0;  // max - min raw score over the class corpus
  std::optional<mlp::GridResult> grid;
};

// Seeded shuffle into train / validation / test; scaler fitted on train;
// credibility calibrated on validation. Deterministic given config.seed.
TrainResult train_class(std::span<const ingest::CorpusRecord> class_rows,
                        const OptimalityParams& params, const TrainOptions& opts);

// Raw score of every record.
std::vector<double> scores_of(std::span<const SensorRecord> records,
                              const OptimalityParams& params);

struct ValidationOptions {
  validate::ValidateConfig config;
  bool baseline = false;  // also run the neighbour baseline ("NN")
};

// Synchronized and contextual validation of the gradient recommender
// ("GB") on each class corpus present in the registry.
ValidationReport validate_registry(const advisor::Registry& registry,
                                   std::span<const ingest::CorpusRecord> corpus,
                                   const ValidationOptions& opts = {});

}  // namespace tbm::pipeline
