#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tbm/domain.hpp"

namespace tbm::mlp {

// Defaults follow the reference architecture: three sigmoid hidden layers
// of 50 units, one linear output, Adam(lr 0.01, beta1 0.9), 200 epochs of
// 200-sample mini-batches, dropout 0.2 on hidden activations.
struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 200;
  double learning_rate = 0.01;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double dropout = 0.2;
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden = {50, 50, 50};

  // Throws Error(InvalidConfig).
  void check() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct Layer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
};

// Zero mean, unit std: inputs pass through unchanged.
inline FeatureStats identity_scaler() noexcept {
  FeatureStats s;
  s.stddev.fill(1.0);
  return s;
}

struct MlpModel {
  std::vector<Layer> layers;  // hidden layers then the 1-unit output layer
  FeatureStats feature_scaler = identity_scaler();
  GroundClass ground_class = GroundClass::GC1;
  TrainConfig train_config;
  std::string corpus_fingerprint;
  std::optional<CredibilityCalibration> calibration;

  std::size_t input_dim() const noexcept {
    return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().weights.cols());
  }
  // [input, hidden..., 1]
  std::vector<std::size_t> architecture() const;
};

// Rows of `x` are standardized feature vectors.
struct Dataset {
  Eigen::MatrixXd x;  // n x d
  Eigen::VectorXd y;  // n
};

// Mini-batch Adam on mean squared error; inverted dropout on hidden
// activations while training. Deterministic given cfg.seed. When
// `epoch_losses` is given it receives the mean training loss of each epoch.
// Throws Error(DimensionMismatch | NonFiniteLoss | InvalidConfig).
MlpModel train(const Dataset& data, const TrainConfig& cfg,
               std::vector<double>* epoch_losses = nullptr);

// Inverted dropout: each entry is 1/(1 - rate) with probability 1 - rate,
// else 0, so masked activations keep their expectation.
Eigen::MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate,
                             std::mt19937_64& rng);

// Throws Error(DimensionMismatch).
double predict(const MlpModel& model, std::span<const double> x);
// d predict / d x by backpropagation through the frozen network.
std::vector<double> input_gradient(const MlpModel& model, std::span<const double> x);

// Mean squared error of the dropout-free network on `data`.
double mean_squared_error(const MlpModel& model, const Dataset& data);

// ---- hyper-parameter search ---------------------------------------------

struct GridCell {
  std::size_t hidden_layers = 3;
  std::size_t neurons = 50;
  double dropout = 0.2;
  double learning_rate = 0.01;

  friend bool operator==(const GridCell&, const GridCell&) = default;
};

struct GridSpec {
  std::vector<std::size_t> hidden_layers = {3};
  std::vector<std::size_t> neurons = {50};
  std::vector<double> dropout = {0.2};
  std::vector<double> learning_rate = {0.01};
  std::size_t k = 10;
  // Cells whose mean validation loss is within this of the best are tied.
  double tie_tolerance = 1e-2;
  TrainConfig base;  // epochs, batch size, Adam constants, seed

  std::vector<GridCell> cells() const;
};

struct CellScore {
  GridCell cell;
  double mean_loss = 0.0;
  std::vector<double> fold_losses;
};

struct GridResult {
  GridCell best_cell;
  TrainConfig best;
  std::vector<CellScore> scores;  // in GridSpec::cells() order
};

TrainConfig apply(const TrainConfig& base, const GridCell& cell);

// Best cell among tied ones by (layers, neurons, learning rate, dropout).
// Throws Error(EmptyGrid).
std::size_t select_best(std::span<const CellScore> scores, double tie_tolerance);

// k contiguous folds over one seeded shuffle. Throws Error(EmptyGrid |
// InsufficientData).
GridResult kfold_grid_search(const Dataset& data, const GridSpec& grid);

GridSpec load_grid(const std::filesystem::path& path);

// ---- persistence ----------------------------------------------------------

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
void to_json(nlohmann::json& j, const MlpModel& m);
void from_json(const nlohmann::json& j, MlpModel& m);
void to_json(nlohmann::json& j, const GridCell& c);
void to_json(nlohmann::json& j, const GridResult& r);

void save_model(const std::filesystem::path& path, const MlpModel& model);
MlpModel load_model(const std::filesystem::path& path);

}  // namespace tbm::mlp
