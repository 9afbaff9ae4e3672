#include "tbm/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <tuple>

#include "tbm/errors.hpp"

namespace tbm::mlp {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd sigmoid(const MatrixXd& z) {
  return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

void check_input(const MlpModel& model, std::span<const double> x) {
  if (model.layers.empty()) {
    throw Error(ErrorCode::DimensionMismatch, "model has no layers");
  }
  if (x.size() != model.input_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "input has " + std::to_string(x.size()) +
                                                  " features, model expects " +
                                                  std::to_string(model.input_dim()));
  }
}

struct AdamState {
  std::vector<MatrixXd> mw, vw;
  std::vector<VectorXd> mb, vb;

  explicit AdamState(const std::vector<Layer>& layers) {
    for (const auto& l : layers) {
      mw.push_back(MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
      vw.push_back(MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
      mb.push_back(VectorXd::Zero(l.bias.size()));
      vb.push_back(VectorXd::Zero(l.bias.size()));
    }
  }
};

template <typename Param, typename Grad>
void adam_step(Param& p, const Grad& g, Param& m, Param& v, const TrainConfig& cfg, double lr_t) {
  m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * g;
  v = (cfg.adam_beta2 * v.array() + (1.0 - cfg.adam_beta2) * g.array().square()).matrix();
  p -= (lr_t * m.array() / (v.array().sqrt() + cfg.adam_epsilon)).matrix();
}

std::vector<Layer> xavier_init(const std::vector<std::size_t>& sizes, std::mt19937_64& rng) {
  std::vector<Layer> layers;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(sizes[l]);
    const auto out = static_cast<Eigen::Index>(sizes[l + 1]);
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Layer layer{MatrixXd(out, in), VectorXd::Zero(out)};
    for (Eigen::Index r = 0; r < out; ++r) {
      for (Eigen::Index c = 0; c < in; ++c) layer.weights(r, c) = dist(rng);
    }
    layers.push_back(std::move(layer));
  }
  return layers;
}

// Dropout-free forward pass over the columns of `a`.
MatrixXd forward_batch(const MlpModel& model, MatrixXd a) {
  const std::size_t last = model.layers.size() - 1;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& layer = model.layers[l];
    MatrixXd z = layer.weights * a;
    z.colwise() += layer.bias;
    a = l == last ? std::move(z) : sigmoid(z);
  }
  return a;
}

}  // namespace

void TrainConfig::check() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
  if (epochs == 0) fail("epochs must be > 0");
  if (batch_size == 0) fail("batch_size must be > 0");
  if (!(learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must be in [0, 1)");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) fail("adam_beta1 must be in [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) fail("adam_beta2 must be in [0, 1)");
  if (!(adam_epsilon > 0.0)) fail("adam_epsilon must be > 0");
  if (hidden.empty()) fail("at least one hidden layer is required");
  for (auto h : hidden) {
    if (h == 0) fail("hidden layer widths must be > 0");
  }
}

std::vector<std::size_t> MlpModel::architecture() const {
  std::vector<std::size_t> arch;
  if (layers.empty()) return arch;
  arch.push_back(input_dim());
  for (const auto& l : layers) arch.push_back(static_cast<std::size_t>(l.weights.rows()));
  return arch;
}

MlpModel train(const Dataset& data, const TrainConfig& cfg, std::vector<double>* epoch_losses) {
  cfg.check();
  const auto n = data.x.rows();
  if (n == 0) throw Error(ErrorCode::InsufficientData, "training set is empty");
  if (static_cast<std::size_t>(data.x.cols()) != kNumFeatures) {
    throw Error(ErrorCode::DimensionMismatch, "training inputs have " +
                                                  std::to_string(data.x.cols()) +
                                                  " features, expected 24");
  }
  if (data.y.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "targets and inputs differ in length");
  }

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> sizes = {kNumFeatures};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(1);

  MlpModel model;
  model.layers = xavier_init(sizes, rng);
  model.train_config = cfg;
  AdamState adam(model.layers);

  const std::size_t hidden_count = cfg.hidden.size();
  const MatrixXd xt = data.x.transpose();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  std::vector<MatrixXd> inputs(hidden_count + 1);  // input to each layer
  std::vector<MatrixXd> activ(hidden_count);       // sigmoid outputs
  std::vector<MatrixXd> masks(hidden_count);
  long long step = 0;
  if (epoch_losses) epoch_losses->clear();

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (Eigen::Index start = 0; start < n; start += static_cast<Eigen::Index>(cfg.batch_size)) {
      const Eigen::Index m = std::min<Eigen::Index>(static_cast<Eigen::Index>(cfg.batch_size), n - start);
      MatrixXd a(xt.rows(), m);
      Eigen::RowVectorXd target(m);
      for (Eigen::Index c = 0; c < m; ++c) {
        const auto idx = order[static_cast<std::size_t>(start + c)];
        a.col(c) = xt.col(idx);
        target(c) = data.y(idx);
      }

      for (std::size_t l = 0; l < hidden_count; ++l) {
        inputs[l] = a;
        MatrixXd z = model.layers[l].weights * a;
        z.colwise() += model.layers[l].bias;
        activ[l] = sigmoid(z);
        if (cfg.dropout > 0.0) {
          masks[l] = dropout_mask(activ[l].rows(), m, cfg.dropout, rng);
          a = activ[l].cwiseProduct(masks[l]);
        } else {
          a = activ[l];
        }
      }
      inputs[hidden_count] = a;
      auto& out_layer = model.layers[hidden_count];
      const Eigen::RowVectorXd pred = (out_layer.weights * a).row(0).array() + out_layer.bias(0);
      const Eigen::RowVectorXd err = pred - target;
      loss_sum += err.squaredNorm();

      ++step;
      const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step));
      const double lr_t = cfg.learning_rate * std::sqrt(bc2) / bc1;

      MatrixXd delta = (2.0 / static_cast<double>(m)) * err;
      for (std::size_t l = hidden_count + 1; l-- > 0;) {
        auto& layer = model.layers[l];
        const MatrixXd grad_w = delta * inputs[l].transpose();
        const VectorXd grad_b = delta.rowwise().sum();
        if (l > 0) {
          MatrixXd back = layer.weights.transpose() * delta;
          const auto& s = activ[l - 1];
          back = back.cwiseProduct(s.cwiseProduct((1.0 - s.array()).matrix()));
          if (cfg.dropout > 0.0) back = back.cwiseProduct(masks[l - 1]);
          delta = std::move(back);
        }
        adam_step(layer.weights, grad_w, adam.mw[l], adam.vw[l], cfg, lr_t);
        adam_step(layer.bias, grad_b, adam.mb[l], adam.vb[l], cfg, lr_t);
      }
    }
    const double epoch_loss = loss_sum / static_cast<double>(n);
    if (!std::isfinite(epoch_loss)) {
      throw Error(ErrorCode::NonFiniteLoss,
                  "training loss diverged at epoch " + std::to_string(epoch));
    }
    if (epoch_losses) epoch_losses->push_back(epoch_loss);
  }
  return model;
}

Eigen::MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate,
                             std::mt19937_64& rng) {
  const double keep = 1.0 - rate;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  MatrixXd mask(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) mask(r, c) = unit(rng) < keep ? 1.0 / keep : 0.0;
  }
  return mask;
}

double predict(const MlpModel& model, std::span<const double> x) {
  check_input(model, x);
  VectorXd a = Eigen::Map<const VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  const std::size_t last = model.layers.size() - 1;
  for (std::size_t l = 0; l < last; ++l) {
    const auto& layer = model.layers[l];
    a = sigmoid(layer.weights * a + layer.bias);
  }
  return (model.layers[last].weights * a)(0) + model.layers[last].bias(0);
}

std::vector<double> input_gradient(const MlpModel& model, std::span<const double> x) {
  check_input(model, x);
  const std::size_t last = model.layers.size() - 1;
  std::vector<VectorXd> activ;
  activ.reserve(last);
  VectorXd a = Eigen::Map<const VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  for (std::size_t l = 0; l < last; ++l) {
    const auto& layer = model.layers[l];
    a = sigmoid(layer.weights * a + layer.bias);
    activ.push_back(a);
  }
  VectorXd g = model.layers[last].weights.row(0).transpose();
  for (std::size_t l = last; l-- > 0;) {
    const auto& s = activ[l];
    g = g.cwiseProduct(s.cwiseProduct((1.0 - s.array()).matrix()));
    g = model.layers[l].weights.transpose() * g;
  }
  return {g.data(), g.data() + g.size()};
}

double mean_squared_error(const MlpModel& model, const Dataset& data) {
  if (data.x.rows() == 0) return 0.0;
  if (static_cast<std::size_t>(data.x.cols()) != model.input_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "dataset width does not match the model");
  }
  const MatrixXd out = forward_batch(model, data.x.transpose());
  return (out.row(0).transpose() - data.y).squaredNorm() / static_cast<double>(data.x.rows());
}

// ---- hyper-parameter search ---------------------------------------------

std::vector<GridCell> GridSpec::cells() const {
  std::vector<GridCell> out;
  for (auto layers : hidden_layers) {
    for (auto width : neurons) {
      for (auto p : dropout) {
        for (auto lr : learning_rate) out.push_back({layers, width, p, lr});
      }
    }
  }
  return out;
}

TrainConfig apply(const TrainConfig& base, const GridCell& cell) {
  TrainConfig cfg = base;
  cfg.hidden.assign(cell.hidden_layers, cell.neurons);
  cfg.dropout = cell.dropout;
  cfg.learning_rate = cell.learning_rate;
  return cfg;
}

std::size_t select_best(std::span<const CellScore> scores, double tie_tolerance) {
  if (scores.empty()) throw Error(ErrorCode::EmptyGrid, "grid has no cells");
  double best_loss = scores.front().mean_loss;
  for (const auto& s : scores) best_loss = std::min(best_loss, s.mean_loss);
  auto key = [](const GridCell& c) {
    return std::make_tuple(c.hidden_layers, c.neurons, c.learning_rate, c.dropout);
  };
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i].mean_loss > best_loss + tie_tolerance) continue;
    if (!best || key(scores[i].cell) < key(scores[*best].cell)) best = i;
  }
  return *best;
}

GridResult kfold_grid_search(const Dataset& data, const GridSpec& grid) {
  const auto cells = grid.cells();
  if (cells.empty()) throw Error(ErrorCode::EmptyGrid, "grid has no cells");
  const auto n = static_cast<std::size_t>(data.x.rows());
  if (grid.k < 2 || n < grid.k) {
    throw Error(ErrorCode::InsufficientData,
                "k-fold search needs k >= 2 and at least k samples");
  }

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(grid.base.seed);
  std::shuffle(order.begin(), order.end(), rng);

  auto gather = [&](const std::vector<Eigen::Index>& idx) {
    Dataset d{MatrixXd(static_cast<Eigen::Index>(idx.size()), data.x.cols()),
              VectorXd(static_cast<Eigen::Index>(idx.size()))};
    for (std::size_t i = 0; i < idx.size(); ++i) {
      d.x.row(static_cast<Eigen::Index>(i)) = data.x.row(idx[i]);
      d.y(static_cast<Eigen::Index>(i)) = data.y(idx[i]);
    }
    return d;
  };

  std::vector<Dataset> train_folds, valid_folds;
  for (std::size_t f = 0; f < grid.k; ++f) {
    const std::size_t lo = f * n / grid.k;
    const std::size_t hi = (f + 1) * n / grid.k;
    std::vector<Eigen::Index> tr, va;
    for (std::size_t i = 0; i < n; ++i) (i >= lo && i < hi ? va : tr).push_back(order[i]);
    train_folds.push_back(gather(tr));
    valid_folds.push_back(gather(va));
  }

  GridResult result;
  for (const auto& cell : cells) {
    const TrainConfig cfg = apply(grid.base, cell);
    CellScore score{cell, 0.0, {}};
    for (std::size_t f = 0; f < grid.k; ++f) {
      const MlpModel m = train(train_folds[f], cfg);
      score.fold_losses.push_back(mean_squared_error(m, valid_folds[f]));
    }
    score.mean_loss = std::accumulate(score.fold_losses.begin(), score.fold_losses.end(), 0.0) /
                      static_cast<double>(grid.k);
    result.scores.push_back(std::move(score));
  }
  const std::size_t best = select_best(result.scores, grid.tie_tolerance);
  result.best_cell = result.scores[best].cell;
  result.best = apply(grid.base, result.best_cell);
  return result;
}

GridSpec load_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path.filename().string() + ": " + e.what());
  }
  GridSpec g;
  g.hidden_layers = j.value("hidden_layers", g.hidden_layers);
  g.neurons = j.value("neurons", g.neurons);
  g.dropout = j.value("dropout", g.dropout);
  g.learning_rate = j.value("learning_rate", g.learning_rate);
  g.k = j.value("k", g.k);
  g.tie_tolerance = j.value("tie_tolerance", g.tie_tolerance);
  g.base.epochs = j.value("epochs", g.base.epochs);
  g.base.batch_size = j.value("batch_size", g.base.batch_size);
  return g;
}

// ---- persistence ----------------------------------------------------------

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"epochs", c.epochs},
                     {"batch_size", c.batch_size},
                     {"learning_rate", c.learning_rate},
                     {"adam_beta1", c.adam_beta1},
                     {"adam_beta2", c.adam_beta2},
                     {"adam_epsilon", c.adam_epsilon},
                     {"dropout", c.dropout},
                     {"loss", "squared_error"},
                     {"seed", c.seed},
                     {"hidden", c.hidden}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  c.epochs = j.at("epochs").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.adam_beta1 = j.at("adam_beta1").get<double>();
  c.adam_beta2 = j.at("adam_beta2").get<double>();
  c.adam_epsilon = j.at("adam_epsilon").get<double>();
  c.dropout = j.at("dropout").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.hidden = j.at("hidden").get<std::vector<std::size_t>>();
}

void to_json(nlohmann::json& j, const MlpModel& m) {
  nlohmann::json weights = nlohmann::json::array();
  for (const auto& layer : m.layers) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(layer.weights.size()));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) w.push_back(layer.weights(r, c));
    }
    weights.push_back({{"rows", layer.weights.rows()},
                       {"cols", layer.weights.cols()},
                       {"w", w},
                       {"b", std::vector<double>(layer.bias.data(),
                                                 layer.bias.data() + layer.bias.size())}});
  }
  j = nlohmann::json{{"schema_version", kSchemaVersion},
                     {"arch", m.architecture()},
                     {"activation", {{"hidden", "sigmoid"}, {"output", "identity"}}},
                     {"feature_scaler", m.feature_scaler},
                     {"weights", weights},
                     {"train_config", m.train_config},
                     {"ground_class", m.ground_class},
                     {"corpus_fingerprint", m.corpus_fingerprint},
                     {"calibration", m.calibration ? nlohmann::json(*m.calibration)
                                                   : nlohmann::json(nullptr)}};
}

void from_json(const nlohmann::json& j, MlpModel& m) {
  if (j.value("schema_version", 0) != kSchemaVersion) {
    throw Error(ErrorCode::InvalidConfig, "unsupported model schema_version");
  }
  m.layers.clear();
  Eigen::Index prev_out = -1;
  for (const auto& lj : j.at("weights")) {
    const auto rows = lj.at("rows").get<Eigen::Index>();
    const auto cols = lj.at("cols").get<Eigen::Index>();
    const auto w = lj.at("w").get<std::vector<double>>();
    const auto b = lj.at("b").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(w.size()) != rows * cols ||
        static_cast<Eigen::Index>(b.size()) != rows || (prev_out >= 0 && cols != prev_out)) {
      throw Error(ErrorCode::DimensionMismatch, "inconsistent layer shapes in model file");
    }
    Layer layer{MatrixXd(rows, cols), VectorXd(rows)};
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        layer.weights(r, c) = w[static_cast<std::size_t>(r * cols + c)];
      }
      layer.bias(r) = b[static_cast<std::size_t>(r)];
    }
    prev_out = rows;
    m.layers.push_back(std::move(layer));
  }
  if (m.layers.empty() || m.layers.back().weights.rows() != 1) {
    throw Error(ErrorCode::DimensionMismatch, "model output dimension must be 1");
  }
  m.feature_scaler = j.at("feature_scaler").get<FeatureStats>();
  m.ground_class = j.at("ground_class").get<GroundClass>();
  m.train_config = j.at("train_config").get<TrainConfig>();
  m.corpus_fingerprint = j.value("corpus_fingerprint", std::string{});
  if (j.contains("calibration") && !j.at("calibration").is_null()) {
    m.calibration = j.at("calibration").get<CredibilityCalibration>();
  } else {
    m.calibration.reset();
  }
}

void to_json(nlohmann::json& j, const GridCell& c) {
  j = nlohmann::json{{"hidden_layers", c.hidden_layers},
                     {"neurons", c.neurons},
                     {"dropout", c.dropout},
                     {"learning_rate", c.learning_rate}};
}

void to_json(nlohmann::json& j, const GridResult& r) {
  nlohmann::json scores = nlohmann::json::array();
  for (const auto& s : r.scores) {
    scores.push_back({{"cell", s.cell}, {"mean_loss", s.mean_loss}, {"fold_losses", s.fold_losses}});
  }
  j = nlohmann::json{{"best", r.best_cell}, {"scores", scores}};
}

void save_model(const std::filesystem::path& path, const MlpModel& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << nlohmann::json(model).dump(1) << '\n';
  if (!out) throw Error(ErrorCode::Io, "failed writing '" + path.string() + "'");
}

MlpModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  try {
    nlohmann::json j;
    in >> j;
    return j.get<MlpModel>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path.filename().string() + ": " + e.what());
  }
}

}  // namespace tbm::mlp
