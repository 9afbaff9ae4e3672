#include "fixtures.hpp"

#include <unistd.h>

#include <cmath>
#include <fstream>

#include "tbm/optimality.hpp"
#include "tbm/pipeline.hpp"

namespace fixtures {

using namespace tbm;

SensorRecord record(double t, double length, GroundClass gc) {
  SensorRecord r;
  r.timestamp = t;
  r.tunnel_length = length;
  r.advance_rate = 20.0 + std::sin(0.1 * t);
  r.working_pressure = 90.0 + 5.0 * std::cos(0.07 * t);
  for (std::size_t j = 0; j < kNumCop; ++j) r.cop[j] = 10.0 * static_cast<double>(j + 1);
  for (std::size_t j = 0; j < kNumCxp; ++j) {
    r.cxp[j] = 5.0 + static_cast<double>(j) + std::sin(0.01 * t * static_cast<double>(j + 1));
  }
  r.ground_class = gc;
  return r;
}

std::vector<SensorRecord> advancing_drive(std::size_t n, double period) {
  std::vector<SensorRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(record(period * static_cast<double>(i), 0.01 * static_cast<double>(i + 1)));
  }
  return out;
}

mlp::MlpModel random_model(std::mt19937_64& rng, const std::vector<std::size_t>& sizes,
                           double scale) {
  std::normal_distribution<double> n(0.0, scale);
  mlp::MlpModel m;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    mlp::Layer layer;
    layer.weights.resize(static_cast<Eigen::Index>(sizes[l + 1]),
                         static_cast<Eigen::Index>(sizes[l]));
    layer.bias.resize(static_cast<Eigen::Index>(sizes[l + 1]));
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = n(rng);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = n(rng);
    m.layers.push_back(std::move(layer));
  }
  return m;
}

mlp::MlpModel one_unit_model(const FeatureVector& w, double b, double v, double c) {
  mlp::MlpModel m;
  mlp::Layer hidden;
  hidden.weights.resize(1, static_cast<Eigen::Index>(kNumFeatures));
  for (std::size_t i = 0; i < kNumFeatures; ++i) hidden.weights(0, static_cast<Eigen::Index>(i)) = w[i];
  hidden.bias.resize(1);
  hidden.bias[0] = b;
  mlp::Layer out;
  out.weights.resize(1, 1);
  out.weights(0, 0) = v;
  out.bias.resize(1);
  out.bias[0] = c;
  m.layers = {hidden, out};
  return m;
}

mlp::MlpModel zero_model() {
  mlp::MlpModel m;
  mlp::Layer hidden{Eigen::MatrixXd::Zero(4, static_cast<Eigen::Index>(kNumFeatures)),
                    Eigen::VectorXd::Zero(4)};
  mlp::Layer out{Eigen::MatrixXd::Zero(1, 4), Eigen::VectorXd::Zero(1)};
  m.layers = {hidden, out};
  return m;
}

namespace {

World build_world() {
  World w;
  w.spec.gc_segments = {{GroundClass::GC1, 400}, {GroundClass::GC2, 400}, {GroundClass::GC3, 400}};
  w.spec.noise_std = 0.02;
  w.spec.seed = 11;
  w.spec.operator_policy.step_probability = 0.05;
  const auto drive = sim::generate_drive(w.spec);
  std::vector<std::vector<SensorRecord>> drives{drive.records};
  auto ingested = pipeline::ingest_drives(drives);
  w.corpus = std::move(ingested.corpus);
  w.optimality = optimality::fit_config(ingest::records_of(w.corpus), 0.8, 3.0, 150.0);

  pipeline::TrainOptions opts;
  opts.config.epochs = 15;
  opts.config.seed = 3;
  std::map<GroundClass, advisor::ClassEntry> entries;
  for (GroundClass gc : kGroundClasses) {
    const auto rows = pipeline::class_corpus(w.corpus, gc);
    auto result = pipeline::train_class(rows, w.optimality.at(gc), opts);
    w.models[gc] = result.model;
    entries.emplace(gc, advisor::make_entry(result.model, w.optimality.at(gc), rows));
  }
  w.registry = std::make_shared<const advisor::Registry>(std::move(entries));
  return w;
}

}  // namespace

const World& world() {
  static const World w = build_world();
  return w;
}

void write_model_dir(const std::filesystem::path& dir) {
  const World& w = world();
  std::filesystem::create_directories(dir);
  nlohmann::json opt = w.optimality;
  std::ofstream(advisor::optimality_file(dir)) << opt.dump();
  for (const auto& [gc, model] : w.models) {
    mlp::save_model(advisor::model_file(dir, gc), model);
    ingest::write_corpus(advisor::neighbor_file(dir, gc), pipeline::class_corpus(w.corpus, gc));
  }
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() /
             ("tbm_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixtures
