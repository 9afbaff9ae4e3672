#pragma once

#include <filesystem>
#include <random>
#include <vector>

#include "tbm/advisor.hpp"
#include "tbm/domain.hpp"
#include "tbm/ingest.hpp"
#include "tbm/mlp.hpp"
#include "tbm/sim.hpp"

namespace fixtures {

// Advancing, in-range sample with deterministic filler channels.
tbm::SensorRecord record(double t, double length, tbm::GroundClass gc = tbm::GroundClass::GC1);

// n samples, 10 s apart, length growing by 0.01 m per sample.
std::vector<tbm::SensorRecord> advancing_drive(std::size_t n, double period = 10.0);

// Network with the given layer sizes and N(0, scale) weights.
tbm::mlp::MlpModel random_model(std::mt19937_64& rng, const std::vector<std::size_t>& sizes,
                                double scale = 0.5);

// 24 -> 1 hidden sigmoid unit -> 1 output: f(x) = v * sigmoid(w . x + b) + c.
tbm::mlp::MlpModel one_unit_model(const tbm::FeatureVector& w, double b, double v, double c);

// Zero-weight 24 -> 4 -> 1 network.
tbm::mlp::MlpModel zero_model();

// Small simulated world trained with few epochs; built once per process.
struct World {
  std::vector<tbm::ingest::CorpusRecord> corpus;
  tbm::OptimalityConfig optimality;
  std::map<tbm::GroundClass, tbm::mlp::MlpModel> models;
  std::shared_ptr<const tbm::advisor::Registry> registry;
  tbm::sim::DriveSpec spec;
};
const World& world();

// Writes model_*.json, optimality.json and neighbors_*.csv for world().
void write_model_dir(const std::filesystem::path& dir);

std::filesystem::path temp_dir(const std::string& name);

}  // namespace fixtures
