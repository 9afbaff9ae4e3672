#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "tbm/credibility.hpp"
#include "tbm/domain.hpp"
#include "tbm/ingest.hpp"
#include "tbm/mlp.hpp"
#include "tbm/neighbors.hpp"

namespace tbm::advisor {

// Step size in standardized CoP units.
inline constexpr double kDefaultStep = 0.1;

struct CopBounds {
  CopVector min{};
  CopVector max{};
};

struct AdvisorConfig {
  double step = kDefaultStep;
  std::map<GroundClass, CopBounds> bounds;  // unclamped when absent
};

// Everything needed to advise in one ground class.
struct ClassEntry {
  mlp::MlpModel model;
  OptimalityParams optimality;
  std::shared_ptr<const neighbors::NeighborIndex> index;  // full class corpus
  std::vector<double> scores;                              // raw score per index record
  std::shared_ptr<const credibility::CredibilityScorer> scorer;
  std::optional<CopBounds> bounds;
};

// Builds the index and the credibility scorer for `corpus` (one class).
// The model must carry a calibration. Throws Error(ModelNotLoaded) otherwise.
ClassEntry make_entry(mlp::MlpModel model, const OptimalityParams& params,
                      std::span<const ingest::CorpusRecord> corpus,
                      double sample_period = 10.0);

class Registry {
 public:
  Registry() = default;
  explicit Registry(std::map<GroundClass, ClassEntry> entries, double step = kDefaultStep);

  // Throws Error(ModelNotLoaded).
  const ClassEntry& at(GroundClass gc) const;
  bool contains(GroundClass gc) const noexcept { return entries_.contains(gc); }
  std::size_t size() const noexcept { return entries_.size(); }
  double step() const noexcept { return step_; }
  const std::map<GroundClass, ClassEntry>& entries() const noexcept { return entries_; }

 private:
  std::map<GroundClass, ClassEntry> entries_;
  double step_ = kDefaultStep;
};

struct RecommendOptions {
  bool with_credibility = true;
};

// Gradient step on the CoPs of (cop, cxp) under the class model.
// Throws Error(ModelNotLoaded).
Recommendation recommend(const Registry& registry, GroundClass gc, const CopVector& cop,
                         const CxpVector& cxp, const RecommendOptions& opts = {});

// Expects model_GC{1,2,3}.json, optimality.json and neighbors_GC{1,2,3}.csv.
// Throws Error(MissingModel | FingerprintMismatch | ModelNotLoaded).
Registry load_registry(const std::filesystem::path& model_dir, const AdvisorConfig& cfg = {});

std::filesystem::path model_file(const std::filesystem::path& dir, GroundClass gc);
std::filesystem::path neighbor_file(const std::filesystem::path& dir, GroundClass gc);
std::filesystem::path optimality_file(const std::filesystem::path& dir);

// Shared, swappable registry snapshot. Readers keep the snapshot they got
// until they drop it; a swap never mutates a published registry.
class RegistryHandle {
 public:
  std::shared_ptr<const Registry> snapshot() const;
  void swap(std::shared_ptr<const Registry> next);

 private:
  mutable std::mutex mutex_;
  std::shared_ptr<const Registry> current_;
};

void to_json(nlohmann::json& j, const CopBounds& b);
void from_json(const nlohmann::json& j, CopBounds& b);

}  // namespace tbm::advisor
