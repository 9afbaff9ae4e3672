#include "tbm/advisor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "tbm/errors.hpp"
#include "tbm/optimality.hpp"
#include "tbm/stats.hpp"

namespace tbm::advisor {

namespace fs = std::filesystem;

ClassEntry make_entry(mlp::MlpModel model, const OptimalityParams& params,
                      std::span<const ingest::CorpusRecord> corpus, double sample_period) {
  if (!model.calibration) {
    throw Error(ErrorCode::ModelNotLoaded, "model for " + std::string(to_string(model.ground_class)) +
                                               " has no credibility calibration");
  }
  ClassEntry e;
  e.optimality = params;
  auto records = ingest::records_of(corpus);
  e.scores.reserve(records.size());
  for (const auto& r : records) {
    e.scores.push_back(optimality::raw_score(r.advance_rate, r.working_pressure, params));
  }
  e.index = std::make_shared<const neighbors::NeighborIndex>(
      neighbors::NeighborIndex::build(std::move(records), model.feature_scaler));
  const auto succ = ingest::successors(corpus, sample_period);
  e.scorer = std::make_shared<const credibility::CredibilityScorer>(
      credibility::CredibilityScorer::build(model, *model.calibration, e.index->records(),
                                            e.scores, succ, model.feature_scaler,
                                            e.index->kernel_width()));
  e.model = std::move(model);
  return e;
}

Registry::Registry(std::map<GroundClass, ClassEntry> entries, double step)
    : entries_(std::move(entries)), step_(step) {
  if (!(step_ > 0.0) || !std::isfinite(step_)) {
    throw Error(ErrorCode::InvalidConfig, "step size must be finite and > 0");
  }
}

const ClassEntry& Registry::at(GroundClass gc) const {
  auto it = entries_.find(gc);
  if (it == entries_.end()) {
    throw Error(ErrorCode::ModelNotLoaded, "no model loaded for " + std::string(to_string(gc)));
  }
  return it->second;
}

Recommendation recommend(const Registry& registry, GroundClass gc, const CopVector& cop,
                         const CxpVector& cxp, const RecommendOptions& opts) {
  const ClassEntry& e = registry.at(gc);
  const FeatureStats& scaler = e.model.feature_scaler;

  FeatureVector raw{};
  std::copy(cop.begin(), cop.end(), raw.begin());
  std::copy(cxp.begin(), cxp.end(), raw.begin() + kNumCop);
  const FeatureVector z = ingest::standardize(raw, scaler);
  const auto grad = mlp::input_gradient(e.model, z);

  Recommendation rec;
  rec.ground_class = gc;
  for (std::size_t j = 0; j < kNumCop; ++j) {
    rec.gradients[j] = grad[j];
    double delta = registry.step() * grad[j] * scaler.stddev[j];
    if (e.bounds) {
      const double clamped =
          std::clamp(delta, e.bounds->min[j] - cop[j], e.bounds->max[j] - cop[j]);
      if (clamped != delta) {
        rec.at_bound[j] = true;
        // Never point against the gradient because the current value is
        // already outside the box.
        delta = clamped * delta > 0.0 ? clamped : 0.0;
      }
    }
    rec.deltas[j] = delta == 0.0 ? 0.0 : delta;
  }
  rec.predicted_raw = mlp::predict(e.model, z);
  rec.predicted_optimality = optimality::normalize(rec.predicted_raw, e.optimality);
  if (opts.with_credibility) rec.credibility = e.scorer->score(cxp);
  return rec;
}

fs::path model_file(const fs::path& dir, GroundClass gc) {
  return dir / ("model_" + std::string(to_string(gc)) + ".json");
}

fs::path neighbor_file(const fs::path& dir, GroundClass gc) {
  return dir / ("neighbors_" + std::string(to_string(gc)) + ".csv");
}

fs::path optimality_file(const fs::path& dir) { return dir / "optimality.json"; }

Registry load_registry(const fs::path& model_dir, const AdvisorConfig& cfg) {
  const fs::path opt_path = optimality_file(model_dir);
  if (!fs::exists(opt_path)) {
    throw Error(ErrorCode::MissingModel, "missing optimality config '" + opt_path.string() + "'");
  }
  OptimalityConfig opt;
  {
    std::ifstream in(opt_path);
    try {
      opt = nlohmann::json::parse(in).get<OptimalityConfig>();
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorCode::ParseError, opt_path.string() + ": " + ex.what());
    }
  }

  std::map<GroundClass, ClassEntry> entries;
  for (GroundClass gc : kGroundClasses) {
    const fs::path mpath = model_file(model_dir, gc);
    const fs::path npath = neighbor_file(model_dir, gc);
    if (!fs::exists(mpath)) {
      throw Error(ErrorCode::MissingModel, "missing model for " + std::string(to_string(gc)));
    }
    if (!fs::exists(npath)) {
      throw Error(ErrorCode::MissingModel,
                  "missing neighbour corpus for " + std::string(to_string(gc)));
    }
    mlp::MlpModel model = mlp::load_model(mpath);
    if (model.ground_class != gc) {
      throw Error(ErrorCode::InvalidConfig, mpath.filename().string() + " holds a " +
                                                std::string(to_string(model.ground_class)) +
                                                " model");
    }
    const auto corpus = ingest::load_corpus(npath);
    const auto records = ingest::records_of(corpus);
    const std::string fp = stats::fingerprint(records);
    if (fp != model.corpus_fingerprint) {
      throw Error(ErrorCode::FingerprintMismatch,
                  std::string(to_string(gc)) + " model was trained on corpus " +
                      model.corpus_fingerprint + ", neighbour corpus is " + fp);
    }
    ClassEntry e = make_entry(std::move(model), opt.at(gc), corpus);
    if (auto it = cfg.bounds.find(gc); it != cfg.bounds.end()) e.bounds = it->second;
    entries.emplace(gc, std::move(e));
  }
  return Registry(std::move(entries), cfg.step);
}

std::shared_ptr<const Registry> RegistryHandle::snapshot() const {
  std::lock_guard lock(mutex_);
  return current_;
}

void RegistryHandle::swap(std::shared_ptr<const Registry> next) {
  std::lock_guard lock(mutex_);
  current_.swap(next);
}

void to_json(nlohmann::json& j, const CopBounds& b) {
  j = nlohmann::json{{"min", b.min}, {"max", b.max}};
}

void from_json(const nlohmann::json& j, CopBounds& b) {
  j.at("min").get_to(b.min);
  j.at("max").get_to(b.max);
  for (std::size_t k = 0; k < kNumCop; ++k) {
    if (!(b.min[k] <= b.max[k])) {
      throw Error(ErrorCode::InvalidConfig, "CoP bound min > max for cop_" + std::to_string(k + 1));
    }
  }
}

}  // namespace tbm::advisor
