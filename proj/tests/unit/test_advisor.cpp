#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <fstream>
#include <random>
#include <thread>

#include "fixtures.hpp"
#include "tbm/advisor.hpp"
#include "tbm/errors.hpp"
#include "tbm/pipeline.hpp"
#include "tbm/stats.hpp"

using namespace tbm;
using namespace tbm::advisor;

namespace {

std::vector<ingest::CorpusRecord> gc1_rows() {
  return pipeline::class_corpus(fixtures::world().corpus, GroundClass::GC1);
}

// Registry with a single GC1 entry carrying `model` over the world's GC1 corpus.
Registry single(mlp::MlpModel model, std::optional<CopBounds> bounds = std::nullopt,
                double step = kDefaultStep) {
  const auto& w = fixtures::world();
  const auto rows = gc1_rows();
  model.feature_scaler = w.models.at(GroundClass::GC1).feature_scaler;
  model.calibration = CredibilityCalibration{{0.0, 0.0}, {1.0, 1.0}, ""};
  auto e = make_entry(std::move(model), w.optimality.at(GroundClass::GC1), rows);
  e.bounds = bounds;
  std::map<GroundClass, ClassEntry> m;
  m.emplace(GroundClass::GC1, std::move(e));
  return Registry(std::move(m), step);
}

int sign(double v) { return (v > 0) - (v < 0); }

ErrorCode load_error(const std::filesystem::path& dir) {
  try {
    load_registry(dir);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::Io;
}

}  // namespace

TEST(Recommend, ZeroGradientHolds) {
  const auto reg = single(fixtures::zero_model());
  const auto r = gc1_rows()[10].record;
  const auto rec = recommend(reg, GroundClass::GC1, r.cop, r.cxp);
  EXPECT_TRUE(rec.hold());
  for (double d : rec.deltas) EXPECT_EQ(d, 0.0);
  for (double g : rec.gradients) EXPECT_EQ(g, 0.0);
}

TEST(Recommend, SignFollowsGeneratingSlope) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (double c : {2.0, -1.5}) {
    FeatureVector w{};
    w[0] = c;  // f = sigmoid(c * z_cop1)
    const auto reg = single(fixtures::one_unit_model(w, 0.0, 1.0, 0.0));
    const auto& sc = reg.at(GroundClass::GC1).model.feature_scaler;
    for (int k = 0; k < 200; ++k) {
      auto r = gc1_rows()[static_cast<std::size_t>(k)].record;
      r.cop[0] = sc.mean[0] + u(rng) * sc.stddev[0];
      const auto rec = recommend(reg, GroundClass::GC1, r.cop, r.cxp, {false});
      EXPECT_EQ(sign(rec.deltas[0]), sign(c));
      for (std::size_t j = 1; j < kNumCop; ++j) EXPECT_EQ(rec.deltas[j], 0.0);
      const double z = (r.cop[0] - sc.mean[0]) / sc.stddev[0];
      const double s = 1.0 / (1.0 + std::exp(-c * z));
      EXPECT_NEAR(rec.gradients[0], c * s * (1 - s), 1e-12);
      EXPECT_NEAR(rec.deltas[0], 0.1 * rec.gradients[0] * sc.stddev[0], 1e-12);
    }
  }
}

TEST(Recommend, ClampedAtUpperBound) {
  FeatureVector w{};
  w[0] = 1.0;
  w[1] = -1.0;
  auto r = gc1_rows()[5].record;
  CopBounds b;
  for (std::size_t j = 0; j < kNumCop; ++j) {
    b.min[j] = r.cop[j] - 100.0;
    b.max[j] = r.cop[j] + 100.0;
  }
  b.max[0] = r.cop[0];         // already at max, gradient positive
  b.min[1] = r.cop[1] - 1e-6;  // tiny room below, gradient negative
  const auto reg = single(fixtures::one_unit_model(w, 0.0, 1.0, 0.0), b);
  const auto rec = recommend(reg, GroundClass::GC1, r.cop, r.cxp);
  EXPECT_GT(rec.gradients[0], 0.0);
  EXPECT_EQ(rec.deltas[0], 0.0);
  EXPECT_TRUE(rec.at_bound[0]);
  EXPECT_TRUE(rec.at_bound[1]);
  EXPECT_NEAR(rec.deltas[1], -1e-6, 1e-12);
  EXPECT_FALSE(rec.at_bound[2]);

  auto outside = r;
  outside.cop[0] = r.cop[0] + 5.0;  // above max: clamp would reverse the sign
  const auto o = recommend(reg, GroundClass::GC1, outside.cop, outside.cxp);
  EXPECT_EQ(o.deltas[0], 0.0);
  EXPECT_TRUE(o.at_bound[0]);
}

TEST(Recommend, TrainedRegistryInvariants) {
  const auto& w = fixtures::world();
  for (GroundClass gc : kGroundClasses) {
    const auto rows = pipeline::class_corpus(w.corpus, gc);
    for (std::size_t i = 0; i < rows.size(); i += 17) {
      const auto& r = rows[i].record;
      const auto a = recommend(*w.registry, gc, r.cop, r.cxp);
      const auto b = recommend(*w.registry, gc, r.cop, r.cxp);
      EXPECT_EQ(nlohmann::json(a).dump(), nlohmann::json(b).dump());
      EXPECT_GE(a.credibility, 0.0);
      EXPECT_LE(a.credibility, 1.0);
      EXPECT_GE(a.predicted_optimality, 0.0);
      EXPECT_LE(a.predicted_optimality, 100.0);
      for (std::size_t j = 0; j < kNumCop; ++j) {
        EXPECT_TRUE(std::isfinite(a.deltas[j]));
        EXPECT_TRUE(a.deltas[j] == 0.0 || sign(a.deltas[j]) == sign(a.gradients[j]));
      }
    }
  }
}

TEST(Recommend, StepDoesNotLowerPrediction) {
  const auto& w = fixtures::world();
  const auto& e = w.registry->at(GroundClass::GC2);
  const auto rows = pipeline::class_corpus(w.corpus, GroundClass::GC2);
  for (std::size_t i = 0; i < rows.size(); i += 9) {
    const auto& r = rows[i].record;
    const auto rec = recommend(*w.registry, GroundClass::GC2, r.cop, r.cxp, {false});
    auto moved = r.cop;
    auto small = r.cop;
    for (std::size_t j = 0; j < kNumCop; ++j) {
      moved[j] += rec.deltas[j];
      small[j] += rec.deltas[j] / 10.0;
    }
    FeatureVector x{}, xs{};
    std::copy(moved.begin(), moved.end(), x.begin());
    std::copy(small.begin(), small.end(), xs.begin());
    std::copy(r.cxp.begin(), r.cxp.end(), x.begin() + kNumCop);
    std::copy(r.cxp.begin(), r.cxp.end(), xs.begin() + kNumCop);
    const double after = mlp::predict(e.model, ingest::standardize(x, e.model.feature_scaler));
    const double after_small = mlp::predict(e.model, ingest::standardize(xs, e.model.feature_scaler));
    EXPECT_TRUE(after >= rec.predicted_raw || after_small >= rec.predicted_raw)
        << "sample " << i;
  }
}

TEST(Recommend, UnknownClassIsModelNotLoaded) {
  const auto reg = single(fixtures::zero_model());
  const auto r = gc1_rows()[0].record;
  try {
    recommend(reg, GroundClass::GC3, r.cop, r.cxp);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ModelNotLoaded);
  }
}

TEST(Registry, RejectsBadStep) {
  EXPECT_THROW(Registry({}, 0.0), Error);
  EXPECT_THROW(Registry({}, -1.0), Error);
}

TEST(Registry, EntryNeedsCalibration) {
  auto m = fixtures::zero_model();
  m.calibration.reset();
  try {
    make_entry(m, fixtures::world().optimality.at(GroundClass::GC1), gc1_rows());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ModelNotLoaded);
  }
}

TEST(LoadRegistry, ThreeModels) {
  const auto dir = fixtures::temp_dir("reg_ok");
  fixtures::write_model_dir(dir);
  AdvisorConfig cfg;
  cfg.bounds[GroundClass::GC2] = CopBounds{sim::cop_box().lo, sim::cop_box().hi};
  const auto reg = load_registry(dir, cfg);
  EXPECT_EQ(reg.size(), 3u);
  EXPECT_TRUE(reg.at(GroundClass::GC2).bounds.has_value());
  EXPECT_FALSE(reg.at(GroundClass::GC1).bounds.has_value());
  // Same answers as the in-memory registry.
  const auto& w = fixtures::world();
  const auto r = pipeline::class_corpus(w.corpus, GroundClass::GC3)[12].record;
  const auto a = recommend(reg, GroundClass::GC3, r.cop, r.cxp);
  const auto b = recommend(*w.registry, GroundClass::GC3, r.cop, r.cxp);
  for (std::size_t j = 0; j < kNumCop; ++j) EXPECT_EQ(a.deltas[j], b.deltas[j]);
  EXPECT_EQ(a.credibility, b.credibility);
}

TEST(LoadRegistry, MissingClassFile) {
  const auto dir = fixtures::temp_dir("reg_missing");
  fixtures::write_model_dir(dir);
  std::filesystem::remove(model_file(dir, GroundClass::GC2));
  try {
    load_registry(dir);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingModel);
    EXPECT_NE(std::string(e.what()).find("GC2"), std::string::npos);
  }
  EXPECT_EQ(load_error("/nonexistent/models"), ErrorCode::MissingModel);
}

TEST(LoadRegistry, FingerprintMismatch) {
  const auto dir = fixtures::temp_dir("reg_fp");
  fixtures::write_model_dir(dir);
  auto rows = ingest::load_corpus(neighbor_file(dir, GroundClass::GC1));
  rows[3].record.cxp[0] += 0.5;  // a different corpus
  ingest::write_corpus(neighbor_file(dir, GroundClass::GC1), rows);
  EXPECT_EQ(load_error(dir), ErrorCode::FingerprintMismatch);
}

TEST(LoadRegistry, CorruptOptimality) {
  const auto dir = fixtures::temp_dir("reg_parse");
  fixtures::write_model_dir(dir);
  std::ofstream(optimality_file(dir)) << "{not json";
  EXPECT_EQ(load_error(dir), ErrorCode::ParseError);
}

TEST(RegistryHandle, SwapKeepsOldSnapshots) {
  RegistryHandle h;
  EXPECT_EQ(h.snapshot(), nullptr);
  auto a = std::make_shared<const Registry>(single(fixtures::zero_model()));
  h.swap(a);
  auto held = h.snapshot();
  auto b = std::make_shared<const Registry>();
  h.swap(b);
  EXPECT_EQ(held, a);
  EXPECT_EQ(held->size(), 1u);
  EXPECT_EQ(h.snapshot(), b);

  // Readers racing a writer always see one of the two published registries.
  std::atomic<bool> stop{false};
  std::atomic<int> bad{0};
  std::thread reader([&] {
    while (!stop) {
      auto s = h.snapshot();
      if (s != a && s != b) ++bad;
    }
  });
  for (int i = 0; i < 2000; ++i) h.swap(i % 2 ? a : b);
  stop = true;
  reader.join();
  EXPECT_EQ(bad, 0);
}

TEST(Training, CalibrationUsesValidationSplitOnly) {
  const auto& w = fixtures::world();
  const auto rows = pipeline::class_corpus(w.corpus, GroundClass::GC1);
  pipeline::TrainOptions opts;
  opts.config.epochs = 3;
  opts.config.seed = 3;
  const auto res = pipeline::train_class(rows, w.optimality.at(GroundClass::GC1), opts);
  const auto succ = ingest::successors(rows);
  std::vector<SensorRecord> val;
  for (std::size_t i : res.validation) {
    if (succ[i]) val.push_back(rows[i].record);
  }
  ASSERT_TRUE(res.model.calibration.has_value());
  EXPECT_EQ(res.model.calibration->split_fingerprint, stats::fingerprint(val));
  EXPECT_EQ(res.model.corpus_fingerprint, stats::fingerprint(ingest::records_of(rows)));
  // Disjoint 70/15/15 split.
  EXPECT_EQ(res.train.size() + res.validation.size() + res.test.size(), rows.size());
  EXPECT_EQ(res.validation.size(), static_cast<std::size_t>(std::floor(0.15 * static_cast<double>(rows.size()))));
  std::vector<bool> seen(rows.size(), false);
  for (const auto* part : {&res.train, &res.validation, &res.test}) {
    for (std::size_t i : *part) {
      EXPECT_FALSE(seen[i]);
      seen[i] = true;
    }
  }
}
