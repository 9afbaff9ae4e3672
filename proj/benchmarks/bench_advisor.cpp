#include <benchmark/benchmark.h>

#include <map>
#include <memory>
#include <random>

#include "tbm/advisor.hpp"
#include "tbm/mlp.hpp"
#include "tbm/neighbors.hpp"
#include "tbm/optimality.hpp"
#include "tbm/pipeline.hpp"
#include "tbm/sim.hpp"

using namespace tbm;

namespace {

struct Fixture {
  std::vector<ingest::CorpusRecord> corpus;
  OptimalityParams params;
  mlp::MlpModel model;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture f;
    sim::DriveSpec spec;
    spec.gc_segments = {{GroundClass::GC1, 6200}};
    spec.seed = 3;
    std::vector<std::vector<SensorRecord>> drives{sim::generate_drive(spec).records};
    f.corpus = pipeline::ingest_drives(drives).corpus;
    f.params = optimality::fit_params(ingest::records_of(f.corpus), 0.8, 3.0, 150.0);
    pipeline::TrainOptions opts;
    opts.config.epochs = 5;
    f.model = pipeline::train_class(f.corpus, f.params, opts).model;
    return f;
  }();
  return f;
}

// Registry over the first n corpus rows, cached per size.
// Fixed query set drawn from the smallest corpus, shared by all sizes.
const std::vector<SensorRecord>& queries() {
  static const std::vector<SensorRecord> q = [] {
    std::vector<SensorRecord> out;
    for (std::size_t i = 0; i < 256; ++i) out.push_back(fixture().corpus[(i * 37) % 1700].record);
    return out;
  }();
  return q;
}

const advisor::Registry& registry(std::size_t n) {
  static std::map<std::size_t, std::unique_ptr<advisor::Registry>> cache;
  auto& slot = cache[n];
  if (!slot) {
    const auto& f = fixture();
    const std::vector<ingest::CorpusRecord> rows(f.corpus.begin(),
                                                 f.corpus.begin() + static_cast<long>(n));
    std::map<GroundClass, advisor::ClassEntry> m;
    m.emplace(GroundClass::GC1, advisor::make_entry(f.model, f.params, rows));
    slot = std::make_unique<advisor::Registry>(std::move(m));
  }
  return *slot;
}

void BM_RecommendGradient(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto& reg = registry(n);
  const auto& q = queries();
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& r = q[i++ % q.size()];
    benchmark::DoNotOptimize(
        advisor::recommend(reg, GroundClass::GC1, r.cop, r.cxp, {.with_credibility = false}));
  }
}
BENCHMARK(BM_RecommendGradient)->Arg(1700)->Arg(5800);

void BM_RecommendWithCredibility(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto& reg = registry(n);
  const auto& q = queries();
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& r = q[i++ % q.size()];
    benchmark::DoNotOptimize(advisor::recommend(reg, GroundClass::GC1, r.cop, r.cxp));
  }
}
BENCHMARK(BM_RecommendWithCredibility)->Arg(1700)->Arg(5800);

void BM_Baseline(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto& e = registry(n).at(GroundClass::GC1);
  std::size_t i = 0;
  for (auto _ : state) {
    const std::size_t t = (i++ * 37) % n;
    benchmark::DoNotOptimize(
        neighbors::baseline_recommend(*e.index, e.index->record(t), e.scores[t], e.scores, t));
  }
}
BENCHMARK(BM_Baseline)->Arg(1700)->Arg(5800);

void BM_Predict(benchmark::State& state) {
  const auto& m = fixture().model;
  std::vector<double> x(kNumFeatures, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(mlp::predict(m, x));
}
BENCHMARK(BM_Predict);

void BM_InputGradient(benchmark::State& state) {
  const auto& m = fixture().model;
  std::vector<double> x(kNumFeatures, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(mlp::input_gradient(m, x));
}
BENCHMARK(BM_InputGradient);

void BM_KnnQuery(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto& idx = *registry(n).at(GroundClass::GC1).index;
  std::size_t i = 0;
  for (auto _ : state) {
    const std::size_t t = (i++ * 37) % n;
    benchmark::DoNotOptimize(idx.query_standardized(idx.point(t), 15, t));
  }
}
BENCHMARK(BM_KnnQuery)->Arg(1700)->Arg(5800);

}  // namespace

BENCHMARK_MAIN();
