#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "fixtures.hpp"
#include "tbm/errors.hpp"
#include "tbm/validate.hpp"

using namespace tbm;
using tbm::validate::ImprovementMode;
using tbm::validate::Recommender;

namespace {

// One drive, 10 s apart, CoP1 following `cop1`. Sample t+1 is flagged as an
// action whenever CoP1 changes.
std::vector<ingest::CorpusRecord> chain(const std::vector<double>& cop1) {
  std::vector<ingest::CorpusRecord> out;
  for (std::size_t t = 0; t < cop1.size(); ++t) {
    ingest::CorpusRecord c;
    c.record = fixtures::record(10.0 * t, 0.01 * (t + 1));
    c.record.cop[0] = cop1[t];
    if (t > 0 && cop1[t] != cop1[t - 1]) c.action[0] = true;
    out.push_back(c);
  }
  return out;
}

FeatureStats unit_stats() {
  FeatureStats s;
  s.mean.fill(0.0);
  s.stddev.fill(1.0);
  return s;
}

std::vector<SensorRecord> random_records(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<SensorRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    auto r = fixtures::record(10.0 * i, 0.01 * (i + 1));
    for (auto& v : r.cop) v = 10.0 + g(rng);
    for (auto& v : r.cxp) v = g(rng);
    out.push_back(r);
  }
  return out;
}

long long total_num(const CellRow& row) {
  long long n = 0;
  for (const auto& c : row) n += c.num;
  return n;
}

// Direct restatement of the contextual rule over a small sample.
CellRow contextual_oracle(const std::vector<SensorRecord>& recs, const std::vector<double>& f,
                          const Recommender& rec, std::size_t k) {
  CellRow row{};
  const std::size_t n = recs.size();
  for (std::size_t t = 0; t < n; ++t) {
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == t) continue;
      double d = 0.0;
      for (std::size_t c = 0; c < kNumCxp; ++c) {
        d += (recs[j].cxp[c] - recs[t].cxp[c]) * (recs[j].cxp[c] - recs[t].cxp[c]);
      }
      all.emplace_back(d, j);
    }
    std::sort(all.begin(), all.end());
    all.resize(k);
    const CopVector r = rec(t);
    int pick = -1;
    double best = 1e300;
    for (const auto& [_, j] : all) {
      if (f[j] == f[t]) continue;
      double d = 0.0;
      for (std::size_t i = 0; i < kNumCop; ++i) {
        const double e = recs[t].cop[i] + r[i] - recs[j].cop[i];
        d += e * e;
      }
      if (d < best) {
        best = d;
        pick = static_cast<int>(j);
      }
    }
    if (pick < 0) continue;
    const bool better = f[pick] > f[t];
    for (std::size_t i = 0; i < kNumCop; ++i) {
      const double obs = recs[pick].cop[i] - recs[t].cop[i];
      if (r[i] == 0.0 || (r[i] > 0) != (obs > 0) || obs == 0.0) continue;
      ++row[i].num;
      if (better) ++row[i].val;
    }
  }
  return row;
}

}  // namespace

TEST(SignOf, DeadBand) {
  EXPECT_EQ(validate::sign_of(0.5, 1e-9), 1);
  EXPECT_EQ(validate::sign_of(-0.5, 1e-9), -1);
  EXPECT_EQ(validate::sign_of(1e-12, 1e-9), 0);
  EXPECT_EQ(validate::sign_of(0.0, 0.0), 0);
}

TEST(Synchronized, ReplayWithImprovingScoresIsPerfect) {
  const auto corpus = chain({10, 11, 11, 12, 10, 10, 13, 14, 12, 12, 15});
  std::vector<double> f(corpus.size());
  std::iota(f.begin(), f.end(), 0.0);
  const auto row = validate::synchronized_validation(corpus, f,
                                                     validate::replay_recommender(corpus));
  EXPECT_EQ(row[0].num, 7);
  EXPECT_EQ(row[0].val, 7);
  ASSERT_TRUE(row[0].ratio());
  EXPECT_DOUBLE_EQ(*row[0].ratio(), 1.0);
  for (std::size_t i = 1; i < kNumCop; ++i) EXPECT_EQ(row[i].num, 0);
}

TEST(Synchronized, OppositeSignsNeverMatch) {
  const auto corpus = chain({10, 11, 11, 12, 10, 10, 13, 14, 12, 12, 15});
  std::vector<double> f(corpus.size());
  std::iota(f.begin(), f.end(), 0.0);
  const auto replay = validate::replay_recommender(corpus);
  Recommender flip = [&](std::size_t t) {
    auto d = replay(t);
    for (auto& v : d) v = -v;
    return d;
  };
  const auto row = validate::synchronized_validation(corpus, f, flip);
  EXPECT_EQ(row[0].num, 0);
  EXPECT_FALSE(row[0].ratio());
}

TEST(Synchronized, ThreeOfFourMatchesImproved) {
  // Six actions on CoP1; the recommender agrees in sign on four of them
  // and three of those four improve the score.
  const std::vector<double> cop1 = {10, 11, 12, 12, 11, 10, 10, 12, 13, 11, 11};
  const auto corpus = chain(cop1);
  const std::vector<double> f = {0.0, 0.1, 0.05, 0.05, 0.2, 0.3, 0.3, 0.4, 0.5, 0.45, 0.45};
  // t: change (t -> t+1), score move
  // 0: +1 up       agree -> match, improved
  // 1: +1 down     agree -> match, not improved
  // 3: -1 up       agree -> match, improved
  // 4: -1 up       disagree
  // 6: +2 up       disagree
  // 7: +1 up       agree -> match, improved
  // 8: -2 down     recommender zero
  Recommender rec = [](std::size_t t) {
    CopVector d{};
    switch (t) {
      case 0: case 1: case 7: d[0] = 0.5; break;
      case 3: d[0] = -0.5; break;
      case 4: d[0] = 0.5; break;
      case 6: d[0] = -0.5; break;
      default: break;
    }
    d[1] = 1.0;  // never acted on
    return d;
  };
  const auto row = validate::synchronized_validation(corpus, f, rec);
  EXPECT_EQ(row[0].num, 4);
  EXPECT_EQ(row[0].val, 3);
  EXPECT_DOUBLE_EQ(*row[0].ratio(), 0.75);
  EXPECT_EQ(row[1].num, 0);
}

TEST(Synchronized, LiteralModeUsesSignOfNextScore) {
  const auto corpus = chain({10, 11, 12, 13});
  const std::vector<double> f = {-0.4, -0.3, -0.2, 0.1};
  const auto rec = validate::replay_recommender(corpus);
  const auto delta = validate::synchronized_validation(corpus, f, rec);
  EXPECT_EQ(delta[0].num, 3);
  EXPECT_EQ(delta[0].val, 3);
  validate::ValidateConfig cfg;
  cfg.mode = ImprovementMode::Literal;
  const auto lit = validate::synchronized_validation(corpus, f, rec, cfg);
  EXPECT_EQ(lit[0].num, 3);
  EXPECT_EQ(lit[0].val, 1);
}

TEST(Synchronized, NoSuccessorAcrossDrives) {
  auto corpus = chain({10, 11, 12, 13});
  corpus[2].drive = 1;
  corpus[3].drive = 1;
  std::vector<double> f = {0, 1, 2, 3};
  const auto row = validate::synchronized_validation(corpus, f,
                                                     validate::replay_recommender(corpus));
  // 0 -> 1 and 2 -> 3 remain.
  EXPECT_EQ(row[0].num, 2);
}

TEST(Synchronized, ScoreSizeMismatchThrows) {
  const auto corpus = chain({10, 11});
  std::vector<double> f = {0.0};
  try {
    validate::synchronized_validation(corpus, f, validate::replay_recommender(corpus));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(Contextual, ExactTwinIsSelected) {
  std::mt19937_64 rng(4);
  auto recs = random_records(rng, 20);
  // Record 7 sits exactly where sample 0 would land after the step.
  CopVector step = {0.5, -0.5, 0.25, 0.0, 1.0};
  for (std::size_t i = 0; i < kNumCop; ++i) recs[7].cop[i] = recs[0].cop[i] + step[i];
  recs[7].cxp = recs[0].cxp;
  recs[7].cxp[0] += 1e-3;
  std::vector<double> f(recs.size(), 0.0);
  f[7] = 1.0;
  f[3] = 2.0;
  Recommender rec = [&](std::size_t t) { return t == 0 ? step : CopVector{}; };
  const auto idx = neighbors::NeighborIndex::build(recs, unit_stats());
  const auto row = validate::contextual_validation(idx, f, rec);
  EXPECT_EQ(total_num(row), 4);  // CoP4 step is zero
  for (std::size_t i = 0; i < kNumCop; ++i) {
    EXPECT_EQ(row[i].num, i == 3 ? 0 : 1) << i;
    EXPECT_EQ(row[i].val, row[i].num);
  }
}

TEST(Contextual, IdenticalScoresAreSkipped) {
  std::mt19937_64 rng(5);
  auto recs = random_records(rng, 20);
  std::vector<double> f(recs.size(), 0.3);
  const auto idx = neighbors::NeighborIndex::build(recs, unit_stats());
  const auto row = validate::contextual_validation(idx, f, validate::random_sign_recommender(1));
  EXPECT_EQ(total_num(row), 0);
}

TEST(Contextual, MatchesBruteForceOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    auto recs = random_records(rng, 20);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> f(recs.size());
    for (auto& v : f) v = u(rng);
    const auto rec = validate::random_sign_recommender(seed + 100);
    const auto idx = neighbors::NeighborIndex::build(recs, unit_stats());
    const auto got = validate::contextual_validation(idx, f, rec);
    const auto want = contextual_oracle(recs, f, rec, 15);
    for (std::size_t i = 0; i < kNumCop; ++i) {
      EXPECT_EQ(got[i].num, want[i].num) << seed << " " << i;
      EXPECT_EQ(got[i].val, want[i].val) << seed << " " << i;
      EXPECT_LE(0, got[i].val);
      EXPECT_LE(got[i].val, got[i].num);
    }
  }
}

TEST(Contextual, InvariantToCorpusOrder) {
  std::mt19937_64 rng(9);
  auto recs = random_records(rng, 40);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> f(recs.size());
  for (auto& v : f) v = u(rng);
  const auto rec = validate::random_sign_recommender(3);

  std::vector<std::size_t> perm(recs.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<SensorRecord> precs;
  std::vector<double> pf;
  for (auto p : perm) {
    precs.push_back(recs[p]);
    pf.push_back(f[p]);
  }
  Recommender prec = [&](std::size_t t) { return rec(perm[t]); };

  const auto a = validate::contextual_validation(
      neighbors::NeighborIndex::build(recs, unit_stats()), f, rec);
  const auto b = validate::contextual_validation(
      neighbors::NeighborIndex::build(precs, unit_stats()), pf, prec);
  for (std::size_t i = 0; i < kNumCop; ++i) {
    EXPECT_EQ(a[i].num, b[i].num);
    EXPECT_EQ(a[i].val, b[i].val);
  }
}

TEST(Contextual, Deterministic) {
  std::mt19937_64 rng(2);
  auto recs = random_records(rng, 30);
  std::vector<double> f(recs.size());
  std::iota(f.begin(), f.end(), 0.0);
  const auto idx = neighbors::NeighborIndex::build(recs, unit_stats());
  const auto rec = validate::random_sign_recommender(8);
  const auto a = validate::contextual_validation(idx, f, rec);
  const auto b = validate::contextual_validation(idx, f, rec);
  for (std::size_t i = 0; i < kNumCop; ++i) {
    EXPECT_EQ(a[i].num, b[i].num);
    EXPECT_EQ(a[i].val, b[i].val);
  }
}

TEST(RandomSign, DeterministicUnitSigns) {
  const auto a = validate::random_sign_recommender(42);
  const auto b = validate::random_sign_recommender(42);
  const auto c = validate::random_sign_recommender(43);
  std::array<int, kNumCop> pos{};
  bool differs = false;
  for (std::size_t t = 0; t < 2000; ++t) {
    const auto x = a(t);
    EXPECT_EQ(x, b(t));
    if (x != c(t)) differs = true;
    for (std::size_t i = 0; i < kNumCop; ++i) {
      EXPECT_EQ(std::abs(x[i]), 1.0);
      if (x[i] > 0) ++pos[i];
    }
  }
  EXPECT_TRUE(differs);
  // Binomial(2000, 0.5): 3 sigma is about 67.
  for (int p : pos) EXPECT_NEAR(p, 1000, 70);
}

TEST(FormatTable, Shape) {
  ValidationReport rep;
  ValidationTable gb, nn;
  CellRow r{};
  r[0] = {3, 4};
  r[2] = {1, 2};
  gb.rows[GroundClass::GC1] = r;
  gb.rows[GroundClass::GC3] = r;
  nn.rows[GroundClass::GC1] = CellRow{};
  rep.sv["GB"] = gb;
  rep.sv["NN"] = nn;
  rep.cv["GB"] = gb;

  const std::string s = validate::format_table(rep);
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < s.size()) {
    const auto end = s.find('\n', start);
    lines.push_back(s.substr(start, end - start));
    start = end + 1;
  }
  // Per block: title, two header lines, three classes, averages.
  ASSERT_EQ(lines.size(), 7u + 1u + 7u);
  EXPECT_NE(lines[0].find("Synchronized"), std::string::npos);
  EXPECT_NE(lines[8].find("Contextual"), std::string::npos);
  EXPECT_NE(lines[1].find("CoP5"), std::string::npos);
  EXPECT_NE(lines[2].find("GB"), std::string::npos);
  for (std::size_t i = 2; i < 7; ++i) EXPECT_EQ(lines[i].size(), lines[1].size());
  // GC1 GB: 75 and 50; row average 62.5 rounds to 62 or 63.
  EXPECT_NE(lines[3].find("75"), std::string::npos);
  EXPECT_NE(lines[3].find("50"), std::string::npos);
  EXPECT_EQ(lines[3].rfind("GC1", 5), 2u);
}

TEST(Report, AveragesOfDefinedCells) {
  ValidationTable t;
  CellRow a{};
  a[0] = {1, 2};
  a[1] = {1, 1};
  CellRow b{};
  b[0] = {0, 4};
  t.rows[GroundClass::GC1] = a;
  t.rows[GroundClass::GC2] = b;
  EXPECT_DOUBLE_EQ(*t.row_average(GroundClass::GC1), 0.75);
  EXPECT_DOUBLE_EQ(*t.column_average(0), 0.25);
  EXPECT_DOUBLE_EQ(*t.grand_average(), 0.5);
  EXPECT_FALSE(t.column_average(4));
}
