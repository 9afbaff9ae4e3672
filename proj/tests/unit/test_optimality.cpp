#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fixtures.hpp"
#include "tbm/errors.hpp"
#include "tbm/optimality.hpp"

using namespace tbm;

namespace {

OptimalityParams gc1() { return {0.8, 3.0, 114.0, 30.0, 150.0, -1.0, 1.0}; }

// Reference written out term by term.
double by_hand(double ar, double wp, double w1, double w2, double mb, double mar, double ub) {
  if (wp <= mb) return ar / mar - w1 * wp / ub;
  return ar / mar - w1 * mb / ub - w2 * (wp - mb) / ub;
}

}  // namespace

TEST(RawScore, BelowMargin) {
  // 15/30 - 0.8*100/150
  EXPECT_NEAR(optimality::raw_score(15, 100, gc1()), 0.5 - 80.0 / 150.0, 1e-12);
  EXPECT_NEAR(optimality::raw_score(15, 100, gc1()), -1.0 / 30.0, 1e-12);
}

TEST(RawScore, AboveMargin) {
  // 0.5 - 0.8*114/150 - 3*6/150
  EXPECT_NEAR(optimality::raw_score(15, 120, gc1()), -0.228, 1e-12);
}

TEST(RawScore, ZeroCase) { EXPECT_EQ(optimality::raw_score(0, 0, gc1()), 0.0); }

TEST(RawScore, ContinuousAtMargin) {
  const auto p = gc1();
  const double left = 20.0 / p.mar - p.w1 * p.mb / p.ub;
  const double right = 20.0 / p.mar - p.w1 * p.mb / p.ub - p.w2 * (p.mb - p.mb) / p.ub;
  EXPECT_LT(std::abs(optimality::raw_score(20, p.mb, p) - left), 1e-12);
  EXPECT_LT(std::abs(left - right), 1e-12);
  const double above = optimality::raw_score(20, std::nextafter(p.mb, 1e9), p);
  EXPECT_LT(std::abs(above - left), 1e-12);
}

TEST(RawScore, MatchesReferenceOnGrid) {
  const auto p = gc1();
  for (int i = 0; i <= 40; ++i) {
    for (int k = 0; k <= 60; ++k) {
      const double ar = i * 0.75, wp = k * 2.5;
      EXPECT_NEAR(optimality::raw_score(ar, wp, p), by_hand(ar, wp, 0.8, 3.0, 114, 30, 150), 1e-12);
    }
  }
}

TEST(RawScore, MonotoneAndSteeperAboveMargin) {
  const auto p = gc1();
  const double h = 1e-3;
  for (int i = 1; i < 100; ++i) {
    const double ar = 0.3 * i;
    EXPECT_GT(optimality::raw_score(ar + h, 90, p), optimality::raw_score(ar, 90, p));
    const double wp = 1.5 * i;
    EXPECT_LT(optimality::raw_score(15, wp + h, p), optimality::raw_score(15, wp, p));
  }
  const double below = (optimality::raw_score(15, 100 + h, p) - optimality::raw_score(15, 100, p)) / h;
  const double above = (optimality::raw_score(15, 130 + h, p) - optimality::raw_score(15, 130, p)) / h;
  EXPECT_LT(above, below);
  EXPECT_NEAR(below, -0.8 / 150, 1e-9);
  EXPECT_NEAR(above, -3.0 / 150, 1e-9);
}

TEST(RawScore, ConfigOverloadChecksParams) {
  OptimalityConfig cfg;
  cfg.classes[GroundClass::GC1] = gc1();
  EXPECT_NEAR(optimality::raw_score(15, 120, cfg, GroundClass::GC1), -0.228, 1e-12);
  EXPECT_THROW(optimality::raw_score(15, 120, cfg, GroundClass::GC2), Error);
  cfg.classes[GroundClass::GC1].w2 = 0.1;
  EXPECT_THROW(optimality::raw_score(15, 120, cfg, GroundClass::GC1), Error);
}

TEST(Normalize, AnchorsAndClip) {
  const auto p = gc1();
  EXPECT_EQ(optimality::normalize(p.norm_max, p), 100.0);
  EXPECT_EQ(optimality::normalize(p.norm_min, p), 0.0);
  EXPECT_EQ(optimality::normalize(p.norm_min - 5, p), 0.0);
  EXPECT_EQ(optimality::normalize(p.norm_max + 5, p), 100.0);
  EXPECT_DOUBLE_EQ(optimality::normalize(0.0, p), 50.0);
  double prev = -1;
  for (int i = -300; i <= 300; ++i) {
    const double v = optimality::normalize(i / 100.0, p);
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(FitParams, NearestRankMarginAndMaxRate) {
  std::vector<SensorRecord> rs;
  for (int i = 0; i < 10; ++i) {
    auto r = fixtures::record(10.0 * i, 1.0 + i);
    r.working_pressure = 100 + ((i * 3) % 10);  // 100..109 shuffled
    r.advance_rate = i == 4 ? 27.3 : 10.0 + i;
    rs.push_back(r);
  }
  const auto p = optimality::fit_params(rs, 0.8, 3.0, 150.0);
  EXPECT_EQ(p.mb, 108.0);
  EXPECT_EQ(p.mar, 27.3);
  double lo = 1e9, hi = -1e9;
  for (const auto& r : rs) {
    const double s = by_hand(r.advance_rate, r.working_pressure, 0.8, 3.0, p.mb, p.mar, 150.0);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  EXPECT_DOUBLE_EQ(p.norm_min, lo);
  EXPECT_DOUBLE_EQ(p.norm_max, hi);
}

TEST(FitParams, IdenticalPressure) {
  std::vector<SensorRecord> rs;
  for (int i = 0; i < 12; ++i) {
    auto r = fixtures::record(10.0 * i, 1.0 + i);
    r.working_pressure = 95.5;
    rs.push_back(r);
  }
  EXPECT_EQ(optimality::fit_params(rs, 0.8, 3.0, 150.0).mb, 95.5);
}

TEST(FitParams, TooFewRecords) {
  const auto rs = fixtures::advancing_drive(9);
  try {
    optimality::fit_params(rs, 0.8, 3.0, 150.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientData);
  }
}

TEST(FitConfig, PerClass) {
  std::vector<SensorRecord> rs;
  for (int i = 0; i < 30; ++i) {
    auto r = fixtures::record(10.0 * i, 1.0 + i, i < 15 ? GroundClass::GC1 : GroundClass::GC3);
    r.advance_rate = i < 15 ? 10 + i : 1 + 0.1 * i;
    rs.push_back(r);
  }
  const auto cfg = optimality::fit_config(rs, 0.8, 3.0, 150.0);
  EXPECT_EQ(cfg.classes.size(), 2u);
  EXPECT_EQ(cfg.at(GroundClass::GC1).mar, 24.0);
  EXPECT_DOUBLE_EQ(cfg.at(GroundClass::GC3).mar, 1 + 2.9);
}
