#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "fixtures.hpp"
#include "tbm/domain.hpp"
#include "tbm/errors.hpp"

using namespace tbm;

namespace {

RawRecord raw_of(const SensorRecord& r) {
  RawRecord raw;
  raw.timestamp = r.timestamp;
  raw.tunnel_length = r.tunnel_length;
  raw.advance_rate = r.advance_rate;
  raw.working_pressure = r.working_pressure;
  raw.cop.assign(r.cop.begin(), r.cop.end());
  raw.cxp.assign(r.cxp.begin(), r.cxp.end());
  raw.ground_class = r.ground_class;
  return raw;
}

ErrorCode code_of(const RawRecord& raw) {
  try {
    validate_record(raw);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::Io;
}

}  // namespace

TEST(ValidateRecord, ShortCopIsArityMismatch) {
  auto raw = raw_of(fixtures::record(0, 1));
  raw.cop.pop_back();
  EXPECT_EQ(code_of(raw), ErrorCode::ArityMismatch);
}

TEST(ValidateRecord, LongCxpIsArityMismatch) {
  auto raw = raw_of(fixtures::record(0, 1));
  raw.cxp.push_back(1.0);
  EXPECT_EQ(code_of(raw), ErrorCode::ArityMismatch);
}

TEST(ValidateRecord, NanPressureIsNonFinite) {
  auto raw = raw_of(fixtures::record(0, 1));
  raw.working_pressure = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(code_of(raw), ErrorCode::NonFinite);
}

TEST(ValidateRecord, InfiniteCxpIsNonFinite) {
  auto raw = raw_of(fixtures::record(0, 1));
  raw.cxp[4] = std::numeric_limits<double>::infinity();
  EXPECT_EQ(code_of(raw), ErrorCode::NonFinite);
}

TEST(ValidateRecord, NegativeAdvanceRate) {
  auto raw = raw_of(fixtures::record(0, 1));
  raw.advance_rate = -0.5;
  EXPECT_EQ(code_of(raw), ErrorCode::NegativeMeasure);
}

TEST(ValidateRecord, WellFormedIsUnchanged) {
  const auto r = fixtures::record(30, 2.5, GroundClass::GC3);
  EXPECT_EQ(validate_record(raw_of(r)), r);
}

TEST(GroundClassText, ParsesAndPrints) {
  for (GroundClass gc : kGroundClasses) EXPECT_EQ(parse_ground_class(to_string(gc)), gc);
  EXPECT_EQ(to_string(GroundClass::GC2), "GC2");
  try {
    parse_ground_class("GC4");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownGroundClass);
  }
}

TEST(Features, CopThenCxp) {
  const auto r = fixtures::record(0, 1);
  const auto x = features_of(r);
  for (std::size_t j = 0; j < kNumCop; ++j) EXPECT_EQ(x[j], r.cop[j]);
  for (std::size_t j = 0; j < kNumCxp; ++j) EXPECT_EQ(x[kNumCop + j], r.cxp[j]);
}

TEST(RoundTrip, SensorRecord) {
  auto r = fixtures::record(1234.5, 17.25, GroundClass::GC2);
  r.cxp[3] = 0.1 + 0.2;  // not exactly representable in short decimal
  const nlohmann::json j = r;
  const auto back = nlohmann::json::parse(j.dump()).get<SensorRecord>();
  EXPECT_EQ(back, r);
}

TEST(RoundTrip, OptimalityConfig) {
  OptimalityConfig cfg;
  cfg.classes[GroundClass::GC1] = {0.8, 3.0, 114.0, 30.0, 150.0, -1.25, 0.75};
  cfg.classes[GroundClass::GC3] = {0.5, 2.0, 1.0 / 3.0, 27.3, 150.0, -2.0, 1.0};
  const nlohmann::json j = cfg;
  EXPECT_EQ(j["schema_version"], kSchemaVersion);
  EXPECT_EQ(nlohmann::json::parse(j.dump()).get<OptimalityConfig>(), cfg);
}

TEST(OptimalityParamsCheck, RejectsW2BelowW1) {
  OptimalityParams p{0.8, 0.5, 114.0, 30.0, 150.0, 0.0, 1.0};
  EXPECT_THROW(p.check(), Error);
  nlohmann::json j = p;
  EXPECT_THROW(j.get<OptimalityParams>(), Error);
}

TEST(OptimalityParamsCheck, RejectsMbAboveUb) {
  OptimalityParams p{0.8, 3.0, 151.0, 30.0, 150.0, 0.0, 1.0};
  try {
    p.check();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
  }
}

TEST(OptimalityParamsCheck, AcceptsEqualWeightsAndMbAtUb) {
  OptimalityParams p{1.0, 1.0, 150.0, 30.0, 150.0, 0.0, 1.0};
  EXPECT_NO_THROW(p.check());
}

TEST(ValidationTableAverages, AllHalf) {
  ValidationTable t;
  for (GroundClass gc : kGroundClasses) {
    for (auto& c : t.rows[gc]) c = {1, 2};
  }
  EXPECT_DOUBLE_EQ(*t.grand_average(), 0.5);
  for (GroundClass gc : kGroundClasses) EXPECT_DOUBLE_EQ(*t.row_average(gc), 0.5);
  for (std::size_t i = 0; i < kNumCop; ++i) EXPECT_DOUBLE_EQ(*t.column_average(i), 0.5);
}

TEST(ValidationTableAverages, SingleDefinedCell) {
  ValidationTable t;
  t.rows[GroundClass::GC2][3] = {3, 7};
  t.rows[GroundClass::GC1];  // all undefined
  EXPECT_DOUBLE_EQ(*t.grand_average(), 3.0 / 7.0);
  EXPECT_FALSE(t.row_average(GroundClass::GC1).has_value());
  EXPECT_FALSE(t.column_average(0).has_value());
  EXPECT_DOUBLE_EQ(*t.column_average(3), 3.0 / 7.0);
}

TEST(ValidationTableAverages, MixedCellsByHand) {
  ValidationTable t;
  // GC1: 1/2, 1/4, -, 1, 0 ; GC2: 2/3, -, -, -, 1/2
  t.rows[GroundClass::GC1] = {ValidationCell{1, 2}, {1, 4}, {0, 0}, {5, 5}, {0, 3}};
  t.rows[GroundClass::GC2] = {ValidationCell{2, 3}, {0, 0}, {0, 0}, {0, 0}, {1, 2}};
  EXPECT_DOUBLE_EQ(*t.row_average(GroundClass::GC1), (0.5 + 0.25 + 1.0 + 0.0) / 4.0);
  EXPECT_DOUBLE_EQ(*t.row_average(GroundClass::GC2), (2.0 / 3.0 + 0.5) / 2.0);
  EXPECT_DOUBLE_EQ(*t.column_average(0), (0.5 + 2.0 / 3.0) / 2.0);
  EXPECT_DOUBLE_EQ(*t.column_average(4), 0.25);
  EXPECT_FALSE(t.column_average(2).has_value());
  EXPECT_DOUBLE_EQ(*t.grand_average(), (0.5 + 0.25 + 1.0 + 0.0 + 2.0 / 3.0 + 0.5) / 6.0);
  const nlohmann::json j = t;
  EXPECT_TRUE(j["rows"]["GC1"]["cells"][2]["ratio"].is_null());
}

TEST(ExitCodes, DistinctPerFailureClass) {
  EXPECT_EQ(exit_code(ErrorCode::MissingModel), 10);
  EXPECT_NE(exit_code(ErrorCode::SchemaMismatch), exit_code(ErrorCode::MissingModel));
  EXPECT_NE(exit_code(ErrorCode::FingerprintMismatch), 0);
}
