#include "tbm/domain.hpp"

#include <cmath>
#include <string>

#include "tbm/errors.hpp"

namespace tbm {

namespace {

constexpr std::array<std::string_view, kNumCop> kCopNames = {
    "Cutter-head rotational speed",
    "High-pressure water nozzle",
    "Drive-line pressure",
    "Jacking-frame thrust",
    "Feed-pump rotational speed",
};

constexpr std::array<std::string_view, kNumCxp> kCxpNames = {
    "Steering cylinder 1 pressure [bar]",
    "Steering cylinder 2 pressure [bar]",
    "Steering cylinder 3 pressure [bar]",
    "Steering cylinder 3 pressure (3-B) [bar]",
    "Feed line pressure on TBM [bar]",
    "Feed line pressure on pump [bar]",
    "Suction line pressure [bar]",
    "Bentonite pump pressure [bar]",
    "Conveyor line flow rate [m3/s]",
    "Feed line flow rate [m3/s]",
    "Drive line flow rate [m3/s]",
    "High pressure nozzle flow rate [m3/s]",
    "High pressure pump rotational speed [rpm]",
    "Bentonite pump rotational speed [rpm]",
    "Steering cylinder 1 extension [mm]",
    "Steering cylinder 2 extension [mm]",
    "Steering cylinder 3 extension [mm]",
    "Machine oil temperature [celsius]",
    "TBM axial rotation [degrees]",
};

void require_finite(double v, const char* field) {
  if (!std::isfinite(v)) {
    throw Error(ErrorCode::NonFinite, std::string("non-finite value in field '") + field + "'");
  }
}

template <std::size_t N>
std::array<double, N> to_array(const nlohmann::json& j, const char* field) {
  const auto v = j.at(field).get<std::vector<double>>();
  if (v.size() != N) {
    throw Error(ErrorCode::ArityMismatch, std::string(field) + " must have " +
                                              std::to_string(N) + " entries, got " +
                                              std::to_string(v.size()));
  }
  std::array<double, N> out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

}  // namespace

std::string_view to_string(GroundClass gc) noexcept {
  switch (gc) {
    case GroundClass::GC1: return "GC1";
    case GroundClass::GC2: return "GC2";
    case GroundClass::GC3: return "GC3";
  }
  return "GC?";
}

std::string_view description(GroundClass gc) noexcept {
  switch (gc) {
    case GroundClass::GC1: return "Homogeneous highly weathered schist (soft)";
    case GroundClass::GC2: return "Homogeneous moderately weathered schist (firm)";
    case GroundClass::GC3: return "Homogeneous slightly weathered schist (hard)";
  }
  return "";
}

GroundClass parse_ground_class(std::string_view text) {
  if (text == "GC1") return GroundClass::GC1;
  if (text == "GC2") return GroundClass::GC2;
  if (text == "GC3") return GroundClass::GC3;
  throw Error(ErrorCode::UnknownGroundClass, "unknown ground class '" + std::string(text) + "'");
}

std::string_view cop_description(std::size_t j) noexcept {
  return j < kNumCop ? kCopNames[j] : std::string_view{};
}

std::string_view cxp_description(std::size_t j) noexcept {
  return j < kNumCxp ? kCxpNames[j] : std::string_view{};
}

FeatureVector features_of(const SensorRecord& r) noexcept {
  FeatureVector f{};
  std::copy(r.cop.begin(), r.cop.end(), f.begin());
  std::copy(r.cxp.begin(), r.cxp.end(), f.begin() + kNumCop);
  return f;
}

SensorRecord validate_record(const RawRecord& raw) {
  if (raw.cop.size() != kNumCop) {
    throw Error(ErrorCode::ArityMismatch,
                "cop must have 5 entries, got " + std::to_string(raw.cop.size()));
  }
  if (raw.cxp.size() != kNumCxp) {
    throw Error(ErrorCode::ArityMismatch,
                "cxp must have 19 entries, got " + std::to_string(raw.cxp.size()));
  }
  require_finite(raw.timestamp, "timestamp");
  require_finite(raw.tunnel_length, "tunnel_length");
  require_finite(raw.advance_rate, "advance_rate");
  require_finite(raw.working_pressure, "working_pressure");
  for (double v : raw.cop) require_finite(v, "cop");
  for (double v : raw.cxp) require_finite(v, "cxp");
  if (raw.advance_rate < 0.0) {
    throw Error(ErrorCode::NegativeMeasure, "advance_rate is negative");
  }
  if (raw.working_pressure < 0.0) {
    throw Error(ErrorCode::NegativeMeasure, "working_pressure is negative");
  }

  SensorRecord r;
  r.timestamp = raw.timestamp;
  r.tunnel_length = raw.tunnel_length;
  r.advance_rate = raw.advance_rate;
  r.working_pressure = raw.working_pressure;
  std::copy(raw.cop.begin(), raw.cop.end(), r.cop.begin());
  std::copy(raw.cxp.begin(), raw.cxp.end(), r.cxp.begin());
  r.ground_class = raw.ground_class;
  return r;
}

void OptimalityParams::check() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
  if (!std::isfinite(w1) || !std::isfinite(w2) || !std::isfinite(mb) || !std::isfinite(mar) ||
      !std::isfinite(ub) || !std::isfinite(norm_min) || !std::isfinite(norm_max)) {
    fail("optimality parameters must be finite");
  }
  if (w1 < 0.0) fail("w1 must be >= 0");
  if (w2 < w1) fail("w2 must be >= w1");
  if (!(mb > 0.0)) fail("MB must be > 0");
  if (mb > ub) fail("MB must not exceed UB");
  if (!(mar > 0.0)) fail("MAR must be > 0");
  if (!(norm_min < norm_max)) fail("norm_min must be < norm_max");
}

const OptimalityParams& OptimalityConfig::at(GroundClass gc) const {
  auto it = classes.find(gc);
  if (it == classes.end()) {
    throw Error(ErrorCode::InvalidConfig,
                "no optimality parameters for " + std::string(to_string(gc)));
  }
  return it->second;
}

bool Recommendation::hold() const noexcept {
  for (double d : deltas) {
    if (d != 0.0) return false;
  }
  return true;
}

std::optional<double> ValidationCell::ratio() const noexcept {
  if (num == 0) return std::nullopt;
  return static_cast<double>(val) / static_cast<double>(num);
}

namespace {

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

std::optional<double> ValidationTable::row_average(GroundClass gc) const {
  auto it = rows.find(gc);
  if (it == rows.end()) return std::nullopt;
  std::vector<double> defined;
  for (const auto& cell : it->second) {
    if (auto r = cell.ratio()) defined.push_back(*r);
  }
  return mean_of(defined);
}

std::optional<double> ValidationTable::column_average(std::size_t cop) const {
  std::vector<double> defined;
  for (const auto& [gc, row] : rows) {
    if (auto r = row.at(cop).ratio()) defined.push_back(*r);
  }
  return mean_of(defined);
}

std::optional<double> ValidationTable::grand_average() const {
  std::vector<double> defined;
  for (const auto& [gc, row] : rows) {
    for (const auto& cell : row) {
      if (auto r = cell.ratio()) defined.push_back(*r);
    }
  }
  return mean_of(defined);
}

// ---- JSON ---------------------------------------------------------------

void to_json(nlohmann::json& j, GroundClass gc) { j = std::string(to_string(gc)); }

void from_json(const nlohmann::json& j, GroundClass& gc) {
  gc = parse_ground_class(j.get<std::string>());
}

void to_json(nlohmann::json& j, const SensorRecord& r) {
  j = nlohmann::json{{"timestamp", r.timestamp},
                     {"tunnel_length", r.tunnel_length},
                     {"advance_rate", r.advance_rate},
                     {"working_pressure", r.working_pressure},
                     {"cop", r.cop},
                     {"cxp", r.cxp},
                     {"ground_class", r.ground_class}};
}

void from_json(const nlohmann::json& j, SensorRecord& r) {
  RawRecord raw;
  raw.timestamp = j.at("timestamp").get<double>();
  raw.tunnel_length = j.at("tunnel_length").get<double>();
  raw.advance_rate = j.at("advance_rate").get<double>();
  raw.working_pressure = j.at("working_pressure").get<double>();
  raw.cop = j.at("cop").get<std::vector<double>>();
  raw.cxp = j.at("cxp").get<std::vector<double>>();
  raw.ground_class = j.at("ground_class").get<GroundClass>();
  r = validate_record(raw);
}

void to_json(nlohmann::json& j, const FeatureStats& s) {
  j = nlohmann::json{{"mean", s.mean}, {"std", s.stddev}};
}

void from_json(const nlohmann::json& j, FeatureStats& s) {
  s.mean = to_array<kNumFeatures>(j, "mean");
  s.stddev = to_array<kNumFeatures>(j, "std");
  for (double v : s.stddev) {
    if (!(v > 0.0)) throw Error(ErrorCode::InvalidConfig, "feature std must be > 0");
  }
}

void to_json(nlohmann::json& j, const OptimalityParams& p) {
  j = nlohmann::json{{"w1", p.w1}, {"w2", p.w2},           {"mb", p.mb},
                     {"mar", p.mar}, {"ub", p.ub},         {"norm_min", p.norm_min},
                     {"norm_max", p.norm_max}};
}

void from_json(const nlohmann::json& j, OptimalityParams& p) {
  p.w1 = j.at("w1").get<double>();
  p.w2 = j.at("w2").get<double>();
  p.mb = j.at("mb").get<double>();
  p.mar = j.at("mar").get<double>();
  p.ub = j.at("ub").get<double>();
  p.norm_min = j.at("norm_min").get<double>();
  p.norm_max = j.at("norm_max").get<double>();
  p.check();
}

void to_json(nlohmann::json& j, const OptimalityConfig& c) {
  nlohmann::json classes = nlohmann::json::object();
  for (const auto& [gc, p] : c.classes) classes[std::string(to_string(gc))] = p;
  j = nlohmann::json{{"schema_version", kSchemaVersion}, {"classes", classes}};
}

void from_json(const nlohmann::json& j, OptimalityConfig& c) {
  c.classes.clear();
  for (const auto& [key, value] : j.at("classes").items()) {
    c.classes.emplace(parse_ground_class(key), value.get<OptimalityParams>());
  }
}

void to_json(nlohmann::json& j, const CredibilityCalibration& c) {
  j = nlohmann::json{{"q5", c.q5}, {"q95", c.q95}, {"split_fingerprint", c.split_fingerprint}};
}

void from_json(const nlohmann::json& j, CredibilityCalibration& c) {
  c.q5 = to_array<2>(j, "q5");
  c.q95 = to_array<2>(j, "q95");
  c.split_fingerprint = j.value("split_fingerprint", std::string{});
  for (std::size_t i = 0; i < 2; ++i) {
    if (!(c.q5[i] <= c.q95[i])) throw Error(ErrorCode::InvalidConfig, "calibration needs q5 <= q95");
  }
}

void to_json(nlohmann::json& j, const Recommendation& r) {
  j = nlohmann::json{{"schema_version", kSchemaVersion},
                     {"ground_class", r.ground_class},
                     {"gradients", r.gradients},
                     {"deltas", r.deltas},
                     {"at_bound", r.at_bound},
                     {"hold", r.hold()},
                     {"predicted_optimality", r.predicted_optimality},
                     {"predicted_raw", r.predicted_raw},
                     {"credibility", r.credibility}};
}

void to_json(nlohmann::json& j, const ValidationTable& t) {
  auto opt = [](std::optional<double> v) -> nlohmann::json {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  nlohmann::json rows = nlohmann::json::object();
  for (const auto& [gc, row] : t.rows) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& cell : row) {
      cells.push_back({{"val", cell.val}, {"num", cell.num}, {"ratio", opt(cell.ratio())}});
    }
    rows[std::string(to_string(gc))] = {{"cells", cells}, {"average", opt(t.row_average(gc))}};
  }
  nlohmann::json cols = nlohmann::json::array();
  for (std::size_t i = 0; i < kNumCop; ++i) cols.push_back(opt(t.column_average(i)));
  j = nlohmann::json{{"rows", rows}, {"column_averages", cols}, {"average", opt(t.grand_average())}};
}

void to_json(nlohmann::json& j, const ValidationReport& r) {
  j = nlohmann::json{{"schema_version", kSchemaVersion}, {"sv", r.sv}, {"cv", r.cv}};
}

}  // namespace tbm
