#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace tbm {

inline constexpr std::size_t kNumCop = 5;
inline constexpr std::size_t kNumCxp = 19;
inline constexpr std::size_t kNumFeatures = kNumCop + kNumCxp;
inline constexpr int kSchemaVersion = 1;

using CopVector = std::array<double, kNumCop>;
using CxpVector = std::array<double, kNumCxp>;
using FeatureVector = std::array<double, kNumFeatures>;

enum class GroundClass { GC1 = 0, GC2 = 1, GC3 = 2 };

inline constexpr std::array<GroundClass, 3> kGroundClasses = {
    GroundClass::GC1, GroundClass::GC2, GroundClass::GC3};

std::string_view to_string(GroundClass gc) noexcept;
std::string_view description(GroundClass gc) noexcept;
// Throws Error(UnknownGroundClass).
GroundClass parse_ground_class(std::string_view text);
inline std::size_t index_of(GroundClass gc) noexcept {
  return static_cast<std::size_t>(gc);
}

// Operator-adjustable setpoints, in column order cop_1..cop_5.
std::string_view cop_description(std::size_t j) noexcept;
// Context channels cxp_1..cxp_19: 8 pressures, 4 flow rates, 7 others.
std::string_view cxp_description(std::size_t j) noexcept;

struct SensorRecord {
  double timestamp = 0.0;       // s since drive start
  double tunnel_length = 0.0;   // m
  double advance_rate = 0.0;    // mm/min
  double working_pressure = 0.0;  // bar
  CopVector cop{};
  CxpVector cxp{};
  GroundClass ground_class = GroundClass::GC1;

  friend bool operator==(const SensorRecord&, const SensorRecord&) = default;
};

// Concatenated model input: [cop_1..cop_5, cxp_1..cxp_19].
FeatureVector features_of(const SensorRecord& r) noexcept;

// Unvalidated record as it arrives from a parser or a request body.
struct RawRecord {
  double timestamp = 0.0;
  double tunnel_length = 0.0;
  double advance_rate = 0.0;
  double working_pressure = 0.0;
  std::vector<double> cop;
  std::vector<double> cxp;
  GroundClass ground_class = GroundClass::GC1;
};

// Throws Error(NonFinite | ArityMismatch | NegativeMeasure).
SensorRecord validate_record(const RawRecord& raw);

// Per-feature mean and population std over the 24 model inputs.
struct FeatureStats {
  FeatureVector mean{};
  FeatureVector stddev{};

  friend bool operator==(const FeatureStats&, const FeatureStats&) = default;
};

// Parameters of the piecewise-linear optimality score for one ground class.
struct OptimalityParams {
  double w1 = 0.8;
  double w2 = 3.0;
  double mb = 0.0;   // bar, margin bound
  double mar = 0.0;  // mm/min, max observed advance rate
  double ub = 150.0; // bar, shutdown threshold
  double norm_min = 0.0;
  double norm_max = 1.0;

  // Throws Error(InvalidConfig) naming the violated invariant.
  void check() const;

  friend bool operator==(const OptimalityParams&, const OptimalityParams&) = default;
};

struct OptimalityConfig {
  std::map<GroundClass, OptimalityParams> classes;

  // Throws Error(InvalidConfig) if the class is absent.
  const OptimalityParams& at(GroundClass gc) const;

  friend bool operator==(const OptimalityConfig&, const OptimalityConfig&) = default;
};

// 5th/95th percentiles of the two neighbour error metrics (prediction error,
// first-order step error) over a model's validation split.
struct CredibilityCalibration {
  std::array<double, 2> q5{};
  std::array<double, 2> q95{};
  std::string split_fingerprint;

  friend bool operator==(const CredibilityCalibration&, const CredibilityCalibration&) = default;
};

struct Recommendation {
  CopVector gradients{};   // d f / d CoP_j, standardized space
  CopVector deltas{};      // suggested change, raw CoP units
  std::array<bool, kNumCop> at_bound{};
  double predicted_optimality = 0.0;  // 0..100
  double predicted_raw = 0.0;
  double credibility = 0.0;           // 0..1
  GroundClass ground_class = GroundClass::GC1;

  bool hold() const noexcept;
};

// Integer counters for one (ground class, CoP) validation cell.
struct ValidationCell {
  long long val = 0;
  long long num = 0;

  std::optional<double> ratio() const noexcept;
  ValidationCell& operator+=(const ValidationCell& o) noexcept {
    val += o.val;
    num += o.num;
    return *this;
  }
  friend bool operator==(const ValidationCell&, const ValidationCell&) = default;
};

using CellRow = std::array<ValidationCell, kNumCop>;

// Per-method table: rows are ground classes, columns are CoPs.
struct ValidationTable {
  std::map<GroundClass, CellRow> rows;

  std::optional<double> row_average(GroundClass gc) const;
  std::optional<double> column_average(std::size_t cop) const;
  std::optional<double> grand_average() const;
};

struct ValidationReport {
  // Keyed by recommender label, e.g. "GB" or "NN".
  std::map<std::string, ValidationTable> sv;
  std::map<std::string, ValidationTable> cv;
};

// JSON (nlohmann ADL hooks).
void to_json(nlohmann::json& j, GroundClass gc);
void from_json(const nlohmann::json& j, GroundClass& gc);
void to_json(nlohmann::json& j, const SensorRecord& r);
void from_json(const nlohmann::json& j, SensorRecord& r);
void to_json(nlohmann::json& j, const FeatureStats& s);
void from_json(const nlohmann::json& j, FeatureStats& s);
void to_json(nlohmann::json& j, const OptimalityParams& p);
void from_json(const nlohmann::json& j, OptimalityParams& p);
void to_json(nlohmann::json& j, const OptimalityConfig& c);
void from_json(const nlohmann::json& j, OptimalityConfig& c);
void to_json(nlohmann::json& j, const CredibilityCalibration& c);
void from_json(const nlohmann::json& j, CredibilityCalibration& c);
void to_json(nlohmann::json& j, const Recommendation& r);
void to_json(nlohmann::json& j, const ValidationTable& t);
void to_json(nlohmann::json& j, const ValidationReport& r);

}  // namespace tbm
