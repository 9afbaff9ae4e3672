#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tbm/domain.hpp"

namespace tbm::ingest {

// Ordered CSV column names. The header of every input file must equal it.
using Schema = std::vector<std::string>;

// timestamp, tunnel_length, advance_rate, working_pressure, cop_1..cop_5,
// cxp_1..cxp_19, ground_class
Schema default_schema();

// Names of the 26 measurement channels (AR, WP, CoPs, CxPs) used for
// plausibility ranges and smoothing.
const std::vector<std::string>& measurement_channels();
double channel_value(const SensorRecord& r, std::size_t channel) noexcept;
double& channel_ref(SensorRecord& r, std::size_t channel) noexcept;

struct LoadResult {
  std::vector<SensorRecord> records;  // timestamp order
  std::size_t dropped_rows = 0;       // rows with empty fields
};

// Throws Error(SchemaMismatch | ParseError | Io) or any validate_record error.
LoadResult load_csv(const std::filesystem::path& path, const Schema& schema = default_schema());
LoadResult parse_csv(std::istream& in, const Schema& schema, const std::string& source);
void write_csv(std::ostream& out, std::span<const SensorRecord> records);
void write_csv(const std::filesystem::path& path, std::span<const SensorRecord> records);

// ---- cleansing ----------------------------------------------------------

struct CleansingReport {
  std::size_t samples_in = 0;
  std::size_t samples_out = 0;
  std::size_t retraction = 0;
  std::size_t nonadvancing = 0;
  std::size_t unrealistic = 0;
  std::size_t transient = 0;

  std::size_t removed() const noexcept {
    return retraction + nonadvancing + unrealistic + transient;
  }
  CleansingReport& operator+=(const CleansingReport& o) noexcept;
  friend bool operator==(const CleansingReport&, const CleansingReport&) = default;
};

using PlausibilityRanges = std::map<std::string, std::pair<double, double>>;

struct CleanseConfig {
  double sample_period = 10.0;      // s
  double transient_seconds = 60.0;  // trimmed at both ends of a segment
  PlausibilityRanges plausibility;  // channel -> [lo, hi]; absent = unchecked
};

// [p0.1, p99.9] per measurement channel.
PlausibilityRanges fit_plausibility(std::span<const SensorRecord> records,
                                    double low_pct = 0.1, double high_pct = 99.9);

struct CleanseResult {
  std::vector<SensorRecord> records;
  CleansingReport report;
};

// Removes retraction phases, non-advancing runs, implausible samples and the
// start-up/shut-down transients around every interruption.
// Throws Error(EmptyAfterCleansing).
CleanseResult cleanse(std::span<const SensorRecord> records, const CleanseConfig& cfg = {});

// ---- smoothing ----------------------------------------------------------

struct SmoothConfig {
  double bandwidth_seconds = 30.0;  // kernel std
  double sample_period = 10.0;
  double truncate_sigmas = 3.0;
};

// Contiguous [begin, end) runs of uniformly sampled records of one ground
// class. Breaks at gaps above 1.5 periods. Throws Error(NonUniformSampling)
// if any in-segment spacing deviates from the period by more than 1%.
std::vector<std::pair<std::size_t, std::size_t>> segments(std::span<const SensorRecord> records,
                                                          double sample_period);

// Normalized truncated Gaussian weights for offsets -radius..radius.
std::vector<double> gaussian_kernel(double sigma_samples, double truncate_sigmas);

std::vector<SensorRecord> smooth(std::span<const SensorRecord> records,
                                 const SmoothConfig& cfg = {});

// ---- standardization ----------------------------------------------------

struct StandardizeResult {
  std::vector<SensorRecord> records;  // cop/cxp replaced by z-scores
  FeatureStats stats;
};

// Fits stats when none are given (>= 2 records, throws ZeroVariance naming
// the channel), otherwise applies the supplied ones.
StandardizeResult standardize(std::span<const SensorRecord> records,
                              const std::optional<FeatureStats>& stats = std::nullopt);
FeatureStats fit_feature_stats(std::span<const SensorRecord> records);
FeatureVector standardize(const FeatureVector& raw, const FeatureStats& stats) noexcept;
FeatureVector unstandardize(const FeatureVector& z, const FeatureStats& stats) noexcept;
SensorRecord unstandardize(const SensorRecord& z, const FeatureStats& stats) noexcept;

// ---- operator actions ---------------------------------------------------

struct ActionSeries {
  std::array<std::vector<double>, kNumCop> timestamps;
  std::array<std::vector<std::size_t>, kNumCop> indices;  // into the input
  std::array<double, kNumCop> threshold{};
  std::array<bool, kNumCop> used_fallback{};
};

struct ActionConfig {
  double fallback_quantile = 95.0;
  double sample_period = 10.0;
  std::size_t min_records = 100;
};

// Threshold at the valley between the two dominant modes of a
// Freedman-Diaconis histogram of |diff|. Throws Error(Unimodal).
double valley_threshold(std::span<const double> abs_diffs);

// Throws Error(InsufficientData) below cfg.min_records.
ActionSeries reconstruct_actions(std::span<const SensorRecord> records,
                                 const ActionConfig& cfg = {});

// ---- processed corpus ---------------------------------------------------

using ActionFlags = std::array<bool, kNumCop>;

struct CorpusRecord {
  int drive = 0;
  SensorRecord record;
  ActionFlags action{};

  friend bool operator==(const CorpusRecord&, const CorpusRecord&) = default;
};

// Schema plus a leading `drive` column and trailing action_1..action_5.
Schema corpus_schema();
std::vector<CorpusRecord> load_corpus(const std::filesystem::path& path);
void write_corpus(const std::filesystem::path& path, std::span<const CorpusRecord> corpus);
std::vector<SensorRecord> records_of(std::span<const CorpusRecord> corpus);

// Position of the successor sample (same drive and class, one period later).
std::vector<std::optional<std::size_t>> successors(std::span<const CorpusRecord> corpus,
                                                   double sample_period = 10.0);

void to_json(nlohmann::json& j, const CleansingReport& r);
void to_json(nlohmann::json& j, const ActionSeries& a);

}  // namespace tbm::ingest
