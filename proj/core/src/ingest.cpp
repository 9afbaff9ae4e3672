#include "tbm/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "csv.hpp"
#include "tbm/errors.hpp"
#include "tbm/stats.hpp"

namespace tbm::ingest {

namespace {

constexpr std::size_t kNumChannels = 2 + kNumFeatures;  // AR, WP, CoPs, CxPs
constexpr double kSpacingTolerance = 0.01;
constexpr double kGapFactor = 1.5;

std::string cop_name(std::size_t j) { return "cop_" + std::to_string(j + 1); }
std::string cxp_name(std::size_t j) { return "cxp_" + std::to_string(j + 1); }

std::vector<std::string> build_channel_names() {
  std::vector<std::string> names = {"advance_rate", "working_pressure"};
  for (std::size_t j = 0; j < kNumCop; ++j) names.push_back(cop_name(j));
  for (std::size_t j = 0; j < kNumCxp; ++j) names.push_back(cxp_name(j));
  return names;
}

std::string feature_name(std::size_t f) {
  return f < kNumCop ? cop_name(f) : cxp_name(f - kNumCop);
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += v[i];
  }
  return s;
}

// Column positions of every required field within a file's schema.
struct ColumnMap {
  std::size_t timestamp, tunnel_length, advance_rate, working_pressure, ground_class;
  std::array<std::size_t, kNumCop> cop;
  std::array<std::size_t, kNumCxp> cxp;
};

ColumnMap map_columns(const Schema& schema) {
  auto find = [&](const std::string& name) {
    auto it = std::find(schema.begin(), schema.end(), name);
    if (it == schema.end()) {
      throw Error(ErrorCode::SchemaMismatch, "schema lacks required column '" + name + "'");
    }
    return static_cast<std::size_t>(it - schema.begin());
  };
  ColumnMap m{};
  m.timestamp = find("timestamp");
  m.tunnel_length = find("tunnel_length");
  m.advance_rate = find("advance_rate");
  m.working_pressure = find("working_pressure");
  m.ground_class = find("ground_class");
  for (std::size_t j = 0; j < kNumCop; ++j) m.cop[j] = find(cop_name(j));
  for (std::size_t j = 0; j < kNumCxp; ++j) m.cxp[j] = find(cxp_name(j));
  return m;
}

void check_header(std::string_view header_line, const Schema& schema, const std::string& source) {
  if (header_line.size() >= 3 && header_line.substr(0, 3) == "\xEF\xBB\xBF") {
    header_line.remove_prefix(3);
  }
  const auto fields = csv::split(header_line);
  for (std::size_t i = 0; i < std::max(fields.size(), schema.size()); ++i) {
    if (i >= fields.size()) {
      throw Error(ErrorCode::SchemaMismatch,
                  source + ": header is missing column '" + schema[i] + "'");
    }
    if (i >= schema.size()) {
      throw Error(ErrorCode::SchemaMismatch,
                  source + ": unexpected header column '" + std::string(fields[i]) + "'");
    }
    if (fields[i] != schema[i]) {
      throw Error(ErrorCode::SchemaMismatch, source + ": header column " + std::to_string(i + 1) +
                                                 " is '" + std::string(fields[i]) +
                                                 "', expected '" + schema[i] + "'");
    }
  }
}

// One parsed row; nullopt when the row has an empty field.
std::optional<RawRecord> parse_row(const std::vector<std::string_view>& fields,
                                   const Schema& schema, const ColumnMap& m, std::size_t row,
                                   const std::string& source) {
  if (fields.size() != schema.size()) {
    throw Error(ErrorCode::ParseError, source + ": row " + std::to_string(row) + " has " +
                                           std::to_string(fields.size()) + " fields, expected " +
                                           std::to_string(schema.size()));
  }
  for (auto f : fields) {
    if (f.empty()) return std::nullopt;
  }
  auto number = [&](std::size_t col) {
    auto v = csv::parse_double(fields[col]);
    if (!v) {
      throw Error(ErrorCode::ParseError, source + ": row " + std::to_string(row) + ", column '" +
                                             schema[col] + "': cannot parse '" +
                                             std::string(fields[col]) + "' as a number");
    }
    return *v;
  };
  RawRecord raw;
  raw.timestamp = number(m.timestamp);
  raw.tunnel_length = number(m.tunnel_length);
  raw.advance_rate = number(m.advance_rate);
  raw.working_pressure = number(m.working_pressure);
  raw.cop.resize(kNumCop);
  raw.cxp.resize(kNumCxp);
  for (std::size_t j = 0; j < kNumCop; ++j) raw.cop[j] = number(m.cop[j]);
  for (std::size_t j = 0; j < kNumCxp; ++j) raw.cxp[j] = number(m.cxp[j]);
  try {
    raw.ground_class = parse_ground_class(fields[m.ground_class]);
  } catch (const Error&) {
    throw Error(ErrorCode::ParseError, source + ": row " + std::to_string(row) +
                                           ", column 'ground_class': unknown value '" +
                                           std::string(fields[m.ground_class]) + "'");
  }
  return raw;
}

SensorRecord validated(const RawRecord& raw, std::size_t row, const std::string& source) {
  try {
    return validate_record(raw);
  } catch (const Error& e) {
    throw Error(e.code(), source + ": row " + std::to_string(row) + ": " + e.what());
  }
}

void write_record_fields(std::ostream& out, const SensorRecord& r) {
  out << csv::format_double(r.timestamp) << ',' << csv::format_double(r.tunnel_length) << ','
      << csv::format_double(r.advance_rate) << ',' << csv::format_double(r.working_pressure);
  for (double v : r.cop) out << ',' << csv::format_double(v);
  for (double v : r.cxp) out << ',' << csv::format_double(v);
  out << ',' << to_string(r.ground_class);
}

bool same_segment(const SensorRecord& a, const SensorRecord& b, double period) {
  const double dt = b.timestamp - a.timestamp;
  return a.ground_class == b.ground_class && dt > 0.0 && dt <= kGapFactor * period;
}

}  // namespace

Schema default_schema() {
  Schema s = {"timestamp", "tunnel_length", "advance_rate", "working_pressure"};
  for (std::size_t j = 0; j < kNumCop; ++j) s.push_back(cop_name(j));
  for (std::size_t j = 0; j < kNumCxp; ++j) s.push_back(cxp_name(j));
  s.push_back("ground_class");
  return s;
}

const std::vector<std::string>& measurement_channels() {
  static const std::vector<std::string> names = build_channel_names();
  return names;
}

double channel_value(const SensorRecord& r, std::size_t channel) noexcept {
  if (channel == 0) return r.advance_rate;
  if (channel == 1) return r.working_pressure;
  if (channel < 2 + kNumCop) return r.cop[channel - 2];
  return r.cxp[channel - 2 - kNumCop];
}

double& channel_ref(SensorRecord& r, std::size_t channel) noexcept {
  if (channel == 0) return r.advance_rate;
  if (channel == 1) return r.working_pressure;
  if (channel < 2 + kNumCop) return r.cop[channel - 2];
  return r.cxp[channel - 2 - kNumCop];
}

LoadResult parse_csv(std::istream& in, const Schema& schema, const std::string& source) {
  const ColumnMap columns = map_columns(schema);
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::SchemaMismatch, source + ": missing header row");
  }
  check_header(line, schema, source);

  LoadResult result;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (csv::trim(line).empty()) continue;
    ++row;
    const auto fields = csv::split(line);
    auto raw = parse_row(fields, schema, columns, row, source);
    if (!raw) {
      ++result.dropped_rows;
      continue;
    }
    result.records.push_back(validated(*raw, row, source));
  }
  std::stable_sort(result.records.begin(), result.records.end(),
                   [](const SensorRecord& a, const SensorRecord& b) {
                     return a.timestamp < b.timestamp;
                   });
  return result;
}

LoadResult load_csv(const std::filesystem::path& path, const Schema& schema) {
  auto in = open_input(path);
  return parse_csv(in, schema, path.filename().string());
}

void write_csv(std::ostream& out, std::span<const SensorRecord> records) {
  out << join(default_schema()) << '\n';
  for (const auto& r : records) {
    write_record_fields(out, r);
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, std::span<const SensorRecord> records) {
  auto out = open_output(path);
  write_csv(out, records);
}

// ---- cleansing ----------------------------------------------------------

CleansingReport& CleansingReport::operator+=(const CleansingReport& o) noexcept {
  samples_in += o.samples_in;
  samples_out += o.samples_out;
  retraction += o.retraction;
  nonadvancing += o.nonadvancing;
  unrealistic += o.unrealistic;
  transient += o.transient;
  return *this;
}

PlausibilityRanges fit_plausibility(std::span<const SensorRecord> records, double low_pct,
                                    double high_pct) {
  PlausibilityRanges ranges;
  if (records.empty()) return ranges;
  const auto& names = measurement_channels();
  std::vector<double> values(records.size());
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    for (std::size_t i = 0; i < records.size(); ++i) values[i] = channel_value(records[i], c);
    ranges[names[c]] = {stats::percentile_nearest_rank(values, low_pct),
                        stats::percentile_nearest_rank(values, high_pct)};
  }
  return ranges;
}

CleanseResult cleanse(std::span<const SensorRecord> records, const CleanseConfig& cfg) {
  enum class Status { Keep, Retraction, NonAdvancing, Transient, Unrealistic };
  const std::size_t n = records.size();
  std::vector<Status> status(n, Status::Keep);

  // (a) + (b): a sample advances only past the last advancing length.
  double reference = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double len = records[i].tunnel_length;
    if (i > 0 && len < records[i - 1].tunnel_length) {
      status[i] = Status::Retraction;
    } else if (len <= reference) {
      status[i] = Status::NonAdvancing;
    } else {
      reference = len;
    }
  }

  // (d): trim transients next to every interruption.
  auto interrupted = [&](std::size_t i) {
    return status[i] == Status::Retraction || status[i] == Status::NonAdvancing;
  };
  std::size_t i = 0;
  while (i < n) {
    if (interrupted(i)) {
      ++i;
      continue;
    }
    std::size_t end = i;
    while (end + 1 < n && !interrupted(end + 1)) ++end;
    const bool after_stop = i > 0;
    const bool before_stop = end + 1 < n;
    const double t_first = records[i].timestamp;
    const double t_last = records[end].timestamp;
    for (std::size_t k = i; k <= end; ++k) {
      const double t = records[k].timestamp;
      if ((after_stop && t < t_first + cfg.transient_seconds) ||
          (before_stop && t > t_last - cfg.transient_seconds)) {
        status[k] = Status::Transient;
      }
    }
    i = end + 1;
  }

  // (c): plausibility ranges.
  const auto& names = measurement_channels();
  if (!cfg.plausibility.empty()) {
    for (std::size_t k = 0; k < n; ++k) {
      if (status[k] != Status::Keep) continue;
      for (std::size_t c = 0; c < kNumChannels; ++c) {
        auto it = cfg.plausibility.find(names[c]);
        if (it == cfg.plausibility.end()) continue;
        const double v = channel_value(records[k], c);
        if (v < it->second.first || v > it->second.second) {
          status[k] = Status::Unrealistic;
          break;
        }
      }
    }
  }

  CleanseResult result;
  result.report.samples_in = n;
  for (std::size_t k = 0; k < n; ++k) {
    switch (status[k]) {
      case Status::Keep: result.records.push_back(records[k]); break;
      case Status::Retraction: ++result.report.retraction; break;
      case Status::NonAdvancing: ++result.report.nonadvancing; break;
      case Status::Transient: ++result.report.transient; break;
      case Status::Unrealistic: ++result.report.unrealistic; break;
    }
  }
  result.report.samples_out = result.records.size();
  if (result.records.empty()) {
    throw Error(ErrorCode::EmptyAfterCleansing, "no samples survive cleansing");
  }
  return result;
}

// ---- smoothing ----------------------------------------------------------

std::vector<std::pair<std::size_t, std::size_t>> segments(std::span<const SensorRecord> records,
                                                          double sample_period) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (records.empty()) return out;
  std::size_t begin = 0;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const double dt = records[i].timestamp - records[i - 1].timestamp;
    const bool gc_change = records[i].ground_class != records[i - 1].ground_class;
    if (gc_change || dt > kGapFactor * sample_period) {
      out.emplace_back(begin, i);
      begin = i;
      continue;
    }
    if (std::abs(dt - sample_period) > kSpacingTolerance * sample_period) {
      std::ostringstream msg;
      msg << "sample spacing " << dt << " s at t=" << records[i].timestamp
          << " deviates from the " << sample_period << " s period by more than 1%";
      throw Error(ErrorCode::NonUniformSampling, msg.str());
    }
  }
  out.emplace_back(begin, records.size());
  return out;
}

std::vector<double> gaussian_kernel(double sigma_samples, double truncate_sigmas) {
  const auto radius = static_cast<std::size_t>(std::ceil(truncate_sigmas * sigma_samples));
  std::vector<double> w(2 * radius + 1);
  double total = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double off = static_cast<double>(k) - static_cast<double>(radius);
    w[k] = std::exp(-0.5 * off * off / (sigma_samples * sigma_samples));
    total += w[k];
  }
  for (double& v : w) v /= total;
  return w;
}

std::vector<SensorRecord> smooth(std::span<const SensorRecord> records, const SmoothConfig& cfg) {
  std::vector<SensorRecord> out(records.begin(), records.end());
  const auto kernel =
      gaussian_kernel(cfg.bandwidth_seconds / cfg.sample_period, cfg.truncate_sigmas);
  const auto radius = static_cast<std::ptrdiff_t>(kernel.size() / 2);

  for (auto [begin, end] : segments(records, cfg.sample_period)) {
    const auto b = static_cast<std::ptrdiff_t>(begin);
    const auto e = static_cast<std::ptrdiff_t>(end);
    for (std::ptrdiff_t i = b; i < e; ++i) {
      const std::ptrdiff_t lo = std::max(b, i - radius);
      const std::ptrdiff_t hi = std::min(e - 1, i + radius);
      double wsum = 0.0;
      for (std::ptrdiff_t k = lo; k <= hi; ++k) wsum += kernel[static_cast<std::size_t>(k - i + radius)];
      for (std::size_t c = 0; c < kNumChannels; ++c) {
        double acc = 0.0;
        for (std::ptrdiff_t k = lo; k <= hi; ++k) {
          acc += kernel[static_cast<std::size_t>(k - i + radius)] *
                 channel_value(records[static_cast<std::size_t>(k)], c);
        }
        channel_ref(out[static_cast<std::size_t>(i)], c) = acc / wsum;
      }
    }
  }
  return out;
}

// ---- standardization ----------------------------------------------------

FeatureStats fit_feature_stats(std::span<const SensorRecord> records) {
  if (records.size() < 2) {
    throw Error(ErrorCode::InsufficientData, "standardization needs at least 2 records");
  }
  FeatureStats s;
  std::vector<double> column(records.size());
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& r = records[i];
      column[i] = f < kNumCop ? r.cop[f] : r.cxp[f - kNumCop];
    }
    s.mean[f] = stats::mean(column);
    s.stddev[f] = stats::population_std(column);
    if (!(s.stddev[f] > 1e-12 * std::max(1.0, std::abs(s.mean[f])))) {
      throw Error(ErrorCode::ZeroVariance, "channel '" + feature_name(f) + "' is constant");
    }
  }
  return s;
}

FeatureVector standardize(const FeatureVector& raw, const FeatureStats& stats) noexcept {
  FeatureVector z{};
  for (std::size_t f = 0; f < kNumFeatures; ++f) z[f] = (raw[f] - stats.mean[f]) / stats.stddev[f];
  return z;
}

FeatureVector unstandardize(const FeatureVector& z, const FeatureStats& stats) noexcept {
  FeatureVector raw{};
  for (std::size_t f = 0; f < kNumFeatures; ++f) raw[f] = z[f] * stats.stddev[f] + stats.mean[f];
  return raw;
}

namespace {

SensorRecord with_features(SensorRecord r, const FeatureVector& f) noexcept {
  std::copy(f.begin(), f.begin() + kNumCop, r.cop.begin());
  std::copy(f.begin() + kNumCop, f.end(), r.cxp.begin());
  return r;
}

}  // namespace

SensorRecord unstandardize(const SensorRecord& z, const FeatureStats& stats) noexcept {
  return with_features(z, unstandardize(features_of(z), stats));
}

StandardizeResult standardize(std::span<const SensorRecord> records,
                              const std::optional<FeatureStats>& stats) {
  StandardizeResult result;
  result.stats = stats ? *stats : fit_feature_stats(records);
  result.records.reserve(records.size());
  for (const auto& r : records) {
    result.records.push_back(with_features(r, standardize(features_of(r), result.stats)));
  }
  return result;
}

// ---- operator actions ---------------------------------------------------

double valley_threshold(std::span<const double> abs_diffs) {
  if (abs_diffs.size() < 2) throw Error(ErrorCode::Unimodal, "too few differences");
  const auto [min_it, max_it] = std::minmax_element(abs_diffs.begin(), abs_diffs.end());
  const double lo = *min_it;
  const double range = *max_it - lo;
  if (!(range > 0.0)) throw Error(ErrorCode::Unimodal, "all differences are equal");

  const double n = static_cast<double>(abs_diffs.size());
  const double iqr = stats::percentile_nearest_rank(abs_diffs, 75.0) -
                     stats::percentile_nearest_rank(abs_diffs, 25.0);
  double width = 2.0 * iqr / std::cbrt(n);
  if (!(width > 0.0)) width = range / std::ceil(2.0 * std::cbrt(n));  // Rice rule
  constexpr double kMaxBins = 10000.0;
  constexpr std::size_t kMinModeMass = 3;
  double bins_d = std::ceil(range / width);
  if (bins_d > kMaxBins) {
    bins_d = kMaxBins;
    width = range / kMaxBins;
  }
  const auto bins = static_cast<std::size_t>(std::max(1.0, bins_d));
  std::vector<std::size_t> counts(bins, 0);
  for (double d : abs_diffs) {
    auto b = static_cast<std::size_t>((d - lo) / width);
    counts[std::min(b, bins - 1)]++;
  }

  // Runs of equal counts; a run is a peak if it beats both neighbours.
  struct Run {
    std::size_t first, last, count;
  };
  std::vector<Run> runs;
  for (std::size_t b = 0; b < bins; ++b) {
    if (!runs.empty() && runs.back().count == counts[b]) {
      runs.back().last = b;
    } else {
      runs.push_back({b, b, counts[b]});
    }
  }
  std::vector<std::size_t> peaks;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const bool left_ok = r == 0 || runs[r - 1].count < runs[r].count;
    const bool right_ok = r + 1 == runs.size() || runs[r + 1].count < runs[r].count;
    if (runs[r].count > 0 && left_ok && right_ok) peaks.push_back(r);
  }
  if (peaks.size() < 2) throw Error(ErrorCode::Unimodal, "fewer than two histogram modes");

  std::size_t main_peak = peaks.front();
  for (auto p : peaks) {
    if (runs[p].count > runs[main_peak].count) main_peak = p;
  }
  auto centre = [&](const Run& r) { return 0.5 * static_cast<double>(r.first + r.last); };

  double best_score = 0.0;
  std::size_t best_lo = 0;
  std::size_t best_valley = 0;
  for (auto p : peaks) {
    if (p == main_peak) continue;
    const std::size_t a = std::min(p, main_peak);
    const std::size_t b = std::max(p, main_peak);
    std::size_t valley = std::numeric_limits<std::size_t>::max();
    for (std::size_t r = a + 1; r < b; ++r) valley = std::min(valley, runs[r].count);
    if (valley == std::numeric_limits<std::size_t>::max()) continue;
    if (2 * valley > runs[p].count) continue;  // not a real drop
    // A stray tail bin is not a mode.
    std::size_t v = a + 1;
    while (runs[v].count != valley) ++v;
    std::size_t mass = 0;
    const std::size_t from = p > main_peak ? v + 1 : 0;
    const std::size_t to = p > main_peak ? runs.size() : v;
    for (std::size_t r = from; r < to; ++r) mass += runs[r].count * (runs[r].last - runs[r].first + 1);
    if (mass < kMinModeMass) continue;
    const double drop = static_cast<double>(runs[p].count - valley);
    const double score = drop * std::abs(centre(runs[p]) - centre(runs[main_peak]));
    if (score > best_score) {
      best_score = score;
      best_lo = a;
      best_valley = valley;
    }
  }
  if (!(best_score > 0.0)) throw Error(ErrorCode::Unimodal, "no valley between histogram modes");

  // First valley run above the lower mode; later empty bins may sit inside
  // a sparse upper mode.
  std::size_t valley_run = best_lo + 1;
  while (runs[valley_run].count != best_valley) ++valley_run;
  const double mid_bin =
      0.5 * static_cast<double>(runs[valley_run].first + runs[valley_run].last) + 0.5;
  return lo + mid_bin * width;
}

ActionSeries reconstruct_actions(std::span<const SensorRecord> records, const ActionConfig& cfg) {
  if (records.size() < cfg.min_records) {
    throw Error(ErrorCode::InsufficientData,
                "action reconstruction needs at least " + std::to_string(cfg.min_records) +
                    " records, got " + std::to_string(records.size()));
  }
  constexpr double kDeadBand = 1e-9;
  ActionSeries out;
  for (std::size_t j = 0; j < kNumCop; ++j) {
    std::vector<double> diffs;
    std::vector<std::size_t> at;
    for (std::size_t i = 1; i < records.size(); ++i) {
      if (!same_segment(records[i - 1], records[i], cfg.sample_period)) continue;
      diffs.push_back(std::abs(records[i].cop[j] - records[i - 1].cop[j]));
      at.push_back(i);
    }
    if (diffs.empty()) {
      out.threshold[j] = kDeadBand;
      out.used_fallback[j] = true;
      continue;
    }
    double threshold = 0.0;
    try {
      threshold = valley_threshold(diffs);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Unimodal) throw;
      threshold = stats::percentile_nearest_rank(diffs, cfg.fallback_quantile);
      out.used_fallback[j] = true;
    }
    out.threshold[j] = std::max(threshold, kDeadBand);
    for (std::size_t k = 0; k < diffs.size(); ++k) {
      if (diffs[k] > out.threshold[j]) {
        out.indices[j].push_back(at[k]);
        out.timestamps[j].push_back(records[at[k]].timestamp);
      }
    }
  }
  return out;
}

// ---- processed corpus ---------------------------------------------------

Schema corpus_schema() {
  Schema s = {"drive"};
  for (auto& c : default_schema()) s.push_back(c);
  for (std::size_t j = 0; j < kNumCop; ++j) s.push_back("action_" + std::to_string(j + 1));
  return s;
}

std::vector<CorpusRecord> load_corpus(const std::filesystem::path& path) {
  auto in = open_input(path);
  const Schema schema = corpus_schema();
  const ColumnMap columns = map_columns(schema);
  const std::string source = path.filename().string();
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::SchemaMismatch, source + ": missing header row");
  }
  check_header(line, schema, source);

  std::vector<CorpusRecord> corpus;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (csv::trim(line).empty()) continue;
    ++row;
    const auto fields = csv::split(line);
    auto raw = parse_row(fields, schema, columns, row, source);
    if (!raw) {
      throw Error(ErrorCode::ParseError, source + ": row " + std::to_string(row) + " has gaps");
    }
    CorpusRecord c;
    auto drive = csv::parse_double(fields[0]);
    if (!drive) throw Error(ErrorCode::ParseError, source + ": row " + std::to_string(row) + ", column 'drive'");
    c.drive = static_cast<int>(*drive);
    c.record = validated(*raw, row, source);
    for (std::size_t j = 0; j < kNumCop; ++j) {
      c.action[j] = fields[schema.size() - kNumCop + j] == "1";
    }
    corpus.push_back(std::move(c));
  }
  return corpus;
}

void write_corpus(const std::filesystem::path& path, std::span<const CorpusRecord> corpus) {
  auto out = open_output(path);
  out << join(corpus_schema()) << '\n';
  for (const auto& c : corpus) {
    out << c.drive << ',';
    write_record_fields(out, c.record);
    for (bool a : c.action) out << ',' << (a ? 1 : 0);
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::Io, "failed writing '" + path.string() + "'");
}

std::vector<SensorRecord> records_of(std::span<const CorpusRecord> corpus) {
  std::vector<SensorRecord> out;
  out.reserve(corpus.size());
  for (const auto& c : corpus) out.push_back(c.record);
  return out;
}

std::vector<std::optional<std::size_t>> successors(std::span<const CorpusRecord> corpus,
                                                   double sample_period) {
  std::vector<std::optional<std::size_t>> next(corpus.size());
  for (std::size_t i = 0; i + 1 < corpus.size(); ++i) {
    const auto& a = corpus[i];
    const auto& b = corpus[i + 1];
    const double dt = b.record.timestamp - a.record.timestamp;
    if (a.drive == b.drive && a.record.ground_class == b.record.ground_class &&
        std::abs(dt - sample_period) <= kSpacingTolerance * sample_period) {
      next[i] = i + 1;
    }
  }
  return next;
}

void to_json(nlohmann::json& j, const CleansingReport& r) {
  j = nlohmann::json{{"samples_in", r.samples_in},
                     {"samples_out", r.samples_out},
                     {"removed_by_rule",
                      {{"retraction", r.retraction},
                       {"nonadvancing", r.nonadvancing},
                       {"unrealistic", r.unrealistic},
                       {"transient", r.transient}}}};
}

void to_json(nlohmann::json& j, const ActionSeries& a) {
  j = nlohmann::json::array();
  for (std::size_t k = 0; k < kNumCop; ++k) {
    j.push_back({{"cop", k + 1},
                 {"threshold", a.threshold[k]},
                 {"used_fallback", a.used_fallback[k]},
                 {"count", a.timestamps[k].size()}});
  }
}

}  // namespace tbm::ingest
