#include "tbm/stats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>

#include "tbm/errors.hpp"

namespace tbm::stats {

double percentile_nearest_rank(std::span<const double> values, double p) {
  if (values.empty()) {
    throw Error(ErrorCode::InsufficientData, "percentile of an empty sample");
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double population_std(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

void Fingerprint::add_bytes(const unsigned char* data, std::size_t n) noexcept {
  for (std::size_t i = 0; i < n; ++i) {
    state_ ^= data[i];
    state_ *= 1099511628211ull;
  }
}

void Fingerprint::add(std::uint64_t v) noexcept {
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  add_bytes(bytes, 8);
}

void Fingerprint::add(double v) noexcept { add(std::bit_cast<std::uint64_t>(v)); }

void Fingerprint::add(const SensorRecord& r) noexcept {
  add(r.timestamp);
  add(r.tunnel_length);
  add(r.advance_rate);
  add(r.working_pressure);
  for (double v : r.cop) add(v);
  for (double v : r.cxp) add(v);
  add(static_cast<std::uint64_t>(r.ground_class));
}

std::string Fingerprint::hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(state_));
  return buf;
}

std::string fingerprint(std::span<const SensorRecord> records) {
  Fingerprint fp;
  fp.add(static_cast<std::uint64_t>(records.size()));
  for (const auto& r : records) fp.add(r);
  return fp.hex();
}

}  // namespace tbm::stats
