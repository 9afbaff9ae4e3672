#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tbm/domain.hpp"

namespace tbm::stats {

// Nearest-rank percentile: the ceil(p/100 * n)-th smallest value (1-based),
// with p = 0 mapping to the minimum. Throws Error(InsufficientData) on empty input.
double percentile_nearest_rank(std::span<const double> values, double p);

double mean(std::span<const double> values);
// Population standard deviation (divides by n).
double population_std(std::span<const double> values);

// Incremental 64-bit FNV-1a.
class Fingerprint {
 public:
  void add(double v) noexcept;
  void add(std::uint64_t v) noexcept;
  void add(const SensorRecord& r) noexcept;
  std::uint64_t value() const noexcept { return state_; }
  std::string hex() const;

 private:
  void add_bytes(const unsigned char* data, std::size_t n) noexcept;
  std::uint64_t state_ = 14695981039346656037ull;
};

std::string fingerprint(std::span<const SensorRecord> records);

}  // namespace tbm::stats
