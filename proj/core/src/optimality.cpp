#include "tbm/optimality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "tbm/errors.hpp"
#include "tbm/stats.hpp"

namespace tbm::optimality {

double raw_score(double advance_rate, double working_pressure, const OptimalityParams& p) {
  const double reward = advance_rate / p.mar;
  if (working_pressure <= p.mb) return reward - p.w1 * working_pressure / p.ub;
  return reward - p.w1 * p.mb / p.ub - p.w2 * (working_pressure - p.mb) / p.ub;
}

double raw_score(double advance_rate, double working_pressure, const OptimalityConfig& cfg,
                 GroundClass gc) {
  const auto& p = cfg.at(gc);
  p.check();
  return raw_score(advance_rate, working_pressure, p);
}

double raw_score(const SensorRecord& r, const OptimalityConfig& cfg) {
  return raw_score(r.advance_rate, r.working_pressure, cfg.at(r.ground_class));
}

double normalize(double raw, const OptimalityParams& p) noexcept {
  const double v = 100.0 * (raw - p.norm_min) / (p.norm_max - p.norm_min);
  return std::clamp(v, 0.0, 100.0);
}

OptimalityParams fit_params(std::span<const SensorRecord> records, double w1, double w2,
                            double ub) {
  if (records.size() < kMinRecordsPerClass) {
    throw Error(ErrorCode::InsufficientData,
                "optimality fit needs at least 10 records, got " + std::to_string(records.size()));
  }
  std::vector<double> wp;
  wp.reserve(records.size());
  double mar = 0.0;
  for (const auto& r : records) {
    wp.push_back(r.working_pressure);
    mar = std::max(mar, r.advance_rate);
  }
  OptimalityParams p;
  p.w1 = w1;
  p.w2 = w2;
  p.ub = ub;
  p.mb = stats::percentile_nearest_rank(wp, 90.0);
  p.mar = mar;

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  if (p.mar > 0.0) {
    for (const auto& r : records) {
      const double s = raw_score(r.advance_rate, r.working_pressure, p);
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
  }
  p.norm_min = lo;
  p.norm_max = hi;
  p.check();
  return p;
}

OptimalityConfig fit_config(std::span<const SensorRecord> records, double w1, double w2,
                            double ub) {
  OptimalityConfig cfg;
  for (auto gc : kGroundClasses) {
    std::vector<SensorRecord> subset;
    for (const auto& r : records) {
      if (r.ground_class == gc) subset.push_back(r);
    }
    if (subset.empty()) continue;
    cfg.classes.emplace(gc, fit_params(subset, w1, w2, ub));
  }
  if (cfg.classes.empty()) {
    throw Error(ErrorCode::InsufficientData, "no records to fit the optimality config");
  }
  return cfg;
}

}  // namespace tbm::optimality
