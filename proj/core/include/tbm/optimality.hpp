#pragma once

#include <span>

#include "tbm/domain.hpp"

namespace tbm::optimality {

// Piecewise-linear score: reward advance rate, penalize working pressure,
// with the steeper slope w2 once WP exceeds the margin bound.
//
//   WP <= MB:  AR/MAR - w1*WP/UB
//   WP >  MB:  AR/MAR - w1*MB/UB - w2*(WP - MB)/UB
//
// Does not check the normalization bounds, so it can be evaluated while a
// config is being fitted.
double raw_score(double advance_rate, double working_pressure, const OptimalityParams& p);
double raw_score(double advance_rate, double working_pressure, const OptimalityConfig& cfg,
                 GroundClass gc);
double raw_score(const SensorRecord& r, const OptimalityConfig& cfg);

// 0..100 display value; 100 is the best score seen in the fitting corpus.
double normalize(double raw, const OptimalityParams& p) noexcept;

inline constexpr std::size_t kMinRecordsPerClass = 10;

// MB = nearest-rank 90th percentile of WP, MAR = max AR, normalization
// bounds = min/max raw score over the class. Throws InsufficientData
// (< 10 records) or InvalidConfig.
OptimalityParams fit_params(std::span<const SensorRecord> records, double w1, double w2, double ub);

// Fits every ground class present in `records`.
OptimalityConfig fit_config(std::span<const SensorRecord> records, double w1, double w2, double ub);

}  // namespace tbm::optimality
