#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tbm/advisor.hpp"
#include "tbm/domain.hpp"
#include "tbm/ingest.hpp"
#include "tbm/neighbors.hpp"

namespace tbm::validate {

enum class ImprovementMode {
  Delta,    // f(t+1) - f(t) > 0
  Literal,  // f(t+1) > 0
};

struct ValidateConfig {
  ImprovementMode mode = ImprovementMode::Delta;
  double dead_band = 1e-9;        // |change| below this has no sign
  double score_tolerance = 1e-9;  // "different score" for contextual matches
  std::size_t n_neighbors = neighbors::kDefaultNeighbors;
  double sample_period = 10.0;
};

// -1, 0 or +1 with a dead band around zero.
int sign_of(double v, double dead_band) noexcept;

// Recommended CoP change (raw units) for sample t of the validated corpus.
using Recommender = std::function<CopVector(std::size_t t)>;

// For every sample t whose successor carries an operator action on CoP i:
// a sign match between recommended and observed change counts toward num,
// and a match whose score improved counts toward val.
CellRow synchronized_validation(std::span<const ingest::CorpusRecord> corpus,
                                std::span<const double> scores, const Recommender& recommend,
                                const ValidateConfig& cfg = {});

// For every sample t: among its CxP-nearest neighbours (self excluded) whose
// score differs from f(t), pick t' closest in standardized CoP space to
// CoP^t + recommendation, then count as above with t' as the outcome.
// `index` must be built over the same records, in the same order, as
// `scores`.
CellRow contextual_validation(const neighbors::NeighborIndex& index,
                              std::span<const double> scores, const Recommender& recommend,
                              const ValidateConfig& cfg = {});

// ---- recommenders -------------------------------------------------------

// Gradient recommendations from a registry entry.
Recommender gradient_recommender(const advisor::Registry& registry, GroundClass gc,
                                 std::span<const SensorRecord> records);
// Neighbour baseline (see neighbors::baseline_recommend), excluding the sample itself.
Recommender baseline_recommender(const neighbors::NeighborIndex& index,
                                 std::span<const double> scores);
// Replays the observed change to the successor (zero without one).
Recommender replay_recommender(std::span<const ingest::CorpusRecord> corpus,
                               double sample_period = 10.0);
// Uniform random signs, unit magnitude. Deterministic given seed and t.
Recommender random_sign_recommender(std::uint64_t seed);

// ---- report -------------------------------------------------------------

// Aligned text table: one row per ground class, one column group per CoP
// with a sub-column per method, plus averages.
std::string format_table(const ValidationReport& report);

}  // namespace tbm::validate
