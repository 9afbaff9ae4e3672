#include "tbm/validate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "tbm/errors.hpp"

namespace tbm::validate {

int sign_of(double v, double dead_band) noexcept {
  if (v > dead_band) return 1;
  if (v < -dead_band) return -1;
  return 0;
}

namespace {

bool improved(double before, double after, ImprovementMode mode) noexcept {
  return mode == ImprovementMode::Delta ? after - before > 0.0 : after > 0.0;
}

void count(ValidationCell& cell, double recommended, double observed, bool better,
           double dead_band) {
  const int s = sign_of(recommended, dead_band);
  if (s == 0 || s != sign_of(observed, dead_band)) return;
  ++cell.num;
  if (better) ++cell.val;
}

}  // namespace

CellRow synchronized_validation(std::span<const ingest::CorpusRecord> corpus,
                                std::span<const double> scores, const Recommender& recommend,
                                const ValidateConfig& cfg) {
  if (scores.size() != corpus.size()) {
    throw Error(ErrorCode::DimensionMismatch, "one score per corpus sample is required");
  }
  const auto succ = ingest::successors(corpus, cfg.sample_period);
  CellRow row{};
  for (std::size_t t = 0; t < corpus.size(); ++t) {
    if (!succ[t]) continue;
    const std::size_t s = *succ[t];
    const auto& acted = corpus[s].action;
    if (std::none_of(acted.begin(), acted.end(), [](bool a) { return a; })) continue;
    const CopVector rec = recommend(t);
    const bool better = improved(scores[t], scores[s], cfg.mode);
    for (std::size_t i = 0; i < kNumCop; ++i) {
      if (!acted[i]) continue;
      const double observed = corpus[s].record.cop[i] - corpus[t].record.cop[i];
      count(row[i], rec[i], observed, better, cfg.dead_band);
    }
  }
  return row;
}

CellRow contextual_validation(const neighbors::NeighborIndex& index,
                              std::span<const double> scores, const Recommender& recommend,
                              const ValidateConfig& cfg) {
  if (scores.size() != index.size()) {
    throw Error(ErrorCode::DimensionMismatch, "one score per indexed sample is required");
  }
  const FeatureStats& st = index.stats();
  auto z = [&](double v, std::size_t i) { return (v - st.mean[i]) / st.stddev[i]; };

  CellRow row{};
  for (std::size_t t = 0; t < index.size(); ++t) {
    const auto nbrs = index.query_standardized(index.point(t), cfg.n_neighbors, t);
    const SensorRecord& cur = index.record(t);
    const CopVector rec = recommend(t);

    CopVector target{};
    for (std::size_t i = 0; i < kNumCop; ++i) target[i] = z(cur.cop[i] + rec[i], i);

    std::optional<std::size_t> pick;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& nb : nbrs) {
      if (!(std::abs(scores[nb.index] - scores[t]) > cfg.score_tolerance)) continue;
      const SensorRecord& cand = index.record(nb.index);
      double d2 = 0.0;
      for (std::size_t i = 0; i < kNumCop; ++i) {
        const double d = target[i] - z(cand.cop[i], i);
        d2 += d * d;
      }
      if (d2 < best) {
        best = d2;
        pick = nb.index;
      }
    }
    if (!pick) continue;

    const SensorRecord& other = index.record(*pick);
    const bool better = improved(scores[t], scores[*pick], cfg.mode);
    for (std::size_t i = 0; i < kNumCop; ++i) {
      count(row[i], rec[i], other.cop[i] - cur.cop[i], better, cfg.dead_band);
    }
  }
  return row;
}

Recommender gradient_recommender(const advisor::Registry& registry, GroundClass gc,
                                 std::span<const SensorRecord> records) {
  const advisor::Registry* reg = &registry;
  return [reg, gc, records](std::size_t t) {
    const auto& r = records[t];
    return advisor::recommend(*reg, gc, r.cop, r.cxp, {.with_credibility = false}).deltas;
  };
}

Recommender baseline_recommender(const neighbors::NeighborIndex& index,
                                 std::span<const double> scores) {
  const neighbors::NeighborIndex* idx = &index;
  return [idx, scores](std::size_t t) {
    return neighbors::baseline_recommend(*idx, idx->record(t), scores[t], scores, t).delta;
  };
}

Recommender replay_recommender(std::span<const ingest::CorpusRecord> corpus,
                               double sample_period) {
  auto succ = std::make_shared<const std::vector<std::optional<std::size_t>>>(
      ingest::successors(corpus, sample_period));
  return [corpus, succ](std::size_t t) {
    CopVector out{};
    if (const auto s = (*succ)[t]) {
      for (std::size_t i = 0; i < kNumCop; ++i) {
        out[i] = corpus[*s].record.cop[i] - corpus[t].record.cop[i];
      }
    }
    return out;
  };
}

Recommender random_sign_recommender(std::uint64_t seed) {
  return [seed](std::size_t t) {
    // splitmix64 over (seed, t); one bit per CoP.
    std::uint64_t x = seed + 0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(t) + 1);
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    x ^= x >> 31;
    CopVector out{};
    for (std::size_t i = 0; i < kNumCop; ++i) out[i] = (x >> i) & 1u ? 1.0 : -1.0;
    return out;
  };
}

namespace {

std::string percent(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.0f", 100.0 * *v);
  return buf;
}

void format_block(std::ostringstream& out, const std::string& title,
                  const std::map<std::string, ValidationTable>& tables) {
  if (tables.empty()) return;
  constexpr int kCell = 5;
  std::vector<std::string> methods;
  for (const auto& [name, _] : tables) methods.push_back(name);
  const int group = kCell * static_cast<int>(methods.size());

  auto pad = [](const std::string& s, int w) {
    return s.size() >= static_cast<std::size_t>(w) ? s : std::string(w - s.size(), ' ') + s;
  };

  out << title << '\n';
  out << pad("", 5);
  for (std::size_t j = 0; j < kNumCop; ++j) out << " |" << pad("CoP" + std::to_string(j + 1), group);
  out << " |" << pad("Avg", group) << '\n';
  out << pad("", 5);
  for (std::size_t j = 0; j <= kNumCop; ++j) {
    out << " |";
    for (const auto& m : methods) out << pad(m, kCell);
  }
  out << '\n';

  for (GroundClass gc : kGroundClasses) {
    out << pad(std::string(to_string(gc)), 5);
    for (std::size_t j = 0; j < kNumCop; ++j) {
      out << " |";
      for (const auto& m : methods) {
        const auto& t = tables.at(m);
        auto it = t.rows.find(gc);
        out << pad(it == t.rows.end() ? "-" : percent(it->second[j].ratio()), kCell);
      }
    }
    out << " |";
    for (const auto& m : methods) out << pad(percent(tables.at(m).row_average(gc)), kCell);
    out << '\n';
  }
  out << pad("Avg", 5);
  for (std::size_t j = 0; j < kNumCop; ++j) {
    out << " |";
    for (const auto& m : methods) out << pad(percent(tables.at(m).column_average(j)), kCell);
  }
  out << " |";
  for (const auto& m : methods) out << pad(percent(tables.at(m).grand_average()), kCell);
  out << '\n';
}

}  // namespace

std::string format_table(const ValidationReport& report) {
  std::ostringstream out;
  format_block(out, "Synchronized validation (%)", report.sv);
  if (!report.sv.empty() && !report.cv.empty()) out << '\n';
  format_block(out, "Contextual validation (%)", report.cv);
  return out.str();
}

}  // namespace tbm::validate
