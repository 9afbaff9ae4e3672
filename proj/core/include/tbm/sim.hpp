#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tbm/domain.hpp"

namespace tbm::sim {

// Bumped whenever a generating coefficient changes.
inline constexpr int kModelVersion = 1;

inline constexpr std::size_t kContextDim = 3;
using Context = std::array<double, kContextDim>;

struct CopBox {
  CopVector lo{};
  CopVector hi{};
};

// Operating box of the five setpoints, in sensor units.
const CopBox& cop_box() noexcept;
// Each CoP mapped linearly from its box onto [-1, 1].
CopVector normalized_cop(const CopVector& cop) noexcept;

// Soft, firm and hard ground: 1.0, 1.3, 1.6.
double hardness(GroundClass gc) noexcept;
inline constexpr double kMaxAdvanceRate = 40.0;  // mm/min

// Noise-free generating family.
//   AR = 40 * sigmoid(0.3 + a.u - q.u^2 + c.s - 0.9 (H - 1))
//   WP = H * (40 + 18 (u4 + 1) + 10 (u1 + 1)) + 5 s1
double true_advance_rate(GroundClass gc, const CopVector& cop, const Context& s) noexcept;
double true_working_pressure(GroundClass gc, const CopVector& cop, const Context& s) noexcept;
// Context channels: affine in the latent context plus a ground-class offset.
CxpVector true_context(GroundClass gc, const Context& s) noexcept;

struct GcSegment {
  GroundClass ground_class = GroundClass::GC1;
  std::size_t samples = 0;
};

struct OperatorPolicy {
  enum class Kind { Constant, Steps };
  Kind kind = Kind::Steps;
  double step_probability = 0.02;  // per tick
  double min_step = 0.15;          // fraction of the CoP range
  double max_step = 0.4;
};

// Injected log defects, spread evenly over the drive.
struct Pathologies {
  std::size_t plateaus = 0;
  std::size_t plateau_samples = 10;
  std::size_t retractions = 0;
  std::size_t retraction_samples = 5;
};

struct DriveSpec {
  double length_m = 688.0;  // generation stops once the face reaches this
  std::vector<GcSegment> gc_segments;
  OperatorPolicy operator_policy;
  double noise_std = 0.01;     // relative measurement noise
  double context_gain = 20.0;  // context drift std = gain * noise_std
  std::uint64_t seed = 0;
  double sample_period = 10.0;  // s
  Pathologies pathologies;
  std::optional<CopVector> initial_cop;

  std::size_t total_samples() const noexcept;
  // Throws Error(InvalidSpec).
  void check() const;
};

struct Drive {
  std::vector<SensorRecord> records;
  std::vector<Context> contexts;  // latent context per record
};

// Deterministic given spec.seed.
Drive generate_drive(const DriveSpec& spec);

// One live drive. Policy, context and measurement noise draw from separate
// streams, so stepping with the CoPs of a generated drive reproduces it.
class Session {
 public:
  explicit Session(const DriveSpec& spec);

  // Applies `cop` for one tick. Throws Error(SessionClosed).
  SensorRecord step(const CopVector& cop);
  // Next CoPs of the operator policy (advances the policy stream).
  CopVector policy_next();

  // Pins the latent context; it stays put while noise_std is zero.
  void set_context(const Context& s) noexcept { context_ = s; dev_ = {}; base_ = s; }

  void close() noexcept { closed_ = true; }
  bool closed() const noexcept { return closed_; }
  std::size_t tick() const noexcept { return tick_; }
  const CopVector& cop() const noexcept { return cop_; }
  const Context& context() const noexcept { return context_; }
  GroundClass ground_class() const noexcept;
  const DriveSpec& spec() const noexcept { return spec_; }

 private:
  void advance_context();

  DriveSpec spec_;
  std::mt19937_64 policy_rng_;
  std::mt19937_64 context_rng_;
  std::mt19937_64 noise_rng_;
  CopVector cop_{};
  Context base_{};
  Context dev_{};
  Context context_{};
  std::size_t tick_ = 0;
  std::size_t segment_ = 0;
  std::size_t segment_end_ = 0;
  double length_ = 0.0;
  bool closed_ = false;
};

struct Optimum {
  CopVector cop{};
  double raw = 0.0;
};

// Dense grid search of the true optimality over the CoP box.
Optimum oracle_optimum(GroundClass gc, const Context& s, const OptimalityParams& params,
                       std::size_t points_per_dim = 11);

// True raw optimality of (cop, s).
double true_score(GroundClass gc, const CopVector& cop, const Context& s,
                  const OptimalityParams& params);

void to_json(nlohmann::json& j, const DriveSpec& s);
void from_json(const nlohmann::json& j, DriveSpec& s);
DriveSpec load_spec(const std::filesystem::path& path);

}  // namespace tbm::sim
