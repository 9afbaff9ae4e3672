#include "tbm/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <fstream>
#include <string>

#include "tbm/errors.hpp"
#include "tbm/optimality.hpp"

namespace tbm::sim {

namespace {

constexpr CopVector kLinear = {0.9, 0.3, 0.4, 0.8, 0.5};
constexpr CopVector kQuadratic = {0.6, 0.4, 0.4, 0.5, 0.4};
constexpr Context kContextGain = {0.6, -0.4, 0.3};
constexpr double kContextTau = 600.0;  // s
constexpr double kSegmentSpread = 0.3;

double sigmoid(double z) noexcept { return 1.0 / (1.0 + std::exp(-z)); }

double cxp_base(std::size_t i) noexcept {
  if (i < 8) return 20.0 + 5.0 * static_cast<double>(i);          // pressures, bar
  if (i < 12) return 120.0 + 15.0 * static_cast<double>(i - 8);   // flow rates
  return 50.0 + 10.0 * static_cast<double>(i - 12);               // other channels
}

double cxp_scale(std::size_t i) noexcept { return 0.15 * cxp_base(i); }

double loading(std::size_t i, std::size_t m) noexcept {
  return std::sin(1.7 * static_cast<double>(i + 1) * static_cast<double>(m + 1) + 0.3);
}

std::mt19937_64 stream(std::uint64_t seed, std::uint32_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), id};
  return std::mt19937_64(seq);
}

}  // namespace

const CopBox& cop_box() noexcept {
  static const CopBox box{{2.0, 50.0, 20.0, 100.0, 500.0}, {12.0, 250.0, 120.0, 600.0, 1500.0}};
  return box;
}

CopVector normalized_cop(const CopVector& cop) noexcept {
  const CopBox& b = cop_box();
  CopVector u{};
  for (std::size_t j = 0; j < kNumCop; ++j) {
    u[j] = 2.0 * (cop[j] - b.lo[j]) / (b.hi[j] - b.lo[j]) - 1.0;
  }
  return u;
}

double hardness(GroundClass gc) noexcept {
  switch (gc) {
    case GroundClass::GC1: return 1.0;
    case GroundClass::GC2: return 1.3;
    case GroundClass::GC3: return 1.6;
  }
  return 1.0;
}

double true_advance_rate(GroundClass gc, const CopVector& cop, const Context& s) noexcept {
  const CopVector u = normalized_cop(cop);
  double z = 0.3 - 0.9 * (hardness(gc) - 1.0);
  for (std::size_t j = 0; j < kNumCop; ++j) z += kLinear[j] * u[j] - kQuadratic[j] * u[j] * u[j];
  for (std::size_t m = 0; m < kContextDim; ++m) z += kContextGain[m] * s[m];
  return kMaxAdvanceRate * sigmoid(z);
}

double true_working_pressure(GroundClass gc, const CopVector& cop, const Context& s) noexcept {
  const CopVector u = normalized_cop(cop);
  return hardness(gc) * (40.0 + 18.0 * (u[3] + 1.0) + 10.0 * (u[0] + 1.0)) + 5.0 * s[0];
}

CxpVector true_context(GroundClass gc, const Context& s) noexcept {
  const double h = hardness(gc) - 1.0;
  CxpVector x{};
  for (std::size_t i = 0; i < kNumCxp; ++i) {
    double v = 0.0;
    for (std::size_t m = 0; m < kContextDim; ++m) v += loading(i, m) * s[m];
    const double offset = 0.05 * cxp_base(i) * h * (i % 2 == 0 ? 1.0 : -1.0);
    x[i] = cxp_base(i) + cxp_scale(i) * v + offset;
  }
  return x;
}

double true_score(GroundClass gc, const CopVector& cop, const Context& s,
                  const OptimalityParams& params) {
  return optimality::raw_score(true_advance_rate(gc, cop, s), true_working_pressure(gc, cop, s),
                               params);
}

Optimum oracle_optimum(GroundClass gc, const Context& s, const OptimalityParams& params,
                       std::size_t points_per_dim) {
  if (points_per_dim < 2) throw Error(ErrorCode::InvalidConfig, "grid needs >= 2 points per CoP");
  const CopBox& b = cop_box();
  Optimum best;
  best.raw = -std::numeric_limits<double>::infinity();
  std::array<std::size_t, kNumCop> idx{};
  const double steps = static_cast<double>(points_per_dim - 1);
  while (true) {
    CopVector cop{};
    for (std::size_t j = 0; j < kNumCop; ++j) {
      cop[j] = b.lo[j] + (b.hi[j] - b.lo[j]) * static_cast<double>(idx[j]) / steps;
    }
    const double v = true_score(gc, cop, s, params);
    if (v > best.raw) best = {cop, v};
    std::size_t j = 0;
    while (j < kNumCop && ++idx[j] == points_per_dim) idx[j++] = 0;
    if (j == kNumCop) break;
  }
  return best;
}

// ---- spec ------------------------------------------------------------------

std::size_t DriveSpec::total_samples() const noexcept {
  std::size_t n = 0;
  for (const auto& s : gc_segments) n += s.samples;
  return n;
}

void DriveSpec::check() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidSpec, what); };
  if (!(length_m > 0.0) || !std::isfinite(length_m)) fail("length_m must be > 0");
  if (gc_segments.empty()) fail("gc_segments must not be empty");
  for (const auto& s : gc_segments) {
    if (s.samples == 0) fail("every gc segment needs samples > 0");
  }
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) fail("noise_std must be >= 0");
  if (!(context_gain >= 0.0) || !std::isfinite(context_gain)) fail("context_gain must be >= 0");
  if (!(sample_period > 0.0) || !std::isfinite(sample_period)) fail("sample_period must be > 0");
  const auto& p = operator_policy;
  if (!(p.step_probability >= 0.0 && p.step_probability <= 1.0)) {
    fail("operator_policy.step_probability must be in [0, 1]");
  }
  if (!(p.min_step > 0.0 && p.min_step <= p.max_step && p.max_step <= 0.5)) {
    fail("operator_policy steps need 0 < min_step <= max_step <= 0.5");
  }
  if (initial_cop) {
    const CopBox& b = cop_box();
    for (std::size_t j = 0; j < kNumCop; ++j) {
      if (!((*initial_cop)[j] >= b.lo[j] && (*initial_cop)[j] <= b.hi[j])) {
        fail("initial_cop[" + std::to_string(j) + "] is outside the operating box");
      }
    }
  }
  const auto& d = pathologies;
  const std::size_t events = d.plateaus + d.retractions;
  if (events > 0) {
    const std::size_t longest = std::max(d.plateau_samples, d.retraction_samples);
    if (longest == 0) fail("pathology lengths must be > 0");
    if (total_samples() < (events + 1) * (longest + 2)) fail("drive too short for pathologies");
  }
}

// ---- session ---------------------------------------------------------------

Session::Session(const DriveSpec& spec)
    : spec_(spec),
      policy_rng_(stream(spec.seed, 1)),
      context_rng_(stream(spec.seed, 2)),
      noise_rng_(stream(spec.seed, 3)) {
  spec_.check();
  if (spec_.initial_cop) {
    cop_ = *spec_.initial_cop;
  } else {
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    const CopBox& b = cop_box();
    for (std::size_t j = 0; j < kNumCop; ++j) {
      cop_[j] = b.lo[j] + (b.hi[j] - b.lo[j]) * (0.5 * u(policy_rng_) + 0.5);
    }
  }
  std::uniform_real_distribution<double> spread(-kSegmentSpread, kSegmentSpread);
  for (double& v : base_) v = spread(context_rng_);
  segment_end_ = spec_.gc_segments.front().samples;
  context_ = base_;
}

GroundClass Session::ground_class() const noexcept {
  return spec_.gc_segments[segment_].ground_class;
}

void Session::advance_context() {
  const double rho = std::exp(-spec_.sample_period / kContextTau);
  const double sigma = spec_.context_gain * spec_.noise_std;
  std::normal_distribution<double> n(0.0, 1.0);
  for (std::size_t m = 0; m < kContextDim; ++m) {
    dev_[m] = rho * dev_[m] + std::sqrt(1.0 - rho * rho) * sigma * n(context_rng_);
  }
  if (tick_ >= segment_end_ && segment_ + 1 < spec_.gc_segments.size()) {
    ++segment_;
    segment_end_ += spec_.gc_segments[segment_].samples;
    std::uniform_real_distribution<double> spread(-kSegmentSpread, kSegmentSpread);
    for (double& v : base_) v = spread(context_rng_);
  }
  for (std::size_t m = 0; m < kContextDim; ++m) context_[m] = base_[m] + dev_[m];
}

SensorRecord Session::step(const CopVector& cop) {
  if (closed_) throw Error(ErrorCode::SessionClosed, "simulator session is closed");
  cop_ = cop;
  const GroundClass gc = ground_class();
  const double ar = true_advance_rate(gc, cop_, context_);
  const double wp = true_working_pressure(gc, cop_, context_);
  length_ += ar * spec_.sample_period / 60.0 / 1000.0;

  std::normal_distribution<double> n(0.0, 1.0);
  const double noise = spec_.noise_std;
  SensorRecord r;
  r.timestamp = static_cast<double>(tick_) * spec_.sample_period;
  r.tunnel_length = length_;
  r.advance_rate = std::max(0.0, ar + noise * kMaxAdvanceRate * n(noise_rng_));
  r.working_pressure = std::max(0.0, wp + noise * 50.0 * n(noise_rng_));
  r.cop = cop_;
  r.cxp = true_context(gc, context_);
  for (std::size_t i = 0; i < kNumCxp; ++i) r.cxp[i] += noise * cxp_scale(i) * n(noise_rng_);
  r.ground_class = gc;

  ++tick_;
  advance_context();
  return r;
}

CopVector Session::policy_next() {
  const auto& p = spec_.operator_policy;
  if (p.kind == OperatorPolicy::Kind::Constant) return cop_;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  CopVector next = cop_;
  if (unit(policy_rng_) >= p.step_probability) return next;
  const CopBox& b = cop_box();
  const auto j = static_cast<std::size_t>(unit(policy_rng_) * kNumCop) % kNumCop;
  const double range = b.hi[j] - b.lo[j];
  const double size = (p.min_step + (p.max_step - p.min_step) * unit(policy_rng_)) * range;
  double dir = unit(policy_rng_) < 0.5 ? -1.0 : 1.0;
  // A step never exceeds half the range, so one direction always fits.
  if (next[j] + dir * size > b.hi[j] || next[j] + dir * size < b.lo[j]) dir = -dir;
  next[j] += dir * size;
  return next;
}

// ---- drive -----------------------------------------------------------------

Drive generate_drive(const DriveSpec& spec) {
  Session session(spec);
  Drive drive;
  const std::size_t n = spec.total_samples();
  drive.records.reserve(n);
  drive.contexts.reserve(n);
  CopVector cop = session.cop();
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0) cop = session.policy_next();
    const Context s = session.context();
    SensorRecord r = session.step(cop);
    if (r.tunnel_length > spec.length_m) break;
    drive.records.push_back(r);
    drive.contexts.push_back(s);
  }

  const auto& d = spec.pathologies;
  const std::size_t events = d.plateaus + d.retractions;
  const std::size_t count = drive.records.size();
  for (std::size_t e = 0; e < events; ++e) {
    const std::size_t at = count * (e + 1) / (events + 1);
    const bool plateau = e < d.plateaus;
    const std::size_t len = plateau ? d.plateau_samples : d.retraction_samples;
    if (at == 0 || at + len >= count) continue;
    const double held = drive.records[at - 1].tunnel_length;
    for (std::size_t i = 0; i < len; ++i) {
      drive.records[at + i].tunnel_length =
          plateau ? held : held - 0.01 * static_cast<double>(i + 1);
    }
  }
  return drive;
}

// ---- json ------------------------------------------------------------------

void to_json(nlohmann::json& j, const DriveSpec& s) {
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& g : s.gc_segments) {
    segs.push_back({{"ground_class", g.ground_class}, {"samples", g.samples}});
  }
  const auto& p = s.operator_policy;
  j = nlohmann::json{
      {"schema_version", kSchemaVersion},
      {"model_version", kModelVersion},
      {"length_m", s.length_m},
      {"gc_segments", segs},
      {"operator_policy",
       {{"kind", p.kind == OperatorPolicy::Kind::Constant ? "constant" : "steps"},
        {"step_probability", p.step_probability},
        {"min_step", p.min_step},
        {"max_step", p.max_step}}},
      {"noise_std", s.noise_std},
      {"context_gain", s.context_gain},
      {"seed", s.seed},
      {"sample_period", s.sample_period},
      {"pathologies",
       {{"plateaus", s.pathologies.plateaus},
        {"plateau_samples", s.pathologies.plateau_samples},
        {"retractions", s.pathologies.retractions},
        {"retraction_samples", s.pathologies.retraction_samples}}}};
  if (s.initial_cop) j["initial_cop"] = *s.initial_cop;
}

void from_json(const nlohmann::json& j, DriveSpec& s) {
  try {
    s = DriveSpec{};
    if (j.value("schema_version", kSchemaVersion) != kSchemaVersion) {
      throw Error(ErrorCode::InvalidSpec, "unsupported spec schema_version");
    }
    s.length_m = j.value("length_m", s.length_m);
    for (const auto& g : j.at("gc_segments")) {
      s.gc_segments.push_back({g.at("ground_class").get<GroundClass>(),
                               g.at("samples").get<std::size_t>()});
    }
    if (j.contains("operator_policy")) {
      const auto& p = j["operator_policy"];
      auto& o = s.operator_policy;
      const std::string kind = p.value("kind", std::string("steps"));
      if (kind == "constant") {
        o.kind = OperatorPolicy::Kind::Constant;
      } else if (kind == "steps") {
        o.kind = OperatorPolicy::Kind::Steps;
      } else {
        throw Error(ErrorCode::InvalidSpec, "unknown operator_policy.kind '" + kind + "'");
      }
      o.step_probability = p.value("step_probability", o.step_probability);
      o.min_step = p.value("min_step", o.min_step);
      o.max_step = p.value("max_step", o.max_step);
    }
    s.noise_std = j.value("noise_std", s.noise_std);
    s.context_gain = j.value("context_gain", s.context_gain);
    s.seed = j.value("seed", s.seed);
    s.sample_period = j.value("sample_period", s.sample_period);
    if (j.contains("pathologies")) {
      const auto& p = j["pathologies"];
      auto& d = s.pathologies;
      d.plateaus = p.value("plateaus", d.plateaus);
      d.plateau_samples = p.value("plateau_samples", d.plateau_samples);
      d.retractions = p.value("retractions", d.retractions);
      d.retraction_samples = p.value("retraction_samples", d.retraction_samples);
    }
    if (j.contains("initial_cop") && !j["initial_cop"].is_null()) {
      s.initial_cop = j["initial_cop"].get<CopVector>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidSpec, e.what());
  }
  s.check();
}

DriveSpec load_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in).get<DriveSpec>();
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidSpec, path.string() + ": " + e.what());
  }
}

}  // namespace tbm::sim
