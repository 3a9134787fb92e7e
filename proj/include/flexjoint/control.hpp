#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "flexjoint/fuzzy.hpp"
#include "flexjoint/plant.hpp"

namespace flexjoint::control {

using plant::PlantParams;
using plant::State;

struct GainSet {
  double kp1 = 0.0;
  double kd1 = 0.0;
  double kp2 = 0.0;
  double kd2 = 0.0;

  // Gains from the reference Bayesian-optimization run.
  static GainSet tuned() { return {52.19, 10.18, 144.5, 8.636}; }

  void validate() const {
    for (double v : {kp1, kd1, kp2, kd2}) {
      if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("GainSet: gains must be finite and >= 0");
    }
  }
  bool operator==(const GainSet&) const = default;
};

// FLR output ranges from the reference tuning run, as labelled (lo > hi in
// every pair).
inline fuzzy::FlrBounds tuned_flr_bounds() {
  return {{15.27, -11.61}, {0.1, -3.228}, {2.997, -16.94}, {0.9537, -0.1}};
}

struct SingleGains {
  double kp = 117.0;
  double kd = 29.99;
  bool operator==(const SingleGains&) const = default;
};

enum class ReferenceKind { square, sine, constant };

struct RefSample {
  double x1d = 0.0;
  double x1d_dot = 0.0;
  double x1d_ddot = 0.0;
};

struct Reference {
  ReferenceKind kind = ReferenceKind::square;
  double value = 1.0;  // constant reference level

  static Reference square() { return {ReferenceKind::square, 1.0}; }
  static Reference sine() { return {ReferenceKind::sine, 0.0}; }
  static Reference constant(double v) { return {ReferenceKind::constant, v}; }

  RefSample operator()(double t) const noexcept {
    switch (kind) {
      case ReferenceKind::square: return {t < 10.0 ? 1.0 : 0.0, 0.0, 0.0};
      case ReferenceKind::sine: return {std::sin(t), std::cos(t), -std::sin(t)};
      case ReferenceKind::constant: return {value, 0.0, 0.0};
    }
    return {};
  }

  bool is_step() const noexcept { return kind != ReferenceKind::sine; }
};

enum class ControllerKind { single_pd, cascaded_pd, fuzzy_cascaded, fuzzy1_pd2, pd1_fuzzy2 };

constexpr std::string_view controller_name(ControllerKind k) noexcept {
  switch (k) {
    case ControllerKind::single_pd: return "single-pd";
    case ControllerKind::cascaded_pd: return "cascaded";
    case ControllerKind::fuzzy_cascaded: return "fuzzy-cascaded";
    case ControllerKind::fuzzy1_pd2: return "fuzzy1-pd2";
    case ControllerKind::pd1_fuzzy2: return "pd1-fuzzy2";
  }
  return "?";
}

inline std::optional<ControllerKind> parse_controller(std::string_view s) noexcept {
  for (auto k : {ControllerKind::single_pd, ControllerKind::cascaded_pd, ControllerKind::fuzzy_cascaded,
                 ControllerKind::fuzzy1_pd2, ControllerKind::pd1_fuzzy2}) {
    if (controller_name(k) == s) return k;
  }
  return std::nullopt;
}

constexpr double pd(double kp, double kd, double e, double e_dot) noexcept { return kp * e + kd * e_dot; }

// Motor angle that makes the link sub-plant follow u_pd1 exactly.
inline double motor_reference(const PlantParams& p, double x1, double u_pd1) noexcept {
  return u_pd1 * p.I_l / p.k + x1 + p.mgl() * std::cos(x1) / p.k;
}

struct Diagnostics {
  double u_pd1 = 0.0;
  double u_pd2 = 0.0;
  double x3d = 0.0;
  double e1 = 0.0;
  double e2 = 0.0;
  double e3 = 0.0;
  double e4 = 0.0;
  GainSet effective;
  GainSet delta;
};

struct ControlOutput {
  double u = 0.0;
  Diagnostics diag;
};

namespace detail {

// Shared cascade; regulators are consulted only when present.
inline ControlOutput cascade(const PlantParams& p, const GainSet& base, const fuzzy::Regulator* flr1,
                             const fuzzy::Regulator* flr2, const State& s, const RefSample& ref) {
  ControlOutput out;
  Diagnostics& d = out.diag;
  d.e1 = ref.x1d - s.x1;
  d.e2 = ref.x1d_dot - s.x2;
  d.effective = base;
  if (flr1 != nullptr) {
    const auto inc = (*flr1)(d.e1, d.e2);
    d.delta.kp1 = inc.dkp;
    d.delta.kd1 = inc.dkd;
    d.effective.kp1 = base.kp1 + inc.dkp;
    d.effective.kd1 = base.kd1 + inc.dkd;
  }
  d.u_pd1 = pd(d.effective.kp1, d.effective.kd1, d.e1, d.e2);
  d.x3d = motor_reference(p, s.x1, d.u_pd1);
  d.e3 = d.x3d - s.x3;
  d.e4 = 0.0 - s.x4;  // x3d_dot is taken as zero
  if (flr2 != nullptr) {
    const auto inc = (*flr2)(d.e3, d.e4);
    d.delta.kp2 = inc.dkp;
    d.delta.kd2 = inc.dkd;
    d.effective.kp2 = base.kp2 + inc.dkp;
    d.effective.kd2 = base.kd2 + inc.dkd;
  }
  d.u_pd2 = pd(d.effective.kp2, d.effective.kd2, d.e3, d.e4);
  out.u = d.u_pd2 + d.u_pd1 * p.I_l + p.mgl() * std::cos(s.x1);
  return out;
}

}  // namespace detail

inline ControlOutput cascaded_torque(const PlantParams& p, const GainSet& gains, const State& s, const RefSample& ref) {
  return detail::cascade(p, gains, nullptr, nullptr, s, ref);
}

// Both regulators built from `bounds`; effective gain = base + increment.
inline ControlOutput fuzzy_cascaded_torque(const PlantParams& p, const GainSet& base, const fuzzy::FlrBounds& bounds,
                                           const State& s, const RefSample& ref) {
  const fuzzy::Regulator flr1(bounds.dkp1, bounds.dkd1);
  const fuzzy::Regulator flr2(bounds.dkp2, bounds.dkd2);
  return detail::cascade(p, base, &flr1, &flr2, s, ref);
}

// Link-side PD straight to the motor: no reference shaping, no compensation.
inline double single_pd_torque(const SingleGains& g, const State& s, const RefSample& ref) noexcept {
  return pd(g.kp, g.kd, ref.x1d - s.x1, ref.x1d_dot - s.x2);
}

// A controller kind plus everything it needs.
class Controller {
 public:
  Controller(ControllerKind kind, GainSet gains, fuzzy::FlrBounds bounds = {}, SingleGains single = {})
      : kind_(kind), gains_(gains), bounds_(bounds), single_(single) {
    if (kind_ == ControllerKind::fuzzy_cascaded || kind_ == ControllerKind::fuzzy1_pd2) {
      flr1_.emplace(bounds_.dkp1, bounds_.dkd1);
    }
    if (kind_ == ControllerKind::fuzzy_cascaded || kind_ == ControllerKind::pd1_fuzzy2) {
      flr2_.emplace(bounds_.dkp2, bounds_.dkd2);
    }
  }

  static Controller single(SingleGains g) { return {ControllerKind::single_pd, {}, {}, g}; }

  ControlOutput operator()(const PlantParams& p, const State& s, const RefSample& ref) const {
    if (kind_ == ControllerKind::single_pd) {
      ControlOutput out;
      out.u = single_pd_torque(single_, s, ref);
      out.diag.e1 = ref.x1d - s.x1;
      out.diag.e2 = ref.x1d_dot - s.x2;
      out.diag.effective = {single_.kp, single_.kd, 0.0, 0.0};
      return out;
    }
    return detail::cascade(p, gains_, flr1_ ? &*flr1_ : nullptr, flr2_ ? &*flr2_ : nullptr, s, ref);
  }

  ControllerKind kind() const noexcept { return kind_; }
  const GainSet& gains() const noexcept { return gains_; }
  const fuzzy::FlrBounds& bounds() const noexcept { return bounds_; }
  const SingleGains& single_gains() const noexcept { return single_; }

 private:
  ControllerKind kind_;
  GainSet gains_;
  fuzzy::FlrBounds bounds_;
  SingleGains single_;
  std::optional<fuzzy::Regulator> flr1_;
  std::optional<fuzzy::Regulator> flr2_;
};

struct Record {
  double t = 0.0;
  State state;
  double x1d = 0.0;
  double x3d = 0.0;
  double u = 0.0;
  double e1 = 0.0;
  double e2 = 0.0;
  double e3 = 0.0;
  double e4 = 0.0;
  GainSet effective;
};

// One record per control update (t = 0, dt, ..., horizon - dt) plus the
// state reached at the horizon.
struct Trajectory {
  std::vector<Record> records;
  State initial_state;
  State final_state;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::int64_t sim_step, double t)
      : std::runtime_error("trajectory diverged at sim step " + std::to_string(sim_step) + " (t = " +
                           std::to_string(t) + " s)"),
        sim_step_(sim_step),
        t_(t) {}
  std::int64_t sim_step() const noexcept { return sim_step_; }
  double time() const noexcept { return t_; }

 private:
  std::int64_t sim_step_;
  double t_;
};

inline constexpr double kDivergenceLimit = 1e6;

// Zero-order hold: torque is computed every control_dt and held over the
// Euler substeps in between.
inline Trajectory simulate(const PlantParams& p, const plant::SimConfig& sim, const Controller& controller,
                           const Reference& reference, const plant::DisturbanceModel& dist, State initial = {}) {
  p.validate();
  sim.validate();
  dist.validate();
  const std::int64_t substeps = sim.substeps();
  const std::int64_t steps = sim.control_steps();

  Trajectory traj;
  traj.initial_state = initial;
  traj.records.reserve(static_cast<std::size_t>(steps));
  State s = initial;
  std::int64_t sim_step = 0;
  for (std::int64_t step = 0; step < steps; ++step) {
    const double t = static_cast<double>(step) * sim.control_dt;
    const RefSample ref = reference(t);
    const ControlOutput c = controller(p, s, ref);
    if (!std::isfinite(c.u)) throw DivergenceError(sim_step, t);
    const auto& d = c.diag;
    traj.records.push_back({t, s, ref.x1d, d.x3d, c.u, d.e1, d.e2, d.e3, d.e4, d.effective});
    for (std::int64_t j = 0; j < substeps; ++j, ++sim_step) {
      const auto w = plant::disturbance_sample(dist, dist.draw_index(static_cast<std::uint64_t>(sim_step),
                                                                     static_cast<std::uint64_t>(substeps)));
      s = plant::euler_step(p, s, c.u, w.d1, w.d2, sim.sim_dt);
      if (!s.finite() || s.max_abs() > kDivergenceLimit) {
        throw DivergenceError(sim_step, static_cast<double>(sim_step + 1) * sim.sim_dt);
      }
    }
  }
  traj.final_state = s;
  return traj;
}

}  // namespace flexjoint::control
