#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "flexjoint/random.hpp"

namespace flexjoint::plant {

// Physical constants of the single-link flexible-joint manipulator.
// Defaults are the values of the reference machine.
struct PlantParams {
  double m = 1.2756;  // link mass, kg
  double g = 9.8;     // gravity, m/s^2
  double l = 0.4;     // CoM distance, m
  double I_l = 1.0;   // link inertia, kg m^2
  double I_m = 0.3;   // motor inertia, kg m^2
  double k = 100.0;   // spring stiffness, N m
  double mu = 0.1;    // viscous friction, kg m^2/s

  double mgl() const noexcept { return m * g * l; }

  // g = 0 is allowed (linearized analysis); all other fields must be > 0.
  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!std::isfinite(v) || v <= 0.0) {
        throw std::invalid_argument(std::string("plant parameter ") + name + " must be finite and > 0");
      }
    };
    positive(m, "m");
    positive(l, "l");
    positive(I_l, "I_l");
    positive(I_m, "I_m");
    positive(k, "k");
    positive(mu, "mu");
    if (!std::isfinite(g) || g < 0.0) {
      throw std::invalid_argument("plant parameter g must be finite and >= 0");
    }
  }

  PlantParams without_gravity() const {
    PlantParams p = *this;
    p.g = 0.0;
    return p;
  }

  bool operator==(const PlantParams&) const = default;
};

// Link angle/velocity and motor angle/velocity, raw radians (no wrapping).
struct State {
  double x1 = 0.0;
  double x2 = 0.0;
  double x3 = 0.0;
  double x4 = 0.0;

  bool finite() const noexcept {
    return std::isfinite(x1) && std::isfinite(x2) && std::isfinite(x3) && std::isfinite(x4);
  }
  double max_abs() const noexcept {
    return std::fmax(std::fmax(std::fabs(x1), std::fabs(x2)), std::fmax(std::fabs(x3), std::fabs(x4)));
  }
  std::array<double, 4> as_array() const noexcept { return {x1, x2, x3, x4}; }

  bool operator==(const State&) const = default;
};

using StateDerivative = std::array<double, 4>;

inline StateDerivative derivatives(const PlantParams& p, const State& s, double u, double d1, double d2) {
  if (!s.finite() || !std::isfinite(u) || !std::isfinite(d1) || !std::isfinite(d2)) {
    throw std::domain_error("plant::derivatives: non-finite input");
  }
  const double deflection = s.x1 - s.x3;
  return {
      s.x2,
      -(p.mgl() / p.I_l) * std::cos(s.x1) - (p.k / p.I_l) * deflection + d1,
      s.x4,
      (p.k / p.I_m) * deflection - (p.mu / p.I_m) * s.x4 + u / p.I_m + d2,
  };
}

inline State euler_step(const PlantParams& p, const State& s, double u, double d1, double d2, double dt) {
  if (!(dt >= 0.0)) {
    throw std::invalid_argument("plant::euler_step: dt must be >= 0");
  }
  const StateDerivative f = derivatives(p, s, u, d1, d2);
  return {s.x1 + dt * f[0], s.x2 + dt * f[1], s.x3 + dt * f[2], s.x4 + dt * f[3]};
}

// Stored energy of the unforced, gravity-free plant.
inline double spring_energy(const PlantParams& p, const State& s) noexcept {
  const double deflection = s.x1 - s.x3;
  return 0.5 * p.I_l * s.x2 * s.x2 + 0.5 * p.I_m * s.x4 * s.x4 + 0.5 * p.k * deflection * deflection;
}

enum class DisturbanceKind { off, uniform };
enum class DisturbanceHold { per_sim_step, per_control_step };

struct Disturbance {
  double d1 = 0.0;
  double d2 = 0.0;
  bool operator==(const Disturbance&) const = default;
};

// Additive accelerations d1 (link) and d2 (motor), rad/s^2.
// Draws are a pure function of (seed, index): SplitMix64 counter hashing.
struct DisturbanceModel {
  DisturbanceKind kind = DisturbanceKind::off;
  double amplitude = 10.0;
  std::uint64_t seed = 1;
  DisturbanceHold hold = DisturbanceHold::per_sim_step;

  static DisturbanceModel off() { return {}; }
  static DisturbanceModel uniform(double amplitude, std::uint64_t seed,
                                  DisturbanceHold hold = DisturbanceHold::per_sim_step) {
    return {DisturbanceKind::uniform, amplitude, seed, hold};
  }

  void validate() const {
    if (!std::isfinite(amplitude) || amplitude < 0.0) {
      throw std::invalid_argument("disturbance amplitude must be finite and >= 0");
    }
  }

  // Index of the draw used for a given sim step.
  std::uint64_t draw_index(std::uint64_t sim_step, std::uint64_t substeps) const noexcept {
    return hold == DisturbanceHold::per_control_step ? sim_step / substeps : sim_step;
  }
};

inline Disturbance disturbance_sample(const DisturbanceModel& model, std::uint64_t index) noexcept {
  if (model.kind == DisturbanceKind::off) return {};
  const double a = model.amplitude;
  const double u1 = unit_double(hash_counter(model.seed, 1, index));
  const double u2 = unit_double(hash_counter(model.seed, 2, index));
  return {a * (2.0 * u1 - 1.0), a * (2.0 * u2 - 1.0)};
}

struct SimConfig {
  double sim_dt = 0.005;
  double control_dt = 0.05;
  double horizon = 10.0;

  // Euler substeps per control step.
  std::int64_t substeps() const { return exact_ratio(control_dt, sim_dt, "control_dt", "sim_dt"); }
  // Number of control updates in one episode.
  std::int64_t control_steps() const {
    if (horizon == 0.0) return 0;
    return exact_ratio(horizon, control_dt, "horizon", "control_dt");
  }

  void validate() const {
    if (!(sim_dt > 0.0) || !std::isfinite(sim_dt)) throw std::invalid_argument("sim_dt must be > 0");
    if (!(control_dt > 0.0) || !std::isfinite(control_dt)) throw std::invalid_argument("control_dt must be > 0");
    if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("horizon must be >= 0");
    substeps();
    control_steps();
  }

 private:
  static std::int64_t exact_ratio(double num, double den, const char* a, const char* b) {
    const double r = num / den;
    const double n = std::round(r);
    if (n < 1.0 || std::fabs(r - n) > 1e-9 * n) {
      throw std::invalid_argument(std::string(a) + " must be an exact integer multiple of " + b);
    }
    return static_cast<std::int64_t>(n);
  }
};

}  // namespace flexjoint::plant
