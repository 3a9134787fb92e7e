#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

#include "flexjoint/control.hpp"
#include "flexjoint/objectives.hpp"

namespace flexjoint::metrics {

inline constexpr double kSettlingBand = 0.02;
inline constexpr double kSteadyStateWindow = 1.0;

class DegenerateMetrics : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Metrics {
  std::optional<double> cost;
  std::optional<double> overshoot_pct;
  std::optional<double> settling_time;
  double steady_state_error = 0.0;
  double rms_error = 0.0;
};

// control_dt is the record spacing; the last record covers [t_n, t_n + dt).
inline Metrics compute(const control::Trajectory& traj, const control::Reference& ref, double control_dt) {
  const auto& r = traj.records;
  if (r.empty()) throw DegenerateMetrics("metrics: trajectory has no control steps");

  Metrics m;
  if (r.size() >= tuning::kCostSteps) m.cost = tuning::tracking_cost(traj);

  double sq = 0.0;
  for (const auto& rec : r) sq += rec.e1 * rec.e1;
  m.rms_error = std::sqrt(sq / static_cast<double>(r.size()));

  const double t_end = r.back().t + control_dt;
  double sum = 0.0;
  int count = 0;
  for (const auto& rec : r) {
    if (rec.t >= t_end - kSteadyStateWindow - 1e-9) {
      sum += std::fabs(rec.e1);
      ++count;
    }
  }
  m.steady_state_error = sum / count;

  const double target = r.back().x1d;
  const double step = target - traj.initial_state.x1;
  if (ref.is_step() && step != 0.0) {
    const double sign = step > 0.0 ? 1.0 : -1.0;
    double peak = 0.0;
    for (const auto& rec : r) peak = std::fmax(peak, sign * (rec.state.x1 - target) / std::fabs(step) * 100.0);
    m.overshoot_pct = peak;

    const double band = kSettlingBand * std::fabs(step);
    std::optional<double> since;
    for (const auto& rec : r) {
      if (std::fabs(target - rec.state.x1) < band) {
        if (!since) since = rec.t;
      } else {
        since.reset();
      }
    }
    m.settling_time = since;
  }
  return m;
}

}  // namespace flexjoint::metrics
