#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

#include "flexjoint/bayes_opt.hpp"
#include "flexjoint/control.hpp"
#include "flexjoint/fuzzy.hpp"
#include "flexjoint/plant.hpp"

// Cost function and search boxes for tuning the controllers.
namespace flexjoint::tuning {

inline constexpr std::size_t kCostSteps = 200;

// Negative sum of |e1| over the first 200 control steps.
inline double tracking_cost(const control::Trajectory& traj) {
  if (traj.records.size() < kCostSteps) {
    throw std::invalid_argument("tracking_cost: need " + std::to_string(kCostSteps) + " control steps, got " +
                                std::to_string(traj.records.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < kCostSteps; ++i) sum += std::fabs(traj.records[i].e1);
  return -sum;
}

inline Domain pd_domain() {
  return {{{"kp1", 0.0, 150.0}, {"kd1", 0.0, 30.0}, {"kp2", 0.0, 150.0}, {"kd2", 0.0, 30.0}}};
}

inline Domain single_pd_domain() { return {{{"kp", 0.0, 150.0}, {"kd", 0.0, 30.0}}}; }

// Raw (lo, hi) labels of each FLR range; no ordering is imposed, so the
// search may return lo > hi.
inline Domain flr_domain(double kp_span = 20.0, double kd_span = 5.0) {
  return {{{"dkp1_lo", -kp_span, kp_span},
           {"dkp1_hi", -kp_span, kp_span},
           {"dkd1_lo", -kd_span, kd_span},
           {"dkd1_hi", -kd_span, kd_span},
           {"dkp2_lo", -kp_span, kp_span},
           {"dkp2_hi", -kp_span, kp_span},
           {"dkd2_lo", -kd_span, kd_span},
           {"dkd2_hi", -kd_span, kd_span}}};
}

inline control::GainSet gains_from(const Eigen::VectorXd& x) { return {x(0), x(1), x(2), x(3)}; }

inline fuzzy::FlrBounds flr_from(const Eigen::VectorXd& x) {
  return {{x(0), x(1)}, {x(2), x(3)}, {x(4), x(5)}, {x(6), x(7)}};
}

// Everything a tuning episode needs besides the candidate parameters.
struct EpisodeSetup {
  plant::PlantParams plant;
  plant::SimConfig sim;
  control::Reference reference = control::Reference::square();
  plant::DisturbanceModel disturbance;
};

inline double episode_cost(const EpisodeSetup& setup, const control::Controller& controller) {
  return tracking_cost(control::simulate(setup.plant, setup.sim, controller, setup.reference, setup.disturbance));
}

inline CostFunction pd_cost(EpisodeSetup setup) {
  return [setup](const Eigen::VectorXd& x) {
    return episode_cost(setup, control::Controller(control::ControllerKind::cascaded_pd, gains_from(x)));
  };
}

inline CostFunction flr_cost(EpisodeSetup setup, control::GainSet base) {
  return [setup, base](const Eigen::VectorXd& x) {
    return episode_cost(setup, control::Controller(control::ControllerKind::fuzzy_cascaded, base, flr_from(x)));
  };
}

inline CostFunction single_pd_cost(EpisodeSetup setup) {
  return [setup](const Eigen::VectorXd& x) {
    return episode_cost(setup, control::Controller::single({x(0), x(1)}));
  };
}

}  // namespace flexjoint::tuning
