#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <deque>
#include <functional>
#include <vector>

namespace flexjoint::tuning {

struct LbfgsOptions {
  int max_iterations = 50;
  int history = 6;
  double gradient_tolerance = 1e-6;
  double value_tolerance = 1e-10;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double value = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

// Objective returns f(x) and writes grad; a non-finite value rejects the
// point during line search.
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

// Unconstrained minimization, two-loop recursion with Armijo backtracking.
inline LbfgsResult lbfgs_minimize(const Objective& f, Eigen::VectorXd x, const LbfgsOptions& opt = {}) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd g(n);
  double fx = f(x, g);
  LbfgsResult res{x, fx, 0};
  if (!std::isfinite(fx)) return res;

  std::deque<Eigen::VectorXd> s_hist;
  std::deque<Eigen::VectorXd> y_hist;
  std::deque<double> rho_hist;

  for (int it = 0; it < opt.max_iterations; ++it) {
    res.iterations = it + 1;
    if (g.lpNorm<Eigen::Infinity>() < opt.gradient_tolerance) break;

    Eigen::VectorXd q = g;
    std::vector<double> alpha(s_hist.size());
    for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    double gamma = 1.0;
    if (!s_hist.empty()) gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    Eigen::VectorXd dir = gamma * q;
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(dir);
      dir += s_hist[i] * (alpha[i] - beta);
    }
    dir = -dir;
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      dir = -g;
      slope = -g.squaredNorm();
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }

    double step = s_hist.empty() ? std::fmin(1.0, 1.0 / std::fmax(1e-12, g.lpNorm<Eigen::Infinity>())) : 1.0;
    Eigen::VectorXd x_new(n);
    Eigen::VectorXd g_new(n);
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls) {
      x_new = x + step * dir;
      f_new = f(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opt.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    const double df = fx - f_new;
    x = x_new;
    g = g_new;
    fx = f_new;
    if (df < opt.value_tolerance * std::fmax(1.0, std::fabs(fx))) break;
  }
  res.x = x;
  res.value = fx;
  return res;
}

}  // namespace flexjoint::tuning
