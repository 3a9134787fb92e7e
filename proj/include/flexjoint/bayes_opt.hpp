#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <functional>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "flexjoint/gp.hpp"
#include "flexjoint/random.hpp"

namespace flexjoint::tuning {

// Exploration coefficient used for all tuning runs.
inline constexpr double kDefaultExploration = 2.576;

// Score assigned to a cost evaluation that throws or returns a non-finite
// value; below any achievable tracking cost (-200 pi).
inline constexpr double kFailurePenalty = -1e4;

constexpr double ucb(double mean, double stddev, double h) noexcept { return mean + h * stddev; }

struct AcquisitionOptions {
  int candidates = 2048;
  int refine_starts = 8;
  int refine_max_evals = 400;
  double refine_initial_step = 0.1;
  double refine_min_step = 1e-4;
};

struct TunerConfig {
  int episodes = 150;  // T, total cost evaluations
  int n_init = 10;     // Latin-hypercube initial samples
  double h = kDefaultExploration;
  std::uint64_t seed = 1;
  GpFitOptions gp;
  AcquisitionOptions acquisition;

  void validate() const {
    if (n_init < 1) throw std::invalid_argument("TunerConfig: n_init must be >= 1");
    if (episodes < n_init) throw std::invalid_argument("TunerConfig: episodes must be >= n_init");
  }
};

namespace detail {

inline constexpr std::array<int, 16> kPrimes = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

inline double radical_inverse(std::uint64_t i, int base) {
  double inv = 1.0 / base;
  double f = inv;
  double r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % static_cast<std::uint64_t>(base));
    i /= static_cast<std::uint64_t>(base);
    f *= inv;
  }
  return r;
}

}  // namespace detail

// Randomly shifted Halton points in the unit box (Cranley-Patterson rotation).
inline std::vector<Eigen::VectorXd> shifted_halton(int count, int dims, Rng& rng) {
  if (dims > static_cast<int>(detail::kPrimes.size())) throw std::invalid_argument("shifted_halton: too many dims");
  Eigen::VectorXd shift(dims);
  for (int j = 0; j < dims; ++j) shift(j) = rng.uniform();
  std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(count), Eigen::VectorXd(dims));
  for (int i = 0; i < count; ++i) {
    for (int j = 0; j < dims; ++j) {
      double v = detail::radical_inverse(static_cast<std::uint64_t>(i + 1), detail::kPrimes[j]) + shift(j);
      pts[static_cast<std::size_t>(i)](j) = v - std::floor(v);
    }
  }
  return pts;
}

// n stratified samples per dimension, strata independently permuted.
inline std::vector<Eigen::VectorXd> latin_hypercube(int n, int dims, Rng& rng) {
  std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(n), Eigen::VectorXd(dims));
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int j = 0; j < dims; ++j) {
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i) {
      std::swap(perm[static_cast<std::size_t>(i)],
                perm[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(i + 1)))]);
    }
    for (int i = 0; i < n; ++i) {
      pts[static_cast<std::size_t>(i)](j) = (perm[static_cast<std::size_t>(i)] + rng.uniform()) / n;
    }
  }
  return pts;
}

// Maximizes UCB over the model's domain: quasi-random candidates, then a
// compass search from the best few. Ties keep the earlier candidate, whose
// position depends on the seeded Halton shift.
inline Eigen::VectorXd suggest(const GpModel& model, double h, Rng& rng, const AcquisitionOptions& opt = {}) {
  const Domain& domain = model.domain();
  const int dims = static_cast<int>(domain.size());
  std::vector<int> free_dims;
  for (int j = 0; j < dims; ++j) {
    if (domain.dims[static_cast<std::size_t>(j)].hi > domain.dims[static_cast<std::size_t>(j)].lo) free_dims.push_back(j);
  }
  if (free_dims.empty()) return domain.from_unit(Eigen::VectorXd::Zero(dims));

  auto score = [&](const Eigen::VectorXd& u) {
    const Prediction p = model.predict_unit(u);
    return ucb(p.mean, p.stddev, h);
  };

  const auto raw = shifted_halton(opt.candidates, static_cast<int>(free_dims.size()), rng);
  std::vector<Eigen::VectorXd> cand;
  std::vector<double> scores;
  cand.reserve(raw.size());
  scores.reserve(raw.size());
  for (const auto& r : raw) {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(dims);
    for (std::size_t k = 0; k < free_dims.size(); ++k) u(free_dims[k]) = r(static_cast<Eigen::Index>(k));
    scores.push_back(score(u));
    cand.push_back(std::move(u));
  }
  std::vector<std::size_t> order(cand.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  Eigen::VectorXd best_u = cand[order.front()];
  double best_s = scores[order.front()];
  const std::size_t starts = std::min<std::size_t>(static_cast<std::size_t>(opt.refine_starts), order.size());
  for (std::size_t si = 0; si < starts; ++si) {
    Eigen::VectorXd u = cand[order[si]];
    double s = scores[order[si]];
    double step = opt.refine_initial_step;
    int evals = 0;
    while (step >= opt.refine_min_step && evals < opt.refine_max_evals) {
      bool moved = false;
      for (int j : free_dims) {
        for (double sign : {1.0, -1.0}) {
          Eigen::VectorXd trial = u;
          trial(j) = std::clamp(u(j) + sign * step, 0.0, 1.0);
          if (trial(j) == u(j)) continue;
          const double ts = score(trial);
          ++evals;
          if (ts > s) {
            u = std::move(trial);
            s = ts;
            moved = true;
          }
        }
      }
      if (!moved) step *= 0.5;
    }
    if (s > best_s) {
      best_s = s;
      best_u = u;
    }
  }
  return domain.from_unit(best_u);
}

struct Episode {
  int episode = 0;
  Eigen::VectorXd x;
  double y = 0.0;
  double best_y = 0.0;
  bool failed = false;
  std::string error;
};

struct SmboResult {
  Eigen::VectorXd best_x;
  double best_y = -std::numeric_limits<double>::infinity();
  std::vector<Episode> history;
};

using CostFunction = std::function<double(const Eigen::VectorXd&)>;

// Sequential model-based optimization; maximizes `cost`.
inline SmboResult smbo(const CostFunction& cost, const Domain& domain, const TunerConfig& config,
                       const std::function<void(const Episode&)>& on_episode = {}) {
  domain.validate();
  config.validate();
  Rng rng(config.seed);
  const int dims = static_cast<int>(domain.size());

  SmboResult result;
  Dataset data;
  std::optional<GpHyper> previous;

  auto evaluate = [&](const Eigen::VectorXd& x) {
    Episode ep;
    ep.episode = static_cast<int>(result.history.size());
    ep.x = x;
    try {
      ep.y = cost(x);
      if (!std::isfinite(ep.y)) {
        ep.failed = true;
        ep.error = "non-finite cost";
      }
    } catch (const std::exception& e) {
      ep.failed = true;
      ep.error = e.what();
    }
    if (ep.failed) ep.y = kFailurePenalty;
    if (ep.y > result.best_y) {
      result.best_y = ep.y;
      result.best_x = x;
    }
    ep.best_y = result.best_y;
    data.add(x, ep.y);
    if (on_episode) on_episode(ep);
    result.history.push_back(std::move(ep));
  };

  for (const auto& u : latin_hypercube(config.n_init, dims, rng)) evaluate(domain.from_unit(u));

  while (static_cast<int>(result.history.size()) < config.episodes) {
    Eigen::VectorXd next;
    if (data.size() < 2) {
      evaluate(domain.from_unit(latin_hypercube(1, dims, rng).front()));
      continue;
    }
    try {
      GpFitOptions gp_opt = config.gp;
      if (previous) gp_opt.warm_start = previous;
      const GpModel model = gp_fit(data, domain, gp_opt, rng);
      previous = model.gp().hyper();
      next = suggest(model, config.h, rng, config.acquisition);
    } catch (const NumericalError&) {
      next = domain.from_unit(latin_hypercube(1, dims, rng).front());
    }
    evaluate(next);
  }
  return result;
}

}  // namespace flexjoint::tuning
