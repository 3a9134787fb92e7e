#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "flexjoint/bayes_opt.hpp"

using namespace flexjoint;
using namespace flexjoint::tuning;

namespace {

Domain unit_line() { return {{{"x", 0.0, 1.0}}}; }

Eigen::VectorXd v1(double x) { return Eigen::VectorXd::Constant(1, x); }

double parabola(const Eigen::VectorXd& x) { return -std::pow(x(0) - 0.3, 2); }

GpModel fit_line(const std::vector<std::pair<double, double>>& pts, std::uint64_t seed = 1) {
  Dataset d;
  for (const auto& [x, y] : pts) d.add(v1(x), y);
  Rng rng(seed);
  return gp_fit(d, unit_line(), {}, rng);
}

double grid_argmax(const GpModel& m, double h) {
  double best = -1e300, arg = 0;
  for (int i = 0; i <= 10000; ++i) {
    const double x = i / 10000.0;
    const auto p = m.predict(v1(x));
    const double s = ucb(p.mean, p.stddev, h);
    if (s > best) {
      best = s;
      arg = x;
    }
  }
  return arg;
}

}  // namespace

TEST(Ucb, Examples) {
  EXPECT_DOUBLE_EQ(ucb(1.0, 0.5, 2.576), 2.288);
  EXPECT_EQ(ucb(-3.0, 0.0, 2.576), -3.0);
  EXPECT_EQ(ucb(2.0, 1.0, 0.0), 2.0);
  EXPECT_EQ(kDefaultExploration, 2.576);
}

TEST(Suggest, MatchesDenseGridArgmax) {
  const auto m = fit_line({{0.1, 0.2}, {0.4, 0.9}, {0.55, 0.7}, {0.8, -0.3}});
  for (double h : {0.0, 1.0, 2.576}) {
    Rng rng(3);
    const double x = suggest(m, h, rng)(0);
    const auto a = m.predict(v1(x));
    const auto b = m.predict(v1(grid_argmax(m, h)));
    EXPECT_GE(ucb(a.mean, a.stddev, h), ucb(b.mean, b.stddev, h) - 1e-6) << h;
  }
}

TEST(Suggest, FindsMaximumOnEdge) {
  const auto m = fit_line({{0.2, 0.1}, {0.5, 0.4}, {0.8, 0.7}, {0.95, 0.85}});
  Rng rng(4);
  const double x = suggest(m, 0.0, rng)(0);
  EXPECT_NEAR(x, grid_argmax(m, 0.0), 1e-3);
}

TEST(Suggest, StaysInDomain) {
  const Domain dom{{{"a", -3, -1}, {"b", 10, 50}, {"c", 0, 0.01}}};
  Dataset d;
  Rng rng(5);
  for (int i = 0; i < 12; ++i) {
    Eigen::VectorXd x(3);
    x << rng.uniform(-3, -1), rng.uniform(10, 50), rng.uniform(0, 0.01);
    d.add(x, std::sin(x(0)) + 0.01 * x(1));
  }
  const auto m = gp_fit(d, dom, {}, rng);
  for (int i = 0; i < 10; ++i) EXPECT_TRUE(dom.contains(suggest(m, 2.576, rng)));
}

TEST(Suggest, FixedDimensionsStayFixed) {
  const Domain dom{{{"a", 0, 1}, {"b", 7, 7}}};
  Dataset d;
  for (double x : {0.1, 0.5, 0.9}) {
    Eigen::VectorXd v(2);
    v << x, 7;
    d.add(v, x * (1 - x));
  }
  Rng rng(6);
  const auto m = gp_fit(d, dom, {}, rng);
  EXPECT_EQ(suggest(m, 1.0, rng)(1), 7.0);

  const Domain point{{{"p", 2, 2}}};
  Dataset single;
  single.add(v1(2), 1.0);
  single.add(v1(2), 1.5);
  const auto mp = gp_fit(single, point, {}, rng);
  EXPECT_EQ(suggest(mp, 2.576, rng)(0), 2.0);
}

TEST(Suggest, DeterministicForSeed) {
  const auto m = fit_line({{0.1, 0.0}, {0.9, 0.0}, {0.5, 0.3}});
  Rng a(9), b(9);
  EXPECT_EQ(suggest(m, 0.0, a)(0), suggest(m, 0.0, b)(0));
}

TEST(Suggest, SymmetricMaximaPicksOne) {
  const auto m = fit_line({{0.2, 1.0}, {0.5, 0.0}, {0.8, 1.0}, {0.0, 0.0}, {1.0, 0.0}});
  Rng rng(10);
  const double x = suggest(m, 0.0, rng)(0);
  EXPECT_TRUE(std::fabs(x - 0.2) < 0.05 || std::fabs(x - 0.8) < 0.05) << x;
}

TEST(Halton, InUnitCubeAndLowDiscrepancy) {
  Rng rng(11);
  const auto pts = shifted_halton(1024, 3, rng);
  ASSERT_EQ(pts.size(), 1024u);
  std::array<int, 8> bins{};
  for (const auto& p : pts) {
    for (int j = 0; j < 3; ++j) {
      EXPECT_GE(p(j), 0.0);
      EXPECT_LT(p(j), 1.0);
    }
    bins[static_cast<std::size_t>(p(0) * 8)]++;
  }
  for (int b : bins) EXPECT_NEAR(b, 128, 4);
  EXPECT_DOUBLE_EQ(detail::radical_inverse(1, 2), 0.5);
  EXPECT_DOUBLE_EQ(detail::radical_inverse(3, 2), 0.75);
  EXPECT_DOUBLE_EQ(detail::radical_inverse(5, 3), 7.0 / 9.0);
}

TEST(LatinHypercube, OnePointPerStratum) {
  Rng rng(12);
  const int n = 10;
  const auto pts = latin_hypercube(n, 4, rng);
  ASSERT_EQ(pts.size(), static_cast<std::size_t>(n));
  for (int j = 0; j < 4; ++j) {
    std::vector<int> seen(n, 0);
    for (const auto& p : pts) {
      ASSERT_GE(p(j), 0.0);
      ASSERT_LT(p(j), 1.0);
      seen[static_cast<std::size_t>(p(j) * n)]++;
    }
    for (int s : seen) EXPECT_EQ(s, 1);
  }
}

TEST(Smbo, FindsParabolaPeak) {
  TunerConfig cfg;
  cfg.episodes = 30;
  const auto r = smbo(parabola, unit_line(), cfg);
  EXPECT_EQ(r.history.size(), 30u);
  EXPECT_NEAR(r.best_x(0), 0.3, 0.02);
  EXPECT_GT(r.best_y, -4e-4);
}

TEST(Smbo, InitialOnlyReturnsBestSample) {
  TunerConfig cfg;
  cfg.episodes = cfg.n_init = 10;
  const auto r = smbo(parabola, unit_line(), cfg);
  ASSERT_EQ(r.history.size(), 10u);
  const auto best = std::max_element(r.history.begin(), r.history.end(),
                                     [](const Episode& a, const Episode& b) { return a.y < b.y; });
  EXPECT_EQ(r.best_y, best->y);
  EXPECT_EQ(r.best_x, best->x);
}

TEST(Smbo, BestIsMonotoneAndConsistent) {
  TunerConfig cfg;
  cfg.episodes = 25;
  const Domain dom{{{"a", -1, 1}, {"b", -1, 1}}};
  const auto r = smbo([](const Eigen::VectorXd& x) { return std::cos(3 * x(0)) * std::sin(2 * x(1)); }, dom, cfg);
  double running = -1e300;
  for (std::size_t i = 0; i < r.history.size(); ++i) {
    const auto& ep = r.history[i];
    EXPECT_EQ(ep.episode, static_cast<int>(i));
    EXPECT_TRUE(dom.contains(ep.x));
    running = std::max(running, ep.y);
    EXPECT_EQ(ep.best_y, running);
  }
  EXPECT_EQ(r.best_y, running);
}

TEST(Smbo, SameSeedSameHistory) {
  TunerConfig cfg;
  cfg.episodes = 20;
  cfg.seed = 77;
  const auto a = smbo(parabola, unit_line(), cfg);
  const auto b = smbo(parabola, unit_line(), cfg);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].x, b.history[i].x);
    EXPECT_EQ(a.history[i].y, b.history[i].y);
  }
  cfg.seed = 78;
  const auto c = smbo(parabola, unit_line(), cfg);
  EXPECT_NE(a.history.front().x, c.history.front().x);
}

TEST(Smbo, FailuresGetPenalty) {
  TunerConfig cfg;
  cfg.episodes = 15;
  int calls = 0;
  const auto r = smbo(
      [&](const Eigen::VectorXd& x) {
        ++calls;
        if (x(0) > 0.6) throw std::runtime_error("diverged");
        if (x(0) < 0.05) return std::nan("");
        return parabola(x);
      },
      unit_line(), cfg);
  EXPECT_EQ(calls, 15);
  int failed = 0;
  for (const auto& ep : r.history) {
    if (ep.failed) {
      ++failed;
      EXPECT_EQ(ep.y, kFailurePenalty);
      EXPECT_FALSE(ep.error.empty());
    } else {
      EXPECT_LE(ep.x(0), 0.6);
    }
  }
  EXPECT_GT(failed, 0);
  EXPECT_GT(r.best_y, kFailurePenalty);
}

TEST(Smbo, SingleInitialSample) {
  TunerConfig cfg;
  cfg.n_init = 1;
  cfg.episodes = 5;
  const auto r = smbo(parabola, unit_line(), cfg);
  EXPECT_EQ(r.history.size(), 5u);
}

TEST(Smbo, RejectsBadConfig) {
  TunerConfig cfg;
  cfg.n_init = 0;
  EXPECT_THROW(smbo(parabola, unit_line(), cfg), std::invalid_argument);
  cfg.n_init = 10;
  cfg.episodes = 5;
  EXPECT_THROW(smbo(parabola, unit_line(), cfg), std::invalid_argument);
}
