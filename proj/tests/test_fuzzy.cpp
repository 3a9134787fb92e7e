#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "flexjoint/fuzzy.hpp"
#include "flexjoint/random.hpp"

using namespace flexjoint::fuzzy;

namespace {

constexpr double kPi = std::numbers::pi;

const LinguisticScale kAngle = LinguisticScale::angle();
const LinguisticScale kVelocity = LinguisticScale::velocity();

RuleBase rules(GainRange kp, GainRange kd) { return {kDeltaKpRules, kDeltaKdRules, kp, kd}; }

}  // namespace

TEST(TriangularMF, Examples) {
  const TriangularMF mf{-1, 0, 1};
  EXPECT_EQ(grade(mf, 0.0), 1.0);
  EXPECT_EQ(grade(mf, 0.5), 0.5);
  EXPECT_EQ(grade(mf, -0.25), 0.75);
  EXPECT_EQ(grade(mf, 2.0), 0.0);
  EXPECT_EQ(grade(mf, -1.0), 0.0);
  EXPECT_EQ(grade(mf, 1.0), 0.0);
}

TEST(TriangularMF, HalfTriangles) {
  const TriangularMF left{0, 0, 1};
  const TriangularMF right{0, 1, 1};
  EXPECT_TRUE(left.valid());
  EXPECT_TRUE(right.valid());
  EXPECT_EQ(grade(left, 0.0), 1.0);
  EXPECT_EQ(grade(right, 1.0), 1.0);
  EXPECT_EQ(grade(left, 0.25), 0.75);
  EXPECT_EQ(grade(right, 0.25), 0.25);
  EXPECT_FALSE((TriangularMF{1, 0, 2}).valid());
}

TEST(LinguisticScale, PeaksEvenlySpaced) {
  const std::array<double, 5> want = {-kPi, -kPi / 2, 0.0, kPi / 2, kPi};
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_NEAR(kAngle.mf(kTerms[i]).peak, want[i], 1e-15);
    EXPECT_NEAR(kVelocity.mf(kTerms[i]).peak, 2.5 * (static_cast<double>(i) - 2.0), 1e-15);
  }
  EXPECT_EQ(kAngle.mf(Term::NB).left, kAngle.mf(Term::NB).peak);
  EXPECT_EQ(kAngle.mf(Term::PB).right, kAngle.mf(Term::PB).peak);
}

TEST(LinguisticScale, GradesSumToOne) {
  for (int i = 0; i <= 1000; ++i) {
    const double x = -kPi + 2 * kPi * i / 1000.0;
    const auto g = kAngle.grades(x);
    EXPECT_NEAR(g[0] + g[1] + g[2] + g[3] + g[4], 1.0, 1e-12) << x;
  }
}

TEST(FiringStrengths, CenterRuleOnly) {
  const auto w = firing_strengths(kAngle, kVelocity, 0.0, 0.0);
  for (int i = 0; i < 25; ++i) EXPECT_EQ(w[i], i == 12 ? 1.0 : 0.0);
}

TEST(FiringStrengths, HalfwayBetweenNsAndZe) {
  const auto w = firing_strengths(kAngle, kVelocity, -kPi / 4, 0.0);
  EXPECT_NEAR(w[5 * 1 + 2], 0.5, 1e-15);
  EXPECT_NEAR(w[5 * 2 + 2], 0.5, 1e-15);
  double sum = 0;
  for (double v : w) sum += v;
  EXPECT_NEAR(sum, 1.0, 1e-15);
}

TEST(FiringStrengths, InputsClamped) {
  EXPECT_EQ(firing_strengths(kAngle, kVelocity, 10.0, 0.3), firing_strengths(kAngle, kVelocity, kPi, 0.3));
  EXPECT_EQ(firing_strengths(kAngle, kVelocity, -1.0, -99.0), firing_strengths(kAngle, kVelocity, -1.0, -5.0));
}

TEST(FiringStrengths, PartitionOfUnity) {
  flexjoint::Rng rng(11);
  for (int i = 0; i < 10000; ++i) {
    const auto w = firing_strengths(kAngle, kVelocity, rng.uniform(-kPi, kPi), rng.uniform(-5, 5));
    double sum = 0;
    for (double v : w) {
      EXPECT_GE(v, 0.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(RuleTables, TranscribedCells) {
  EXPECT_EQ(kDeltaKpRules[0][0], Term::NB);
  EXPECT_EQ(kDeltaKpRules[4][4], Term::PB);
  EXPECT_EQ(kDeltaKpRules[2][2], Term::ZE);
  EXPECT_EQ(kDeltaKdRules[0][0], Term::PB);
  EXPECT_EQ(kDeltaKdRules[4][4], Term::NB);
  EXPECT_EQ(kDeltaKdRules[2][2], Term::ZE);
}

TEST(RuleTables, AntisymmetricUnderAxisReversal) {
  for (const auto* t : {&kDeltaKpRules, &kDeltaKdRules}) {
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 5; ++j) EXPECT_EQ((*t)[4 - i][4 - j], negate((*t)[i][j])) << i << "," << j;
    }
  }
}

TEST(GainRange, Singletons) {
  const GainRange r{-2, 6};
  EXPECT_EQ(r.singleton(Term::NB), -2.0);
  EXPECT_EQ(r.singleton(Term::NS), 0.0);
  EXPECT_EQ(r.singleton(Term::ZE), 2.0);
  EXPECT_EQ(r.singleton(Term::PS), 4.0);
  EXPECT_EQ(r.singleton(Term::PB), 6.0);
  const GainRange rev{15.27, -11.61};
  EXPECT_TRUE(rev.reversed());
  EXPECT_EQ(rev.lower(), -11.61);
  EXPECT_EQ(rev.upper(), 15.27);
  EXPECT_EQ(rev.singleton(Term::NB), 15.27);
  EXPECT_EQ(rev.singleton(Term::PB), -11.61);
  EXPECT_EQ(rev.ordered(), (GainRange{-11.61, 15.27}));
}

TEST(Infer, CenterGivesMidpoints) {
  const auto out = infer(rules({-4, 10}, {1, 3}), kAngle, kVelocity, 0, 0);
  EXPECT_DOUBLE_EQ(out.dkp, 3.0);
  EXPECT_DOUBLE_EQ(out.dkd, 2.0);
}

TEST(Infer, Corners) {
  const auto rb = rules({-4, 10}, {1, 3});
  const auto nbnb = infer(rb, kAngle, kVelocity, -kPi, -5);
  EXPECT_EQ(nbnb.dkp, -4.0);
  EXPECT_EQ(nbnb.dkd, 3.0);
  const auto pbpb = infer(rb, kAngle, kVelocity, kPi, 5);
  EXPECT_EQ(pbpb.dkp, 10.0);
  EXPECT_EQ(pbpb.dkd, 1.0);
}

TEST(Infer, ReversedLabelsFollowLo) {
  const auto rb = rules({15.27, -11.61}, {0.1, -3.228});
  const auto nbnb = infer(rb, kAngle, kVelocity, -kPi, -5);
  EXPECT_EQ(nbnb.dkp, 15.27);
  EXPECT_EQ(nbnb.dkd, -3.228);
}

TEST(Infer, BoundedOnGrid) {
  for (const auto& [kp, kd] : {std::pair<GainRange, GainRange>{{-11.61, 15.27}, {-3.228, 0.1}},
                               {{15.27, -11.61}, {0.1, -3.228}},
                               {{0, 0}, {-1, 1}}}) {
    const auto rb = rules(kp, kd);
    for (int i = 0; i <= 100; ++i) {
      for (int j = 0; j <= 100; ++j) {
        const double e = -kPi + 2 * kPi * i / 100.0;
        const double de = -5 + 10 * j / 100.0;
        const auto out = infer(rb, kAngle, kVelocity, e, de);
        EXPECT_GE(out.dkp, kp.lower());
        EXPECT_LE(out.dkp, kp.upper());
        EXPECT_GE(out.dkd, kd.lower());
        EXPECT_LE(out.dkd, kd.upper());
      }
    }
  }
}

TEST(Infer, Antisymmetry) {
  const GainRange kp{-11.61, 15.27};
  const GainRange kd{-3.228, 0.1};
  const auto rb = rules(kp, kd);
  flexjoint::Rng rng(5);
  for (int i = 0; i < 5000; ++i) {
    const double e = rng.uniform(-4, 4);
    const double de = rng.uniform(-6, 6);
    const auto a = infer(rb, kAngle, kVelocity, e, de);
    const auto b = infer(rb, kAngle, kVelocity, -e, -de);
    EXPECT_NEAR(b.dkp, 2 * kp.midpoint() - a.dkp, 1e-9);
    EXPECT_NEAR(b.dkd, 2 * kd.midpoint() - a.dkd, 1e-9);
  }
}

TEST(Infer, Continuity) {
  const auto rb = rules({-11.61, 15.27}, {-3.228, 0.1});
  flexjoint::Rng rng(8);
  double worst = 0;
  for (int i = 0; i < 20000; ++i) {
    const double e = rng.uniform(-kPi, kPi - 1e-6);
    const double de = rng.uniform(-5, 5 - 1e-6);
    const auto a = infer(rb, kAngle, kVelocity, e, de);
    const auto b = infer(rb, kAngle, kVelocity, e + 1e-6, de);
    const auto c = infer(rb, kAngle, kVelocity, e, de + 1e-6);
    worst = std::fmax(worst, std::fabs(a.dkp - b.dkp));
    worst = std::fmax(worst, std::fabs(a.dkd - c.dkd));
    worst = std::fmax(worst, std::fabs(a.dkp - c.dkp));
    worst = std::fmax(worst, std::fabs(a.dkd - b.dkd));
  }
  EXPECT_LE(worst, 1e-3);
}

TEST(Regulator, MatchesInfer) {
  const Regulator flr({-1, 2}, {3, -4});
  const auto a = flr(0.7, -1.3);
  const auto b = infer(flr.rules(), kAngle, kVelocity, 0.7, -1.3);
  EXPECT_EQ(a.dkp, b.dkp);
  EXPECT_EQ(a.dkd, b.dkd);
}

TEST(FlrBounds, Zero) {
  EXPECT_TRUE(FlrBounds{}.zero());
  FlrBounds b;
  b.dkd2.hi = 1e-9;
  EXPECT_FALSE(b.zero());
}
