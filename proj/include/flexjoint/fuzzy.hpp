#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string_view>

namespace flexjoint::fuzzy {

enum class Term { NB = 0, NS = 1, ZE = 2, PS = 3, PB = 4 };

inline constexpr std::array<Term, 5> kTerms = {Term::NB, Term::NS, Term::ZE, Term::PS, Term::PB};

constexpr std::string_view term_name(Term t) noexcept {
  constexpr std::array<std::string_view, 5> names = {"NB", "NS", "ZE", "PS", "PB"};
  return names[static_cast<int>(t)];
}

constexpr Term negate(Term t) noexcept { return static_cast<Term>(4 - static_cast<int>(t)); }

struct TriangularMF {
  double left = -1.0;
  double peak = 0.0;
  double right = 1.0;

  bool valid() const noexcept { return left <= peak && peak <= right; }

  // Piecewise-linear triangle; a degenerate side (left == peak or
  // peak == right) makes a half-triangle that is 1 at the peak.
  double grade(double x) const noexcept {
    if (x < left || x > right) return 0.0;
    if (x == peak) return 1.0;
    if (x < peak) return (x - left) / (peak - left);
    return (right - x) / (right - peak);
  }
};

inline double grade(const TriangularMF& mf, double x) noexcept { return mf.grade(x); }

// Five evenly spaced triangles over [lo, hi]; NB and PB are half-triangles
// peaking on the domain edges, so grades sum to one everywhere inside.
class LinguisticScale {
 public:
  LinguisticScale(double lo, double hi) : lo_(lo), hi_(hi) {
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
      throw std::invalid_argument("LinguisticScale: need finite lo < hi");
    }
    const double step = (hi - lo) / 4.0;
    std::array<double, 5> peaks = {lo, lo + step, 0.5 * (lo + hi), hi - step, hi};
    for (int i = 0; i < 5; ++i) {
      const double left = i == 0 ? peaks[0] : peaks[i - 1];
      const double right = i == 4 ? peaks[4] : peaks[i + 1];
      mfs_[i] = {left, peaks[i], right};
    }
  }

  // Error and velocity-error domains used by both regulators.
  static LinguisticScale angle() { return {-std::numbers::pi, std::numbers::pi}; }
  static LinguisticScale velocity() { return {-5.0, 5.0}; }

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  double clamp(double x) const noexcept { return std::clamp(x, lo_, hi_); }
  const TriangularMF& mf(Term t) const noexcept { return mfs_[static_cast<int>(t)]; }
  const std::array<TriangularMF, 5>& mfs() const noexcept { return mfs_; }

  std::array<double, 5> grades(double x) const noexcept {
    const double c = clamp(x);
    std::array<double, 5> g{};
    for (int i = 0; i < 5; ++i) g[i] = mfs_[i].grade(c);
    return g;
  }

 private:
  double lo_;
  double hi_;
  std::array<TriangularMF, 5> mfs_{};
};

// Rows are indexed by the first input (e), columns by the second (de).
using RuleTable = std::array<std::array<Term, 5>, 5>;

inline constexpr RuleTable kDeltaKpRules = {{
    {Term::NB, Term::NB, Term::NS, Term::NS, Term::ZE},
    {Term::NB, Term::NS, Term::NS, Term::ZE, Term::PS},
    {Term::NS, Term::NS, Term::ZE, Term::PS, Term::PS},
    {Term::NS, Term::ZE, Term::PS, Term::PS, Term::PB},
    {Term::ZE, Term::PS, Term::PS, Term::PB, Term::PB},
}};

inline constexpr RuleTable kDeltaKdRules = {{
    {Term::PB, Term::PB, Term::PS, Term::PS, Term::ZE},
    {Term::PB, Term::PS, Term::PS, Term::ZE, Term::NS},
    {Term::PS, Term::PS, Term::ZE, Term::NS, Term::NS},
    {Term::PS, Term::ZE, Term::NS, Term::NS, Term::NB},
    {Term::ZE, Term::NS, Term::NS, Term::NB, Term::NB},
}};

// Output range of one gain increment. `lo` is the singleton of NB and `hi`
// the singleton of PB, exactly as labelled in the gains file. Tuned values
// may come out with lo > hi; the regulator keeps that orientation, while
// lower()/upper() give the ordered interval used for bounds and stability.
struct GainRange {
  double lo = 0.0;
  double hi = 0.0;

  double lower() const noexcept { return std::fmin(lo, hi); }
  double upper() const noexcept { return std::fmax(lo, hi); }
  double midpoint() const noexcept { return 0.5 * (lo + hi); }
  bool reversed() const noexcept { return lo > hi; }
  GainRange ordered() const noexcept { return {lower(), upper()}; }

  // Zero-order Sugeno consequents evenly spaced from lo (NB) to hi (PB).
  double singleton(Term t) const noexcept {
    switch (t) {
      case Term::NB: return lo;
      case Term::NS: return lo + 0.25 * (hi - lo);
      case Term::ZE: return midpoint();
      case Term::PS: return hi - 0.25 * (hi - lo);
      case Term::PB: return hi;
    }
    return midpoint();
  }

  bool operator==(const GainRange&) const = default;
};

struct FlrBounds {
  GainRange dkp1;
  GainRange dkd1;
  GainRange dkp2;
  GainRange dkd2;

  bool zero() const noexcept { return *this == FlrBounds{}; }
  bool operator==(const FlrBounds&) const = default;
};

struct RuleBase {
  RuleTable table_kp = kDeltaKpRules;
  RuleTable table_kd = kDeltaKdRules;
  GainRange kp_range;
  GainRange kd_range;
};

using FiringStrengths = std::array<double, 25>;

// Normalized product t-norm strengths; index = 5 * e_term + de_term.
inline FiringStrengths firing_strengths(const LinguisticScale& e_scale, const LinguisticScale& de_scale, double e,
                                        double de) {
  const auto ge = e_scale.grades(e);
  const auto gd = de_scale.grades(de);
  FiringStrengths w{};
  double total = 0.0;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      w[5 * i + j] = ge[i] * gd[j];
      total += w[5 * i + j];
    }
  }
  if (!(total > 0.0)) {
    throw std::logic_error("fuzzy::firing_strengths: all rule strengths are zero (malformed scale)");
  }
  for (double& v : w) v /= total;
  return w;
}

struct GainIncrement {
  double dkp = 0.0;
  double dkd = 0.0;
};

inline GainIncrement infer(const RuleBase& rb, const LinguisticScale& e_scale, const LinguisticScale& de_scale,
                           double e, double de) {
  const FiringStrengths w = firing_strengths(e_scale, de_scale, e, de);
  GainIncrement out;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      const double wij = w[5 * i + j];
      out.dkp += wij * rb.kp_range.singleton(rb.table_kp[i][j]);
      out.dkd += wij * rb.kd_range.singleton(rb.table_kd[i][j]);
    }
  }
  // Weighted average of singletons cannot leave the hull; clamp rounding.
  out.dkp = std::clamp(out.dkp, rb.kp_range.lower(), rb.kp_range.upper());
  out.dkd = std::clamp(out.dkd, rb.kd_range.lower(), rb.kd_range.upper());
  return out;
}

// One fuzzy logic regulator: (angle error, velocity error) -> (dkp, dkd).
class Regulator {
 public:
  Regulator(GainRange kp_range, GainRange kd_range)
      : rules_{kDeltaKpRules, kDeltaKdRules, kp_range, kd_range},
        e_scale_(LinguisticScale::angle()),
        de_scale_(LinguisticScale::velocity()) {}

  GainIncrement operator()(double e, double de) const { return infer(rules_, e_scale_, de_scale_, e, de); }

  const RuleBase& rules() const noexcept { return rules_; }
  const LinguisticScale& e_scale() const noexcept { return e_scale_; }
  const LinguisticScale& de_scale() const noexcept { return de_scale_; }

 private:
  RuleBase rules_;
  LinguisticScale e_scale_;
  LinguisticScale de_scale_;
};

}  // namespace flexjoint::fuzzy
