#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "flexjoint/control.hpp"
#include "flexjoint/fuzzy.hpp"
#include "flexjoint/plant.hpp"

namespace flexjoint::analysis {

using Complex = std::complex<double>;
using Spectrum = std::array<Complex, 4>;

// Lipschitz bounds on the disturbance partials.
struct StabilityBounds {
  double L11 = 0.0;
  double L12 = 0.0;
  double L21 = 0.0;
  double L22 = 0.0;

  void validate() const {
    for (double v : {L11, L12, L21, L22}) {
      if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("StabilityBounds: values must be >= 0");
    }
  }
};

// dd1/de1, dd1/de2, dd2/de3, dd2/de4. Zero for a state-independent disturbance.
struct DisturbancePartials {
  double d1_e1 = 0.0;
  double d1_e2 = 0.0;
  double d2_e3 = 0.0;
  double d2_e4 = 0.0;
};

// Jacobian of the closed-loop error dynamics over (e1, e2, e3, e4).
struct LinearClosedLoop {
  Eigen::Matrix4d A = Eigen::Matrix4d::Zero();

  // Rows 1 and 3 are the unit shifts e1' = e2, e3' = e4; the lower-left
  // 2x2 block is zero.
  bool has_error_pattern() const {
    const Eigen::RowVector4d r0(0, 1, 0, 0);
    const Eigen::RowVector4d r2(0, 0, 0, 1);
    return A.allFinite() && A.row(0) == r0 && A.row(2) == r2 && A(3, 0) == 0.0 && A(3, 1) == 0.0;
  }
};

inline LinearClosedLoop error_jacobian(const plant::PlantParams& p, const control::GainSet& gains,
                                       const DisturbancePartials& dp = {}) {
  LinearClosedLoop j;
  auto& A = j.A;
  A(0, 1) = 1.0;
  A(1, 0) = -dp.d1_e1 - gains.kp1;
  A(1, 1) = -dp.d1_e2 - gains.kd1;
  A(1, 2) = p.k / p.I_l;
  A(2, 3) = 1.0;
  A(3, 2) = -(p.k + gains.kp2) / p.I_m - dp.d2_e3;
  A(3, 3) = -(p.mu + gains.kd2) / p.I_m - dp.d2_e4;
  return j;
}

namespace detail {

inline bool nearly_equal(double a, double b) noexcept {
  return std::fabs(a - b) <= 1e-9 * std::fmax(1.0, std::fmax(std::fabs(a), std::fabs(b)));
}

}  // namespace detail

// Ascending real part; values whose real parts agree to ~1e-9 are ordered
// by imaginary part.
template <std::size_t N>
void sort_spectrum(std::array<Complex, N>& v) {
  std::sort(v.begin(), v.end(), [](Complex a, Complex b) { return a.real() < b.real(); });
  for (std::size_t i = 0; i + 1 < N; ++i) {
    std::size_t j = i + 1;
    while (j < N && detail::nearly_equal(v[i].real(), v[j].real())) ++j;
    std::sort(v.begin() + static_cast<std::ptrdiff_t>(i), v.begin() + static_cast<std::ptrdiff_t>(j),
              [](Complex a, Complex b) { return a.imag() < b.imag(); });
    i = j - 1;
  }
}

// General dense route (real Schur via Eigen).
inline Spectrum eigenvalues(const Eigen::Matrix4d& A) {
  Eigen::EigenSolver<Eigen::Matrix4d> solver(A, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) throw std::runtime_error("eigenvalue iteration did not converge");
  Spectrum out;
  for (int i = 0; i < 4; ++i) out[i] = solver.eigenvalues()(i);
  sort_spectrum(out);
  return out;
}

inline Spectrum eigenvalues(const LinearClosedLoop& j) { return eigenvalues(j.A); }

// Roots of s^2 - trace*s + det for a 2x2 block.
inline std::array<Complex, 2> quadratic_block_roots(double a, double b, double c, double d) {
  const double half_trace = 0.5 * (a + d);
  const double disc = half_trace * half_trace - (a * d - b * c);
  if (disc >= 0.0) {
    const double r = std::sqrt(disc);
    return {Complex(half_trace - r, 0.0), Complex(half_trace + r, 0.0)};
  }
  const double r = std::sqrt(-disc);
  return {Complex(half_trace, -r), Complex(half_trace, r)};
}

// Closed-form route: the error Jacobian is block upper-triangular, so its
// spectrum is the union of the two diagonal 2x2 block spectra.
inline Spectrum block_eigenvalues(const LinearClosedLoop& j) {
  if (!j.has_error_pattern()) throw std::invalid_argument("block_eigenvalues: matrix is not block upper-triangular");
  const auto& A = j.A;
  const auto b1 = quadratic_block_roots(A(0, 0), A(0, 1), A(1, 0), A(1, 1));
  const auto b2 = quadratic_block_roots(A(2, 2), A(2, 3), A(3, 2), A(3, 3));
  Spectrum out = {b1[0], b1[1], b2[0], b2[1]};
  sort_spectrum(out);
  return out;
}

inline double max_real_part(const Spectrum& s) noexcept {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& z : s) m = std::fmax(m, z.real());
  return m;
}

// Smallest, over all pairings, of the largest |a_i - b_pi(i)|.
inline double spectrum_distance(const Spectrum& a, const Spectrum& b) {
  std::array<int, 4> perm = {0, 1, 2, 3};
  double best = std::numeric_limits<double>::infinity();
  do {
    double worst = 0.0;
    for (int i = 0; i < 4; ++i) worst = std::fmax(worst, std::abs(a[i] - b[perm[i]]));
    best = std::fmin(best, worst);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Monic quartic s^4 + c[1] s^3 + c[2] s^2 + c[3] s + c[4]; c[0] == 1.
struct CharPoly {
  std::array<double, 5> c = {1.0, 0.0, 0.0, 0.0, 0.0};

  Complex operator()(Complex s) const noexcept {
    Complex v = c[0];
    for (int i = 1; i < 5; ++i) v = v * s + c[i];
    return v;
  }
};

// Faddeev-LeVerrier recursion.
inline CharPoly characteristic_polynomial(const Eigen::Matrix4d& A) {
  CharPoly poly;
  Eigen::Matrix4d M = Eigen::Matrix4d::Zero();
  const Eigen::Matrix4d I = Eigen::Matrix4d::Identity();
  for (int k = 1; k <= 4; ++k) {
    M = A * M + poly.c[k - 1] * I;
    poly.c[k] = -(A * M).trace() / k;
  }
  return poly;
}

// Aberth-Ehrlich simultaneous iteration for the quartic's roots.
inline Spectrum polynomial_roots(const CharPoly& poly) {
  const auto& c = poly.c;
  double bound = 0.0;
  for (int i = 1; i < 5; ++i) bound = std::fmax(bound, std::fabs(c[i]));
  const double radius = 1.0 + bound;
  auto derivative = [&](Complex s) {
    Complex v = 4.0 * c[0];
    for (int i = 1; i < 4; ++i) v = v * s + static_cast<double>(4 - i) * c[i];
    return v;
  };

  Spectrum z;
  // Start on a shrunken Cauchy circle with an irrational angular offset so
  // no start is real-symmetric.
  const double r0 = std::fmax(1e-3, std::pow(std::fabs(c[4]) + 1e-300, 0.25));
  const double r = std::fmin(radius, r0);
  for (int i = 0; i < 4; ++i) {
    z[i] = std::polar(r, 2.0 * std::numbers::pi * i / 4.0 + 0.4);
  }
  for (int iter = 0; iter < 500; ++iter) {
    double max_step = 0.0;
    for (int i = 0; i < 4; ++i) {
      const Complex f = poly(z[i]);
      if (f == Complex(0.0)) continue;
      const Complex ratio = f / derivative(z[i]);
      Complex repulsion = 0.0;
      for (int j = 0; j < 4; ++j) {
        if (j != i) repulsion += 1.0 / (z[i] - z[j]);
      }
      const Complex step = ratio / (1.0 - ratio * repulsion);
      z[i] -= step;
      max_step = std::fmax(max_step, std::abs(step) / std::fmax(1.0, std::abs(z[i])));
    }
    if (max_step < 1e-15) break;
  }
  sort_spectrum(z);
  return z;
}

inline Spectrum roots(const CharPoly& poly) { return polynomial_roots(poly); }

// State matrix over (x1, x2, x3, x4) of the gravity-free, disturbance-free
// plant closed by the cascaded PD law (x3d_dot = 0), obtained by applying
// the actual control and plant functions to the unit basis vectors.
inline Eigen::Matrix4d closed_loop_state_matrix(const plant::PlantParams& params, const control::GainSet& gains) {
  const plant::PlantParams p = params.without_gravity();
  const control::RefSample zero_ref{};
  Eigen::Matrix4d A;
  for (int col = 0; col < 4; ++col) {
    std::array<double, 4> e{};
    e[col] = 1.0;
    const plant::State s{e[0], e[1], e[2], e[3]};
    const double u = control::cascaded_torque(p, gains, s, zero_ref).u;
    const auto f = plant::derivatives(p, s, u, 0.0, 0.0);
    for (int row = 0; row < 4; ++row) A(row, col) = f[row];
  }
  return A;
}

inline CharPoly closed_loop_charpoly(const plant::PlantParams& params, const control::GainSet& gains) {
  return characteristic_polynomial(closed_loop_state_matrix(params, gains));
}

// Linear map x -> e for a zero reference with g = 0.
inline Eigen::Matrix4d error_coordinates(const plant::PlantParams& p, const control::GainSet& gains) {
  Eigen::Matrix4d T = Eigen::Matrix4d::Zero();
  T(0, 0) = -1.0;
  T(1, 1) = -1.0;
  T(2, 0) = 1.0 - gains.kp1 * p.I_l / p.k;
  T(2, 1) = -gains.kd1 * p.I_l / p.k;
  T(2, 2) = -1.0;
  T(3, 3) = -1.0;
  return T;
}

struct Condition {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool satisfied = false;
};

struct Verdict {
  std::vector<Condition> conditions;

  bool stable() const noexcept {
    return std::all_of(conditions.begin(), conditions.end(), [](const Condition& c) { return c.satisfied; });
  }
  std::vector<std::string> violated() const {
    std::vector<std::string> out;
    for (const auto& c : conditions) {
      if (!c.satisfied) out.push_back(c.name);
    }
    return out;
  }
};

namespace detail {

inline Verdict strict_conditions(const control::GainSet& g, const plant::PlantParams& p, const StabilityBounds& b) {
  b.validate();
  auto cond = [](std::string name, double lhs, double rhs) { return Condition{std::move(name), lhs, rhs, lhs > rhs}; };
  Verdict v;
  v.conditions.push_back(cond("kd1 > L12", g.kd1, b.L12));
  v.conditions.push_back(cond("kp1 > L11", g.kp1, b.L11));
  v.conditions.push_back(cond("(mu + kd2) / I_m > L22", (p.mu + g.kd2) / p.I_m, b.L22));
  v.conditions.push_back(cond("(k + kp2) / I_m > L21", (p.k + g.kp2) / p.I_m, b.L21));
  return v;
}

}  // namespace detail

inline Verdict check_theorem1(const control::GainSet& gains, const plant::PlantParams& p,
                              const StabilityBounds& bounds = {}) {
  return detail::strict_conditions(gains, p, bounds);
}

// Each gain lowered by the lower end of its ordered FLR range.
inline control::GainSet worst_case_gains(const control::GainSet& base, const fuzzy::FlrBounds& flr) {
  return {base.kp1 + flr.dkp1.lower(), base.kd1 + flr.dkd1.lower(), base.kp2 + flr.dkp2.lower(),
          base.kd2 + flr.dkd2.lower()};
}

inline Verdict check_flr_conditions(const control::GainSet& base, const fuzzy::FlrBounds& flr,
                                    const plant::PlantParams& p, const StabilityBounds& bounds = {}) {
  return detail::strict_conditions(worst_case_gains(base, flr), p, bounds);
}

}  // namespace flexjoint::analysis
