#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "flexjoint/lbfgs.hpp"
#include "flexjoint/random.hpp"

namespace flexjoint::tuning {

struct Dimension {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
};

// Axis-aligned search box. A dimension with lo == hi is held fixed.
struct Domain {
  std::vector<Dimension> dims;

  std::size_t size() const noexcept { return dims.size(); }

  void validate() const {
    if (dims.empty()) throw std::invalid_argument("Domain: no dimensions");
    for (const auto& d : dims) {
      if (!std::isfinite(d.lo) || !std::isfinite(d.hi) || d.lo > d.hi) {
        throw std::invalid_argument("Domain: dimension '" + d.name + "' needs finite lo <= hi");
      }
    }
  }

  Eigen::VectorXd to_unit(const Eigen::VectorXd& x) const {
    Eigen::VectorXd u(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const auto& d = dims[static_cast<std::size_t>(i)];
      u(i) = d.hi > d.lo ? (x(i) - d.lo) / (d.hi - d.lo) : 0.0;
    }
    return u;
  }

  Eigen::VectorXd from_unit(const Eigen::VectorXd& u) const {
    Eigen::VectorXd x(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      const auto& d = dims[static_cast<std::size_t>(i)];
      x(i) = d.hi > d.lo ? d.lo + std::clamp(u(i), 0.0, 1.0) * (d.hi - d.lo) : d.lo;
    }
    return x;
  }

  bool contains(const Eigen::VectorXd& x) const {
    if (static_cast<std::size_t>(x.size()) != dims.size()) return false;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const auto& d = dims[static_cast<std::size_t>(i)];
      if (!(x(i) >= d.lo && x(i) <= d.hi)) return false;
    }
    return true;
  }
};

struct Dataset {
  std::vector<Eigen::VectorXd> x;
  std::vector<double> y;

  std::size_t size() const noexcept { return y.size(); }

  void add(Eigen::VectorXd xi, double yi) {
    if (!x.empty() && xi.size() != x.front().size()) throw std::invalid_argument("Dataset: dimension mismatch");
    if (!xi.allFinite() || !std::isfinite(yi)) throw std::invalid_argument("Dataset: non-finite row");
    x.push_back(std::move(xi));
    y.push_back(yi);
  }
};

// Squared-exponential ARD hyperparameters, all in log space. The noise
// variance is carried as a ratio to the signal variance.
struct GpHyper {
  Eigen::VectorXd log_length;
  double log_signal = 0.0;
  double log_noise_ratio = std::log(1e-4);

  double signal_variance() const { return std::exp(log_signal); }
  double noise_variance() const { return std::exp(log_signal + log_noise_ratio); }

  Eigen::VectorXd pack() const {
    Eigen::VectorXd t(log_length.size() + 2);
    t << log_length, log_signal, log_noise_ratio;
    return t;
  }
  static GpHyper unpack(const Eigen::VectorXd& t) {
    const Eigen::Index d = t.size() - 2;
    return {t.head(d), t(d), t(d + 1)};
  }
};

// Log-space box for the marginal-likelihood search, in unit-box inputs and
// standardized targets.
struct HyperBounds {
  double log_length_lo = std::log(1e-2);
  double log_length_hi = std::log(1e2);
  double log_signal_lo = std::log(1e-2);
  double log_signal_hi = std::log(1e2);
  double log_noise_lo = std::log(1e-8);
  double log_noise_hi = std::log(1e-1);
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::array<double, 6> kJitterSequence = {0.0, 1e-12, 1e-10, 1e-8, 1e-6, 1e-4};

inline double se_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& inv_len) {
  return std::exp(-0.5 * (a - b).cwiseProduct(inv_len).squaredNorm());
}

// Exact GP regression with a fixed kernel; inputs and targets as given.
class GaussianProcess {
 public:
  GaussianProcess() = default;

  GaussianProcess(Eigen::MatrixXd X, Eigen::VectorXd y, GpHyper hyper)
      : X_(std::move(X)), y_(std::move(y)), hyper_(std::move(hyper)) {
    if (X_.rows() != y_.size() || X_.rows() < 1) throw std::invalid_argument("GaussianProcess: bad training set");
    factorize();
  }

  struct Moments {
    double mean = 0.0;
    double variance = 0.0;
  };

  // Latent posterior moments (noise excluded); variance clamped at 0.
  Moments predict(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd ks = cross_covariance(x);
    Moments m;
    m.mean = ks.dot(alpha_);
    const Eigen::VectorXd v = chol_.matrixL().solve(ks);
    m.variance = std::fmax(0.0, hyper_.signal_variance() - v.squaredNorm());
    return m;
  }

  Eigen::VectorXd cross_covariance(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd inv_len = (-hyper_.log_length.array()).exp().matrix();
    const double sf2 = hyper_.signal_variance();
    Eigen::VectorXd ks(X_.rows());
    for (Eigen::Index i = 0; i < X_.rows(); ++i) ks(i) = sf2 * se_correlation(X_.row(i).transpose(), x, inv_len);
    return ks;
  }

  // Training covariance including noise and the jitter actually used.
  Eigen::MatrixXd covariance() const { return covariance(X_, hyper_, jitter_); }

  static Eigen::MatrixXd covariance(const Eigen::MatrixXd& X, const GpHyper& h, double jitter) {
    const Eigen::Index n = X.rows();
    const Eigen::VectorXd inv_len = (-h.log_length.array()).exp().matrix();
    const double sf2 = h.signal_variance();
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      K(i, i) = sf2 * (1.0 + std::exp(h.log_noise_ratio) + jitter);
      for (Eigen::Index j = 0; j < i; ++j) {
        K(i, j) = K(j, i) = sf2 * se_correlation(X.row(i).transpose(), X.row(j).transpose(), inv_len);
      }
    }
    return K;
  }

  // Log marginal likelihood and its gradient w.r.t. GpHyper::pack().
  // Returns -inf when the covariance cannot be factorized.
  static double log_marginal_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GpHyper& h,
                                        Eigen::VectorXd* grad) {
    const Eigen::Index n = X.rows();
    const Eigen::Index d = X.cols();
    Eigen::MatrixXd K = covariance(X, h, 0.0);
    Eigen::LLT<Eigen::MatrixXd> llt(K);
    if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
    const Eigen::VectorXd alpha = llt.solve(y);
    const auto& L = llt.matrixLLT();
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) log_det += std::log(L(i, i));
    const double lml = -0.5 * y.dot(alpha) - log_det - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
    if (grad == nullptr) return lml;

    // W = alpha alpha^T - K^-1; dL/dtheta = 0.5 tr(W dK/dtheta).
    Eigen::MatrixXd W = llt.solve(Eigen::MatrixXd::Identity(n, n));
    W = alpha * alpha.transpose() - W;
    grad->setZero(d + 2);
    const Eigen::VectorXd inv_len = (-h.log_length.array()).exp().matrix();
    const double sf2 = h.signal_variance();
    const double noise_ratio = std::exp(h.log_noise_ratio);
    double g_signal = 0.0;
    double g_noise = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      g_signal += 0.5 * W(i, i) * K(i, i);
      g_noise += 0.5 * W(i, i) * sf2 * noise_ratio;
      for (Eigen::Index j = 0; j < i; ++j) {
        const double wk = W(i, j) * K(i, j);  // symmetric pair counted twice * 0.5
        g_signal += wk;
        for (Eigen::Index q = 0; q < d; ++q) {
          const double r = (X(i, q) - X(j, q)) * inv_len(q);
          (*grad)(q) += wk * r * r;
        }
      }
    }
    (*grad)(d) = g_signal;
    (*grad)(d + 1) = g_noise;
    return lml;
  }

  const GpHyper& hyper() const noexcept { return hyper_; }
  double jitter() const noexcept { return jitter_; }
  const Eigen::MatrixXd& inputs() const noexcept { return X_; }
  const Eigen::VectorXd& targets() const noexcept { return y_; }

 private:
  void factorize() {
    for (double jitter : kJitterSequence) {
      chol_.compute(covariance(X_, hyper_, jitter));
      if (chol_.info() == Eigen::Success) {
        jitter_ = jitter;
        alpha_ = chol_.solve(y_);
        if (alpha_.allFinite()) return;
      }
    }
    throw NumericalError("GaussianProcess: covariance is singular after jitter escalation");
  }

  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
  GpHyper hyper_;
  double jitter_ = 0.0;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd alpha_;
};

struct GpFitOptions {
  int restarts = 8;
  HyperBounds bounds;
  std::optional<double> fixed_noise_ratio;  // σn² / σf², kept out of the search when set
  std::optional<GpHyper> warm_start;        // extra start point, e.g. the previous optimum
  LbfgsOptions optimizer;
};

namespace detail {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace detail

// Multi-start maximization of the log marginal likelihood. The box is
// removed by a sigmoid change of variables.
inline GpHyper fit_hyperparameters(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GpFitOptions& opt,
                                   Rng& rng) {
  const Eigen::Index d = X.cols();
  const Eigen::Index m = d + 2;
  Eigen::VectorXd lo(m), hi(m);
  lo.head(d).setConstant(opt.bounds.log_length_lo);
  hi.head(d).setConstant(opt.bounds.log_length_hi);
  lo(d) = opt.bounds.log_signal_lo;
  hi(d) = opt.bounds.log_signal_hi;
  lo(d + 1) = opt.bounds.log_noise_lo;
  hi(d + 1) = opt.bounds.log_noise_hi;
  if (opt.fixed_noise_ratio) lo(d + 1) = hi(d + 1) = std::log(*opt.fixed_noise_ratio);

  auto to_theta = [&](const Eigen::VectorXd& z) {
    Eigen::VectorXd t(m);
    for (Eigen::Index i = 0; i < m; ++i) t(i) = lo(i) + (hi(i) - lo(i)) * detail::sigmoid(z(i));
    return t;
  };
  auto to_z = [&](const Eigen::VectorXd& t) {
    Eigen::VectorXd z(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double w = hi(i) - lo(i);
      z(i) = w > 0.0 ? detail::logit(std::clamp((t(i) - lo(i)) / w, 1e-6, 1.0 - 1e-6)) : 0.0;
    }
    return z;
  };

  const Objective objective = [&](const Eigen::VectorXd& z, Eigen::VectorXd& gz) {
    const Eigen::VectorXd theta = to_theta(z);
    Eigen::VectorXd gt;
    const double lml = GaussianProcess::log_marginal_likelihood(X, y, GpHyper::unpack(theta), &gt);
    if (!std::isfinite(lml)) return std::numeric_limits<double>::infinity();
    gz.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double s = detail::sigmoid(z(i));
      gz(i) = -gt(i) * (hi(i) - lo(i)) * s * (1.0 - s);
    }
    return -lml;
  };

  std::vector<Eigen::VectorXd> starts;
  if (opt.warm_start && opt.warm_start->log_length.size() == d) starts.push_back(to_z(opt.warm_start->pack()));
  for (int r = 0; r < opt.restarts; ++r) {
    Eigen::VectorXd t(m);
    for (Eigen::Index i = 0; i < m; ++i) t(i) = rng.uniform(lo(i), hi(i));
    starts.push_back(to_z(t));
  }

  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_theta = to_theta(Eigen::VectorXd::Zero(m));
  for (const auto& z0 : starts) {
    const LbfgsResult r = lbfgs_minimize(objective, z0, opt.optimizer);
    if (std::isfinite(r.value) && r.value < best) {
      best = r.value;
      best_theta = to_theta(r.x);
    }
  }
  return GpHyper::unpack(best_theta);
}

struct Prediction {
  double mean = 0.0;
  double stddev = 0.0;
};

// Surrogate over a Domain: inputs mapped to the unit box, targets
// standardized; predictions are returned in original units.
class GpModel {
 public:
  GpModel(Domain domain, GaussianProcess gp, double y_mean, double y_scale)
      : domain_(std::move(domain)), gp_(std::move(gp)), y_mean_(y_mean), y_scale_(y_scale) {}

  Prediction predict(const Eigen::VectorXd& x) const { return predict_unit(domain_.to_unit(x)); }

  Prediction predict_unit(const Eigen::VectorXd& u) const {
    const auto m = gp_.predict(u);
    return {y_mean_ + y_scale_ * m.mean, y_scale_ * std::sqrt(m.variance)};
  }

  // Prior standard deviation in original units.
  double signal_stddev() const { return y_scale_ * std::sqrt(gp_.hyper().signal_variance()); }

  const Domain& domain() const noexcept { return domain_; }
  const GaussianProcess& gp() const noexcept { return gp_; }
  double y_mean() const noexcept { return y_mean_; }
  double y_scale() const noexcept { return y_scale_; }

 private:
  Domain domain_;
  GaussianProcess gp_;
  double y_mean_;
  double y_scale_;
};

inline GpModel gp_fit(const Dataset& data, const Domain& domain, const GpFitOptions& opt, Rng& rng) {
  domain.validate();
  if (data.size() < 2) throw std::invalid_argument("gp_fit: need at least two rows");
  const auto n = static_cast<Eigen::Index>(data.size());
  const auto d = static_cast<Eigen::Index>(domain.size());
  Eigen::MatrixXd X(n, d);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& xi = data.x[static_cast<std::size_t>(i)];
    if (xi.size() != d) throw std::invalid_argument("gp_fit: row dimension does not match domain");
    X.row(i) = domain.to_unit(xi).transpose();
    y(i) = data.y[static_cast<std::size_t>(i)];
  }
  const double mean = y.mean();
  const double var = (y.array() - mean).square().sum() / static_cast<double>(n);
  const double scale = var > 0.0 ? std::sqrt(var) : 1.0;
  const Eigen::VectorXd ys = (y.array() - mean) / scale;

  GpHyper h = fit_hyperparameters(X, ys, opt, rng);
  return GpModel(domain, GaussianProcess(std::move(X), ys, std::move(h)), mean, scale);
}

inline Prediction gp_predict(const GpModel& model, const Eigen::VectorXd& x) { return model.predict(x); }

}  // namespace flexjoint::tuning
