#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "cdn/function.hpp"
#include "cdn/normal.hpp"

namespace cdn {

/// Multivariate Gaussian CDF Phi(x; mean, cov) of dimension 1..5.
///
/// Mixed derivatives use the conditional-Gaussian identity
///   d_s Phi(x; mu, S) = N(x_s; mu_s, S_s) Phi(x_t; mu_t + K (x_s - mu_s), S_t - K S_st)
/// with K = S_ts S_s^-1, precomputed for every subset s at construction.
class GaussianCdfFunction final : public CumulativeFunction {
 public:
  static constexpr double kMaxCondition = 1e12;

  GaussianCdfFunction(std::vector<double> mean, const Eigen::MatrixXd& cov, std::vector<Axis> axes = {})
      : CumulativeFunction(axes.empty() ? std::vector<Axis>(mean.size()) : std::move(axes)),
        mean_(std::move(mean)),
        cov_(cov) {
    const std::size_t d = mean_.size();
    if (d == 0 || d > normal::kMaxDim) {
      throw Error(ErrorCode::InvalidParams, "Gaussian CDF dimension must be in [1, 5]");
    }
    if (arity() != d) throw Error(ErrorCode::ArityMismatch, "axis count does not match mean length");
    if (cov.rows() != static_cast<Eigen::Index>(d) || cov.cols() != static_cast<Eigen::Index>(d)) {
      throw Error(ErrorCode::InvalidParams, "covariance shape does not match mean");
    }
    for (double m : mean_) {
      if (!std::isfinite(m)) throw Error(ErrorCode::InvalidParams, "mean must be finite");
    }
    if (!cov.allFinite()) throw Error(ErrorCode::InvalidParams, "covariance must be finite");
    const double scale = cov.cwiseAbs().maxCoeff();
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(scale, 1.0)) {
      throw Error(ErrorCode::InvalidParams, "covariance must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const double lmin = eig.eigenvalues().minCoeff();
    const double lmax = eig.eigenvalues().maxCoeff();
    if (!(lmin > 0.0)) throw Error(ErrorCode::InvalidParams, "covariance must be positive definite");
    if (lmax / lmin > kMaxCondition) {
      throw Error(ErrorCode::InvalidParams, "covariance condition number above 1e12");
    }
    precompute();
  }

  /// Univariate convenience constructor.
  static std::shared_ptr<GaussianCdfFunction> univariate(double mean, double sd, Axis axis = {}) {
    Eigen::MatrixXd c(1, 1);
    c(0, 0) = sd * sd;
    return std::make_shared<GaussianCdfFunction>(std::vector<double>{mean}, c, std::vector<Axis>{std::move(axis)});
  }

  std::string family() const override { return "gaussian"; }
  const std::vector<double>& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return cov_; }
  double stddev(std::size_t i) const { return std::sqrt(cov_(i, i)); }

  double probe_high(std::size_t pos) const override {
    return axis(pos).is_discrete() ? axis(pos).levels.back() : mean_[pos] + 8.0 * stddev(pos);
  }
  double probe_low(std::size_t pos) const override {
    return axis(pos).is_discrete() ? axis(pos).levels.front() : mean_[pos] - 8.0 * stddev(pos);
  }

 protected:
  double eval_impl(std::span<const double> z) const override { return conditional_term(0, z); }
  double diff_impl(Subset continuous, std::span<const double> z) const override {
    return conditional_term(continuous, z);
  }

  FunctionPtr pin_impl(Subset positions) const override {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < arity(); ++i) {
      if (!subset_contains(positions, i)) keep.push_back(i);
    }
    if (keep.empty()) return std::make_shared<ConstantFunction>(1.0);
    std::vector<double> m(keep.size());
    Eigen::MatrixXd c(keep.size(), keep.size());
    for (std::size_t a = 0; a < keep.size(); ++a) {
      m[a] = mean_[keep[a]];
      for (std::size_t b = 0; b < keep.size(); ++b) c(a, b) = cov_(keep[a], keep[b]);
    }
    return std::make_shared<GaussianCdfFunction>(std::move(m), c, kept_axes(positions));
  }

 private:
  struct Block {
    std::size_t ns = 0, nt = 0;
    std::array<std::size_t, normal::kMaxDim> s{}, t{};
    std::array<double, normal::kMaxDim * normal::kMaxDim> inv_s{};  // ns x ns
    std::array<double, normal::kMaxDim * normal::kMaxDim> gain{};   // nt x ns
    normal::SmallMatrix cond;                                       // nt x nt
    double log_norm = 0.0;  // -(ns/2) log(2 pi) - (1/2) log det S_s
  };

  void precompute() {
    const std::size_t d = arity();
    blocks_.resize(std::size_t{1} << d);
    for (Subset mask = 0; mask < (Subset{1} << d); ++mask) {
      Block& b = blocks_[mask];
      for (std::size_t i = 0; i < d; ++i) {
        if (subset_contains(mask, i)) b.s[b.ns++] = i;
        else b.t[b.nt++] = i;
      }
      Eigen::MatrixXd ss(b.ns, b.ns), ts(b.nt, b.ns), tt(b.nt, b.nt);
      for (std::size_t a = 0; a < b.ns; ++a)
        for (std::size_t c = 0; c < b.ns; ++c) ss(a, c) = cov_(b.s[a], b.s[c]);
      for (std::size_t a = 0; a < b.nt; ++a)
        for (std::size_t c = 0; c < b.ns; ++c) ts(a, c) = cov_(b.t[a], b.s[c]);
      for (std::size_t a = 0; a < b.nt; ++a)
        for (std::size_t c = 0; c < b.nt; ++c) tt(a, c) = cov_(b.t[a], b.t[c]);
      Eigen::MatrixXd inv = b.ns ? Eigen::MatrixXd(ss.inverse()) : Eigen::MatrixXd(0, 0);
      Eigen::MatrixXd gain = b.ns ? Eigen::MatrixXd(ts * inv) : Eigen::MatrixXd::Zero(b.nt, 0);
      Eigen::MatrixXd cond = b.ns ? Eigen::MatrixXd(tt - gain * ts.transpose()) : tt;
      cond = 0.5 * (cond + cond.transpose());
      for (std::size_t a = 0; a < b.ns; ++a)
        for (std::size_t c = 0; c < b.ns; ++c) b.inv_s[a * normal::kMaxDim + c] = inv(a, c);
      for (std::size_t a = 0; a < b.nt; ++a)
        for (std::size_t c = 0; c < b.ns; ++c) b.gain[a * normal::kMaxDim + c] = gain(a, c);
      b.cond.n = b.nt;
      for (std::size_t a = 0; a < b.nt; ++a)
        for (std::size_t c = 0; c < b.nt; ++c) b.cond(a, c) = cond(a, c);
      const double logdet = b.ns ? std::log(ss.determinant()) : 0.0;
      b.log_norm = -0.5 * static_cast<double>(b.ns) * std::log(2.0 * std::numbers::pi) - 0.5 * logdet;
    }
  }

  double conditional_term(Subset s, std::span<const double> z) const {
    const Block& b = blocks_[s];
    std::array<double, normal::kMaxDim> q{};
    double quad = 0.0;
    for (std::size_t a = 0; a < b.ns; ++a) {
      const double v = z[b.s[a]];
      if (!std::isfinite(v)) return 0.0;  // density vanishes at infinity
      q[a] = v - mean_[b.s[a]];
    }
    for (std::size_t a = 0; a < b.ns; ++a)
      for (std::size_t c = 0; c < b.ns; ++c) quad += q[a] * b.inv_s[a * normal::kMaxDim + c] * q[c];
    const double density = b.ns ? std::exp(b.log_norm - 0.5 * quad) : 1.0;
    if (b.nt == 0 || density == 0.0) return density;

    std::array<double, normal::kMaxDim> upper{}, cmean{};
    for (std::size_t a = 0; a < b.nt; ++a) {
      double m = mean_[b.t[a]];
      for (std::size_t c = 0; c < b.ns; ++c) m += b.gain[a * normal::kMaxDim + c] * q[c];
      cmean[a] = m;
      upper[a] = z[b.t[a]];
    }
    const double tail = normal::mvn_cdf(std::span<const double>(upper.data(), b.nt),
                                        std::span<const double>(cmean.data(), b.nt), b.cond);
    return density * tail;
  }

  std::vector<double> mean_;
  Eigen::MatrixXd cov_;
  std::vector<Block> blocks_;
};

}  // namespace cdn
