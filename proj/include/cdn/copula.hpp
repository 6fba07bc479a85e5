#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "cdn/function.hpp"
#include "cdn/normal.hpp"

namespace cdn {

/// Location/scale univariate CDF: logistic sigmoid or Gaussian.
struct UnivariateCdf {
  enum class Kind { Logistic, Normal };

  Kind kind = Kind::Normal;
  double location = 0.0;
  double scale = 1.0;

  static UnivariateCdf logistic(double loc, double scale) { return checked({Kind::Logistic, loc, scale}); }
  static UnivariateCdf gaussian(double mean, double sd) { return checked({Kind::Normal, mean, sd}); }

  std::string name() const { return kind == Kind::Logistic ? "logistic" : "normal"; }

  double cdf(double x) const {
    if (x == std::numeric_limits<double>::infinity()) return 1.0;
    if (x == -std::numeric_limits<double>::infinity()) return 0.0;
    const double t = (x - location) / scale;
    if (kind == Kind::Normal) return normal::cdf(t);
    return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
  }

  double pdf(double x) const {
    if (!std::isfinite(x)) return 0.0;
    const double t = (x - location) / scale;
    if (kind == Kind::Normal) return normal::pdf(t) / scale;
    const double e = std::exp(-std::abs(t));
    return e / ((1.0 + e) * (1.0 + e)) / scale;
  }

  /// Argument far enough into the tail that cdf is within 1e-15 of its limit.
  double tail(bool upper) const {
    const double k = kind == Kind::Normal ? 8.5 : 40.0;
    return upper ? location + k * scale : location - k * scale;
  }

 private:
  static UnivariateCdf checked(UnivariateCdf u) {
    if (!std::isfinite(u.location) || !(u.scale > 0.0) || !std::isfinite(u.scale)) {
      throw Error(ErrorCode::InvalidParams, "univariate CDF needs finite location and scale > 0");
    }
    return u;
  }
};

/// Unary cumulative function G(x) for a location/scale family.
class MarginalCdfFunction final : public CumulativeFunction {
 public:
  explicit MarginalCdfFunction(UnivariateCdf cdf, Axis axis = {})
      : CumulativeFunction({std::move(axis)}), cdf_(cdf) {}

  std::string family() const override { return cdf_.name(); }
  const UnivariateCdf& marginal() const { return cdf_; }
  double probe_high(std::size_t) const override {
    return axis(0).is_discrete() ? axis(0).levels.back() : cdf_.tail(true);
  }
  double probe_low(std::size_t) const override {
    return axis(0).is_discrete() ? axis(0).levels.front() : cdf_.tail(false);
  }

 protected:
  double eval_impl(std::span<const double> z) const override { return cdf_.cdf(z[0]); }
  double diff_impl(Subset, std::span<const double> z) const override { return cdf_.pdf(z[0]); }
  FunctionPtr pin_impl(Subset) const override { return std::make_shared<ConstantFunction>(1.0); }

 private:
  UnivariateCdf cdf_;
};

/// Gumbel copula over two marginal CDFs:
///   C(u, v) = exp(-((-ln u)^theta + (-ln v)^theta)^(1/theta)),  theta >= 1.
class GumbelCopulaFunction final : public CumulativeFunction {
 public:
  GumbelCopulaFunction(double theta, UnivariateCdf gx, UnivariateCdf gy, std::vector<Axis> axes = {})
      : CumulativeFunction(axes.empty() ? std::vector<Axis>(2) : std::move(axes)), theta_(theta), gx_(gx), gy_(gy) {
    if (arity() != 2) throw Error(ErrorCode::ArityMismatch, "copula is bivariate");
    if (!(theta >= 1.0) || !std::isfinite(theta)) throw Error(ErrorCode::InvalidParams, "Gumbel theta must be >= 1");
  }

  std::string family() const override { return "gumbel"; }
  double theta() const { return theta_; }
  const UnivariateCdf& marginal_x() const { return gx_; }
  const UnivariateCdf& marginal_y() const { return gy_; }

  double probe_high(std::size_t pos) const override {
    if (axis(pos).is_discrete()) return axis(pos).levels.back();
    return (pos == 0 ? gx_ : gy_).tail(true);
  }
  double probe_low(std::size_t pos) const override {
    if (axis(pos).is_discrete()) return axis(pos).levels.front();
    return (pos == 0 ? gx_ : gy_).tail(false);
  }

  /// Copula value and its derivatives on the unit square.
  double copula(double u, double v) const {
    if (u <= 0.0 || v <= 0.0) return 0.0;
    const double a = -std::log(std::min(u, 1.0));
    const double b = -std::log(std::min(v, 1.0));
    return std::exp(-std::pow(std::pow(a, theta_) + std::pow(b, theta_), 1.0 / theta_));
  }

  double copula_du(double u, double v) const { return partial(u, v); }
  double copula_dv(double u, double v) const { return partial(v, u); }

  double copula_duv(double u, double v) const {
    if (u <= 0.0 || v <= 0.0) return 0.0;
    const double a = -std::log(std::min(u, 1.0));
    const double b = -std::log(std::min(v, 1.0));
    const double A = std::pow(a, theta_) + std::pow(b, theta_);
    if (A == 0.0) return theta_ == 1.0 ? 1.0 : 0.0;
    const double S = std::pow(A, 1.0 / theta_);
    const double c = std::exp(-S);
    return c / (u * v) * std::pow(a * b, theta_ - 1.0) * std::pow(A, 1.0 / theta_ - 2.0) * (S + theta_ - 1.0);
  }

 protected:
  double eval_impl(std::span<const double> z) const override { return copula(gx_.cdf(z[0]), gy_.cdf(z[1])); }

  double diff_impl(Subset s, std::span<const double> z) const override {
    const double u = gx_.cdf(z[0]);
    const double v = gy_.cdf(z[1]);
    switch (s) {
      case 1u: return copula_du(u, v) * gx_.pdf(z[0]);
      case 2u: return copula_dv(u, v) * gy_.pdf(z[1]);
      default: return copula_duv(u, v) * gx_.pdf(z[0]) * gy_.pdf(z[1]);
    }
  }

  FunctionPtr pin_impl(Subset positions) const override {
    if (positions == 3u) return std::make_shared<ConstantFunction>(1.0);
    // C(u, 1) = u and C(1, v) = v
    if (positions == 2u) return std::make_shared<MarginalCdfFunction>(gx_, axis(0));
    return std::make_shared<MarginalCdfFunction>(gy_, axis(1));
  }

 private:
  // dC/du as a function of (u, v); dC/dv is the same with arguments swapped.
  double partial(double u, double v) const {
    if (u <= 0.0 || v <= 0.0) return 0.0;
    const double a = -std::log(std::min(u, 1.0));
    const double b = -std::log(std::min(v, 1.0));
    const double A = std::pow(a, theta_) + std::pow(b, theta_);
    if (A == 0.0) return theta_ == 1.0 ? 1.0 : 0.0;
    const double S = std::pow(A, 1.0 / theta_);
    return std::exp(-S) * S / A * std::pow(a, theta_ - 1.0) / u;
  }

  double theta_;
  UnivariateCdf gx_;
  UnivariateCdf gy_;
};

}  // namespace cdn
