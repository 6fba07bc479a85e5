#pragma once

// Univariate and multivariate normal CDF numerics.
//
// All routines are deterministic: dimension 1 uses erfc, dimension 2 uses
// Genz's Gauss-Legendre rule on the correlation integral (Drezner-Wesolowsky
// form), dimensions 3..5 use nested composite Gauss-Legendre quadrature over
// the first coordinate with the bivariate routine innermost.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "cdn/error.hpp"

namespace cdn::normal {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr std::size_t kMaxDim = 5;

inline double pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double cdf(double x) {
  if (x == kInf) return 1.0;
  if (x == -kInf) return 0.0;
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

inline double pdf(double x, double mean, double sd) { return pdf((x - mean) / sd) / sd; }
inline double cdf(double x, double mean, double sd) { return cdf((x - mean) / sd); }

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussLegendre(int n) : nodes(n), weights(n) {
    for (int i = 0; i < (n + 1) / 2; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
          double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = pk;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      // recompute derivative at converged node
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double w = 2.0 / ((1.0 - x * x) * dp * dp);
      nodes[i] = -x;
      nodes[n - 1 - i] = x;
      weights[i] = w;
      weights[n - 1 - i] = w;
    }
  }

  template <int N>
  static const GaussLegendre& get() {
    static const GaussLegendre rule(N);
    return rule;
  }
};

/// P(X <= h, Y <= k) for standard bivariate normal with correlation r.
inline double bvn_cdf(double h, double k, double r) {
  if (h == -kInf || k == -kInf) return 0.0;
  if (h == kInf) return cdf(k);
  if (k == kInf) return cdf(h);

  // Genz's routine computes the upper orthant P(X > dh, Y > dk).
  const double dh = -h;
  const double dk = -k;
  const double ar = std::abs(r);
  const GaussLegendre& gl = ar < 0.3    ? GaussLegendre::get<6>()
                            : ar < 0.75 ? GaussLegendre::get<12>()
                                        : GaussLegendre::get<20>();
  const std::size_t lg = gl.nodes.size() / 2;  // negative half of the nodes
  const double two_pi = 2.0 * std::numbers::pi;

  double hh = dh, kk = dk;
  double hk = hh * kk;
  double bvn = 0.0;
  if (ar < 0.925) {
    const double hs = (hh * hh + kk * kk) / 2.0;
    const double asr = std::asin(r);
    for (std::size_t i = 0; i < lg; ++i) {
      const double x = gl.nodes[i];
      const double w = gl.weights[i];
      double sn = std::sin(asr * (x + 1.0) / 2.0);
      bvn += w * std::exp((sn * hk - hs) / (1.0 - sn * sn));
      sn = std::sin(asr * (-x + 1.0) / 2.0);
      bvn += w * std::exp((sn * hk - hs) / (1.0 - sn * sn));
    }
    bvn = bvn * asr / (2.0 * two_pi) + cdf(-hh) * cdf(-kk);
  } else {
    if (r < 0.0) {
      kk = -kk;
      hk = -hk;
    }
    if (ar < 1.0) {
      const double as = (1.0 - r) * (1.0 + r);
      double a = std::sqrt(as);
      const double bs = (hh - kk) * (hh - kk);
      const double c = (4.0 - hk) / 8.0;
      const double d = (12.0 - hk) / 16.0;
      double asr = -(bs / as + hk) / 2.0;
      if (asr > -100.0) {
        bvn = a * std::exp(asr) *
              (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
      }
      if (hk > -100.0) {
        const double b = std::sqrt(bs);
        bvn -= std::exp(-hk / 2.0) * std::sqrt(two_pi) * cdf(-b / a) * b *
               (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
      }
      a /= 2.0;
      for (std::size_t i = 0; i < lg; ++i) {
        const double w = gl.weights[i];
        for (double sgn : {1.0, -1.0}) {
          const double xs = std::pow(a * (sgn * gl.nodes[i] + 1.0), 2);
          const double rs = std::sqrt(1.0 - xs);
          asr = -(bs / xs + hk) / 2.0;
          if (asr > -100.0) {
            bvn += a * w * std::exp(asr) *
                   (std::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs -
                    (1.0 + c * xs * (1.0 + d * xs)));
          }
        }
      }
      bvn = -bvn / two_pi;
    }
    if (r > 0.0) {
      bvn += cdf(-std::max(hh, kk));
    } else {
      bvn = -bvn + std::max(0.0, cdf(-hh) - cdf(-kk));
    }
  }
  return std::clamp(bvn, 0.0, 1.0);
}

/// Row-major correlation/covariance block of dimension <= kMaxDim.
struct SmallMatrix {
  std::size_t n = 0;
  std::array<double, kMaxDim * kMaxDim> v{};

  double& operator()(std::size_t i, std::size_t j) { return v[i * kMaxDim + j]; }
  double operator()(std::size_t i, std::size_t j) const { return v[i * kMaxDim + j]; }
};

namespace detail {

// Standardized orthant probability P(X <= z) with correlation matrix r.
inline double std_cdf(std::size_t n, const std::array<double, kMaxDim>& z, const SmallMatrix& r) {
  if (n == 0) return 1.0;
  if (n == 1) return cdf(z[0]);
  if (n == 2) return bvn_cdf(z[0], z[1], r(0, 1));

  // Condition on the first coordinate: the remaining coordinates given
  // X0 = u are normal with mean r0i*u and variance 1 - r0i^2.
  const std::size_t m = n - 1;
  std::array<double, kMaxDim> s{};
  std::array<double, kMaxDim> slope{};
  double width = kInf;
  for (std::size_t i = 0; i < m; ++i) {
    const double r0 = r(0, i + 1);
    s[i] = std::sqrt(std::max(1.0 - r0 * r0, 1e-300));
    slope[i] = r0 / s[i];
    if (r0 != 0.0) width = std::min(width, s[i] / std::abs(r0));
  }
  SmallMatrix rc;
  rc.n = m;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      rc(i, j) = i == j ? 1.0
                        : (r(i + 1, j + 1) - r(0, i + 1) * r(0, j + 1)) / (s[i] * s[j]);
    }
  }

  // Top-level trivariate integrals get the fine rule; deeper or larger
  // problems use a coarser one.
  const bool fine = n == 3;
  const double lo = fine ? -8.5 : -7.0;
  const double hi = std::min(z[0], -lo);
  if (hi <= lo) return 0.0;
  const double span_max = -2.0 * lo;
  int panels = static_cast<int>(std::ceil(span_max / (3.0 * std::min(width, 1.0))));
  panels = std::clamp(panels, fine ? 8 : 4, fine ? 48 : 16);
  const GaussLegendre& gl = fine ? GaussLegendre::get<20>() : GaussLegendre::get<10>();

  const double step = (hi - lo) / panels;
  double total = 0.0;
  std::array<double, kMaxDim> zc{};
  for (int p = 0; p < panels; ++p) {
    const double a = lo + p * step;
    double part = 0.0;
    for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
      const double u = a + 0.5 * step * (gl.nodes[q] + 1.0);
      for (std::size_t i = 0; i < m; ++i) zc[i] = z[i + 1] / s[i] - slope[i] * u;
      part += gl.weights[q] * pdf(u) * std_cdf(m, zc, rc);
    }
    total += 0.5 * step * part;
  }
  return std::clamp(total, 0.0, 1.0);
}

}  // namespace detail

/// P(X <= upper) for X ~ N(mean, cov). Entries of `upper` may be +/-inf;
/// +inf coordinates are marginalized out.
inline double mvn_cdf(std::span<const double> upper, std::span<const double> mean,
                      const SmallMatrix& cov) {
  const std::size_t n = upper.size();
  if (n > kMaxDim) throw Error(ErrorCode::InvalidParams, "Gaussian CDF dimension above 5");
  std::array<std::size_t, kMaxDim> keep{};
  std::size_t m = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isnan(upper[i])) throw Error(ErrorCode::DomainError, "NaN argument");
    if (upper[i] == -kInf) return 0.0;
    if (upper[i] == kInf) continue;
    keep[m++] = i;
  }
  std::array<double, kMaxDim> z{};
  std::array<double, kMaxDim> sd{};
  SmallMatrix r;
  r.n = m;
  for (std::size_t a = 0; a < m; ++a) {
    sd[a] = std::sqrt(cov(keep[a], keep[a]));
    z[a] = (upper[keep[a]] - mean[keep[a]]) / sd[a];
  }
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      r(a, b) = a == b ? 1.0 : cov(keep[a], keep[b]) / (sd[a] * sd[b]);
    }
  }
  return detail::std_cdf(m, z, r);
}

}  // namespace cdn::normal
