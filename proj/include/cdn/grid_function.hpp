#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "cdn/function.hpp"

namespace cdn {

/// Unary cumulative function sampled on a uniform grid over [lo, hi] and
/// linearly interpolated. Below lo it is 0; above hi it stays at the last
/// sample. The derivative is the slope of the segment ending at (or
/// containing) the argument, so at grid node i it is the backward slope.
class GridCdfFunction final : public CumulativeFunction {
 public:
  GridCdfFunction(double lo, double hi, std::vector<double> values)
      : CumulativeFunction({Axis::continuous()}), lo_(lo), hi_(hi), values_(std::move(values)) {
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) throw Error(ErrorCode::DomainError, "grid needs lo < hi");
    if (values_.size() < 2) throw Error(ErrorCode::InvalidParams, "grid CDF needs at least 2 samples");
    for (double v : values_) {
      if (!std::isfinite(v) || v < 0.0) throw Error(ErrorCode::InvalidParams, "grid CDF samples must be finite and >= 0");
    }
    step_ = (hi_ - lo_) / static_cast<double>(values_.size() - 1);
  }

  std::string family() const override { return "grid"; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  const std::vector<double>& values() const { return values_; }

  double probe_high(std::size_t) const override { return hi_; }
  double probe_low(std::size_t) const override { return lo_; }

 protected:
  double eval_impl(std::span<const double> z) const override {
    const double x = z[0];
    if (x < lo_) return 0.0;
    if (x >= hi_) return values_.back();
    const auto [i, frac] = locate(x);
    return values_[i] + frac * (values_[i + 1] - values_[i]);
  }

  double diff_impl(Subset, std::span<const double> z) const override {
    const double x = z[0];
    if (x < lo_ || x > hi_) return 0.0;
    auto [i, frac] = locate(x);
    // on a node, use the segment that ends there
    if (frac == 0.0 && i > 0) --i;
    return (values_[i + 1] - values_[i]) / step_;
  }

  FunctionPtr pin_impl(Subset) const override { return std::make_shared<ConstantFunction>(values_.back()); }

 private:
  std::pair<std::size_t, double> locate(double x) const {
    const double pos = (x - lo_) / step_;
    std::size_t i = std::min(static_cast<std::size_t>(pos), values_.size() - 2);
    double frac = pos - static_cast<double>(i);
    // snap values that are nodes up to rounding
    if (std::abs(frac) < 1e-9) frac = 0.0;
    if (std::abs(frac - 1.0) < 1e-9 && i + 2 < values_.size()) {
      ++i;
      frac = 0.0;
    }
    return {i, frac};
  }

  double lo_, hi_, step_;
  std::vector<double> values_;
};

}  // namespace cdn
