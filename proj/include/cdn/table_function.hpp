#pragma once

#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>
#include <vector>

#include "cdn/function.hpp"

namespace cdn {

/// Cumulative function tabulated on a product of discrete level sets.
///
/// Values are stored row-major (last axis fastest). With
/// `Validation::Strict`, construction enforces that every mixed backward
/// difference is nonnegative; `Validation::Deferred` leaves that to the
/// validity checks so broken tables can still be loaded and diagnosed.
class DiscreteTableFunction final : public CumulativeFunction {
 public:
  enum class Validation { Strict, Deferred };

  DiscreteTableFunction(std::vector<Axis> axes, std::vector<double> values, bool normalized = false,
                        Validation validation = Validation::Strict)
      : CumulativeFunction(std::move(axes)), values_(std::move(values)), normalized_(normalized) {
    if (arity() == 0) throw Error(ErrorCode::InvalidParams, "table needs at least one axis");
    std::size_t expected = 1;
    strides_.assign(arity(), 1);
    for (std::size_t i = arity(); i-- > 0;) {
      if (!axis(i).is_discrete()) throw Error(ErrorCode::DomainError, "table axes must be discrete");
      strides_[i] = expected;
      expected *= axis(i).levels.size();
    }
    if (values_.size() != expected) {
      throw Error(ErrorCode::InvalidParams, "table has " + std::to_string(values_.size()) + " values, expected " +
                                                std::to_string(expected));
    }
    for (double v : values_) {
      if (!std::isfinite(v) || v < 0.0) throw Error(ErrorCode::InvalidParams, "table values must be finite and >= 0");
      if (v > 1.0 + 1e-9) throw Error(ErrorCode::InvalidParams, "table values must not exceed 1");
    }
    if (normalized_ && std::abs(values_.back() - 1.0) > 1e-12) {
      throw Error(ErrorCode::InvalidParams, "normalized table must equal 1 at the top corner");
    }
    if (validation == Validation::Strict) {
      if (auto bad = first_negative_mass()) {
        throw Error(ErrorCode::InvalidParams, "table violates nonnegative mixed differences at flat index " +
                                                  std::to_string(*bad));
      }
    }
  }

  /// Builds the CDF table of a nonnegative mass array by running sums along
  /// every axis. The result satisfies all mixed-difference constraints.
  static std::shared_ptr<DiscreteTableFunction> from_mass(std::vector<Axis> axes, std::vector<double> mass,
                                                          bool normalize = true) {
    if (normalize) {
      const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
      if (!(total > 0.0)) throw Error(ErrorCode::InvalidParams, "mass must have positive total");
      for (double& m : mass) m /= total;
    }
    std::vector<std::size_t> dims;
    for (const Axis& a : axes) dims.push_back(a.levels.size());
    cumulate(dims, mass);
    if (normalize) mass.back() = 1.0;
    for (double& v : mass) v = std::min(v, 1.0);
    return std::make_shared<DiscreteTableFunction>(std::move(axes), std::move(mass), normalize);
  }

  std::string family() const override { return "table"; }
  const std::vector<double>& values() const { return values_; }
  bool normalized() const { return normalized_; }

  double probe_high(std::size_t pos) const override { return axis(pos).levels.back(); }
  double probe_low(std::size_t pos) const override { return axis(pos).levels.front(); }

  /// Value at a tuple of level indices.
  double at(std::span<const std::size_t> idx) const {
    std::size_t flat = 0;
    for (std::size_t i = 0; i < arity(); ++i) flat += idx[i] * strides_[i];
    return values_[flat];
  }

  /// Flat index of the first cell whose full mixed difference (its mass) is
  /// negative beyond rounding; nullopt when the table is a valid CDF shape.
  std::optional<std::size_t> first_negative_mass(double tol = 1e-12) const {
    std::vector<std::size_t> dims;
    for (const Axis& a : axes()) dims.push_back(a.levels.size());
    std::vector<double> mass = values_;
    difference(dims, mass);
    for (std::size_t i = 0; i < mass.size(); ++i) {
      if (mass[i] < -tol) return i;
    }
    return std::nullopt;
  }

 protected:
  bool open_top() const override { return false; }

  double eval_impl(std::span<const double> z) const override {
    std::size_t flat = 0;
    for (std::size_t i = 0; i < arity(); ++i) flat += axis(i).index_of(z[i]) * strides_[i];
    return values_[flat];
  }

  double diff_impl(Subset, std::span<const double> z) const override { return eval_impl(z); }

  FunctionPtr pin_impl(Subset positions) const override {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < arity(); ++i) {
      if (!subset_contains(positions, i)) keep.push_back(i);
    }
    std::size_t base = 0;
    for (std::size_t i = 0; i < arity(); ++i) {
      if (subset_contains(positions, i)) base += (axis(i).levels.size() - 1) * strides_[i];
    }
    if (keep.empty()) return std::make_shared<ConstantFunction>(values_[base]);

    std::vector<Axis> axes = kept_axes(positions);
    std::size_t count = 1;
    for (const Axis& a : axes) count *= a.levels.size();
    std::vector<double> out(count);
    std::vector<std::size_t> idx(keep.size(), 0);
    for (std::size_t n = 0; n < count; ++n) {
      std::size_t flat = base;
      for (std::size_t k = 0; k < keep.size(); ++k) flat += idx[k] * strides_[keep[k]];
      out[n] = values_[flat];
      for (std::size_t k = keep.size(); k-- > 0;) {
        if (++idx[k] < axes[k].levels.size()) break;
        idx[k] = 0;
      }
    }
    return std::make_shared<DiscreteTableFunction>(std::move(axes), std::move(out), normalized_, Validation::Deferred);
  }

 private:
  template <class Op>
  static void along_axes(const std::vector<std::size_t>& dims, std::vector<double>& a, Op op) {
    std::size_t stride = 1;
    for (std::size_t ax = dims.size(); ax-- > 0;) {
      const std::size_t n = dims[ax];
      const std::size_t block = stride * n;
      for (std::size_t start = 0; start < a.size(); start += block) {
        for (std::size_t off = 0; off < stride; ++off) op(a, start + off, stride, n);
      }
      stride = block;
    }
  }

  static void cumulate(const std::vector<std::size_t>& dims, std::vector<double>& a) {
    along_axes(dims, a, [](std::vector<double>& v, std::size_t first, std::size_t stride, std::size_t n) {
      for (std::size_t k = 1; k < n; ++k) v[first + k * stride] += v[first + (k - 1) * stride];
    });
  }

  static void difference(const std::vector<std::size_t>& dims, std::vector<double>& a) {
    along_axes(dims, a, [](std::vector<double>& v, std::size_t first, std::size_t stride, std::size_t n) {
      for (std::size_t k = n; k-- > 1;) v[first + k * stride] -= v[first + (k - 1) * stride];
    });
  }

  std::vector<double> values_;
  std::vector<std::size_t> strides_;
  bool normalized_;
};

}  // namespace cdn
