#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cdn/domain.hpp"
#include "cdn/error.hpp"

namespace cdn {

/// Set of argument positions of a function, as a bit mask.
using Subset = std::uint32_t;

inline constexpr std::size_t kMaxArity = 24;

inline int subset_size(Subset s) { return std::popcount(s); }
inline bool subset_contains(Subset s, std::size_t pos) { return (s >> pos) & 1u; }
inline Subset full_subset(std::size_t n) { return n >= 32 ? ~Subset{0} : (Subset{1} << n) - 1u; }

inline Subset subset_of(std::initializer_list<std::size_t> positions) {
  Subset s = 0;
  for (std::size_t p : positions) s |= Subset{1} << p;
  return s;
}

/// Calls f(sub) for every subset of `mask`, including the empty set.
template <class F>
void for_each_subset(Subset mask, F&& f) {
  Subset sub = mask;
  while (true) {
    f(sub);
    if (sub == 0) break;
    sub = (sub - 1) & mask;
  }
}

class CumulativeFunction;
using FunctionPtr = std::shared_ptr<const CumulativeFunction>;

/// A local cumulative function phi_c over an ordered argument list.
///
/// Arguments on discrete axes must be declared levels. The derivative
/// operator along a discrete axis is the backward difference, with the
/// function taken as 0 one level below the minimum. For families with an
/// open top (every family except tables), the top level of a discrete axis
/// is the unbounded bin and is evaluated as +infinity.
class CumulativeFunction : public std::enable_shared_from_this<CumulativeFunction> {
 public:
  explicit CumulativeFunction(std::vector<Axis> axes) : axes_(std::move(axes)) {
    if (axes_.size() > kMaxArity) throw Error(ErrorCode::DegreeTooLarge, "function arity above 24");
  }
  virtual ~CumulativeFunction() = default;

  std::size_t arity() const { return axes_.size(); }
  const Axis& axis(std::size_t i) const { return axes_.at(i); }
  const std::vector<Axis>& axes() const { return axes_; }

  virtual std::string family() const = 0;

  /// An argument value approaching the supremum along `pos`.
  virtual double probe_high(std::size_t pos) const = 0;
  /// An argument value approaching the infimum along `pos`.
  virtual double probe_low(std::size_t pos) const = 0;

  double evaluate(std::span<const double> z) const {
    std::array<double, kMaxArity> buf{};
    prepare(z, buf);
    for (std::size_t i = 0; i < arity(); ++i) {
      if (axes_[i].is_discrete() && open_top() && axes_[i].index_of(z[i]) + 1 == axes_[i].levels.size()) {
        buf[i] = std::numeric_limits<double>::infinity();
      }
    }
    return eval_impl(std::span<const double>(buf.data(), arity()));
  }

  /// Mixed derivative (continuous axes) / backward difference (discrete
  /// axes) with respect to the positions in `subset`, evaluated at z.
  double mixed_diff(Subset subset, std::span<const double> z) const {
    if (subset & ~full_subset(arity())) throw Error(ErrorCode::DomainError, "subset outside function scope");
    std::array<double, kMaxArity> base{};
    prepare(z, base);
    std::array<std::size_t, kMaxArity> level{};
    Subset discrete = 0;
    for (std::size_t i = 0; i < arity(); ++i) {
      if (axes_[i].is_discrete()) {
        level[i] = axes_[i].index_of(z[i]);
        if (subset_contains(subset, i)) discrete |= Subset{1} << i;
      }
    }
    const Subset continuous = subset & ~discrete;

    double total = 0.0;
    for_each_subset(discrete, [&](Subset stepped) {
      std::array<double, kMaxArity> arg = base;
      for (std::size_t i = 0; i < arity(); ++i) {
        if (!axes_[i].is_discrete()) continue;
        std::size_t idx = level[i];
        if (subset_contains(stepped, i)) {
          if (idx == 0) return;  // below the minimum level the function is 0
          --idx;
        }
        arg[i] = (open_top() && idx + 1 == axes_[i].levels.size())
                     ? std::numeric_limits<double>::infinity()
                     : axes_[i].levels[idx];
      }
      std::span<const double> a(arg.data(), arity());
      const double term = continuous == 0 ? eval_impl(a) : diff_impl(continuous, a);
      total += (subset_size(stepped) % 2 == 0) ? term : -term;
    });
    return total;
  }

  /// The limit of this function as the arguments in `positions` go to their
  /// suprema; arity drops by |positions|.
  FunctionPtr pin_to_sup(Subset positions) const {
    if (positions & ~full_subset(arity())) throw Error(ErrorCode::DomainError, "pin positions outside scope");
    if (positions == 0) return shared_from_this();
    return pin_impl(positions);
  }

 protected:
  /// Whether the top level of a discrete axis is evaluated as +infinity.
  virtual bool open_top() const { return true; }
  /// z holds level values on discrete axes and may contain +infinity.
  virtual double eval_impl(std::span<const double> z) const = 0;
  /// `continuous` is a non-empty subset of continuous axes.
  virtual double diff_impl(Subset continuous, std::span<const double> z) const = 0;
  virtual FunctionPtr pin_impl(Subset positions) const = 0;

  std::vector<Axis> kept_axes(Subset pinned) const {
    std::vector<Axis> out;
    for (std::size_t i = 0; i < arity(); ++i) {
      if (!subset_contains(pinned, i)) out.push_back(axes_[i]);
    }
    return out;
  }

 private:
  void prepare(std::span<const double> z, std::array<double, kMaxArity>& buf) const {
    if (z.size() != arity()) throw Error(ErrorCode::ArityMismatch, "argument count does not match arity");
    for (std::size_t i = 0; i < arity(); ++i) {
      if (std::isnan(z[i])) throw Error(ErrorCode::DomainError, "NaN argument");
      if (axes_[i].is_discrete()) axes_[i].index_of(z[i]);
      buf[i] = z[i];
    }
  }

  std::vector<Axis> axes_;
};

/// Constant function; arity-0 instances are the result of pinning every
/// argument of a function.
class ConstantFunction final : public CumulativeFunction {
 public:
  explicit ConstantFunction(double value, std::vector<Axis> axes = {})
      : CumulativeFunction(std::move(axes)), value_(value) {
    if (!(value >= 0.0) || !std::isfinite(value)) throw Error(ErrorCode::InvalidParams, "constant must be finite and >= 0");
  }

  double value() const { return value_; }
  std::string family() const override { return "constant"; }
  double probe_high(std::size_t pos) const override {
    return axis(pos).is_discrete() ? axis(pos).levels.back() : 1e6;
  }
  double probe_low(std::size_t pos) const override {
    return axis(pos).is_discrete() ? axis(pos).levels.front() : -1e6;
  }

 protected:
  double eval_impl(std::span<const double>) const override { return value_; }
  double diff_impl(Subset, std::span<const double>) const override { return 0.0; }
  FunctionPtr pin_impl(Subset positions) const override {
    return std::make_shared<ConstantFunction>(value_, kept_axes(positions));
  }

 private:
  double value_;
};

}  // namespace cdn
