#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "cdn/error.hpp"

namespace cdn {

/// Support of a variable: an ordered list of discrete levels, or a uniform
/// grid over [lo, hi] used to sample messages of a continuous variable.
class VariableDomain {
 public:
  enum class Kind { DiscreteOrdinal, ContinuousGrid };

  static VariableDomain discrete(std::vector<double> levels) {
    if (levels.empty()) throw Error(ErrorCode::DomainError, "discrete domain needs at least one level");
    for (std::size_t i = 1; i < levels.size(); ++i) {
      if (!(levels[i] > levels[i - 1])) {
        throw Error(ErrorCode::DomainError, "discrete levels must be strictly increasing");
      }
    }
    for (double v : levels) {
      if (!std::isfinite(v)) throw Error(ErrorCode::DomainError, "discrete levels must be finite");
    }
    VariableDomain d;
    d.kind_ = Kind::DiscreteOrdinal;
    d.levels_ = std::move(levels);
    return d;
  }

  /// Levels 0, 1, ..., count-1.
  static VariableDomain ordinal(std::size_t count) {
    std::vector<double> levels(count);
    for (std::size_t i = 0; i < count; ++i) levels[i] = static_cast<double>(i);
    return discrete(std::move(levels));
  }

  static VariableDomain grid(double lo, double hi, std::size_t points) {
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) {
      throw Error(ErrorCode::DomainError, "grid requires finite lo < hi");
    }
    if (points < 2) throw Error(ErrorCode::DomainError, "grid requires at least 2 points");
    VariableDomain d;
    d.kind_ = Kind::ContinuousGrid;
    d.lo_ = lo;
    d.hi_ = hi;
    d.points_ = points;
    return d;
  }

  Kind kind() const { return kind_; }
  bool is_discrete() const { return kind_ == Kind::DiscreteOrdinal; }
  const std::vector<double>& levels() const { return levels_; }
  double lo() const { return is_discrete() ? levels_.front() : lo_; }
  double hi() const { return is_discrete() ? levels_.back() : hi_; }
  std::size_t grid_points() const { return points_; }

  /// Levels for discrete domains, grid nodes for continuous ones.
  std::vector<double> support() const {
    if (is_discrete()) return levels_;
    std::vector<double> s(points_);
    const double h = (hi_ - lo_) / static_cast<double>(points_ - 1);
    for (std::size_t i = 0; i < points_; ++i) s[i] = lo_ + h * static_cast<double>(i);
    s.back() = hi_;
    return s;
  }

  std::size_t size() const { return is_discrete() ? levels_.size() : points_; }

  std::optional<std::size_t> level_index(double value) const {
    if (!is_discrete()) return std::nullopt;
    auto it = std::lower_bound(levels_.begin(), levels_.end(), value);
    if (it != levels_.end() && *it == value) return static_cast<std::size_t>(it - levels_.begin());
    return std::nullopt;
  }

  bool contains(double value) const {
    if (std::isnan(value)) return false;
    if (is_discrete()) return level_index(value).has_value();
    return value >= lo_ && value <= hi_;
  }

  bool operator==(const VariableDomain& other) const = default;

 private:
  Kind kind_ = Kind::ContinuousGrid;
  std::vector<double> levels_;
  double lo_ = 0.0;
  double hi_ = 1.0;
  std::size_t points_ = 2;
};

/// Argument axis of a cumulative function. Continuous axes carry no levels;
/// discrete axes carry the ordered levels used for backward differences.
struct Axis {
  std::vector<double> levels;

  static Axis continuous() { return {}; }
  static Axis discrete(std::vector<double> levels) { return {std::move(levels)}; }
  static Axis of(const VariableDomain& d) {
    return d.is_discrete() ? discrete(d.levels()) : continuous();
  }

  bool is_discrete() const { return !levels.empty(); }

  /// Index of `value` among the levels; DomainError if it is not a level.
  std::size_t index_of(double value) const {
    auto it = std::lower_bound(levels.begin(), levels.end(), value);
    if (it == levels.end() || *it != value) {
      throw Error(ErrorCode::DomainError, "value " + std::to_string(value) + " is not a declared level");
    }
    return static_cast<std::size_t>(it - levels.begin());
  }

  bool operator==(const Axis& other) const = default;
};

}  // namespace cdn
