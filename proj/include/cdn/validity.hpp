#pragma once

#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cdn/graph.hpp"
#include "cdn/table_function.hpp"

namespace cdn {

struct PositiveConvergenceReport {
  bool pass = false;
  double value = 0.0;     // function value at the probe point
  double residual = 0.0;  // |1 - value|
  std::vector<double> probe;
  // The limit-1 condition is sufficient for a valid CDF, not necessary.
  static constexpr const char* note = "convergence to 1 is a sufficient condition, not a necessary one";
};

inline PositiveConvergenceReport check_positive_convergence(const CumulativeFunction& fn, double tol = 1e-6) {
  PositiveConvergenceReport r;
  for (std::size_t i = 0; i < fn.arity(); ++i) r.probe.push_back(fn.probe_high(i));
  r.value = fn.evaluate(r.probe);
  r.residual = std::abs(1.0 - r.value);
  r.pass = r.residual <= tol;
  return r;
}

struct NegativeConvergenceEntry {
  VariableId variable;
  std::string name;
  bool pass = false;
  double smallest = 0.0;  // smallest probed neighbor value
  std::optional<FunctionId> witness;  // a neighbor that vanishes
};

struct NegativeConvergenceReport {
  bool pass = true;
  std::vector<NegativeConvergenceEntry> entries;
};

/// For every variable, probes each neighbor with that argument at its
/// infimum (other arguments high) and passes if one neighbor vanishes.
/// Discrete variables pass by convention: the function is 0 one level
/// below the minimum.
inline NegativeConvergenceReport check_negative_convergence(const CdnGraph& g, double tol = 1e-6) {
  NegativeConvergenceReport report;
  for (const auto& [vid, var] : g.variables()) {
    NegativeConvergenceEntry e{vid, var.name, false, 0.0, std::nullopt};
    e.smallest = std::numeric_limits<double>::infinity();
    if (var.domain.is_discrete()) {
      e.pass = true;
      e.smallest = 0.0;
    } else {
      for (FunctionId fid : g.neighbors(vid)) {
        const FunctionNode& f = g.function(fid);
        std::vector<double> z(f.scope.size());
        for (std::size_t i = 0; i < z.size(); ++i) {
          z[i] = f.scope[i] == vid ? f.function->probe_low(i) : f.function->probe_high(i);
        }
        const double v = f.function->evaluate(z);
        if (v < e.smallest) e.smallest = v;
        if (v <= tol && !e.witness) {
          e.witness = fid;
          e.pass = true;
        }
      }
    }
    report.pass = report.pass && e.pass;
    report.entries.push_back(std::move(e));
  }
  return report;
}

struct MonotonicityWitness {
  std::optional<FunctionId> function;
  std::optional<VariableId> variable;  // set for the per-variable form
  Subset subset = 0;
  std::vector<double> point;
  double value = 0.0;
};

struct MonotonicityReport {
  bool pass = true;
  std::size_t checks = 0;
  std::optional<MonotonicityWitness> witness;
};

struct MonotonicityOptions {
  std::size_t samples = 200;
  std::size_t subset_cap = 4;        // largest subset size checked
  std::size_t exhaustive_limit = 4096;  // purely discrete functions with at most this many points are enumerated
  double threshold = -1e-10;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::vector<std::vector<double>> monotonicity_points(const CumulativeFunction& fn, const MonotonicityOptions& opt,
                                                            std::mt19937_64& rng) {
  std::vector<std::vector<double>> points;
  bool discrete = true;
  std::size_t total = 1;
  for (const Axis& a : fn.axes()) {
    if (!a.is_discrete()) discrete = false;
    else total *= a.levels.size();
  }
  if (discrete && total <= opt.exhaustive_limit) {
    std::vector<std::size_t> idx(fn.arity(), 0);
    for (std::size_t n = 0; n < total; ++n) {
      std::vector<double> z(fn.arity());
      for (std::size_t i = 0; i < z.size(); ++i) z[i] = fn.axis(i).levels[idx[i]];
      points.push_back(std::move(z));
      for (std::size_t k = idx.size(); k-- > 0;) {
        if (++idx[k] < fn.axis(k).levels.size()) break;
        idx[k] = 0;
      }
    }
    return points;
  }
  for (std::size_t s = 0; s < opt.samples; ++s) {
    std::vector<double> z(fn.arity());
    for (std::size_t i = 0; i < z.size(); ++i) {
      const Axis& a = fn.axis(i);
      if (a.is_discrete()) {
        z[i] = a.levels[std::uniform_int_distribution<std::size_t>(0, a.levels.size() - 1)(rng)];
      } else {
        z[i] = std::uniform_real_distribution<double>(fn.probe_low(i), fn.probe_high(i))(rng);
      }
    }
    points.push_back(std::move(z));
  }
  return points;
}

}  // namespace detail

/// Checks that every mixed derivative / difference over subsets up to the
/// cap is nonnegative.
inline MonotonicityReport check_monotonicity(const CumulativeFunction& fn, const MonotonicityOptions& opt = {}) {
  MonotonicityReport report;
  std::mt19937_64 rng(opt.seed);
  const Subset full = full_subset(fn.arity());
  for (const auto& z : detail::monotonicity_points(fn, opt, rng)) {
    for (Subset s = 1; s <= full; ++s) {
      if (static_cast<std::size_t>(subset_size(s)) > opt.subset_cap) continue;
      const double d = fn.mixed_diff(s, z);
      ++report.checks;
      if (d < opt.threshold) {
        report.pass = false;
        report.witness = MonotonicityWitness{std::nullopt, std::nullopt, s, z, d};
        return report;
      }
    }
  }
  return report;
}

/// Graph form: the per-function subset condition for every function, then
/// the per-variable condition on the product at sampled joint points where
/// F > 0. For continuous x_i that is sum_c d_i phi_c / phi_c >= 0; for
/// discrete x_i it is F(x) >= F(x with x_i one level lower).
inline MonotonicityReport check_monotonicity(const CdnGraph& g, const MonotonicityOptions& opt = {}) {
  MonotonicityReport report;
  for (const auto& [fid, f] : g.functions()) {
    MonotonicityReport r = check_monotonicity(*f.function, opt);
    report.checks += r.checks;
    if (!r.pass) {
      r.witness->function = fid;
      report.pass = false;
      report.witness = r.witness;
      return report;
    }
  }

  std::mt19937_64 rng(opt.seed ^ 0x9e3779b97f4a7c15ull);
  for (std::size_t s = 0; s < opt.samples; ++s) {
    Assignment x;
    for (const auto& [vid, v] : g.variables()) {
      const auto& d = v.domain;
      if (d.is_discrete()) {
        x[vid] = d.levels()[std::uniform_int_distribution<std::size_t>(0, d.levels().size() - 1)(rng)];
      } else {
        x[vid] = std::uniform_real_distribution<double>(d.lo(), d.hi())(rng);
      }
    }
    if (!(g.evaluate(x) > 0.0)) continue;
    for (const auto& [vid, v] : g.variables()) {
      double value = 0.0;
      if (v.domain.is_discrete()) {
        const std::size_t idx = *v.domain.level_index(x[vid]);
        Assignment lower = x;
        const double below = idx == 0 ? 0.0 : (lower[vid] = v.domain.levels()[idx - 1], g.evaluate(lower));
        value = g.evaluate(x) - below;
      } else {
        for (FunctionId fid : g.neighbors(vid)) {
          const FunctionNode& f = g.function(fid);
          std::vector<double> z;
          std::size_t pos = 0;
          for (std::size_t i = 0; i < f.scope.size(); ++i) {
            z.push_back(x.at(f.scope[i]));
            if (f.scope[i] == vid) pos = i;
          }
          value += f.function->mixed_diff(Subset{1} << pos, z) / f.function->evaluate(z);
        }
      }
      ++report.checks;
      if (value < opt.threshold) {
        std::vector<double> point;
        for (const auto& [id, val] : x) point.push_back(val);
        report.pass = false;
        report.witness = MonotonicityWitness{std::nullopt, vid, 0, point, value};
        return report;
      }
    }
  }
  return report;
}

struct ValidityReport {
  StructureReport structure;
  std::vector<std::pair<FunctionId, PositiveConvergenceReport>> positive;
  NegativeConvergenceReport negative;
  MonotonicityReport monotonicity;

  bool positive_pass() const {
    for (const auto& [id, r] : positive) {
      if (!r.pass) return false;
    }
    return true;
  }
  /// The three CDF conditions; tree structure is only needed by inference
  /// and is reported separately.
  bool pass() const { return positive_pass() && negative.pass && monotonicity.pass; }
};

inline ValidityReport check_validity(const CdnGraph& g, const MonotonicityOptions& opt = {}) {
  ValidityReport r;
  r.structure = validate_structure(g);
  for (const auto& [fid, f] : g.functions()) r.positive.emplace_back(fid, check_positive_convergence(*f.function));
  r.negative = check_negative_convergence(g);
  r.monotonicity = check_monotonicity(g, opt);
  return r;
}

}  // namespace cdn
