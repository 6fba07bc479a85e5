#pragma once

#include <boost/rational.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cdn/dsp.hpp"
#include "cdn/graph.hpp"
#include "cdn/table_function.hpp"

namespace cdn::oracle {

/// Product of every factor at a full assignment, computed without the
/// graph's own evaluate().
inline double brute_force_cdf(const CdnGraph& g, const Assignment& x) {
  double product = g.constant();
  for (const auto& [fid, f] : g.functions()) {
    std::vector<double> z;
    z.reserve(f.scope.size());
    for (VariableId v : f.scope) z.push_back(x.at(v));
    product *= f.function->evaluate(z);
  }
  return product;
}

/// P(x) for an all-discrete graph by inclusion-exclusion over the corners
/// one level below x, with F = 0 below the minimum level.
inline double brute_force_pdf_discrete(const CdnGraph& g, const Assignment& x) {
  std::vector<VariableId> vars;
  std::vector<std::size_t> idx;
  for (const auto& [vid, v] : g.variables()) {
    if (!v.domain.is_discrete()) throw Error(ErrorCode::DomainError, "'" + v.name + "' is not discrete");
    const auto i = v.domain.level_index(x.at(vid));
    if (!i) throw Error(ErrorCode::DomainError, "value of '" + v.name + "' is not a level");
    vars.push_back(vid);
    idx.push_back(*i);
  }
  if (vars.size() > 30) throw Error(ErrorCode::SubsetTooLarge, "too many variables for inclusion-exclusion");
  double total = 0.0;
  const std::uint64_t count = std::uint64_t{1} << vars.size();
  for (std::uint64_t s = 0; s < count; ++s) {
    Assignment corner = x;
    bool below = false;
    int parity = 0;
    for (std::size_t k = 0; k < vars.size(); ++k) {
      if (!((s >> k) & 1u)) continue;
      ++parity;
      if (idx[k] == 0) {
        below = true;
        break;
      }
      corner[vars[k]] = g.variable(vars[k]).domain.levels()[idx[k] - 1];
    }
    if (below) continue;
    const double f = brute_force_cdf(g, corner);
    total += parity % 2 ? -f : f;
  }
  return total;
}

/// Central-difference mixed partial of f over the coordinates in `subset`
/// (2^|subset| evaluations). Truncation error is O(step^2); roundoff grows
/// like eps / step^|subset|.
inline double numeric_mixed_partial(const std::function<double(const std::vector<double>&)>& f,
                                    const std::vector<std::size_t>& subset, const std::vector<double>& x, double step) {
  if (subset.size() > 8) throw Error(ErrorCode::SubsetTooLarge, "at most 8 differentiated coordinates");
  if (!(step > 0.0)) throw Error(ErrorCode::InvalidParams, "step must be positive");
  if (subset.empty()) return f(x);
  double total = 0.0;
  std::vector<double> p = x;
  const std::size_t n = std::size_t{1} << subset.size();
  for (std::size_t s = 0; s < n; ++s) {
    int negatives = 0;
    for (std::size_t k = 0; k < subset.size(); ++k) {
      const bool minus = (s >> k) & 1u;
      negatives += minus;
      p[subset[k]] = x[subset[k]] + (minus ? -step : step);
    }
    const double v = f(p);
    total += negatives % 2 ? -v : v;
  }
  return total / std::pow(2.0 * step, static_cast<double>(subset.size()));
}

/// Graph version: differentiates brute_force_cdf with respect to `vars`.
inline double numeric_mixed_partial(const CdnGraph& g, const std::vector<VariableId>& vars, const Assignment& x,
                                    double step) {
  std::vector<VariableId> order;
  std::vector<double> base;
  for (const auto& [v, value] : x) {
    order.push_back(v);
    base.push_back(value);
  }
  std::vector<std::size_t> subset;
  for (VariableId v : vars) {
    if (g.variable(v).domain.is_discrete()) throw Error(ErrorCode::DomainError, "numeric partials need continuous variables");
    subset.push_back(static_cast<std::size_t>(std::find(order.begin(), order.end(), v) - order.begin()));
    if (subset.back() == order.size()) throw Error(ErrorCode::UnobservedVariable, "variable not assigned");
  }
  auto f = [&](const std::vector<double>& p) {
    Assignment a;
    for (std::size_t i = 0; i < order.size(); ++i) a[order[i]] = p[i];
    return brute_force_cdf(g, a);
  };
  return numeric_mixed_partial(f, subset, base, step);
}

/// Joint distribution over discrete variables, row-major with the last
/// variable fastest. T is double or an exact rational type.
template <class T>
struct DiscreteJoint {
  std::vector<std::string> variables;
  std::vector<std::size_t> levels;  // number of levels per variable
  std::vector<T> probabilities;

  std::size_t size() const { return probabilities.size(); }

  std::vector<std::size_t> unflatten(std::size_t flat) const {
    std::vector<std::size_t> idx(levels.size());
    for (std::size_t k = levels.size(); k-- > 0;) {
      idx[k] = flat % levels[k];
      flat /= levels[k];
    }
    return idx;
  }

  T at(const std::vector<std::size_t>& idx) const {
    std::size_t flat = 0;
    for (std::size_t k = 0; k < levels.size(); ++k) flat = flat * levels[k] + idx[k];
    return probabilities[flat];
  }

  /// Marginal probability of the given variables taking the given levels.
  T marginal(const std::vector<std::size_t>& vars, const std::vector<std::size_t>& values) const {
    T total{0};
    for (std::size_t flat = 0; flat < size(); ++flat) {
      const auto idx = unflatten(flat);
      bool match = true;
      for (std::size_t k = 0; k < vars.size() && match; ++k) match = idx[vars[k]] == values[k];
      if (match) total += probabilities[flat];
    }
    return total;
  }

  T total() const {
    T t{0};
    for (const T& p : probabilities) t += p;
    return t;
  }
};

using Rational = boost::rational<long long>;

inline double to_double(double x) { return x; }
inline double to_double(const Rational& x) { return boost::rational_cast<double>(x); }

template <class T>
struct IndependenceResult {
  bool independent = true;
  double max_deviation = 0.0;
  /// Largest deviation, as exact values: P(a,b|c) and P(a|c) P(b|c).
  T joint{0};
  T product{0};
  std::vector<std::size_t> witness_a, witness_b, witness_c;
};

/// Tests P(a,b|c) = P(a|c) P(b|c) at every level combination with P(c) > 0.
template <class T>
IndependenceResult<T> independence_test(const DiscreteJoint<T>& joint, const std::vector<std::size_t>& A,
                                        const std::vector<std::size_t>& B, const std::vector<std::size_t>& C,
                                        double tolerance = 0.0) {
  std::set<std::size_t> seen;
  for (const auto* set : {&A, &B, &C}) {
    for (std::size_t v : *set) {
      if (v >= joint.levels.size()) throw Error(ErrorCode::InvalidQuery, "variable index out of range");
      if (!seen.insert(v).second) throw Error(ErrorCode::InvalidQuery, "variable sets must be disjoint");
    }
  }
  if (A.empty() || B.empty()) throw Error(ErrorCode::InvalidQuery, "A and B must be non-empty");

  auto combos = [&](const std::vector<std::size_t>& vars) {
    std::vector<std::vector<std::size_t>> out{{}};
    for (std::size_t v : vars) {
      std::vector<std::vector<std::size_t>> next;
      for (const auto& c : out) {
        for (std::size_t l = 0; l < joint.levels[v]; ++l) {
          auto e = c;
          e.push_back(l);
          next.push_back(std::move(e));
        }
      }
      out = std::move(next);
    }
    return out;
  };
  auto concat = [](std::vector<std::size_t> a, const std::vector<std::size_t>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };

  IndependenceResult<T> r;
  bool first = true;
  for (const auto& c : combos(C)) {
    const T pc = joint.marginal(C, c);
    if (!(pc > T{0})) continue;
    for (const auto& a : combos(A)) {
      const T pac = joint.marginal(concat(A, C), concat(a, c));
      for (const auto& b : combos(B)) {
        const T pbc = joint.marginal(concat(B, C), concat(b, c));
        const T pabc = joint.marginal(concat(concat(A, B), C), concat(concat(a, b), c));
        const T lhs = pabc / pc;
        const T rhs = (pac / pc) * (pbc / pc);
        const T diff = lhs > rhs ? lhs - rhs : rhs - lhs;
        const double dev = to_double(diff);
        if (first || dev > r.max_deviation) {
          first = false;
          r.max_deviation = dev;
          r.joint = lhs;
          r.product = rhs;
          r.witness_a = a;
          r.witness_b = b;
          r.witness_c = c;
        }
        if (tolerance == 0.0 ? diff != T{0} : dev > tolerance) r.independent = false;
      }
    }
  }
  return r;
}

/// Four binary variables with the exact joint used as the standard
/// example of a dependence pattern no DAG or MRF captures.
inline DiscreteJoint<Rational> table1_fixture() {
  static constexpr long long numerators[16] = {343, 392, 105, 168, 105, 120, 87, 120,
                                               49,  56,  15,  24,  63,  72,  33, 48};
  DiscreteJoint<Rational> j;
  j.variables = {"X1", "X2", "X3", "X4"};
  j.levels = {2, 2, 2, 2};
  for (long long n : numerators) j.probabilities.emplace_back(n, 1800);
  return j;
}

struct Table1Verdict {
  std::string relation;  // e.g. "X1 _||_ X3 | X2"
  bool expected_independent = false;
  IndependenceResult<Rational> result;
  bool pass() const { return result.independent == expected_independent; }
};

/// The eight (in)dependence relations of the fixture, as 0-based variable
/// indices (A, B, C) with the expected verdict.
inline std::vector<Table1Verdict> table1_battery() {
  struct Case {
    std::size_t a, b;
    std::vector<std::size_t> c;
    bool independent;
  };
  const std::vector<Case> cases = {
      {0, 2, {1}, false}, {1, 3, {2}, false}, {0, 1, {}, false}, {1, 2, {}, false},
      {2, 3, {}, false},  {0, 3, {}, true},   {0, 2, {}, true},  {1, 3, {}, true},
  };
  const auto joint = table1_fixture();
  std::vector<Table1Verdict> out;
  for (const Case& c : cases) {
    Table1Verdict v;
    v.relation = "X" + std::to_string(c.a + 1) + (c.independent ? " indep " : " dep ") + "X" + std::to_string(c.b + 1);
    if (!c.c.empty()) v.relation += " | X" + std::to_string(c.c[0] + 1);
    v.expected_independent = c.independent;
    v.result = independence_test(joint, {c.a}, {c.b}, c.c);
    out.push_back(std::move(v));
  }
  return out;
}

/// P(x_a, x_b | x_c = level) as exact rationals, in (a, b) row-major order.
inline std::vector<Rational> table1_conditional_pair(std::size_t a, std::size_t b, std::size_t c, std::size_t level,
                                                     bool product_form) {
  const auto j = table1_fixture();
  const Rational pc = j.marginal({c}, {level});
  std::vector<Rational> out;
  for (std::size_t xa = 0; xa < 2; ++xa) {
    for (std::size_t xb = 0; xb < 2; ++xb) {
      if (product_form) {
        out.push_back(j.marginal({a, c}, {xa, level}) / pc * (j.marginal({b, c}, {xb, level}) / pc));
      } else {
        out.push_back(j.marginal({a, b, c}, {xa, xb, level}) / pc);
      }
    }
  }
  return out;
}

struct RandomTreeOptions {
  std::size_t min_variables = 2;
  std::size_t max_variables = 7;
  std::size_t max_levels = 3;
  std::size_t max_degree = 3;
  double unary_probability = 0.3;
};

/// Random tree CDN of monotone table factors: factors of degree 1..3 are
/// attached so that each new factor joins exactly one existing variable,
/// keeping the graph a tree. Tables come from random nonnegative masses.
inline CdnGraph random_discrete_tree(std::uint64_t seed, const RandomTreeOptions& opt = {}) {
  std::mt19937_64 rng(seed);
  auto uniform = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  CdnGraph g;
  const std::size_t n = uniform(opt.min_variables, opt.max_variables);
  std::vector<VariableId> vars;
  std::vector<std::vector<double>> levels;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> lv(uniform(2, std::max<std::size_t>(2, opt.max_levels)));
    for (std::size_t k = 0; k < lv.size(); ++k) lv[k] = static_cast<double>(k);
    levels.push_back(lv);
    vars.push_back(g.add_variable("x" + std::to_string(i + 1), VariableDomain::discrete(lv)));
  }

  auto add_table = [&](const std::vector<std::size_t>& members) {
    std::vector<Axis> axes;
    std::size_t cells = 1;
    for (std::size_t m : members) {
      axes.push_back(Axis::discrete(levels[m]));
      cells *= levels[m].size();
    }
    std::vector<double> mass(cells);
    for (double& m : mass) m = unit(rng) < 0.15 ? 0.0 : unit(rng);
    if (std::all_of(mass.begin(), mass.end(), [](double m) { return m == 0.0; })) mass.back() = 1.0;
    std::vector<VariableId> scope;
    for (std::size_t m : members) scope.push_back(vars[m]);
    g.add_function(scope, DiscreteTableFunction::from_mass(std::move(axes), std::move(mass)));
  };

  // Connect variables 1..n-1 to the growing tree.
  std::size_t next = 1;
  while (next < n) {
    const std::size_t anchor = uniform(0, next - 1);
    const std::size_t extra = std::min(uniform(1, opt.max_degree - 1), n - next);
    std::vector<std::size_t> members{anchor};
    for (std::size_t k = 0; k < extra; ++k) members.push_back(next++);
    std::shuffle(members.begin(), members.end(), rng);
    add_table(members);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (unit(rng) < opt.unary_probability || g.neighbors(vars[i]).empty()) add_table({i});
  }
  return g;
}

/// Every joint assignment of an all-discrete graph.
inline std::vector<Assignment> all_assignments(const CdnGraph& g) {
  std::vector<Assignment> out{{}};
  for (const auto& [vid, v] : g.variables()) {
    std::vector<Assignment> next;
    for (const auto& a : out) {
      for (double level : v.domain.levels()) {
        Assignment b = a;
        b[vid] = level;
        next.push_back(std::move(b));
      }
    }
    out = std::move(next);
  }
  return out;
}

struct EquivalenceRow {
  std::uint64_t seed = 0;
  std::size_t variables = 0;
  std::size_t functions = 0;
  std::string shape;  // function degrees, e.g. "2,3,1"
  double max_deviation = 0.0;
  bool pass = false;
};

struct EquivalenceReport {
  std::vector<EquivalenceRow> rows;
  double max_deviation = 0.0;
  bool pass = true;
  std::string table() const {
    std::ostringstream os;
    os << "seed\tvariables\tfunctions\tshape\tmax_deviation\tverdict\n";
    for (const auto& r : rows) {
      os << r.seed << '\t' << r.variables << '\t' << r.functions << '\t' << r.shape << '\t' << r.max_deviation << '\t'
         << (r.pass ? "PASS" : "FAIL") << '\n';
    }
    return os.str();
  }
};

/// DSP root PDF versus brute-force inclusion-exclusion at every joint
/// assignment of one graph.
inline double dsp_max_deviation(const CdnGraph& g) {
  double worst = 0.0;
  const VariableId root = g.variables().begin()->first;
  for (const Assignment& a : all_assignments(g)) {
    const double dsp = joint_pdf(g, a, root);
    worst = std::max(worst, std::abs(dsp - brute_force_pdf_discrete(g, a)));
  }
  return worst;
}

/// Runs seeds first_seed, ..., first_seed + seeds - 1.
inline EquivalenceReport dsp_equivalence_suite(std::size_t seeds, double threshold = 1e-12,
                                               const RandomTreeOptions& opt = {}, std::uint64_t first_seed = 0) {
  EquivalenceReport report;
  for (std::uint64_t seed = first_seed; seed < first_seed + seeds; ++seed) {
    const CdnGraph g = random_discrete_tree(seed, opt);
    EquivalenceRow row;
    row.seed = seed;
    row.variables = g.variable_count();
    row.functions = g.function_count();
    for (const auto& [fid, f] : g.functions()) {
      row.shape += (row.shape.empty() ? "" : ",") + std::to_string(f.scope.size());
    }
    row.max_deviation = dsp_max_deviation(g);
    row.pass = row.max_deviation <= threshold;
    report.max_deviation = std::max(report.max_deviation, row.max_deviation);
    report.pass = report.pass && row.pass;
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace cdn::oracle
