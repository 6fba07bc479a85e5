#pragma once

// Fixtures and independent oracles shared by the unit tests and the
// acceptance binary.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <array>
#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cdn/cdn.hpp"
#include "cdn/ranking/evaluate.hpp"

namespace fixtures {

using namespace cdn;

inline std::shared_ptr<GaussianCdfFunction> gaussian2(double m1, double m2, double v1, double c, double v2,
                                                      std::vector<Axis> axes = {}) {
  Eigen::MatrixXd cov(2, 2);
  cov << v1, c, c, v2;
  return std::make_shared<GaussianCdfFunction>(std::vector<double>{m1, m2}, cov, std::move(axes));
}

/// phi_a(x, y) phi_b(x, y, z) phi_c(y, z) phi_d(z) with Gaussian CDF factors.
struct ThreeVariable {
  CdnGraph graph;
  VariableId x, y, z;
  FunctionId a, b, c, d;
};

inline ThreeVariable three_variable_graph() {
  ThreeVariable e;
  const auto dom = VariableDomain::grid(-6.0, 6.0, 121);
  e.x = e.graph.add_variable("x", dom);
  e.y = e.graph.add_variable("y", dom);
  e.z = e.graph.add_variable("z", dom);
  Eigen::MatrixXd c3(3, 3);
  c3 << 1, 0.3, 0.2, 0.3, 1, 0.3, 0.2, 0.3, 1;
  e.a = e.graph.add_function({e.x, e.y}, gaussian2(0, 0, 1, 0.5, 1));
  e.b = e.graph.add_function({e.x, e.y, e.z}, std::make_shared<GaussianCdfFunction>(std::vector<double>{0, 0, 0}, c3));
  e.c = e.graph.add_function({e.y, e.z}, gaussian2(0, 1, 2, 0.4, 1));
  e.d = e.graph.add_function({e.z}, GaussianCdfFunction::univariate(0.5, 1.5));
  return e;
}

/// x -- a -- y -- b -- z with bivariate Gaussian CDF factors.
struct Chain3 {
  CdnGraph graph;
  VariableId x, y, z;
};

inline Chain3 gaussian_chain(std::size_t points = 121) {
  Chain3 c;
  const auto dom = VariableDomain::grid(-6.0, 6.0, points);
  c.x = c.graph.add_variable("x", dom);
  c.y = c.graph.add_variable("y", dom);
  c.z = c.graph.add_variable("z", dom);
  c.graph.add_function({c.x, c.y}, gaussian2(0, 0, 1, 0.5, 1));
  c.graph.add_function({c.y, c.z}, gaussian2(0.3, -0.2, 1.5, -0.4, 1));
  return c;
}

/// Random SPD covariance with unit-scale eigenvalues bounded away from 0.
inline Eigen::MatrixXd random_cov(std::size_t d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd a(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) a(i, j) = u(rng);
  return a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(d, d);
}

/// Wrapper whose value never drops below `floor`: breaks the vanishing
/// lower tail while keeping monotonicity and the limit 1.
class FlooredFunction final : public CumulativeFunction {
 public:
  FlooredFunction(FunctionPtr inner, double floor) : CumulativeFunction(inner->axes()), inner_(std::move(inner)), floor_(floor) {}
  std::string family() const override { return "floored-" + inner_->family(); }
  double probe_high(std::size_t pos) const override { return inner_->probe_high(pos); }
  double probe_low(std::size_t pos) const override { return inner_->probe_low(pos); }

 protected:
  double eval_impl(std::span<const double> z) const override { return floor_ + (1.0 - floor_) * inner_->evaluate(z); }
  double diff_impl(Subset s, std::span<const double> z) const override { return (1.0 - floor_) * inner_->mixed_diff(s, z); }
  FunctionPtr pin_impl(Subset p) const override {
    return std::make_shared<FlooredFunction>(inner_->pin_to_sup(p), floor_);
  }

 private:
  FunctionPtr inner_;
  double floor_;
};

/// Outcome of one seeded mutation of a valid model.
struct Mutation {
  std::string kind;
  bool detected = false;
  std::string witness;
};

/// Seed parity picks the mutation: even seeds lower one table entry below
/// its predecessor along an axis, odd seeds floor a Gaussian factor's tail.
inline Mutation run_mutation(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Mutation out;
  if (seed % 2 == 0) {
    out.kind = "decreasing table entry";
    const std::size_t la = 2 + rng() % 3, lb = 2 + rng() % 3;
    std::vector<double> la_levels(la), lb_levels(lb);
    for (std::size_t i = 0; i < la; ++i) la_levels[i] = static_cast<double>(i);
    for (std::size_t i = 0; i < lb; ++i) lb_levels[i] = static_cast<double>(i);
    std::vector<double> mass(la * lb);
    for (double& m : mass) m = 0.05 + unit(rng);
    auto valid = DiscreteTableFunction::from_mass({Axis::discrete(la_levels), Axis::discrete(lb_levels)}, mass);
    std::vector<double> values;
    for (std::size_t i = 0; i < la; ++i)
      for (std::size_t j = 0; j < lb; ++j) values.push_back(valid->at(std::array<std::size_t, 2>{i, j}));
    // Pick a cell with a predecessor along some axis and push it below.
    std::size_t i = 0, j = 0;
    while (i == 0 && j == 0) {
      i = rng() % la;
      j = rng() % lb;
    }
    const double pred = j > 0 ? values[i * lb + j - 1] : values[(i - 1) * lb + j];
    values[i * lb + j] = pred * (0.2 + 0.6 * unit(rng));
    CdnGraph g;
    const VariableId a = g.add_variable("a", VariableDomain::discrete(la_levels));
    const VariableId b = g.add_variable("b", VariableDomain::discrete(lb_levels));
    g.add_function({a, b}, std::make_shared<DiscreteTableFunction>(
                               std::vector<Axis>{Axis::discrete(la_levels), Axis::discrete(lb_levels)}, values, false,
                               DiscreteTableFunction::Validation::Deferred));
    MonotonicityOptions opt;
    opt.seed = seed;
    const MonotonicityReport r = check_monotonicity(g, opt);
    out.detected = !r.pass && r.witness.has_value();
    if (r.witness) {
      std::ostringstream os;
      os << "subset " << r.witness->subset << " at (";
      for (std::size_t k = 0; k < r.witness->point.size(); ++k) os << (k ? "," : "") << r.witness->point[k];
      os << ") value " << r.witness->value;
      out.witness = os.str();
    }
  } else {
    out.kind = "non-vanishing lower tail";
    const double floor = 1e-3 + 0.2 * unit(rng);
    CdnGraph g;
    const VariableId x = g.add_variable("x", VariableDomain::grid(-8.0, 8.0, 81));
    const VariableId y = g.add_variable("y", VariableDomain::grid(-8.0, 8.0, 81));
    const double rho = 0.8 * (2.0 * unit(rng) - 1.0);
    auto base = gaussian2(unit(rng) - 0.5, unit(rng) - 0.5, 1.0, rho, 1.0);
    // x keeps no other vanishing neighbor: its only factor is floored.
    g.add_function({x, y}, std::make_shared<FlooredFunction>(base, floor));
    const NegativeConvergenceReport r = check_negative_convergence(g);
    for (const auto& e : r.entries) {
      if (!e.pass) {
        out.detected = true;
        out.witness = e.name + " smallest neighbor value " + std::to_string(e.smallest);
        break;
      }
    }
    out.detected = out.detected && !r.pass;
  }
  return out;
}

/// Team function by direct quadrature: integral over u <= x of
/// Phi(theta; sum u, beta^2) N(u; mu 1, sigma^2 I), team sizes 1 and 2.
inline double team_function_quadrature(const std::vector<double>& x, double theta, double mu, double sigma,
                                       double beta) {
  using boost::math::quadrature::gauss_kronrod;
  const double lo = mu - 12.0 * sigma;
  auto density = [&](double u) { return normal::pdf(u, mu, sigma); };
  if (x.size() == 1) {
    if (x[0] <= lo) return 0.0;
    auto f = [&](double u) { return normal::cdf(theta, u, beta) * density(u); };
    return gauss_kronrod<double, 61>::integrate(f, lo, x[0], 15, 1e-13);
  }
  if (x.size() == 2) {
    if (x[0] <= lo || x[1] <= lo) return 0.0;
    auto outer = [&](double u1) {
      auto inner = [&](double u2) { return normal::cdf(theta, u1 + u2, beta) * density(u2); };
      return density(u1) * gauss_kronrod<double, 61>::integrate(inner, lo, x[1], 15, 1e-13);
    };
    return gauss_kronrod<double, 61>::integrate(outer, lo, x[0], 15, 1e-12);
  }
  throw Error(ErrorCode::InvalidParams, "quadrature oracle covers team sizes 1 and 2");
}

/// Largest F_{R_{n+1}}(a) - F_{R_n}(a) over the rank support, with every
/// player score marginalized. Teams are listed worst slot first.
inline double ordering_violation(const std::vector<std::size_t>& sizes, const ranking::RatingModelParams& p,
                                 bool performance_grid, const ranking::SkillGrid& performance = {-12.0, 12.0, 241}) {
  ranking::MatchRecord m;
  m.game_id = "ordering";
  std::size_t id = 0;
  for (std::size_t t = 0; t < sizes.size(); ++t) {
    std::vector<std::string> team;
    for (std::size_t k = 0; k < sizes[t]; ++k) team.push_back("p" + std::to_string(id++));
    m.teams.push_back(team);
    m.ranks.push_back(static_cast<int>(sizes.size() - t));  // first team worst
  }
  ranking::SkillStore skills(p);
  for (const auto& t : m.teams)
    for (const auto& pl : t) skills.ensure(pl);
  ranking::BuildOptions bo;
  bo.performance_grid = performance_grid;
  bo.performance = performance;
  const ranking::MatchCdn cdn = ranking::build_match_cdn(m, skills, p, bo);
  std::vector<std::vector<double>> F;
  for (VariableId r : cdn.rank_vars) F.push_back(marginal_cdf(cdn.graph, r).mu);
  double worst = -1.0;
  for (std::size_t n = 0; n + 1 < F.size(); ++n)
    for (std::size_t i = 0; i < F[n].size(); ++i) worst = std::max(worst, F[n + 1][i] - F[n][i]);
  return worst;
}

/// Standard-unit parameters for ordering studies: three cutpoints, sigma 1.
inline ranking::RatingModelParams unit_params() {
  ranking::RatingModelParams p = ranking::RatingModelParams::defaults(0.0, 1.0, 1.0);
  p.cutpoints = {-0.5, 0.5, 1.5};
  p.team_mean_offset = 0.0;
  return p;
}

}  // namespace fixtures
