#include <gtest/gtest.h>

#include <random>

#include "support/fixtures.hpp"

using namespace cdn;

namespace {

std::vector<double> binary() { return {0.0, 1.0}; }

MessagePair point_message(VariableId v, double at, double mu, double lambda) {
  MessagePair m;
  m.variable = v;
  m.point = true;
  m.support = {at};
  m.mu = {mu};
  m.lambda = {lambda};
  return m;
}

}  // namespace

TEST(Messages, LeafFunctionSendsValueAndDerivative) {
  const auto f = GaussianCdfFunction::univariate(0.5, 2.0);
  const std::vector<double> support{-1.0, 0.5, 3.0};
  MessageStats stats;
  const MessagePair m = function_to_variable_message(*f, 0, VariableId{0}, false, support, {nullptr}, &stats);
  for (std::size_t i = 0; i < support.size(); ++i) {
    EXPECT_NEAR(m.mu_at(i), normal::cdf(support[i], 0.5, 2.0), 1e-15);
    EXPECT_NEAR(m.lambda_at(i), normal::pdf(support[i], 0.5, 2.0), 1e-15);
  }
  EXPECT_EQ(stats.terms, support.size());
}

TEST(Messages, LeafVariableSendsIdentity) {
  const MessagePair m = combine_at_variable(VariableId{0}, false, true, {1.25}, {});
  EXPECT_EQ(m.mu, std::vector<double>{1.0});
  EXPECT_EQ(m.lambda, std::vector<double>{0.0});
}

TEST(Messages, ContinuousProductRule) {
  MessagePair a = point_message(VariableId{0}, 0.0, 0.3, 0.7);
  MessagePair b = point_message(VariableId{0}, 0.0, 0.6, 0.2);
  MessagePair c = point_message(VariableId{0}, 0.0, 0.5, 0.4);
  const MessagePair m = combine_at_variable(VariableId{0}, false, true, {0.0}, {&a, &b, &c});
  EXPECT_NEAR(m.mu[0], 0.3 * 0.6 * 0.5, 1e-15);
  EXPECT_NEAR(m.lambda[0], 0.7 * 0.6 * 0.5 + 0.3 * 0.2 * 0.5 + 0.3 * 0.6 * 0.4, 1e-15);
}

TEST(Messages, DiscreteBackwardDifferenceOfProduct) {
  MessagePair a = point_message(VariableId{0}, 1.0, 0.8, 0.3);
  MessagePair b = point_message(VariableId{0}, 1.0, 0.6, 0.1);
  const MessagePair m = combine_at_variable(VariableId{0}, true, true, {1.0}, {&a, &b});
  EXPECT_NEAR(m.mu[0], 0.48, 1e-15);
  EXPECT_NEAR(m.lambda[0], 0.48 - 0.5 * 0.5, 1e-15);
}

TEST(Messages, TwoByTwoTableMatchesDirectDifference) {
  // phi(x, y) on binary levels, y observed at level 1 with an identity
  // message: mu(x) = phi(x, 1) - phi(x, 0).
  const std::vector<Axis> axes{Axis::discrete(binary()), Axis::discrete(binary())};
  const auto t = DiscreteTableFunction::from_mass(axes, {0.1, 0.2, 0.3, 0.4});
  const MessagePair y = point_message(VariableId{1}, 1.0, 1.0, 0.0);
  const MessagePair m = function_to_variable_message(*t, 0, VariableId{0}, false, binary(), {nullptr, &y}, nullptr);
  auto at = [&](std::size_t i, std::size_t j) { return t->at(std::array<std::size_t, 2>{i, j}); };
  EXPECT_NEAR(m.mu[0], at(0, 1) - at(0, 0), 1e-15);
  EXPECT_NEAR(m.mu[1], at(1, 1) - at(1, 0), 1e-15);
  EXPECT_NEAR(m.lambda[0], 0.2, 1e-15);
  EXPECT_NEAR(m.lambda[1], 0.4, 1e-15);
}

TEST(Inference, BivariateDensityAtOrigin) {
  CdnGraph g;
  const VariableId x = g.add_variable("x", VariableDomain::grid(-4, 4, 9));
  const VariableId y = g.add_variable("y", VariableDomain::grid(-4, 4, 9));
  g.add_function({x, y}, fixtures::gaussian2(0, 0, 1, 0, 1));
  EXPECT_NEAR(joint_pdf(g, {{x, 0.0}, {y, 0.0}}), 1.0 / (2.0 * M_PI), 1e-7);
}

TEST(Inference, SeparableConditionalIgnoresEvidence) {
  CdnGraph g;
  const VariableId x = g.add_variable("x", VariableDomain::grid(-4, 4, 17));
  const VariableId y = g.add_variable("y", VariableDomain::grid(-4, 4, 17));
  const VariableId z = g.add_variable("z", VariableDomain::grid(-4, 4, 17));
  g.add_function({x}, GaussianCdfFunction::univariate(0.0, 1.0));
  g.add_function({y, z}, fixtures::gaussian2(0, 0, 1, 0.7, 1));
  const InferenceResult r = conditional_cdf(g, x, {{y, 1.5}, {z, -0.5}});
  // Conditionals are normalized at the top of the query grid.
  const double top = normal::cdf(4.0);
  for (std::size_t i = 0; i < r.support.size(); ++i) EXPECT_NEAR(r.conditional_cdf[i], normal::cdf(r.support[i]) / top, 1e-12);
}

TEST(Inference, GaussianConditional) {
  CdnGraph g;
  const VariableId x = g.add_variable("x", VariableDomain::grid(-5, 5, 101));
  const VariableId y = g.add_variable("y", VariableDomain::grid(-5, 5, 101));
  g.add_function({x, y}, fixtures::gaussian2(0, 0, 1, 0.5, 1));
  const InferenceResult r = conditional_cdf(g, x, {{y, 0.0}});
  double worst = 0.0;
  for (std::size_t i = 0; i < r.support.size(); ++i)
    worst = std::max(worst, std::abs(r.conditional_cdf[i] - normal::cdf(r.support[i], 0.0, std::sqrt(0.75))));
  EXPECT_LT(worst, 1e-6);
  const InferenceResult r1 = conditional_cdf(g, x, {{y, 1.0}});
  for (std::size_t i = 0; i < r1.support.size(); i += 10)
    EXPECT_NEAR(r1.conditional_cdf[i], normal::cdf(r1.support[i], 0.5, std::sqrt(0.75)), 1e-6);
}

TEST(Inference, ZeroDensityEvidence) {
  // All mass sits at y = 1, so observing y = 0 has zero density.
  CdnGraph g;
  const VariableId x = g.add_variable("x", VariableDomain::discrete(binary()));
  const VariableId y = g.add_variable("y", VariableDomain::discrete(binary()));
  g.add_function({x, y}, DiscreteTableFunction::from_mass({Axis::discrete(binary()), Axis::discrete(binary())}, {0, 1, 0, 1}));
  try {
    conditional_cdf(g, x, {{y, 0.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroEvidenceDensity);
  }
}

TEST(Inference, RejectsLoopsAndBadQueries) {
  const auto m = fixtures::three_variable_graph();
  try {
    conditional_cdf(m.graph, m.x, {{m.y, 0.0}, {m.z, 0.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotATree);
  }
  const auto c = fixtures::gaussian_chain(11);
  EXPECT_THROW(conditional_cdf(c.graph, c.x, {{c.x, 0.0}}), Error);
}

TEST(Inference, RootChoiceDoesNotChangeDensity) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const CdnGraph g = oracle::random_discrete_tree(seed);
    const auto all = oracle::all_assignments(g);
    const Assignment& a = all[seed % all.size()];
    std::optional<double> first;
    for (const auto& [v, n] : g.variables()) {
      const double p = joint_pdf(g, a, v);
      if (!first) first = p;
      EXPECT_NEAR(p, *first, 1e-14) << "seed " << seed;
    }
  }
}

TEST(DspProperty, MatchesBruteForceOnRandomTrees) {
  const oracle::EquivalenceReport r = oracle::dsp_equivalence_suite(100);
  EXPECT_TRUE(r.pass);
  EXPECT_LE(r.max_deviation, 1e-12);
  EXPECT_EQ(r.rows.size(), 100u);
}

TEST(DspProperty, DiscreteLambdaTelescopes) {
  // The backward differences of the root message sum to its top value.
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const CdnGraph g = oracle::random_discrete_tree(seed);
    const VariableId root = g.variables().begin()->first;
    Evidence ev;
    double best = -1.0;
    for (const Assignment& a : oracle::all_assignments(g)) {
      const double p = oracle::brute_force_pdf_discrete(g, a);
      if (p > best) best = p, ev = a;
    }
    ev.erase(root);
    const InferenceResult r = propagate(g, ev, root);
    double sum = 0.0;
    for (double l : r.lambda) sum += l;
    EXPECT_NEAR(sum, r.mu.back(), 1e-15) << "seed " << seed;
    EXPECT_NEAR(r.conditional_cdf.back(), 1.0, 1e-15);
  }
}

TEST(DspProperty, ContinuousDensityMatchesNumericPartial) {
  const auto c = fixtures::gaussian_chain(11);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int k = 0; k < 20; ++k) {
    const Assignment a{{c.x, u(rng)}, {c.y, u(rng)}, {c.z, u(rng)}};
    const double dsp = joint_pdf(c.graph, a);
    const double fd = oracle::numeric_mixed_partial(c.graph, {c.x, c.y, c.z}, a, 1e-2);
    EXPECT_NEAR(dsp, fd, 1e-4 * std::max(1.0, dsp)) << "point " << k;
    EXPECT_GT(dsp, 0.0);
  }
}

TEST(DspProperty, TermCountsDoubleWithDegree) {
  for (std::size_t d = 1; d <= 8; ++d) {
    CdnGraph g;
    std::vector<VariableId> scope;
    Evidence ev;
    for (std::size_t i = 0; i < d; ++i) {
      scope.push_back(g.add_variable("v" + std::to_string(i), VariableDomain::discrete(binary())));
      if (i > 0) ev[scope.back()] = 1.0;
    }
    std::vector<Axis> axes(d, Axis::discrete(binary()));
    std::vector<double> mass(std::size_t{1} << d, 1.0);
    const FunctionId f = g.add_function(scope, DiscreteTableFunction::from_mass(axes, mass));
    const InferenceResult r = propagate(g, ev, scope[0]);
    EXPECT_EQ(r.term_counts.at(f), 2 * (std::size_t{1} << (d - 1))) << "degree " << d;
    EXPECT_NEAR(r.conditional_cdf[0], 0.5, 1e-12);
  }
}

TEST(Semantics, ChainGivesMarginalIndependenceOnly) {
  // x1 -- a -- x2 -- b -- x3: x1 and x3 are independent with x2
  // marginalized, dependent once x2 is observed.
  const std::vector<Axis> axes{Axis::discrete(binary()), Axis::discrete(binary())};
  CdnGraph g;
  const VariableId x1 = g.add_variable("x1", VariableDomain::discrete(binary()));
  const VariableId x2 = g.add_variable("x2", VariableDomain::discrete(binary()));
  const VariableId x3 = g.add_variable("x3", VariableDomain::discrete(binary()));
  g.add_function({x1, x2}, DiscreteTableFunction::from_mass(axes, {0.4, 0.1, 0.2, 0.3}));
  g.add_function({x2, x3}, DiscreteTableFunction::from_mass(axes, {0.1, 0.3, 0.5, 0.1}));
  oracle::DiscreteJoint<double> joint;
  joint.variables = {"x1", "x2", "x3"};
  joint.levels = {2, 2, 2};
  for (std::size_t i = 0; i < 8; ++i) {
    const Assignment a{{x1, double(i >> 2 & 1)}, {x2, double(i >> 1 & 1)}, {x3, double(i & 1)}};
    joint.probabilities.push_back(joint_pdf(g, a));
  }
  EXPECT_NEAR(joint.total(), 1.0, 1e-12);
  EXPECT_TRUE(oracle::independence_test(joint, {0}, {2}, {}, 1e-12).independent);
  const auto cond = oracle::independence_test(joint, {0}, {2}, {1}, 1e-12);
  EXPECT_FALSE(cond.independent);
  EXPECT_GT(cond.max_deviation, 1e-3);
  EXPECT_EQ(cond.witness_c.size(), 1u);
}
