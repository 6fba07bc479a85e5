#include <gtest/gtest.h>

#include <random>

#include "support/fixtures.hpp"

using namespace cdn;
using oracle::Rational;

namespace {

// Reference joint as plain integers over 1800, rows ordered x1 x2 x3 x4.
constexpr long long kNum[16] = {343, 392, 105, 168, 105, 120, 87, 120, 49, 56, 15, 24, 63, 72, 33, 48};

long long count(int x1, int x2, int x3, int x4) {
  long long total = 0;
  for (int i = 0; i < 16; ++i) {
    const int b[4] = {i >> 3 & 1, i >> 2 & 1, i >> 1 & 1, i & 1};
    if ((x1 < 0 || b[0] == x1) && (x2 < 0 || b[1] == x2) && (x3 < 0 || b[2] == x3) && (x4 < 0 || b[3] == x4)) total += kNum[i];
  }
  return total;
}

}  // namespace

TEST(Table1, EntriesAndTotal) {
  const auto j = oracle::table1_fixture();
  ASSERT_EQ(j.size(), 16u);
  EXPECT_EQ(j.at({0, 0, 0, 0}), Rational(343, 1800));
  EXPECT_EQ(j.at({1, 1, 1, 1}), Rational(48, 1800));
  EXPECT_EQ(j.total(), Rational(1));
  for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(j.probabilities[i], Rational(kNum[i], 1800));
}

TEST(Table1, BatteryReproducesAllEightVerdicts) {
  const auto battery = oracle::table1_battery();
  ASSERT_EQ(battery.size(), 8u);
  int independent = 0;
  for (const auto& v : battery) {
    EXPECT_TRUE(v.pass()) << v.relation;
    independent += v.expected_independent;
  }
  EXPECT_EQ(independent, 3);
}

TEST(Table1, ConditionalWitnessAtX2EqualsOne) {
  const auto battery = oracle::table1_battery();
  const auto& r = battery[0].result;  // X1, X3 given X2
  EXPECT_FALSE(r.independent);
  EXPECT_EQ(r.witness_c, std::vector<std::size_t>{1});
  EXPECT_EQ(r.witness_a, std::vector<std::size_t>{0});
  EXPECT_EQ(r.witness_b, std::vector<std::size_t>{0});
  EXPECT_EQ(r.joint, Rational(75, 216));
  EXPECT_EQ(r.product, Rational(80, 216));
}

TEST(Table1, ConditionalTablesMatchPrintedValues) {
  const auto joint1 = oracle::table1_conditional_pair(0, 2, 1, 1, false);
  const auto prod1 = oracle::table1_conditional_pair(0, 2, 1, 1, true);
  const std::vector<Rational> j1{{75, 216}, {69, 216}, {45, 216}, {27, 216}};
  const std::vector<Rational> p1{{80, 216}, {64, 216}, {40, 216}, {32, 216}};
  EXPECT_EQ(joint1, j1);
  EXPECT_EQ(prod1, p1);
  const std::vector<Rational> at0{{245, 384}, {91, 384}, {35, 384}, {13, 384}};
  EXPECT_EQ(oracle::table1_conditional_pair(0, 2, 1, 0, false), at0);
  EXPECT_EQ(oracle::table1_conditional_pair(0, 2, 1, 0, true), at0);
}

TEST(Table1, MarginalIndependenceOfX1AndX3) {
  EXPECT_EQ(count(0, -1, -1, -1), 1440);
  EXPECT_EQ(count(-1, -1, 0, -1), 1200);
  EXPECT_EQ(count(0, -1, 0, -1), 960);
  EXPECT_EQ(960LL * 1800, 1440LL * 1200);
  const auto j = oracle::table1_fixture();
  EXPECT_EQ(j.marginal({0}, {0}), Rational(1440, 1800));
  EXPECT_TRUE(oracle::independence_test(j, {0}, {2}, {}).independent);
}

TEST(Table1, IntegerRecountAgreesWithExactTest) {
  // Recompute every pairwise and single-conditioned verdict from integer
  // counts: P(a,b|c) = P(a|c) P(b|c)  iff  n(a,b,c) n(c) = n(a,c) n(b,c).
  const auto j = oracle::table1_fixture();
  for (int a = 0; a < 4; ++a) {
    for (int b = a + 1; b < 4; ++b) {
      for (int c = -1; c < 4; ++c) {
        if (c == a || c == b) continue;
        bool indep = true;
        for (int lc = 0; lc < (c < 0 ? 1 : 2); ++lc) {
          for (int la = 0; la < 2; ++la) {
            for (int lb = 0; lb < 2; ++lb) {
              int q[4] = {-1, -1, -1, -1}, qa[4] = {-1, -1, -1, -1}, qb[4] = {-1, -1, -1, -1}, qc[4] = {-1, -1, -1, -1};
              if (c >= 0) q[c] = qa[c] = qb[c] = qc[c] = lc;
              q[a] = qa[a] = la;
              q[b] = qb[b] = lb;
              const long long nc = count(qc[0], qc[1], qc[2], qc[3]);
              if (count(q[0], q[1], q[2], q[3]) * nc != count(qa[0], qa[1], qa[2], qa[3]) * count(qb[0], qb[1], qb[2], qb[3]))
                indep = false;
            }
          }
        }
        std::vector<std::size_t> C;
        if (c >= 0) C.push_back(static_cast<std::size_t>(c));
        EXPECT_EQ(oracle::independence_test(j, {std::size_t(a)}, {std::size_t(b)}, C).independent, indep)
            << a << "," << b << "|" << c;
      }
    }
  }
}

TEST(Independence, UniformJointIsIndependentEverywhere) {
  oracle::DiscreteJoint<Rational> u;
  u.variables = {"a", "b", "c"};
  u.levels = {2, 3, 2};
  u.probabilities.assign(12, Rational(1, 12));
  EXPECT_TRUE(oracle::independence_test(u, {0}, {1}, {}).independent);
  EXPECT_TRUE(oracle::independence_test(u, {0}, {1}, {2}).independent);
  EXPECT_TRUE(oracle::independence_test(u, {0, 2}, {1}, {}).independent);
  EXPECT_TRUE(oracle::independence_test(u, {2}, {0}, {1}).independent);
}

TEST(Independence, OverlappingSetsRejected) {
  const auto j = oracle::table1_fixture();
  try {
    oracle::independence_test(j, {0}, {0}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidQuery);
  }
  EXPECT_THROW(oracle::independence_test(j, {0}, {1}, {1}), Error);
  EXPECT_THROW(oracle::independence_test(j, {0}, {7}, {}), Error);
}

TEST(BruteForce, SingleVariablePdf) {
  CdnGraph g;
  const VariableId x = g.add_variable("x", VariableDomain::discrete({0.0, 1.0}));
  g.add_function({x}, std::make_shared<DiscreteTableFunction>(std::vector<Axis>{Axis::discrete({0.0, 1.0})},
                                                              std::vector<double>{0.3, 1.0}));
  EXPECT_NEAR(oracle::brute_force_pdf_discrete(g, {{x, 0.0}}), 0.3, 1e-15);
  EXPECT_NEAR(oracle::brute_force_pdf_discrete(g, {{x, 1.0}}), 0.7, 1e-15);
  EXPECT_NEAR(joint_pdf(g, {{x, 1.0}}), 0.7, 1e-15);
}

TEST(BruteForce, TwoVariableInclusionExclusion) {
  CdnGraph g;
  const std::vector<double> l{0.0, 1.0};
  const VariableId x = g.add_variable("x", VariableDomain::discrete(l));
  const VariableId y = g.add_variable("y", VariableDomain::discrete(l));
  const std::vector<double> F{0.1, 0.3, 0.4, 1.0};
  g.add_function({x, y}, std::make_shared<DiscreteTableFunction>(std::vector<Axis>{Axis::discrete(l), Axis::discrete(l)}, F));
  EXPECT_NEAR(oracle::brute_force_pdf_discrete(g, {{x, 1.0}, {y, 1.0}}), F[3] - F[1] - F[2] + F[0], 1e-15);
}

TEST(BruteForce, PdfTelescopesToTopCorner) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const CdnGraph g = oracle::random_discrete_tree(seed);
    double sum = 0.0;
    Assignment top;
    for (const Assignment& a : oracle::all_assignments(g)) sum += oracle::brute_force_pdf_discrete(g, a);
    for (const auto& [v, n] : g.variables()) top[v] = n.domain.levels().back();
    EXPECT_NEAR(sum, oracle::brute_force_cdf(g, top), 1e-12) << "seed " << seed;
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(BruteForce, ContinuousVariableRejected) {
  CdnGraph g;
  const VariableId x = g.add_variable("x", VariableDomain::grid(-1, 1, 3));
  g.add_function({x}, GaussianCdfFunction::univariate(0, 1));
  try {
    oracle::brute_force_pdf_discrete(g, {{x, 0.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DomainError);
  }
}

TEST(NumericPartial, SeparableProductOfDensities) {
  CdnGraph g;
  const VariableId x = g.add_variable("x", VariableDomain::grid(-4, 4, 9));
  const VariableId y = g.add_variable("y", VariableDomain::grid(-4, 4, 9));
  g.add_function({x}, GaussianCdfFunction::univariate(0, 1));
  g.add_function({y}, GaussianCdfFunction::univariate(0, 1));
  const Assignment at{{x, 0.0}, {y, 0.0}};
  EXPECT_NEAR(oracle::numeric_mixed_partial(g, {x, y}, at, 1e-3), 1.0 / (2.0 * M_PI), 1e-6);
  EXPECT_NEAR(oracle::numeric_mixed_partial(g, {}, at, 1e-3), 0.25, 1e-15);
}

TEST(NumericPartial, Errors) {
  auto f = [](const std::vector<double>& p) { return p[0]; };
  std::vector<std::size_t> nine(9);
  std::iota(nine.begin(), nine.end(), 0);
  try {
    oracle::numeric_mixed_partial(f, nine, std::vector<double>(9, 0.0), 1e-2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SubsetTooLarge);
  }
  EXPECT_THROW(oracle::numeric_mixed_partial(f, {0}, {0.0}, 0.0), Error);
}

TEST(NumericPartial, MatchesAnalyticDerivative) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 200; ++k) {
    const GaussianCdfFunction f({0.0, 0.0}, fixtures::random_cov(2, rng));
    const std::vector<double> x{u(rng), u(rng)};
    auto eval = [&](const std::vector<double>& p) { return f.evaluate(p); };
    EXPECT_NEAR(oracle::numeric_mixed_partial(eval, {0, 1}, x, 1e-4), f.mixed_diff(subset_of({0, 1}), x), 1e-6);
  }
}

TEST(NumericPartial, ErrorShrinksQuadratically) {
  // Above the roundoff floor the central-difference error quarters when
  // the step halves.
  const GaussianCdfFunction f({0.2, -0.1}, (Eigen::MatrixXd(2, 2) << 1.0, 0.3, 0.3, 0.8).finished());
  auto eval = [&](const std::vector<double>& p) { return f.evaluate(p); };
  for (const std::vector<double>& x : {std::vector<double>{0.4, -0.3}, std::vector<double>{-1.0, 0.5}}) {
    const double exact = f.mixed_diff(subset_of({0, 1}), x);
    const double e1 = std::abs(oracle::numeric_mixed_partial(eval, {0, 1}, x, 4e-2) - exact);
    const double e2 = std::abs(oracle::numeric_mixed_partial(eval, {0, 1}, x, 2e-2) - exact);
    EXPECT_GE(e1 / e2, 3.5);
    EXPECT_LE(e1 / e2, 4.5);
  }
}

TEST(Suite, ReportShape) {
  const auto r = oracle::dsp_equivalence_suite(5, 1e-12, {}, 10);
  ASSERT_EQ(r.rows.size(), 5u);
  EXPECT_EQ(r.rows.front().seed, 10u);
  EXPECT_TRUE(r.pass);
  const std::string t = r.table();
  EXPECT_EQ(t.rfind("seed\tvariables\tfunctions\tshape\tmax_deviation\tverdict\n", 0), 0u);
  EXPECT_EQ(std::count(t.begin(), t.end(), '\n'), 6);
  EXPECT_TRUE(oracle::dsp_equivalence_suite(0).pass);
}

TEST(Suite, TernaryStarAndChain) {
  oracle::RandomTreeOptions star;
  star.min_variables = star.max_variables = 3;
  star.max_degree = 3;
  for (std::uint64_t s = 0; s < 20; ++s) EXPECT_LE(oracle::dsp_max_deviation(oracle::random_discrete_tree(s, star)), 1e-12);
}
