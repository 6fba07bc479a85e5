// Builds a small Gaussian chain, checks it, and prints a conditional CDF.
#include <cstdio>

#include "cdn/cdn.hpp"

int main() {
  using namespace cdn;
  CdnGraph g;
  const auto dom = VariableDomain::grid(-4.0, 4.0, 17);
  const VariableId x = g.add_variable("x", dom);
  const VariableId y = g.add_variable("y", dom);
  Eigen::MatrixXd cov(2, 2);
  cov << 1.0, 0.5, 0.5, 1.0;
  g.add_function({x, y}, std::make_shared<GaussianCdfFunction>(std::vector<double>{0.0, 0.0}, cov));

  const ValidityReport v = check_validity(g);
  std::printf("tree: %s, valid CDF: %s\n", v.structure.is_tree ? "yes" : "no", v.pass() ? "yes" : "no");

  // F(x | y = 1): a Gaussian with mean 0.5 and variance 0.75.
  const InferenceResult r = conditional_cdf(g, x, {{y, 1.0}});
  std::printf("%8s %12s %12s\n", "x", "F(x|y=1)", "Phi(x;.5,.75)");
  for (std::size_t i = 0; i < r.support.size(); ++i) {
    std::printf("%8.2f %12.8f %12.8f\n", r.support[i], r.conditional_cdf[i],
                normal::cdf(r.support[i], 0.5, std::sqrt(0.75)));
  }
  std::printf("joint pdf at (0, 1): %.10f\n", joint_pdf(g, {{x, 0.0}, {y, 1.0}}));
}
