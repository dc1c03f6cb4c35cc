#include <cmath>
#include <map>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "conegeo/corpus.hpp"
#include "conegeo/expr.hpp"
#include "conegeo/jet.hpp"
#include "conegeo/testing/finite_difference.hpp"

using namespace conegeo;

namespace {

using Monomial = std::vector<int>;
using Poly = std::map<Monomial, double>;

// Truncated polynomial of a jet, read slot by slot through the layout.
Poly poly_of(const Jet& j) {
  const auto& L = detail::jet_layout(j.dimension());
  Poly p;
  for (int s = 0; s < L.size; ++s) {
    Monomial m(static_cast<std::size_t>(j.dimension()), 0);
    for (int v : L.vars[static_cast<std::size_t>(s)]) {
      if (v >= 0) ++m[static_cast<std::size_t>(v)];
    }
    p[m] += j.coefficients()[static_cast<std::size_t>(s)];
  }
  return p;
}

Poly multiply(const Poly& a, const Poly& b, int max_degree) {
  Poly out;
  for (const auto& [ma, ca] : a) {
    for (const auto& [mb, cb] : b) {
      Monomial m(ma.size());
      int deg = 0;
      for (std::size_t i = 0; i < m.size(); ++i) {
        m[i] = ma[i] + mb[i];
        deg += m[i];
      }
      if (deg <= max_degree) out[m] += ca * cb;
    }
  }
  return out;
}

Jet random_jet(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Jet j(n, 0.0);
  for (double& c : j.coefficients()) c = u(rng);
  return j;
}

}  // namespace

TEST(Jet, SeedVariableIsACoordinate) {
  const Jet x = seed_variable(0, 2.0, 2);
  EXPECT_EQ(x.value(), 2.0);
  EXPECT_EQ(x.derivative({0}), 1.0);
  EXPECT_EQ(x.derivative({1}), 0.0);
  EXPECT_EQ(x.derivative({0, 0}), 0.0);
  EXPECT_EQ(x.derivative({0, 1, 1}), 0.0);

  const Jet y = seed_variable(1, 0.0, 3);
  EXPECT_EQ(y.value(), 0.0);
  EXPECT_EQ(y.derivative({1}), 1.0);
  EXPECT_EQ(y.derivative({0}), 0.0);
  EXPECT_EQ(y.derivative({2}), 0.0);
}

TEST(Jet, SquareAtTwo) {
  const Jet x = seed_variable(0, 2.0, 1);
  const Jet sq = x * x;
  EXPECT_EQ(sq.value(), 4.0);
  EXPECT_EQ(sq.derivative({0}), 4.0);
  EXPECT_EQ(sq.derivative({0, 0}), 2.0);
  EXPECT_EQ(sq.derivative({0, 0, 0}), 0.0);
  const std::vector<int> two{2};
  EXPECT_EQ(extract_partial(sq, two), 2.0);
  const std::vector<int> zero{0};
  EXPECT_EQ(extract_partial(sq, zero), 4.0);
}

TEST(Jet, SquareAtThreeCoefficients) {
  const Jet x = seed_variable(0, 3.0, 1);
  const Jet sq = x * x;
  const auto c = sq.coefficients();
  ASSERT_EQ(c.size(), 4u);
  EXPECT_EQ(c[0], 9.0);
  EXPECT_EQ(c[1], 6.0);
  EXPECT_EQ(c[2], 1.0);
  EXPECT_EQ(c[3], 0.0);
}

TEST(Jet, ExpTaylorCoefficientsAtZero) {
  const Jet e = exp(seed_variable(0, 0.0, 1));
  const auto c = e.coefficients();
  EXPECT_DOUBLE_EQ(c[0], 1.0);
  EXPECT_DOUBLE_EQ(c[1], 1.0);
  EXPECT_DOUBLE_EQ(c[2], 0.5);
  EXPECT_DOUBLE_EQ(c[3], 1.0 / 6.0);
  const std::vector<int> three{3};
  EXPECT_DOUBLE_EQ(extract_partial(e, three), 1.0);
}

TEST(Jet, SineMatchesFiniteDifferenceStencils) {
  const double x0 = 0.7;
  const Jet s = sin(seed_variable(0, x0, 1));
  const auto fd = conegeo::testing::univariate_stencils([](double t) { return std::sin(t); }, x0);
  for (int k = 0; k < 4; ++k) {
    const std::vector<int> m{k};
    const double exact = extract_partial(s, m);
    EXPECT_LT(std::abs(fd[static_cast<std::size_t>(k)] - exact), 1e-5 * std::abs(exact)) << "order " << k;
  }
}

TEST(Jet, MultiplicationMatchesTruncatedPolynomialProduct) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + trial % 4;
    const Jet a = random_jet(n, rng);
    const Jet b = random_jet(n, rng);
    const Poly expect = multiply(poly_of(a), poly_of(b), kJetOrder);
    const Jet prod = a * b;
    for (const auto& [m, c] : expect) {
      const double got = prod.coefficient(m);
      EXPECT_LE(std::abs(got - c), 1e-14 * std::max(1.0, std::abs(c))) << "trial " << trial;
    }
  }
}

TEST(Jet, LogInvertsExp) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Jet f = random_jet(3, rng);
    const Jet back = log(exp(f));
    for (std::size_t s = 0; s < f.size(); ++s) {
      EXPECT_NEAR(back.coefficients()[s], f.coefficients()[s], 1e-10);
    }
  }
}

TEST(Jet, DivisionAndSqrtRoundTrip) {
  const auto x = seed_point(std::vector<double>{0.4, 1.3});
  const Jet f = x[0] * x[0] + 2.0 * x[1] + 1.0;
  const Jet q = (f * x[1]) / x[1];
  const Jet r = sqrt(f) * sqrt(f);
  for (std::size_t s = 0; s < f.size(); ++s) {
    EXPECT_NEAR(q.coefficients()[s], f.coefficients()[s], 1e-13);
    EXPECT_NEAR(r.coefficients()[s], f.coefficients()[s], 1e-13);
  }
}

TEST(Jet, RealPowerMatchesClosedForm) {
  const double x0 = 1.7;
  const Jet p = pow(seed_variable(0, x0, 1), 2.5);
  EXPECT_NEAR(p.derivative({0}), 2.5 * std::pow(x0, 1.5), 1e-12);
  EXPECT_NEAR(p.derivative({0, 0}), 2.5 * 1.5 * std::pow(x0, 0.5), 1e-12);
  EXPECT_NEAR(p.derivative({0, 0, 0}), 2.5 * 1.5 * 0.5 * std::pow(x0, -0.5), 1e-12);
}

TEST(Jet, LogOfNegativeIsADomainError) {
  EXPECT_THROW(log(seed_variable(0, -1.0, 1)), DomainError);
}

TEST(Jet, ShallowJetRefusesDeepPartials) {
  const Jet x = seed_variable(0, 1.0, 2, 1);
  EXPECT_THROW(x.derivative({0, 0}), CapabilityError);
  EXPECT_THROW(differentiate(seed_variable(0, 1.0, 1, 0), 0), CapabilityError);
}

TEST(Jet, BadIndicesAreArgumentErrors) {
  EXPECT_THROW(seed_variable(2, 0.0, 2), ArgumentError);
  const Jet x = seed_variable(0, 1.0, 2);
  EXPECT_THROW(x.derivative({0, 0, 0, 1}), ArgumentError);
  const std::vector<int> wrong_length{1};
  EXPECT_THROW(x.partial(wrong_length), ArgumentError);
}

TEST(Jet, ComposeAppliesTheChainRule) {
  // outer(u, v) = u v at (1, 2); inner u = t^2, v = 2t at t = 1.
  const auto uv = seed_point(std::vector<double>{1.0, 2.0});
  const Jet outer = uv[0] * uv[1];
  const Jet t = seed_variable(0, 1.0, 1);
  const std::vector<Jet> inner{t * t, 2.0 * t};
  const Jet h = compose(outer, inner);  // 2 t^3
  EXPECT_NEAR(h.value(), 2.0, 1e-15);
  EXPECT_NEAR(h.derivative({0}), 6.0, 1e-14);
  EXPECT_NEAR(h.derivative({0, 0}), 12.0, 1e-14);
  EXPECT_NEAR(h.derivative({0, 0, 0}), 12.0, 1e-14);
}

TEST(Jet, CorpusPartialsAgreeWithFiniteDifferences) {
  for (const char* id : {"round_sphere", "pseudo_sphere", "flat_torus_chart", "bumpy_sphere"}) {
    const CorpusCase cs = make_case(id);
    const ResidualReport r = conegeo::testing::corpus_fd_report(cs, 100, 42);
    EXPECT_TRUE(r.passed()) << cs.id << " worst ratio " << r.max_residual;
    EXPECT_EQ(r.metric("points_used"), 100.0) << cs.id;
  }
}

TEST(Expression, EvaluatesOnJets) {
  const Expression e = Expression::parse("x^2*sin(y) - exp(x)/2 + pow(y, 3) + 2*pi", {"x", "y"});
  const auto xy = seed_point(std::vector<double>{0.3, 1.1});
  const Jet v = e(xy);
  EXPECT_NEAR(v.value(), 0.09 * std::sin(1.1) - std::exp(0.3) / 2 + std::pow(1.1, 3) + 2 * std::numbers::pi, 1e-14);
  EXPECT_NEAR(v.derivative({0}), 0.6 * std::sin(1.1) - std::exp(0.3) / 2, 1e-14);
  EXPECT_NEAR(v.derivative({0, 1}), 0.6 * std::cos(1.1), 1e-14);
  EXPECT_NEAR(v.derivative({1, 1, 1}), -0.09 * std::cos(1.1) + 6.0, 1e-13);
}

TEST(Expression, PrecedenceAndUnaryMinus) {
  EXPECT_DOUBLE_EQ(Expression::parse("-2^2", {}).value(std::vector<double>{}), -4.0);
  EXPECT_DOUBLE_EQ(Expression::parse("2^3^2", {}).value(std::vector<double>{}), 512.0);
  EXPECT_DOUBLE_EQ(Expression::parse("1 - 2 - 3", {}).value(std::vector<double>{}), -4.0);
  EXPECT_DOUBLE_EQ(Expression::parse("8 / 4 / 2", {}).value(std::vector<double>{}), 1.0);
  EXPECT_TRUE(Expression::parse("2*pi - e", {}).is_constant());
}

TEST(Expression, RejectsMalformedInput) {
  EXPECT_THROW(Expression::parse("x +", {"x"}), ArgumentError);
  EXPECT_THROW(Expression::parse("foo(x)", {"x"}), ArgumentError);
  EXPECT_THROW(Expression::parse("z", {"x"}), ArgumentError);
  EXPECT_THROW(Expression::parse("pow(x)", {"x"}), ArgumentError);
  EXPECT_THROW(Expression::parse("(x", {"x"}), ArgumentError);
  EXPECT_THROW(Expression::parse("x y", {"x", "y"}), ArgumentError);
}
