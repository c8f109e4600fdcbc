#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "expctl/expctl.hpp"

using namespace expctl;

TEST(Dual, SquareValueAndSlope) {
  const auto r = propagate_sensitivities<1>([](const auto& x) { return x[0] * x[0]; }, std::array<double, 1>{3.0});
  EXPECT_EQ(r.value, 9.0);
  EXPECT_EQ(r.gradient[0], 6.0);
}

TEST(Dual, ConstantHasZeroGradient) {
  using D = Dual<double, 3>;
  const auto r = propagate_sensitivities<3>([](const std::array<D, 3>&) { return D(4.25); },
                                            std::array<double, 3>{1.0, -2.0, 0.5});
  EXPECT_EQ(r.value, 4.25);
  for (double g : r.gradient) EXPECT_EQ(g, 0.0);
}

TEST(Dual, ValueMatchesPlainEvaluation) {
  auto f = [](const auto& x) { return sin(x[0]) * exp(x[1]) / (x[0] * x[0] + 1.0) - sqrt(x[1] * x[1] + 2.0); };
  auto plain = [](double a, double b) {
    return std::sin(a) * std::exp(b) / (a * a + 1.0) - std::sqrt(b * b + 2.0);
  };
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  for (int k = 0; k < 100; ++k) {
    const std::array<double, 2> p{d(rng), d(rng)};
    const auto r = propagate_sensitivities<2>(f, p);
    EXPECT_EQ(r.value, plain(p[0], p[1]));
    // Central differences, O(h^2) truncation.
    const double h = 1e-5;
    const double ga = (plain(p[0] + h, p[1]) - plain(p[0] - h, p[1])) / (2 * h);
    const double gb = (plain(p[0], p[1] + h) - plain(p[0], p[1] - h)) / (2 * h);
    EXPECT_NEAR(r.gradient[0], ga, 1e-7 * (1.0 + std::abs(ga)));
    EXPECT_NEAR(r.gradient[1], gb, 1e-7 * (1.0 + std::abs(gb)));
  }
}

TEST(Dual, NestedGivesSecondDerivative) {
  using Inner = Dual<double, 1>;
  using Outer = Dual<Inner, 1>;
  const Outer x(Inner(0.7, 0), 0);
  const Outer y = x * x * x;
  EXPECT_NEAR(y.v.v, 0.343, 1e-15);
  EXPECT_NEAR(y.d[0].v, 3 * 0.49, 1e-15);
  EXPECT_NEAR(y.d[0].d[0], 6 * 0.7, 1e-14);
}

TEST(Quadrature, WeightsAndNodes) {
  for (int count = 1; count <= 12; ++count) {
    const auto rule = gauss_legendre_unit(count);
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      EXPECT_GT(rule.nodes[i], 0.0);
      EXPECT_LT(rule.nodes[i], 1.0);
      EXPECT_GT(rule.weights[i], 0.0);
      sum += rule.weights[i];
    }
    EXPECT_NEAR(sum, 1.0, 1e-14);
  }
  EXPECT_THROW(gauss_legendre_unit(0), ConfigError);
}

TEST(Quadrature, ExactForPolynomialsUpToDegree) {
  for (int count = 1; count <= 10; ++count) {
    const auto rule = gauss_legendre_unit(count);
    for (int p = 0; p <= 2 * count - 1; ++p) {
      double s = 0.0;
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * std::pow(rule.nodes[i], p);
      EXPECT_NEAR(s, 1.0 / (p + 1), 1e-14) << count << " nodes, degree " << p;
    }
  }
}

TEST(Factorization, LinearMapIsRecoveredExactly) {
  const double A[2][3] = {{1.5, -2.0, 0.25}, {0.0, 3.0, -1.0}};
  auto g = [&](const std::array<Dual<double, 3>, 3>& z) {
    std::array<Dual<double, 3>, 2> out;
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 3; ++c) out[r] += z[c] * A[r][c];
    return out;
  };
  const auto fac = factorize_line_integral<3, 2, double>(g, std::array<double, 3>{0.3, -1.2, 2.0},
                                                         gauss_legendre_unit(8));
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(fac.gt[r][c], A[r][c], 1e-15);
  EXPECT_LT(fac.residual, 1e-14);
}

TEST(Factorization, SquareAtTwo) {
  auto g = [](const std::array<Dual<double, 1>, 1>& z) { return std::array<Dual<double, 1>, 1>{z[0] * z[0]}; };
  for (int nodes : {1, 2, 8}) {
    const auto fac = factorize_line_integral<1, 1, double>(g, std::array<double, 1>{2.0}, gauss_legendre_unit(nodes));
    EXPECT_NEAR(fac.gt[0][0], 2.0, 1e-14);
    EXPECT_NEAR(fac.gt[0][0] * 2.0, 4.0, 1e-14);
  }
}

// Mean-value form against a closed-form integral of the Jacobian.
TEST(Factorization, TranscendentalMatchesClosedForm) {
  // g(z) = sin(z1) z2; J(sigma z) = [cos(sigma z1) sigma z2, sin(sigma z1)].
  auto g = [](const std::array<Dual<double, 2>, 2>& z) { return std::array<Dual<double, 2>, 1>{sin(z[0]) * z[1]}; };
  const double a = 1.3;
  const double b = -0.7;
  const auto fac = factorize_line_integral<2, 1, double>(g, std::array<double, 2>{a, b}, gauss_legendre_unit(12));
  // int_0^1 sigma cos(sigma a) d sigma = (cos a + a sin a - 1) / a^2
  const double g1 = b * (std::cos(a) + a * std::sin(a) - 1.0) / (a * a);
  const double g2 = (1.0 - std::cos(a)) / a;
  EXPECT_NEAR(fac.gt[0][0], g1, 1e-13);
  EXPECT_NEAR(fac.gt[0][1], g2, 1e-13);
  EXPECT_LT(fac.residual, 1e-13);
}

TEST(Factorization, RejectsNonzeroOrigin) {
  auto g = [](const std::array<Dual<double, 1>, 1>& z) { return std::array<Dual<double, 1>, 1>{z[0] + 1.0}; };
  EXPECT_THROW((factorize_line_integral<1, 1, double>(g, std::array<double, 1>{0.5}, gauss_legendre_unit(4))),
               FactorizationError);
}
