#include <gtest/gtest.h>

#include <cmath>
#include <array>
#include <numbers>

#include "expctl/expctl.hpp"

using namespace expctl;

TEST(Nussbaum, ClosedFormValues) {
  const auto spec = NussbaumSpec::sin_exp_square();
  EXPECT_EQ(evaluate(spec, 0.0), 0.0);
  EXPECT_NEAR(evaluate(spec, std::numbers::pi), 0.0, 1e-10 * std::exp(std::numbers::pi * std::numbers::pi));
  const double peak = std::exp(std::numbers::pi * std::numbers::pi / 4);
  EXPECT_NEAR(evaluate(spec, std::numbers::pi / 2), peak, 1e-14 * peak);
  EXPECT_NEAR(peak, 11.79176139, 1e-8);
  const auto cos_spec = NussbaumSpec::cos_exp_square();
  EXPECT_EQ(evaluate(cos_spec, 0.0), 1.0);
}

TEST(Nussbaum, GuardAndDomain) {
  const auto spec = NussbaumSpec::sin_exp_square(6.0);
  EXPECT_NO_THROW(evaluate(spec, 6.0));
  EXPECT_THROW(evaluate(spec, 6.0 + 1e-9), OverflowGuardError);
  EXPECT_THROW(evaluate(spec, -1e-12), DomainError);
  EXPECT_THROW(evaluate(spec, NAN), DomainError);
  try {
    evaluate(spec, 7.0);
  } catch (const OverflowGuardError& e) {
    EXPECT_EQ(e.xi(), 7.0);
  }
}

TEST(Nussbaum, NamedKinds) {
  EXPECT_EQ(nussbaum_from_name("cos-exp-square").kind, NussbaumKind::CosExpSquare);
  EXPECT_EQ(evaluate(nussbaum_from_name("identity"), 2.5), 2.5);
  EXPECT_EQ(evaluate(nussbaum_from_name("constant-one"), 2.5), 1.0);
  EXPECT_THROW(nussbaum_from_name("tanh"), ConfigError);
}

TEST(Nussbaum, PartsDecompose) {
  const auto spec = NussbaumSpec::sin_exp_square();
  for (const double xi : uniform_grid(6.0, 500)) {
    const double n = evaluate(spec, xi);
    EXPECT_EQ(positive_part(n) - negative_part(n), n);
    EXPECT_EQ(positive_part(n) * negative_part(n), 0.0);
    EXPECT_GE(positive_part(n), 0.0);
    EXPECT_GE(negative_part(n), 0.0);
  }
}

TEST(Nussbaum, SinExpSquarePassesOnWindow) {
  const auto rep = verify_enhanced(NussbaumSpec::sin_exp_square(), uniform_grid(6.0, 1000));
  EXPECT_TRUE(rep.passed()) << rep.to_text();
  for (const auto& c : rep.checks) {
    ASSERT_TRUE(c.first_exceeded.has_value()) << c.name;
    EXPECT_LT(*c.first_exceeded, 6.0);
  }
  EXPECT_NE(rep.to_text().find("finite-range evidence"), std::string::npos);
}

// Running suprema against cumulative integrals from a fine midpoint rule,
// sampled on the same window grid.
TEST(Nussbaum, SupremaAgreeWithFineMidpointRule) {
  const auto grid = uniform_grid(6.0, 1000);
  const auto rep = verify_enhanced(NussbaumSpec::sin_exp_square(), grid);
  constexpr int kSub = 1000;
  double pos = 0.0;
  double neg = 0.0;
  std::array<double, 4> sup{};
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double h = (grid[k] - grid[k - 1]) / kSub;
    for (int j = 0; j < kSub; ++j) {
      const double xi = grid[k - 1] + (j + 0.5) * h;
      const double n = std::sin(xi) * std::exp(xi * xi);
      (n > 0 ? pos : neg) += std::abs(n) * h;
    }
    sup[0] = std::max(sup[0], pos / grid[k]);
    sup[1] = std::max(sup[1], neg / grid[k]);
    if (neg > 0) sup[2] = std::max(sup[2], pos / neg);
    sup[3] = std::max(sup[3], neg / pos);
  }
  EXPECT_NEAR(rep.checks[0].supremum, sup[0], 1e-4 * sup[0]);
  EXPECT_NEAR(rep.checks[1].supremum, sup[1], 1e-4 * sup[1]);
  EXPECT_NEAR(rep.checks[3].supremum, sup[3], 1e-4 * sup[3]);
  // Just past pi the denominator is tiny, so only the order of magnitude is stable.
  EXPECT_GT(rep.checks[2].supremum, 10.0);
  EXPECT_GT(sup[2], 10.0);
  for (double v : sup) EXPECT_GT(v, 10.0);
}

TEST(Nussbaum, ConstantOneFails) {
  const auto rep = verify_enhanced(nussbaum_from_name("constant-one"), uniform_grid(6.0, 100));
  EXPECT_FALSE(rep.passed());
  EXPECT_FALSE(rep.checks[1].passed);
  EXPECT_EQ(rep.checks[1].supremum, 0.0);
  EXPECT_FALSE(rep.checks[2].evaluable);
}

TEST(Nussbaum, IdentityFails) {
  const auto rep = verify_enhanced(nussbaum_from_name("identity"), uniform_grid(6.0, 100));
  EXPECT_FALSE(rep.passed());
  EXPECT_EQ(rep.checks[1].supremum, 0.0);
  // (1/xi) int_0^xi s ds = xi / 2 peaks at 3 on [0, 6]
  EXPECT_NEAR(rep.checks[0].supremum, 3.0, 1e-9);
  EXPECT_FALSE(rep.checks[0].passed);
}

TEST(Nussbaum, CoarseGridRejected) {
  EXPECT_THROW(verify_enhanced(NussbaumSpec::sin_exp_square(), uniform_grid(6.0, 5)), ConfigError);
  EXPECT_THROW(verify_enhanced(NussbaumSpec::sin_exp_square(), {0.0}), ConfigError);
  EXPECT_THROW(verify_enhanced(NussbaumSpec::sin_exp_square(), {1.0, 0.5}), ConfigError);
}

TEST(Nussbaum, RefiningGridKeepsVerdict) {
  const auto spec = NussbaumSpec::sin_exp_square();
  const auto coarse = verify_enhanced(spec, uniform_grid(6.0, 20));
  for (int density : {50, 200, 1000}) {
    const auto fine = verify_enhanced(spec, uniform_grid(6.0, density));
    for (int c = 0; c < 4; ++c) EXPECT_EQ(coarse.checks[c].passed, fine.checks[c].passed);
    for (int c : {0, 1, 3})
      EXPECT_NEAR(coarse.checks[c].supremum, fine.checks[c].supremum, 1e-2 * fine.checks[c].supremum);
  }
}
