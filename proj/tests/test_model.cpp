#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numbers>
#include <random>

#include "expctl/expctl.hpp"

using namespace expctl;

namespace {

struct OffsetRegressor {
  static constexpr int kStates = 1;
  static constexpr int kParams = 1;
  template <class T>
  std::array<T, 1> phi(int, std::span<const T> x) const {
    return {x[0] + T(1.0)};
  }
};

template <class R>
SystemModel<R> constant_model(std::array<double, R::kParams> theta, double b) {
  SystemModel<R> m;
  m.name = "constant";
  m.theta_signal = [theta](double, Side) { return theta; };
  m.b_signal = [b](double, Side) { return b; };
  return m;
}

}  // namespace

TEST(Model, WingRockRegressorValues) {
  const auto m = wing_rock_model();
  const double x1[] = {3.7};
  const auto phi1 = eval_regressor(m, 1, std::span<const double>(x1, 1));
  EXPECT_EQ(phi1[0], 0.0);
  EXPECT_EQ(phi1[1], 0.0);
  const double x2[] = {-1.0, 2.5};
  const auto phi2 = eval_regressor(m, 2, std::span<const double>(x2, 2));
  EXPECT_EQ(phi2[0], -1.0);
  EXPECT_EQ(phi2[1], 2.5);
}

TEST(Model, RegressorsVanishAtOrigin) {
  const auto wr = wing_rock_model();
  const auto syn = build_synthetic(7, ControllerVariant::Theorem1).model;
  const std::array<double, 3> zero{};
  for (int i = 1; i <= 2; ++i)
    for (double v : eval_regressor(wr, i, std::span<const double>(zero.data(), i))) EXPECT_EQ(v, 0.0);
  for (int i = 1; i <= 3; ++i)
    for (double v : eval_regressor(syn, i, std::span<const double>(zero.data(), i))) EXPECT_EQ(v, 0.0);
}

TEST(Model, RegressorRejectsBadArguments) {
  const auto m = wing_rock_model();
  const double x[] = {1.0, 2.0};
  EXPECT_THROW(eval_regressor(m, 0, std::span<const double>(x, 0)), DomainError);
  EXPECT_THROW(eval_regressor(m, 3, std::span<const double>(x, 2)), DomainError);
  EXPECT_THROW(eval_regressor(m, 2, std::span<const double>(x, 1)), DomainError);
  const double bad[] = {1.0, NAN};
  EXPECT_THROW(eval_regressor(m, 2, std::span<const double>(bad, 2)), DomainError);
}

TEST(Model, WingRockParametersAtPointOne) {
  const auto m = wing_rock_model();
  const auto p = eval_parameters(m, 0.1);
  EXPECT_NEAR(p.theta[0], -27.200034, 1e-9);
  EXPECT_NEAR(p.theta[1], 0.67485 * 1.02, 1e-12);
  EXPECT_NEAR(p.b, -1.800999, 1e-6);
  EXPECT_NEAR(p.b, -2.0 + 0.2 * std::cos(0.1), 1e-15);
}

TEST(Model, RightLimitAtBreakpoint) {
  const auto m = wing_rock_model();
  const double tb = std::numbers::pi / 3.0;  // sin(3t) turns negative
  EXPECT_NEAR(eval_parameters(m, tb, Side::Right).theta[0], -26.6667 * 0.98, 1e-12);
  EXPECT_NEAR(eval_parameters(m, tb, Side::Left).theta[0], -26.6667 * 1.02, 1e-12);
  EXPECT_NEAR(eval_parameters(m, 0.0).theta[0], -26.6667 * 1.02, 1e-12);
}

TEST(Model, NegativeTimeRejected) {
  EXPECT_THROW(eval_parameters(wing_rock_model(), -1e-3), DomainError);
}

TEST(Model, ConstantModelIsTimeInvariant) {
  const auto m = constant_model<WingRockRegressor>({1.5, -0.25}, 2.0);
  const auto a = eval_parameters(m, 0.3);
  const auto b = eval_parameters(m, 17.0);
  EXPECT_EQ(a.theta, b.theta);
  EXPECT_EQ(a.b, b.b);
}

TEST(Model, ParametersDeterministic) {
  const auto m = wing_rock_model();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dt(0.0, 50.0);
  for (int k = 0; k < 200; ++k) {
    const double t = dt(rng);
    const auto a = eval_parameters(m, t);
    const auto b = eval_parameters(m, t);
    EXPECT_EQ(std::memcmp(&a, &b, sizeof a), 0);
  }
}

TEST(Model, WingRockGainStaysNegative) {
  const auto m = wing_rock_model();
  for (long k = 0; k <= 100000; ++k) {
    const double t = k * 1e-3;
    ASSERT_LT(m.b_signal(t, Side::Right), 0.0) << "t = " << t;
    ASSERT_LT(m.b_signal(t, Side::Left), 0.0) << "t = " << t;
  }
}

TEST(Model, ValidateWingRockPasses) {
  const auto rep = validate_model(wing_rock_model(), ProbeGrid{0.0, 20.0, 0.01});
  EXPECT_TRUE(rep.passed());
  ASSERT_NE(rep.find("control coefficient sign constant"), nullptr);
  EXPECT_EQ(rep.find("control coefficient sign constant")->detail, "b < 0");
}

TEST(Model, ValidateFlagsSignChange) {
  auto m = wing_rock_model();
  m.b_signal = [](double t, Side) { return std::sin(t); };
  const auto rep = validate_model(m, ProbeGrid{0.0, 20.0, 0.01});
  EXPECT_FALSE(rep.passed());
  EXPECT_FALSE(rep.find("control coefficient sign constant")->passed);
  EXPECT_TRUE(rep.find("regressors vanish at origin")->passed);
  EXPECT_TRUE(rep.find("parameters bounded")->passed);
}

TEST(Model, ValidateFlagsOffsetRegressor) {
  const auto m = constant_model<OffsetRegressor>({1.0}, 1.0);
  const auto rep = validate_model(m, ProbeGrid{0.0, 20.0, 0.01});
  EXPECT_FALSE(rep.passed());
  EXPECT_FALSE(rep.find("regressors vanish at origin")->passed);
  EXPECT_TRUE(rep.find("control coefficient sign constant")->passed);
}

TEST(Model, ValidateDoesNotMutate) {
  const auto m = wing_rock_model();
  const auto before = eval_parameters(m, 2.0);
  (void)validate_model(m, ProbeGrid{0.0, 5.0, 0.1});
  const auto after = eval_parameters(m, 2.0);
  EXPECT_EQ(before.theta, after.theta);
  EXPECT_EQ(before.b, after.b);
}

TEST(Model, EmptyProbeGridRejected) {
  EXPECT_THROW(validate_model(wing_rock_model(), ProbeGrid{0.0, 1.0, 0.0}), ConfigError);
  EXPECT_THROW(validate_model(wing_rock_model(), ProbeGrid{2.0, 1.0, 0.1}), ConfigError);
}

TEST(Model, ParameterRadiusCoversSchedule) {
  const auto m = wing_rock_model();
  ParameterBounds<2> bounds;
  bounds.delta_theta = kWingRock.delta_theta;
  bounds.ell_theta_hint = std::array<double, 2>{kWingRock.theta1, kWingRock.theta2};
  const double dev = max_parameter_deviation(m, bounds, ProbeGrid{0.0, 20.0, 0.01});
  EXPECT_NEAR(dev, 0.02 * std::hypot(kWingRock.theta1, kWingRock.theta2), 1e-9);
  EXPECT_LE(dev, bounds.delta_theta);
}

// phi_i(x) = Phi_i(x) x with Phi_i from the line-integral factorization.
TEST(Model, RegressorFactorizationConsistent) {
  const SyntheticRegressor reg;
  const auto rule = gauss_legendre_unit(8);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dx(-10.0, 10.0);
  auto check = [&]<int I>() {
    for (int k = 0; k < 50; ++k) {
      std::array<double, I> x;
      for (auto& v : x) v = dx(rng);
      auto g = [&](const std::array<Dual<double, I>, I>& z) {
        return reg.phi<Dual<double, I>>(I, std::span<const Dual<double, I>>(z.data(), I));
      };
      const auto fac = factorize_line_integral<I, 2, double>(g, x, rule);
      const auto phi = reg.phi<double>(I, std::span<const double>(x.data(), I));
      for (int r = 0; r < 2; ++r) {
        double rebuilt = 0.0;
        for (int c = 0; c < I; ++c) rebuilt += fac.gt[r][c] * x[c];
        EXPECT_NEAR(rebuilt, phi[r], 1e-9 * (1.0 + std::abs(phi[r])));
      }
    }
  };
  check.template operator()<1>();
  check.template operator()<2>();
  check.template operator()<3>();
}
