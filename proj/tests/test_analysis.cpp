#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "expctl/expctl.hpp"

using namespace expctl;

namespace {

std::vector<double> grid(double t1, double h) {
  std::vector<double> t;
  for (int k = 0; k * h <= t1 + 1e-12; ++k) t.push_back(k * h);
  return t;
}

template <class F>
std::vector<double> sample(const std::vector<double>& t, F f) {
  std::vector<double> out;
  for (double v : t) out.push_back(f(v));
  return out;
}

Trajectory synthetic_run(const std::string& label, double x0, double rate, double horizon = 10.0) {
  Trajectory traj;
  traj.n = 1;
  traj.label = label;
  for (double t : grid(horizon, 0.01)) {
    Sample s;
    s.t = t;
    s.x = {x0 * std::exp(-rate * t) * std::cos(2.0 * t)};
    s.u = -rate * s.x[0];
    traj.samples.push_back(s);
  }
  return traj;
}

}  // namespace

TEST(Envelope, UnitExponential) {
  const auto t = grid(10.0, 0.01);
  const auto fit = fit_envelope(t, sample(t, [](double v) { return std::exp(-0.6 * v); }), 0.6);
  EXPECT_TRUE(fit.valid);
  EXPECT_TRUE(fit.holds);
  EXPECT_NEAR(fit.N, 1.0, 1e-12);
}

TEST(Envelope, ScaledExponential) {
  const auto t = grid(10.0, 0.01);
  const auto fit = fit_envelope(t, sample(t, [](double v) { return 2.0 * std::exp(-0.6 * v); }), 0.6);
  EXPECT_NEAR(fit.N, 2.0, 1e-12);
}

TEST(Envelope, BoundIsTightAndHolds) {
  const auto t = grid(10.0, 0.01);
  const auto x = sample(t, [](double v) { return std::abs(std::sin(3 * v)) * std::exp(-0.3 * v) * (1 + v); });
  const auto fit = fit_envelope(t, x, 0.3);
  double best = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    EXPECT_LE(x[k], fit.N * std::exp(-0.3 * t[k]) * (1 + 1e-12));
    EXPECT_LE(fit.margin[k], 1.0 + 1e-12);
    best = std::max(best, fit.margin[k]);
  }
  EXPECT_DOUBLE_EQ(best, 1.0);
}

TEST(Envelope, ZeroLambdaGivesSupremum) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> d(0.0, 5.0);
  const auto t = grid(1.0, 0.01);
  std::vector<double> x;
  for (std::size_t k = 0; k < t.size(); ++k) x.push_back(d(rng));
  EXPECT_EQ(fit_envelope(t, x, 0.0).N, *std::max_element(x.begin(), x.end()));
}

TEST(Envelope, NonFiniteAndDivergedRuns) {
  const std::vector<double> t{0.0, 1.0, 2.0};
  const auto fit = fit_envelope(t, {1.0, INFINITY, 0.5}, 0.1);
  EXPECT_FALSE(fit.holds);
  EXPECT_TRUE(std::isinf(fit.N));
  Trajectory traj = synthetic_run("a", 1.0, 0.5);
  traj.status = RunStatus::Diverged;
  EXPECT_FALSE(fit_envelope(traj, 0.5).valid);
  EXPECT_THROW(fit_envelope(t, {1.0}, 0.1), ConfigError);
}

TEST(Monotone, Cases) {
  const auto t = grid(6.0, 0.01);
  const auto s = sample(t, [](double v) { return std::sin(v); });
  const auto m = check_monotone(s, 0.0);
  EXPECT_FALSE(m.monotone);
  ASSERT_GE(m.first_violation, 0);
  EXPECT_NEAR(t[m.first_violation], std::numbers::pi / 2, 0.01);
  EXPECT_TRUE(check_monotone(std::vector<double>(50, 3.0), 0.0).monotone);
  EXPECT_TRUE(check_monotone({0.0, 1.0, 0.9999, 2.0}, 1e-3).monotone);
  EXPECT_FALSE(check_monotone({0.0, 1.0, 0.9999, 2.0}, 0.0).monotone);
}

TEST(Limit, Cases) {
  const auto t = grid(20.0, 0.01);
  const auto c = detect_limit(t, std::vector<double>(t.size(), 4.5), 10.0);
  EXPECT_TRUE(c.converged);
  EXPECT_EQ(c.limit, 4.5);

  const auto e = detect_limit(t, sample(t, [](double v) { return std::exp(-v); }), 10.0, 1e-3);
  EXPECT_TRUE(e.converged);
  EXPECT_NEAR(e.limit, 0.0, 1e-8);
  EXPECT_LE(e.tail_deviation, std::exp(-10.0));

  const auto g = detect_limit(t, sample(t, [](double v) { return std::log1p(v); }), 10.0, 1e-3);
  EXPECT_FALSE(g.converged);
  EXPECT_NEAR(g.tail_range, std::log1p(20.0) - std::log1p(10.0), 1e-12);

  EXPECT_THROW(detect_limit(t, std::vector<double>(t.size(), 0.0), 25.0), ConfigError);
  EXPECT_DOUBLE_EQ(default_tail_start(t), 40.0 / 3.0);
}

TEST(Compare, IdenticalRunsGiveIdenticalRows) {
  auto a = synthetic_run("first", 1.0, 0.5);
  auto b = a;
  b.label = "second";
  const auto table = compare_runs({a, b});
  ASSERT_EQ(table.rows.size(), 2u);
  const auto& ra = table.row("first");
  const auto& rb = table.row("second");
  EXPECT_EQ(ra.settling_time, rb.settling_time);
  EXPECT_EQ(ra.peak_x1, rb.peak_x1);
  EXPECT_EQ(ra.max_u, rb.max_u);
  EXPECT_EQ(ra.envelope_N, rb.envelope_N);
  EXPECT_THROW(table.row("third"), ConfigError);
}

TEST(Compare, PermutationInvariant) {
  std::vector<Trajectory> runs{synthetic_run("c", 1.0, 0.2), synthetic_run("a", 1.0, 0.9),
                               synthetic_run("b", 1.0, 0.5)};
  const auto base = compare_runs(runs);
  std::sort(runs.begin(), runs.end(), [](const auto& x, const auto& y) { return x.label < y.label; });
  do {
    const auto other = compare_runs(runs);
    ASSERT_EQ(other.rows.size(), base.rows.size());
    for (std::size_t k = 0; k < base.rows.size(); ++k) {
      EXPECT_EQ(other.rows[k].label, base.rows[k].label);
      EXPECT_EQ(other.rows[k].settling_time, base.rows[k].settling_time);
      EXPECT_EQ(other.rows[k].envelope_N, base.rows[k].envelope_N);
    }
  } while (std::next_permutation(runs.begin(), runs.end(),
                                 [](const auto& x, const auto& y) { return x.label < y.label; }));
}

TEST(Compare, FasterDecaySettlesEarlier) {
  const auto table = compare_runs({synthetic_run("slow", 1.0, 0.3), synthetic_run("fast", 1.0, 0.9)});
  EXPECT_LT(table.row("fast").settling_time, table.row("slow").settling_time);
  EXPECT_EQ(table.row("fast").peak_x1, 1.0);
}

TEST(Compare, MismatchedRunsRejected) {
  EXPECT_THROW(compare_runs({synthetic_run("a", 1.0, 0.5), synthetic_run("b", 2.0, 0.5)}), ConfigError);
  EXPECT_THROW(compare_runs({synthetic_run("a", 1.0, 0.5), synthetic_run("b", 1.0, 0.5, 5.0)}), ConfigError);
}

TEST(Settling, FirstTimeInsideForever) {
  Trajectory traj;
  traj.n = 1;
  const double xs[] = {1.0, 0.2, 0.01, 0.07, 0.04, 0.01, 0.0};
  for (int k = 0; k < 7; ++k) {
    Sample s;
    s.t = k;
    s.x = {xs[k]};
    traj.samples.push_back(s);
  }
  EXPECT_EQ(settling_time(traj, 0.05), 4.0);
  traj.samples.back().x[0] = 0.5;
  EXPECT_TRUE(std::isinf(settling_time(traj, 0.05)));
}

TEST(Descent, Cases) {
  EXPECT_TRUE(check_descent({3.0, 2.0, 2.0, 1.0}).descending);
  const auto d = check_descent({3.0, 2.0, 2.5, 1.0});
  EXPECT_FALSE(d.descending);
  EXPECT_EQ(d.first_violation, 1);
  EXPECT_EQ(d.violations, 1u);
  EXPECT_TRUE(check_descent({1.0, 1.0 + 1e-7}).descending);
}

TEST(Lyapunov, RequiresKnownDirectionRun) {
  Trajectory traj = synthetic_run("a", 1.0, 0.5);
  traj.adaptive_name = "xi";
  EXPECT_THROW(lyapunov_known_direction(traj, Eigen::MatrixXd::Identity(0, 0), 1.0, {}, -2.0), ConfigError);
}
