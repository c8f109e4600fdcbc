#pragma once

// Gauss-Legendre rules on [0, 1] and the constructive mean-value
// factorization g(z) = G^T z of a map with g(0) = 0:
//
//   G^T = \int_0^1 J_g(sigma z) d sigma,
//
// with the Jacobian J_g obtained by sensitivity propagation.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "expctl/dual.hpp"
#include "expctl/errors.hpp"

namespace expctl {

struct GaussLegendre {
  std::vector<double> nodes;    // in (0, 1)
  std::vector<double> weights;  // sum to 1
};

// Newton iteration on P_count from the Chebyshev initial guesses.
inline GaussLegendre gauss_legendre_unit(int count) {
  if (count < 1) throw ConfigError("quadrature node count must be at least 1");
  GaussLegendre rule;
  rule.nodes.resize(count);
  rule.weights.resize(count);
  for (int i = 0; i < count; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (count + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= count; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      if (count == 1) p0 = 1.0;
      dp = count * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged root for the weight.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= count; ++k) {
      const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    if (count == 1) p0 = 1.0;
    dp = count * (x * p1 - p0) / (x * x - 1.0);
    rule.nodes[i] = 0.5 * (1.0 - x);
    rule.weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

/// Row r of `gt` holds the coefficients of output r: g_r = sum_c gt[r][c] z_c.
template <class T, int I, int M>
struct LineFactorization {
  std::array<std::array<T, I>, M> gt{};
  std::array<double, M> row_error{};  // |g_r(z) - (G^T z)_r| at the value level
  double residual = 0.0;              // Euclidean norm of row_error
};

// Integrates the Jacobian of `g` along the segment from 0 to z. `g` maps
// std::array<Dual<T, I>, I> to std::array<Dual<T, I>, M>; `g_at_z` is the
// already known value g(z), used for the residual.
template <int I, int M, class T, class G>
LineFactorization<T, I, M> integrate_jacobian(G&& g, const std::array<T, I>& z,
                                              const std::array<T, M>& g_at_z,
                                              const GaussLegendre& rule) {
  using Z = Dual<T, I>;
  LineFactorization<T, I, M> out;
  for (std::size_t node = 0; node < rule.nodes.size(); ++node) {
    const double sigma = rule.nodes[node];
    const double weight = rule.weights[node];
    std::array<Z, I> arg;
    for (int c = 0; c < I; ++c) arg[c] = Z(z[c] * sigma, c);
    const std::array<Z, M> gz = g(arg);
    for (int r = 0; r < M; ++r)
      for (int c = 0; c < I; ++c) out.gt[r][c] += gz[r].d[c] * weight;
  }
  double sq = 0.0;
  for (int r = 0; r < M; ++r) {
    T reconstructed{};
    for (int c = 0; c < I; ++c) reconstructed += out.gt[r][c] * z[c];
    const double e = std::abs(value_of(g_at_z[r]) - value_of(reconstructed));
    out.row_error[r] = e;
    sq += e * e;
  }
  out.residual = std::sqrt(sq);
  return out;
}

// Largest |g_r(0)|.
template <int I, int M, class T, class G>
double origin_offset(G&& g) {
  using Z = Dual<T, I>;
  std::array<Z, I> zero;
  for (int c = 0; c < I; ++c) zero[c] = Z(T(0.0), c);
  const std::array<Z, M> g0 = g(zero);
  double worst = 0.0;
  for (int r = 0; r < M; ++r) worst = std::max(worst, std::abs(value_of(g0[r].v)));
  return worst;
}

inline constexpr double kOriginTolerance = 1e-10;

// Checked entry point: rejects maps that do not vanish at the origin.
template <int I, int M, class T, class G>
LineFactorization<T, I, M> factorize_line_integral(G&& g, const std::array<T, I>& z,
                                                   const GaussLegendre& rule) {
  const double offset = origin_offset<I, M, T>(g);
  if (offset > kOriginTolerance)
    throw FactorizationError("factorization inapplicable: |g(0)| = " + std::to_string(offset));
  using Z = Dual<T, I>;
  std::array<Z, I> at_z;
  for (int c = 0; c < I; ++c) at_z[c] = Z(z[c]);
  const std::array<Z, M> gz = g(at_z);
  std::array<T, M> g_at_z;
  for (int r = 0; r < M; ++r) g_at_z[r] = gz[r].v;
  return integrate_jacobian<I, M>(g, z, g_at_z, rule);
}

}  // namespace expctl
