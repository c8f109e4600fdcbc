#pragma once

// Adaptive backstepping with exponential state scaling for strict-feedback
// plants with time-varying parameters.
//
// Coordinates z_1 = x_1, z_i = x_i - alpha_{i-1}, scaled states s_i = mu z_i
// with mu = e^{lambda t}, regressor vectors w_i, tuning functions tau_i and
// damping gains zeta_i / kappa built from the line-integral factorizations
// w_i = W_i^T z_i and psi = psi_bar^T z_n.
//
// The recursion is unrolled at compile time. Evaluating alpha_M together with
// its partials w.r.t. (x_1..x_M, theta_hat, mu) lifts the arguments into
// Dual<T, M + q + 1>; lower layers are evaluated on that lifted type, so every
// partial consumed by a higher layer is itself differentiated exactly.

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "expctl/dual.hpp"
#include "expctl/errors.hpp"
#include "expctl/model.hpp"
#include "expctl/nussbaum.hpp"
#include "expctl/quadrature.hpp"

namespace expctl {

template <int N, int Q>
struct GainConfig {
  std::array<double, N> k{};
  double lambda = 0.0;
  double delta_theta = 0.0;
  double epsilon_psi = 1.0;
  Eigen::Matrix<double, Q, Q> gamma = Eigen::Matrix<double, Q, Q>::Identity();
  double gamma_rho = 1.0;
  int sign_b = 1;  // known-direction law only
  NussbaumSpec nussbaum = NussbaumSpec::sin_exp_square();
  int quadrature_nodes = 8;
  // Per-layer override of quadrature_nodes; 0 keeps the default.
  std::array<int, N> layer_nodes{};
  double residual_tolerance = 1e-8;
};

template <int N, int Q>
void validate_gains(const GainConfig<N, Q>& g) {
  for (int i = 0; i < N; ++i)
    if (!(g.k[i] > 0.0) || !std::isfinite(g.k[i]))
      throw ConfigError("gain k_" + std::to_string(i + 1) + " must be positive");
  if (!(g.lambda >= 0.0) || !std::isfinite(g.lambda)) throw ConfigError("lambda must be >= 0");
  if (!(g.delta_theta >= 0.0) || !std::isfinite(g.delta_theta))
    throw ConfigError("delta_theta must be >= 0");
  if (!(g.epsilon_psi > 0.0) || !std::isfinite(g.epsilon_psi))
    throw ConfigError("epsilon_psi must be positive");
  if (!(g.gamma_rho > 0.0) || !std::isfinite(g.gamma_rho)) throw ConfigError("gamma_rho must be positive");
  if (g.sign_b != 1 && g.sign_b != -1) throw ConfigError("sign_b must be +1 or -1");
  if (g.quadrature_nodes < 1) throw ConfigError("quadrature_nodes must be >= 1");
  for (int n : g.layer_nodes)
    if (n < 0) throw ConfigError("layer quadrature node counts must be >= 0");
  if (!(g.residual_tolerance > 0.0)) throw ConfigError("residual tolerance must be positive");
  if (!g.gamma.allFinite()) throw ConfigError("Gamma has non-finite entries");
  const double asym = (g.gamma - g.gamma.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * (1.0 + g.gamma.cwiseAbs().maxCoeff())) throw ConfigError("Gamma must be symmetric");
  Eigen::LLT<Eigen::Matrix<double, Q, Q>> llt(g.gamma);
  if (llt.info() != Eigen::Success) throw ConfigError("Gamma must be positive definite");
}

// theta_hat(0) >= 0 elementwise; rho_hat(0) must carry the sign of b.
template <int Q>
void check_initial_estimates(const std::array<double, Q>& theta_hat0, double rho_hat0, int sign_b,
                             bool known_direction) {
  for (int r = 0; r < Q; ++r)
    if (!(theta_hat0[r] >= 0.0))
      throw ConfigError("theta_hat(0) must be elementwise non-negative");
  if (known_direction && !(rho_hat0 * sign_b > 0.0))
    throw ConfigError("rho_hat(0) must have the sign of b");
}

template <int Q>
struct AdaptiveState {
  std::array<double, Q> theta_hat{};
  double rho_hat = 0.0;
  double xi = 0.0;
};

template <RegressorType Regressor, bool Scaled = true>
class BacksteppingEngine {
 public:
  static constexpr int N = Regressor::kStates;
  static constexpr int Q = Regressor::kParams;
  static constexpr int kMuDirections = Scaled ? 1 : 0;

  template <class T>
  struct Layer {
    T z{};
    T s{};
    T alpha{};
    T zeta{};
    std::array<T, Q> phi{};
    std::array<T, Q> w{};
    std::array<T, Q> tau{};
    std::array<std::array<T, N>, Q> wt{};  // W_i^T, first i columns used
    std::array<T, N> dalpha_dx{};
    std::array<T, Q> dalpha_dtheta{};
    T dalpha_dmu{};
    double residual = 0.0;  // |w_i - W_i^T z_i|
  };

  template <class T, int M>
  struct Arguments {
    std::array<T, M> x{};
    std::array<T, Q> theta{};
    T mu{1.0};
  };

  struct Evaluation {
    std::array<Layer<double>, N> layers{};
    double psi = 0.0;
    std::array<double, N> psi_bar{};
    double psi_residual = 0.0;
    double kappa = 0.0;

    double max_residual() const {
      double worst = psi_residual;
      for (const auto& l : layers) worst = std::max(worst, l.residual);
      return worst;
    }
  };

  struct KnownDirectionOutput {
    double u = 0.0;
    double u_bar = 0.0;
    double rho_hat_dot = 0.0;
    double rho_hat_dot_alt = 0.0;  // gamma_rho sgn(b) kappa s_n^2
    std::array<double, Q> theta_hat_dot{};
    Evaluation eval;
  };

  struct UnknownDirectionOutput {
    double u = 0.0;
    double u_bar = 0.0;
    double xi_dot = 0.0;
    double xi_dot_alt = 0.0;  // kappa s_n^2
    double nussbaum = 0.0;
    std::array<double, Q> theta_hat_dot{};
    Evaluation eval;
  };

  BacksteppingEngine(Regressor regressor, GainConfig<N, Q> gains)
      : regressor_(std::move(regressor)), gains_(std::move(gains)) {
    validate_gains(gains_);
    if (!Scaled && gains_.lambda != 0.0) throw ConfigError("the unscaled path requires lambda = 0");
    for (int i = 0; i < N; ++i)
      rules_[i] = gauss_legendre_unit(gains_.layer_nodes[i] > 0 ? gains_.layer_nodes[i] : gains_.quadrature_nodes);
  }

  const GainConfig<N, Q>& gains() const { return gains_; }
  const Regressor& regressor() const { return regressor_; }

  // Layers 1..M with values and first partials of alpha_1..alpha_M.
  template <int M>
  std::array<Layer<double>, M> layers_at(const std::array<double, M>& x,
                                         const std::array<double, Q>& theta_hat, double mu) const {
    static_assert(M >= 1 && M < N, "alpha is defined for layers 1..n-1");
    Arguments<double, M> p{x, theta_hat, Scaled ? mu : 1.0};
    return chain<M>(p);
  }

  // alpha_M alone, on any floating type.
  template <int M, class T>
  T alpha_value(const std::array<T, M>& x, const std::array<T, Q>& theta_hat, T mu) const {
    static_assert(M >= 1 && M < N, "alpha is defined for layers 1..n-1");
    Arguments<T, M> p{x, theta_hat, Scaled ? mu : T(1.0)};
    return chain<M>(p)[M - 1].alpha;
  }

  Evaluation evaluate(const std::array<double, N>& x, const std::array<double, Q>& theta_hat,
                      double mu) const {
    Arguments<double, N> p{x, theta_hat, Scaled ? mu : 1.0};
    Evaluation e;
    auto& L = e.layers;
    if constexpr (N > 1) {
      const auto lower = chain<N - 1>(prefix<N - 1>(p));
      for (int j = 0; j < N - 1; ++j) L[j] = lower[j];
    }
    top_terms<N>(p, L);
    e.psi = psi_value(p, L);

    using Z = Dual<double, N>;
    auto g = [&](const std::array<Z, N>& zbar) {
      Arguments<Z, N> pz = frozen<Z>(p);
      auto LZ = reconstruct<N>(pz, zbar);
      top_terms<N>(pz, LZ);
      std::array<Z, Q + 1> out;
      for (int r = 0; r < Q; ++r) out[r] = LZ[N - 1].w[r];
      out[Q] = psi_value(pz, LZ);
      return out;
    };
    const double offset = origin_offset<N, Q + 1, double>(g);
    if (offset > kOriginTolerance)
      throw FactorizationError("factorization inapplicable: |g(0)| = " + std::to_string(offset));

    std::array<double, N> zbar;
    for (int j = 0; j < N; ++j) zbar[j] = L[j].z;
    std::array<double, Q + 1> at_z;
    for (int r = 0; r < Q; ++r) at_z[r] = L[N - 1].w[r];
    at_z[Q] = e.psi;
    const auto fac = integrate_jacobian<N, Q + 1, double>(g, zbar, at_z, rules_[N - 1]);

    auto& top = L[N - 1];
    double sq = 0.0;
    for (int r = 0; r < Q; ++r) {
      for (int c = 0; c < N; ++c) top.wt[r][c] = fac.gt[r][c];
      sq += fac.row_error[r] * fac.row_error[r];
    }
    top.residual = std::sqrt(sq);
    for (int c = 0; c < N; ++c) e.psi_bar[c] = fac.gt[Q][c];
    e.psi_residual = fac.row_error[Q];
    top.zeta = zeta_of<N>(N, top.wt);
    e.kappa = kappa_of(top.wt, e.psi_bar);
    return e;
  }

  KnownDirectionOutput control_theorem1(const std::array<double, N>& x, const AdaptiveState<Q>& a,
                                        double mu) const {
    KnownDirectionOutput out;
    out.eval = evaluate(x, a.theta_hat, mu);
    const auto& top = out.eval.layers[N - 1];
    const double m = Scaled ? mu : 1.0;
    out.u_bar = -out.eval.kappa * top.z;
    out.u = a.rho_hat * out.u_bar;
    out.rho_hat_dot = -gains_.gamma_rho * gains_.sign_b * m * top.s * out.u_bar;
    out.rho_hat_dot_alt = gains_.gamma_rho * gains_.sign_b * out.eval.kappa * top.s * top.s;
    out.theta_hat_dot = gamma_times(top.tau);
    return out;
  }

  UnknownDirectionOutput control_theorem2(const std::array<double, N>& x, const AdaptiveState<Q>& a,
                                          double mu) const {
    UnknownDirectionOutput out;
    out.eval = evaluate(x, a.theta_hat, mu);
    const auto& top = out.eval.layers[N - 1];
    const double m = Scaled ? mu : 1.0;
    out.u_bar = out.eval.kappa * top.z;
    out.nussbaum = expctl::evaluate(gains_.nussbaum, a.xi);
    out.u = out.nussbaum * out.u_bar;
    out.xi_dot = m * top.s * out.u_bar;
    out.xi_dot_alt = out.eval.kappa * top.s * top.s;
    out.theta_hat_dot = gamma_times(top.tau);
    return out;
  }

  // zeta_i = lambda + (1/2)((n + 1 - i) delta + 1/eps + delta |W_i|_F^2)
  template <int I, class T>
  T zeta_of(int i, const std::array<std::array<T, N>, Q>& wt) const {
    T fro{};
    for (int r = 0; r < Q; ++r)
      for (int c = 0; c < I; ++c) fro += wt[r][c] * wt[r][c];
    return gains_.lambda + 0.5 * ((N + 1 - i) * gains_.delta_theta + 1.0 / gains_.epsilon_psi) +
           0.5 * gains_.delta_theta * fro;
  }

  // kappa = k_n + lambda + (1/2)(delta (|W_n|_F^2 + 1) + 1/eps + eps |psi_bar|^2)
  double kappa_of(const std::array<std::array<double, N>, Q>& wt_n,
                  const std::array<double, N>& psi_bar) const {
    double fro = 0.0;
    for (const auto& row : wt_n)
      for (double v : row) fro += v * v;
    double pb = 0.0;
    for (double v : psi_bar) pb += v * v;
    return gains_.k[N - 1] + gains_.lambda +
           0.5 * (gains_.delta_theta * (fro + 1.0) + 1.0 / gains_.epsilon_psi + gains_.epsilon_psi * pb);
  }

  template <class T>
  std::array<T, Q> gamma_times(const std::array<T, Q>& v) const {
    std::array<T, Q> out{};
    for (int r = 0; r < Q; ++r)
      for (int c = 0; c < Q; ++c) out[r] += gains_.gamma(r, c) * v[c];
    return out;
  }

 private:
  template <class T>
  static T dot(const std::array<T, Q>& a, const std::array<T, Q>& b) {
    T out{};
    for (int r = 0; r < Q; ++r) out += a[r] * b[r];
    return out;
  }

  template <int K, class T, int M>
  static Arguments<T, K> prefix(const Arguments<T, M>& p) {
    Arguments<T, K> out;
    for (int j = 0; j < K; ++j) out.x[j] = p.x[j];
    out.theta = p.theta;
    out.mu = p.mu;
    return out;
  }

  // theta_hat and mu enter the line integral as constants.
  template <class Z, class T, int M>
  static Arguments<Z, M> frozen(const Arguments<T, M>& p) {
    Arguments<Z, M> out;
    for (int r = 0; r < Q; ++r) out.theta[r] = Z(p.theta[r]);
    out.mu = Z(p.mu);
    return out;
  }

  // Layers 1..M on T with alpha partials taken by lifting into one more Dual level.
  template <int M, class T>
  std::array<Layer<T>, M> chain(const Arguments<T, M>& p) const {
    std::array<Layer<T>, M> out{};
    if constexpr (M > 0) {
      constexpr int V = M + Q + kMuDirections;
      using D = Dual<T, V>;
      Arguments<D, M> lifted;
      for (int c = 0; c < M; ++c) lifted.x[c] = D(p.x[c], c);
      for (int r = 0; r < Q; ++r) lifted.theta[r] = D(p.theta[r], M + r);
      if constexpr (Scaled)
        lifted.mu = D(p.mu, M + Q);
      else
        lifted.mu = D(p.mu);
      const auto deep = layers<M>(lifted);
      for (int j = 0; j < M; ++j) {
        const auto& src = deep[j];
        auto& dst = out[j];
        dst.z = src.z.v;
        dst.s = src.s.v;
        dst.alpha = src.alpha.v;
        dst.zeta = src.zeta.v;
        for (int r = 0; r < Q; ++r) {
          dst.phi[r] = src.phi[r].v;
          dst.w[r] = src.w[r].v;
          dst.tau[r] = src.tau[r].v;
          for (int c = 0; c < N; ++c) dst.wt[r][c] = src.wt[r][c].v;
          dst.dalpha_dtheta[r] = src.alpha.d[M + r];
        }
        for (int c = 0; c < M; ++c) dst.dalpha_dx[c] = src.alpha.d[c];
        if constexpr (Scaled) dst.dalpha_dmu = src.alpha.d[M + Q];
        dst.residual = src.residual;
      }
    }
    return out;
  }

  // Layers 1..M on T; the partials of layer M are left empty.
  template <int M, class T>
  std::array<Layer<T>, M> layers(const Arguments<T, M>& p) const {
    std::array<Layer<T>, M> L{};
    if constexpr (M > 1) {
      const auto lower = chain<M - 1>(prefix<M - 1>(p));
      for (int j = 0; j < M - 1; ++j) L[j] = lower[j];
    }
    top_terms<M>(p, L);
    auto& top = L[M - 1];

    using Z = Dual<T, M>;
    auto g = [&](const std::array<Z, M>& zbar) {
      Arguments<Z, M> pz = frozen<Z>(p);
      auto LZ = reconstruct<M>(pz, zbar);
      top_terms<M>(pz, LZ);
      return LZ[M - 1].w;
    };
    std::array<T, M> zbar;
    for (int j = 0; j < M; ++j) zbar[j] = L[j].z;
    const auto fac = integrate_jacobian<M, Q, T>(g, zbar, top.w, rules_[M - 1]);
    for (int r = 0; r < Q; ++r)
      for (int c = 0; c < M; ++c) top.wt[r][c] = fac.gt[r][c];
    top.residual = fac.residual;
    top.zeta = zeta_of<M>(M, top.wt);
    top.alpha = alpha_law<M>(p, L);
    return L;
  }

  // z_M, s_M, phi_M, w_M, tau_M from the lower layers.
  template <int M, class T, std::size_t S>
  void top_terms(const Arguments<T, M>& p, std::array<Layer<T>, S>& L) const {
    auto& top = L[M - 1];
    if constexpr (M == 1)
      top.z = p.x[0];
    else
      top.z = p.x[M - 1] - L[M - 2].alpha;
    if constexpr (Scaled)
      top.s = p.mu * top.z;
    else
      top.s = top.z;
    top.phi = regressor_.template phi<T>(M, std::span<const T>(p.x.data(), M));
    top.w = top.phi;
    if constexpr (M > 1) {
      const auto& prev = L[M - 2];
      for (int j = 0; j < M - 1; ++j)
        for (int r = 0; r < Q; ++r) top.w[r] -= prev.dalpha_dx[j] * L[j].phi[r];
    }
    for (int r = 0; r < Q; ++r) {
      T increment = top.w[r] * top.s;
      if constexpr (Scaled) increment = p.mu * increment;
      if constexpr (M > 1)
        top.tau[r] = L[M - 2].tau[r] + increment;
      else
        top.tau[r] = increment;
    }
  }

  // Sets x_1..x_M from z_1..z_M and returns layers 1..M-1 at the reconstructed point.
  template <int M, class U>
  std::array<Layer<U>, M> reconstruct(Arguments<U, M>& pz, const std::array<U, M>& zbar) const {
    std::array<Layer<U>, M> L{};
    pz.x[0] = zbar[0];
    fill_states<2, M>(pz, zbar);
    if constexpr (M > 1) {
      const auto lower = chain<M - 1>(prefix<M - 1>(pz));
      for (int j = 0; j < M - 1; ++j) L[j] = lower[j];
      pz.x[M - 1] = zbar[M - 1] + lower[M - 2].alpha;
    }
    return L;
  }

  // x_K = z_K + alpha_{K-1}(x_1..x_{K-1}) for K = 2..M-1.
  template <int K, int M, class U>
  void fill_states(Arguments<U, M>& pz, const std::array<U, M>& zbar) const {
    if constexpr (K <= M - 1) {
      const auto lay = layers<K - 1>(prefix<K - 1>(pz));
      pz.x[K - 1] = zbar[K - 1] + lay[K - 2].alpha;
      fill_states<K + 1, M>(pz, zbar);
    }
  }

  template <int M, class T>
  T alpha_law(const Arguments<T, M>& p, const std::array<Layer<T>, M>& L) const {
    const auto& top = L[M - 1];
    T a = -(gains_.k[M - 1] + top.zeta) * top.z;
    for (int r = 0; r < Q; ++r) a -= top.w[r] * p.theta[r];
    if constexpr (M > 1) {
      const auto& prev = L[M - 2];
      a -= prev.z;
      a += dot(prev.dalpha_dtheta, gamma_times(top.tau));
      for (int j = 2; j <= M - 1; ++j) {
        std::array<T, Q> v;
        for (int r = 0; r < Q; ++r) {
          v[r] = L[j - 1].s * top.w[r];
          if constexpr (Scaled) v[r] = p.mu * v[r];
        }
        a += dot(L[j - 2].dalpha_dtheta, gamma_times(v));
      }
      for (int j = 1; j <= M - 1; ++j) a += prev.dalpha_dx[j - 1] * p.x[j];
      if constexpr (Scaled) a += prev.dalpha_dmu * gains_.lambda * p.mu;
    }
    return a;
  }

  template <class T>
  T psi_value(const Arguments<T, N>& p, const std::array<Layer<T>, N>& L) const {
    const auto& top = L[N - 1];
    T psi{};
    for (int r = 0; r < Q; ++r) psi += top.w[r] * p.theta[r];
    if constexpr (N > 1) {
      const auto& prev = L[N - 2];
      psi += prev.z;
      for (int i = 1; i <= N - 1; ++i) psi -= prev.dalpha_dx[i - 1] * p.x[i];
      psi -= dot(prev.dalpha_dtheta, gamma_times(top.tau));
      if constexpr (Scaled) psi -= prev.dalpha_dmu * gains_.lambda * p.mu;
      for (int i = 2; i <= N - 1; ++i) {
        std::array<T, Q> v;
        for (int r = 0; r < Q; ++r) {
          v[r] = L[i - 1].s * top.w[r];
          if constexpr (Scaled) v[r] = p.mu * v[r];
        }
        psi -= dot(L[i - 2].dalpha_dtheta, gamma_times(v));
      }
    }
    return psi;
  }

  Regressor regressor_;
  GainConfig<N, Q> gains_;
  std::array<GaussLegendre, N> rules_;
};

}  // namespace expctl
