#pragma once

// Forward-mode sensitivity propagation.
//
// Dual<T, N> carries a value together with its first derivatives along N
// seeded directions. T may itself be a Dual, which is how the backstepping
// engine obtains the higher mixed partials its recursion consumes: every
// nesting level adds one more order of exact differentiation.

#include <array>
#include <cmath>
#include <cstddef>
#include <type_traits>
#include <utility>

#include "expctl/errors.hpp"

namespace expctl {

template <class T, int N>
struct Dual;

inline double value_of(double x) { return x; }
inline double value_of(long double x) { return static_cast<double>(x); }

template <class T, int N>
double value_of(const Dual<T, N>& a);

template <class T, int N>
struct Dual {
  static_assert(N >= 0, "direction count must be non-negative");

  T v{};
  std::array<T, N> d{};

  Dual() = default;
  Dual(double c) : v(c) {}  // NOLINT(google-explicit-constructor)
  Dual(const T& c)          // NOLINT(google-explicit-constructor)
    requires(!std::is_same_v<T, double>)
      : v(c) {}
  Dual(const T& value, int direction) : v(value) { d[direction] = T(1.0); }

  Dual& operator+=(const Dual& o) {
    v += o.v;
    for (int k = 0; k < N; ++k) d[k] += o.d[k];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    for (int k = 0; k < N; ++k) d[k] -= o.d[k];
    return *this;
  }
  Dual& operator*=(const Dual& o) { return *this = *this * o; }
  Dual& operator*=(double c) {
    v *= c;
    for (auto& dk : d) dk *= c;
    return *this;
  }

  friend Dual operator-(const Dual& a) {
    Dual r;
    r.v = -a.v;
    for (int k = 0; k < N; ++k) r.d[k] = -a.d[k];
    return r;
  }

  friend Dual operator+(const Dual& a, const Dual& b) {
    Dual r = a;
    r += b;
    return r;
  }
  friend Dual operator-(const Dual& a, const Dual& b) {
    Dual r = a;
    r -= b;
    return r;
  }
  friend Dual operator*(const Dual& a, const Dual& b) {
    Dual r;
    r.v = a.v * b.v;
    for (int k = 0; k < N; ++k) r.d[k] = a.d[k] * b.v + a.v * b.d[k];
    return r;
  }
  friend Dual operator/(const Dual& a, const Dual& b) {
    if (value_of(b.v) == 0.0) throw DomainError("division by zero in sensitivity propagation");
    Dual r;
    r.v = a.v / b.v;
    const T inv = T(1.0) / b.v;
    for (int k = 0; k < N; ++k) r.d[k] = (a.d[k] - r.v * b.d[k]) * inv;
    return r;
  }

  friend Dual operator+(const Dual& a, double c) {
    Dual r = a;
    r.v += c;
    return r;
  }
  friend Dual operator+(double c, const Dual& a) { return a + c; }
  friend Dual operator-(const Dual& a, double c) { return a + (-c); }
  friend Dual operator-(double c, const Dual& a) { return (-a) + c; }
  friend Dual operator*(const Dual& a, double c) {
    Dual r = a;
    r *= c;
    return r;
  }
  friend Dual operator*(double c, const Dual& a) { return a * c; }
  friend Dual operator/(const Dual& a, double c) {
    if (c == 0.0) throw DomainError("division by zero in sensitivity propagation");
    return a * (1.0 / c);
  }
  friend Dual operator/(double c, const Dual& a) { return Dual(c) / a; }
};

template <class T, int N>
double value_of(const Dual<T, N>& a) {
  return value_of(a.v);
}

template <class T, int N>
Dual<T, N> sqrt(const Dual<T, N>& a) {
  using std::sqrt;
  Dual<T, N> r;
  r.v = sqrt(a.v);
  if (value_of(r.v) == 0.0) throw DomainError("sqrt derivative undefined at zero");
  const T scale = T(0.5) / r.v;
  for (int k = 0; k < N; ++k) r.d[k] = a.d[k] * scale;
  return r;
}

template <class T, int N>
Dual<T, N> exp(const Dual<T, N>& a) {
  using std::exp;
  Dual<T, N> r;
  r.v = exp(a.v);
  for (int k = 0; k < N; ++k) r.d[k] = a.d[k] * r.v;
  return r;
}

template <class T, int N>
Dual<T, N> sin(const Dual<T, N>& a) {
  using std::cos;
  using std::sin;
  Dual<T, N> r;
  r.v = sin(a.v);
  const T c = cos(a.v);
  for (int k = 0; k < N; ++k) r.d[k] = a.d[k] * c;
  return r;
}

template <class T, int N>
Dual<T, N> cos(const Dual<T, N>& a) {
  using std::cos;
  using std::sin;
  Dual<T, N> r;
  r.v = cos(a.v);
  const T ms = -sin(a.v);
  for (int k = 0; k < N; ++k) r.d[k] = a.d[k] * ms;
  return r;
}

template <class T>
T square(const T& a) {
  return a * a;
}

/// Seeds every entry of `point` as an independent direction.
template <int N, class T>
std::array<Dual<T, N>, N> seed(const std::array<T, N>& point) {
  std::array<Dual<T, N>, N> out;
  for (int k = 0; k < N; ++k) out[k] = Dual<T, N>(point[k], k);
  return out;
}

template <class T, int N>
struct ValueAndGradient {
  T value{};
  std::array<T, N> gradient{};
};

// Value and exact gradient of a scalar function. `f` is called with an
// std::array<Dual<T, N>, N> and must return a Dual<T, N>.
template <int N, class T, class F>
ValueAndGradient<T, N> propagate_sensitivities(F&& f, const std::array<T, N>& point) {
  const Dual<T, N> r = std::forward<F>(f)(seed<N>(point));
  return {r.v, r.d};
}

}  // namespace expctl
