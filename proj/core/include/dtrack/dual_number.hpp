#pragma once

#include <cmath>

namespace dtrack {

/// Forward-mode first derivative: value plus derivative with respect to one
/// scalar input. Used to carry d/dm through the coefficient algebra.
struct Dual {
  double v = 0.0;
  double d = 0.0;

  constexpr Dual() = default;
  constexpr Dual(double value) : v(value) {}  // NOLINT: implicit by intent
  constexpr Dual(double value, double deriv) : v(value), d(deriv) {}

  static constexpr Dual variable(double value) { return {value, 1.0}; }

  Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
  Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
  Dual& operator*=(const Dual& o) { d = d * o.v + v * o.d; v *= o.v; return *this; }
  Dual& operator/=(const Dual& o) {
    d = (d * o.v - v * o.d) / (o.v * o.v);
    v /= o.v;
    return *this;
  }
};

inline Dual operator+(Dual a, const Dual& b) { return a += b; }
inline Dual operator-(Dual a, const Dual& b) { return a -= b; }
inline Dual operator*(Dual a, const Dual& b) { return a *= b; }
inline Dual operator/(Dual a, const Dual& b) { return a /= b; }
inline Dual operator-(const Dual& a) { return {-a.v, -a.d}; }

inline Dual pow(const Dual& a, double e) {
  const double pv = std::pow(a.v, e);
  return {pv, e * std::pow(a.v, e - 1.0) * a.d};
}
inline Dual log(const Dual& a) { return {std::log(a.v), a.d / a.v}; }
inline Dual exp(const Dual& a) {
  const double ev = std::exp(a.v);
  return {ev, ev * a.d};
}

inline double value_of(double x) { return x; }
inline double value_of(const Dual& x) { return x.v; }
inline double deriv_of(double) { return 0.0; }
inline double deriv_of(const Dual& x) { return x.d; }

}  // namespace dtrack
