#pragma once

#include <cmath>
#include <utility>

#include "dtrack/dual_number.hpp"
#include "dtrack/model_params.hpp"

namespace dtrack::detail {

using std::exp;
using std::log;

/// Scalars shared by the free-boundary equation and the coefficient algebra.
struct Scalars {
  double alpha, rho, beta, p, lambda;
  double a;       // rho / alpha
  double denom;   // rho (1 - p) - alpha p
  double e;       // (alpha p - (1 - p) rho) / alpha
  double ln_beta;
  double ln_lambda;  // -inf when lambda = 0

  explicit Scalars(const Model& m)
      : alpha(m.consts.alpha),
        rho(m.params.rho),
        beta(m.params.beta),
        p(m.params.p),
        lambda(m.params.lambda),
        a(m.consts.a),
        denom(m.consts.denom),
        e((alpha * p - (1.0 - p) * rho) / alpha),
        ln_beta(std::log(beta)),
        ln_lambda(lambda > 0.0 ? std::log(lambda) : -INFINITY) {}
};

/// Left side F_m(y) of the free-boundary equation.
template <class T>
T boundary_lhs(const Scalars& k, const T& y, const T& m) {
  const double ar = k.alpha + k.rho;
  const T y0 = exp(log(m) * (k.p - 1.0));
  const T ln_yb = log(y) - k.ln_beta;
  const T yb_a = exp(ln_yb * k.a);
  return k.beta * y0 / (ar * y) + k.beta / ar * ln_yb + k.rho / (ar * ar) * yb_a * y -
         y0 / ar * yb_a;
}

/// Right side G(m) of the free-boundary equation.
template <class T>
T boundary_rhs(const Scalars& k, const T& m) {
  const double ar = k.alpha + k.rho;
  const double p = k.p;
  const double lam = k.lambda;
  const T ln_m = log(m);
  const T base = -k.a * k.ln_beta - (1.0 + k.a) * (1.0 - p) * ln_m;
  const T power_term =
      k.alpha / (ar * ar) * (exp(base + k.e * k.ln_lambda) - exp(base));
  const T log_terms = k.beta * lam / ar * (k.ln_beta + (1.0 - p) * (k.ln_lambda + ln_m)) -
                      k.beta / ar * (k.ln_beta + (1.0 - p) * ln_m);
  const double constant = lam * k.beta / ar - k.alpha * k.beta / (ar * ar) +
                          (1.0 - p) * (1.0 - p) * k.beta * (lam - 1.0) / (p * ar) -
                          k.beta * (ar + p * k.alpha) * (lam - 1.0) / (p * ar * ar) +
                          k.beta * (1.0 - p) * (lam - 1.0) / ar;
  return power_term + log_terms + constant;
}

/// dF_m/dy, negative on (0, m^{p-1}).
inline double boundary_lhs_dy(const Scalars& k, double y, double m) {
  const double y0 = std::pow(m, k.p - 1.0);
  const double ar = k.alpha + k.rho;
  return k.beta * (y - y0) / (ar * y * y) *
         (1.0 + k.a * std::exp((k.a + 1.0) * (std::log(y) - k.ln_beta)));
}

/// Integrand h with C6(m) = int_m^inf h(l) dl, evaluated at l given y*(l).
inline double c6_integrand(const Scalars& k, double l, double y_star) {
  const double ar = k.alpha + k.rho;
  const double yb_a = std::exp(k.a * (std::log(y_star) - k.ln_beta));
  return k.alpha / (k.rho * ar) * std::pow(l, k.p - 1.0) * yb_a -
         k.alpha / (ar * ar) * yb_a * y_star;
}

/// h(l) (beta / y_ref)^a from log y*(l); bounded for y*(l) <= y_ref.
inline double c6_integrand_scaled(const Scalars& k, double l, double ln_y_star, double ln_y_ref) {
  const double ar = k.alpha + k.rho;
  const double y_star = std::exp(ln_y_star);
  return k.alpha / ar * (std::pow(l, k.p - 1.0) / k.rho - y_star / ar) *
         std::exp(k.a * (ln_y_star - ln_y_ref));
}

/// log of c6_tail_bound(m) (beta / y_ref)^a.
inline double c6_log_tail_bound_scaled(const Scalars& k, double m, double ln_y_ref) {
  return -k.a * ln_y_ref - k.denom / k.alpha * std::log(m) -
         std::log(k.rho * (k.alpha + k.rho) * k.denom);
}

/// Upper bound on C6(m) valid for every lambda.
inline double c6_tail_bound(const Scalars& k, double m) {
  return std::exp(-k.a * k.ln_beta - k.denom / k.alpha * std::log(m)) /
         (k.rho * (k.alpha + k.rho) * k.denom);
}

/// log of the analytic-branch C6 segment over [m, n], n > m (n = inf allowed).
inline double c6_log_analytic_segment(const Scalars& k, double m, double n) {
  const double ar = k.alpha + k.rho;
  const double ln_scale = std::log(k.alpha * k.alpha * k.alpha / (k.rho * ar * ar * k.denom));
  const double ln_lo = ln_scale - k.a * k.ln_beta + k.e * std::log(m);
  if (std::isinf(n)) return ln_lo;
  return ln_lo + std::log1p(-std::exp(k.e * (std::log(n) - std::log(m))));
}

/// log(exp(x) + exp(y)).
inline double log_add_exp(double x, double y) {
  if (x < y) std::swap(x, y);
  if (std::isinf(y) && y < 0.0) return x;
  return x + std::log1p(std::exp(y - x));
}

/// C6 on the analytic branch y*(l) = l^{p-1}: int_m^n h(l) dl in closed form
/// (n = inf allowed).
inline double c6_analytic_segment(const Scalars& k, double m, double n) {
  const double ar = k.alpha + k.rho;
  const double scale = k.alpha * k.alpha * k.alpha / (k.rho * ar * ar * k.denom);
  const double lo = std::exp(-k.a * k.ln_beta + k.e * std::log(m));
  const double hi = std::isinf(n) ? 0.0 : std::exp(-k.a * k.ln_beta + k.e * std::log(n));
  return scale * (lo - hi);
}

}  // namespace dtrack::detail
