#include "dtrack/dual_solution.hpp"

#include <algorithm>
#include <boost/math/interpolators/cubic_hermite.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <vector>

#include "boundary_math.hpp"
#include "dtrack/dual_number.hpp"
#include "dtrack/errors.hpp"

namespace dtrack {

namespace detail {

struct C6Table {
  double ds;
  double s_max;
  double log_c6_first;  // log C6 at the first node
  boost::math::interpolators::cardinal_cubic_hermite<std::vector<double>> log_c6;
};

namespace {

using Gauss8 = boost::math::quadrature::gauss<double, 8>;
using GK15 = boost::math::quadrature::gauss_kronrod<double, 15>;

constexpr double kDomainSlack = 1e-12;

/// Carries a rescaled B-type quantity b (beta/y0)^a so that its derivative is
/// that of b times the frozen factor (beta/y0)^a, not of the product.
inline double freeze_scale(double b, double, double) { return b; }
inline Dual freeze_scale(const Dual& b, const Dual& ln_y0, double a) {
  return {b.v, b.d + a * b.v * ln_y0.d};
}

template <class T>
struct Jump {
  T dA;
  T dB;  ///< scaled by (beta/y0)^a
};

/// Coefficient jump (upper minus lower piece) that keeps l and l_y continuous
/// at y0 when the particular parts differ by -r and -s there. Solved for
/// (dA, dB (beta/y0)^a), which keeps the system well scaled for large a.
template <class T>
Jump<T> smooth_fit_jump(const Scalars& k, const T& y0, const T& r, const T& s) {
  const T m11 = y0 / k.beta;
  const double m12 = 1.0;
  const double m21 = 1.0 / k.beta;
  const T m22 = -k.a / y0;
  const T det = m11 * m22 - m12 * m21;
  if (!(std::abs(value_of(det)) > 1e-300)) throw SingularSystem("smooth-fit system is singular");
  const T dA = (r * m22 - m12 * s) / det;
  const T dB_scaled = (m11 * s - m21 * r) / det;
  return {dA, freeze_scale(dB_scaled, log(y0), k.a)};
}

/// Jump between the constrained-consumption particular part (c = c0) above
/// and the interior particular part below, at y0 = c0^{p-1}; sign = +1 when
/// the constrained part is the upper piece.
template <class T>
Jump<T> kink_jump(const Scalars& k, const T& c0, double sign) {
  const double ar = k.alpha + k.rho;
  const double p = k.p;
  const double K = (1.0 - p) * (1.0 - p) * (1.0 - p) / (p * k.denom);
  const double q = p / (p - 1.0);
  const T ln_c0 = log(c0);
  const T y0 = exp((p - 1.0) * ln_c0);
  const T c0p = exp(p * ln_c0);
  const T ln_yb = (p - 1.0) * ln_c0 - k.ln_beta;
  // constrained: c0^p/(p rho) + c0/(a+r) y ln(y/beta); interior: K y^q
  const T pc = c0p / (p * k.rho) + c0p / ar * ln_yb;
  const T pc_y = c0 / ar * (ln_yb + 1.0);
  const T pi = K * c0p;
  const T pi_y = K * q * c0;
  const T r = -sign * (pc - pi);
  const T s = -sign * (pc_y - pi_y);
  return smooth_fit_jump(k, y0, r, s);
}

/// beta^{-a} * x^e computed in log space.
template <class T>
T scaled_power(const Scalars& k, const T& ln_x) {
  return exp(-k.a * k.ln_beta + k.e * ln_x);
}

template <class T>
struct CoefArray {
  T A[3];         // C1, C3, C5
  T B_scaled[3];  // C2, C4, C6 scaled to the lower end of their piece
};

/// Printed C1..C5 given C6. The m >= m_kink branch requires lambda > 0.
template <class T>
std::array<T, 5> printed(const Scalars& k, const T& m, const T& c6, bool above_kink) {
  const double ar = k.alpha + k.rho;
  const double p = k.p;
  const double D = k.denom;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const T ln_m = log(m);
  const T pm = scaled_power(k, ln_m);
  std::array<T, 5> out{T(nan), T(nan), T(nan), T(nan), T(nan)};
  out[3] = -k.alpha * k.alpha * k.alpha / (k.rho * ar * ar * D) * pm + c6;
  if (above_kink) {
    const T plm = scaled_power(k, ln_m + k.ln_lambda);
    const T lam_term = plm - pm;  // beta^{-a} (lambda^e - 1) m^e
    const T ln_b_lm = k.ln_beta + (1.0 - p) * (k.ln_lambda + ln_m);
    const T ln_b_m = k.ln_beta + (1.0 - p) * ln_m;
    out[0] = k.alpha * k.alpha / (ar * ar * D) * lam_term - k.lambda * k.beta * m / ar + k.a * c6;
    out[1] = k.alpha * k.alpha * k.alpha / (k.rho * ar * ar * D) * lam_term + c6;
    out[2] = k.alpha * k.alpha / (ar * ar * D) * lam_term + k.a * c6 +
             k.beta * m / ar *
                 ((ar - p * k.rho - (1.0 - p) * (1.0 - p) * ar) * k.lambda / (p * ar) -
                  k.lambda * ln_b_lm);
    out[4] = k.beta * m / ar *
                 (-1.0 +
                  (1.0 - k.lambda) * (((1.0 - p) * (1.0 - p) * ar - ar + p * k.rho) / (p * ar)) -
                  k.lambda * ln_b_lm + ln_b_m) +
             k.alpha * k.alpha / (ar * ar * D) * lam_term + k.a * c6;
  } else {
    const double b_pow = std::exp(p / (p - 1.0) * k.ln_beta);
    out[2] = -k.alpha * k.alpha / (ar * ar * D) * pm + (1.0 - p) * (1.0 - p) * b_pow / D + k.a * c6;
    out[4] = out[2] + k.beta * m / ar *
                          ((1.0 - p) * (1.0 - p) / p - (k.alpha * p + ar) / (p * ar) +
                           k.ln_beta + (1.0 - p) * ln_m);
  }
  return out;
}

/// Canonical coefficients: printed anchor (C5 above the kink, C3 below)
/// propagated through the smooth-fit jumps. c6_scaled is C6 (beta/y*)^a and
/// ln_y_low the lower ends of the three pieces.
template <class T>
CoefArray<T> canonical(const Scalars& k, const T& m, const T& c6_scaled, const double (&ln_y_low)[3],
                       bool above_kink) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const T c6 = c6_scaled * std::exp(-k.a * (k.ln_beta - ln_y_low[2]));
  const auto anchor = printed(k, m, c6, above_kink);
  const Jump<T> j23 = kink_jump(k, m, -1.0);
  CoefArray<T> c;
  c.B_scaled[2] = c6_scaled;
  c.B_scaled[1] = c6_scaled * std::exp(k.a * (ln_y_low[2] - ln_y_low[1])) + j23.dB;
  if (above_kink) {
    c.A[2] = anchor[4];
    c.A[1] = c.A[2] + j23.dA;
  } else {
    c.A[1] = anchor[2];
    c.A[2] = c.A[1] - j23.dA;
  }
  if (k.lambda == 1.0) {
    // Both kinks coincide and the jumps cancel; the top piece is the bottom one.
    c.A[0] = c.A[2];
    c.B_scaled[0] = c6_scaled * std::exp(k.a * (ln_y_low[2] - ln_y_low[0]));
  } else if (k.lambda > 0.0) {
    const Jump<T> j12 = kink_jump(k, T(k.lambda) * m, 1.0);
    c.A[0] = c.A[1] + j12.dA;
    c.B_scaled[0] = c.B_scaled[1] * std::exp(k.a * (ln_y_low[1] - ln_y_low[0])) + j12.dB;
  } else {
    c.A[0] = T(nan);
    c.B_scaled[0] = T(nan);
  }
  return c;
}

}  // namespace
}  // namespace detail

DualSolution::DualSolution(const Model& model) : boundary_(model) {
  const detail::Scalars k(model);
  const auto& c = model.consts;
  if (!boundary_.has_table()) {
    if (model.params.lambda > 0.0) log_c6_kink_ = log_coefficient_C6_exact(c.m_kink);
    return;
  }

  const double ds = boundary_.table_ds();
  const std::vector<double> nodes = boundary_.table_nodes();
  const std::size_t n = nodes.size();
  // Integrand in s, scaled by (beta / y_ref)^a.
  auto integrand_s = [&](double s, double ln_y_ref) {
    const double m = c.m_kink * std::exp(s * s);
    return detail::c6_integrand_scaled(k, m, std::log(boundary_.y_star(m)), ln_y_ref) * 2.0 * s * m;
  };

  std::vector<double> log_c6(n), ln_y(n);
  for (std::size_t i = 0; i < n; ++i) ln_y[i] = std::log(boundary_.y_star(nodes[i]));
  log_c6[n - 1] = log_coefficient_C6_exact(nodes[n - 1]);
  for (std::size_t i = n - 1; i-- > 0;) {
    const double s0 = ds * static_cast<double>(i + 1);
    const double part = detail::Gauss8::integrate([&](double s) { return integrand_s(s, ln_y[i]); }, s0, s0 + ds);
    log_c6[i] = detail::log_add_exp(log_c6[i + 1], std::log(part) - k.a * (k.ln_beta - ln_y[i]));
  }
  std::vector<double> slope(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = ds * static_cast<double>(i + 1);
    // d log C6 / ds = -h 2 s m / C6
    slope[i] = -integrand_s(s, ln_y[i]) * std::exp(-k.a * (k.ln_beta - ln_y[i]) - log_c6[i]);
  }
  const double ln_y_kink = (k.p - 1.0) * std::log(c.m_kink);
  const double first = detail::Gauss8::integrate([&](double s) { return integrand_s(s, ln_y_kink); }, 0.0, ds);
  log_c6_kink_ = detail::log_add_exp(log_c6[0], std::log(first) - k.a * (k.ln_beta - ln_y_kink));
  const double log_first = log_c6[0];
  table_.reset(new detail::C6Table{
      ds, ds * static_cast<double>(n), log_first,
      boost::math::interpolators::cardinal_cubic_hermite<std::vector<double>>(
          std::move(log_c6), std::move(slope), ds, ds)});
  table_->s_max = table_->log_c6.domain().second;
}

DualSolution::~DualSolution() = default;
DualSolution::DualSolution(DualSolution&&) noexcept = default;
DualSolution& DualSolution::operator=(DualSolution&&) noexcept = default;

double DualSolution::c6_integrand(double m) const {
  const detail::Scalars k(model());
  return detail::c6_integrand(k, m, boundary_.y_star(m));
}

double DualSolution::c6_integrand_printed(double m) const {
  const detail::Scalars k(model());
  const double y = boundary_.y_star(m);
  const double ar = k.alpha + k.rho;
  return k.alpha / (k.rho * ar) * std::pow(m, k.p - 1.0) * std::exp(k.a * (std::log(y) - k.ln_beta)) -
         k.alpha * k.beta / (ar * ar) * std::exp((1.0 + k.a) * (k.ln_beta - std::log(y)));
}

double DualSolution::c6_tail_bound(double m) const {
  return detail::c6_tail_bound(detail::Scalars(model()), m);
}

double DualSolution::coefficient_C6_exact(double m) const { return std::exp(log_coefficient_C6_exact(m)); }

double DualSolution::log_coefficient_C6_exact(double m) const {
  const detail::Scalars k(model());
  const auto& c = model().consts;
  if (!(m >= c.m_floor * (1.0 - 1e-14))) throw DomainError("C6 requires m >= m_floor");
  if (model().params.lambda <= 0.0) return detail::c6_log_analytic_segment(k, m, INFINITY);
  if (m < c.m_kink) {
    return detail::log_add_exp(log_coefficient_C6_exact(c.m_kink), detail::c6_log_analytic_segment(k, m, c.m_kink));
  }

  // Integrate h (beta / y*(m))^a, which stays bounded however large a is.
  const double ln_y_ref = std::log(boundary_.y_star_exact(m));
  auto integrand_s = [&](double s) {
    const double l = c.m_kink * std::exp(s * s);
    return detail::c6_integrand_scaled(k, l, std::log(boundary_.y_star_exact(l)), ln_y_ref) * 2.0 * s * l;
  };
  double s = std::sqrt(std::max(0.0, std::log(m / c.m_kink)));
  // Absolute error floor relative to an upper bound on the whole integral.
  const double floor = 1e-12 * std::exp(detail::c6_log_tail_bound_scaled(k, m, ln_y_ref));
  double sum = 0.0;
  for (int chunk = 0;; ++chunk) {
    if (chunk > 400) throw ConvergenceError("C6 quadrature did not reach a negligible tail");
    const double width = 0.25 + 0.05 * chunk;
    double err = 0.0;
    const double part = detail::GK15::integrate(integrand_s, s, s + width, 12, 1e-14, &err);
    if (err > 1e-8 * std::abs(part) + 1e-14 * sum + floor) {
      throw ConvergenceError("C6 quadrature error estimate too large");
    }
    sum += part;
    s += width;
    const double bound = std::exp(detail::c6_log_tail_bound_scaled(k, c.m_kink * std::exp(s * s), ln_y_ref));
    if (bound <= 1e-14 * sum || bound == 0.0) {
      sum += bound;
      break;
    }
  }
  return std::log(sum) - k.a * (k.ln_beta - ln_y_ref);
}

double DualSolution::coefficient_C6(double m) const { return std::exp(log_coefficient_C6(m)); }

double DualSolution::log_coefficient_C6(double m) const {
  const detail::Scalars k(model());
  const auto& c = model().consts;
  if (!(m >= c.m_floor * (1.0 - 1e-14))) throw DomainError("C6 requires m >= m_floor");
  if (model().params.lambda <= 0.0) return detail::c6_log_analytic_segment(k, m, INFINITY);
  if (m < c.m_kink) return detail::log_add_exp(log_c6_kink_, detail::c6_log_analytic_segment(k, m, c.m_kink));
  if (!table_) return log_coefficient_C6_exact(m);
  const double s = std::sqrt(std::log(m / c.m_kink));
  if (s > table_->s_max) return log_coefficient_C6_exact(m);
  if (s < table_->ds) {
    const double ln_y_ref = std::log(boundary_.y_star(m));
    auto integrand_s = [&](double t) {
      const double l = c.m_kink * std::exp(t * t);
      return detail::c6_integrand_scaled(k, l, std::log(boundary_.y_star(l)), ln_y_ref) * 2.0 * t * l;
    };
    const double part = detail::Gauss8::integrate(integrand_s, s, table_->ds);
    return detail::log_add_exp(table_->log_c6_first, std::log(part) - k.a * (k.ln_beta - ln_y_ref));
  }
  return table_->log_c6(s);
}

std::array<double, 5> DualSolution::printed_coefficients(double m, double c6) const {
  const detail::Scalars k(model());
  return detail::printed(k, m, c6, m >= model().consts.m_kink);
}

Coefficients DualSolution::coefficients(double m) const {
  const auto& c = model().consts;
  const auto& prm = model().params;
  if (!(m >= c.m_floor * (1.0 - 1e-14))) throw DomainError("coefficients require m >= m_floor");
  m = std::max(m, c.m_floor);
  const detail::Scalars k(model());
  const bool above = m >= c.m_kink;

  Coefficients out;
  out.m = m;
  out.y_star = boundary_.y_star(m);
  const double ln_ys = std::log(out.y_star);
  const double ln_m = std::log(m);
  const double ln_y_low[3] = {(prm.p - 1.0) * (k.ln_lambda + ln_m), (prm.p - 1.0) * ln_m, ln_ys};
  out.log_C6 = log_coefficient_C6(m);
  const double c6_scaled = std::exp(out.log_C6 + c.a * (k.ln_beta - ln_ys));
  // h (beta / y*)^a at l = m
  const double h_scaled = detail::c6_integrand_scaled(k, m, ln_ys, ln_ys);
  const auto coef = detail::canonical(k, Dual(m, 1.0), Dual(c6_scaled, -h_scaled), ln_y_low, above);
  for (int j = 0; j < 3; ++j) {
    const double unscale = std::exp(-c.a * (k.ln_beta - ln_y_low[j]));
    out.ln_y_low[j] = ln_y_low[j];
    out.C[2 * j] = coef.A[j].v;
    out.dC[2 * j] = coef.A[j].d;
    out.B_scaled[j] = coef.B_scaled[j].v;
    out.dB_scaled[j] = coef.B_scaled[j].d;
    out.C[2 * j + 1] = coef.B_scaled[j].v * unscale;
    out.dC[2 * j + 1] = coef.B_scaled[j].d * unscale;
    out.provenance[2 * j] = out.provenance[2 * j + 1] = Provenance::LinearSystem;
  }
  out.provenance[5] = prm.lambda > 0.0 ? Provenance::Quadrature : Provenance::ClosedForm;
  out.provenance[above ? 4 : 2] = Provenance::PrintedFormula;
  const double c6 = out.C[5];

  const auto pr = detail::printed(k, m, c6, above);
  const double a_scale = prm.beta * m / (c.alpha + prm.rho);
  double worst = 0.0;
  for (int i = 0; i < 5; ++i) {
    if (std::isnan(pr[i]) || std::isnan(out.C[i])) continue;
    const bool b_type = (i % 2) == 1;
    const double scale = b_type ? std::max({std::abs(pr[i]), std::abs(out.C[i]), std::abs(c6)})
                                : std::max({std::abs(pr[i]), a_scale});
    if (scale > 0.0) worst = std::max(worst, std::abs(out.C[i] - pr[i]) / scale);
  }
  out.printed_discrepancy = worst;

  if (above && prm.lambda > 0.0) {
    out.neumann_residual = std::abs(-out.C[0] + c.a * out.C[1] - prm.lambda * m * prm.beta / (c.alpha + prm.rho)) /
                           (1.0 + std::abs(out.C[0]));
  } else {
    const double b_pow = std::pow(prm.beta, prm.p / (prm.p - 1.0));
    out.neumann_residual =
        std::abs(-out.C[2] + c.a * out.C[3] + (1.0 - prm.p) * (1.0 - prm.p) * b_pow / c.denom) /
        (1.0 + std::abs(out.C[2]));
  }
  return out;
}

PsiEval DualSolution::psi(double y) const {
  const double beta = model().params.beta;
  const double kappa = model().consts.kappa;
  if (!(y > 0.0) || y > beta * (1.0 + detail::kDomainSlack)) throw DomainError("psi requires 0 < y <= beta");
  const double t = std::pow(y / beta, kappa - 1.0);  // beta^{1-kappa} y^{kappa-1}
  return {y - y * t / kappa, 1.0 - t, (1.0 - kappa) * t / y};
}

double DualSolution::phi(double y, double m) const {
  const double p = model().params.p;
  const double lam = model().params.lambda;
  if (!(y > 0.0)) throw DomainError("phi requires y > 0");
  if (lam > 0.0 && y >= std::pow(lam * m, p - 1.0)) {
    return std::pow(lam * m, p) / p - lam * m * y;
  }
  if (y <= std::pow(m, p - 1.0)) return std::pow(m, p) / p - m * y;
  return (1.0 - p) / p * std::pow(y, p / (p - 1.0));
}

DualEval DualSolution::dual_value(double y, double z, double m) const {
  return dual_value(y, z, coefficients(m));
}

DualEval DualSolution::dual_value(double y, double z, const Coefficients& coef) const {
  const double beta = model().params.beta;
  if (!(y >= coef.y_star * (1.0 - detail::kDomainSlack)) || y > beta * (1.0 + detail::kDomainSlack)) {
    throw DomainError("dual_value requires y*(m) <= y <= beta");
  }
  return dual_value_unchecked(std::min(y, beta), z, coef);
}

DualEval DualSolution::dual_value_unchecked(double y, double z, const Coefficients& coef) const {
  const auto& prm = model().params;
  Piece piece = Piece::Bottom;
  if (prm.lambda > 0.0 && y > std::pow(prm.lambda * coef.m, prm.p - 1.0)) {
    piece = Piece::Top;
  } else if (y > std::pow(coef.m, prm.p - 1.0)) {
    piece = Piece::Mid;
  }
  return dual_value_piece(y, z, coef, piece);
}

DualEval DualSolution::dual_value_piece(double y, double z, const Coefficients& coef, Piece piece) const {
  const auto& prm = model().params;
  const auto& c = model().consts;
  const double m = coef.m;
  const double p = prm.p;
  const double beta = prm.beta;
  const double a = c.a;
  const double ar = c.alpha + prm.rho;
  const double ln_y = std::log(y);
  const double ln_yb = ln_y - std::log(beta);

  DualEval out;
  out.y = y;
  out.z = z;
  out.m = m;
  out.region = piece;

  const int j = static_cast<int>(piece);
  double part = 0.0, part_y = 0.0, part_yy = 0.0, part_m = 0.0, part_ym = 0.0;
  if (piece == Piece::Top) {
    const double lm = prm.lambda * m;
    part = std::pow(lm, p) / (p * prm.rho) + lm / ar * y * ln_yb;
    part_y = lm / ar * (ln_yb + 1.0);
    part_yy = lm / (ar * y);
    part_m = prm.lambda * std::pow(lm, p - 1.0) / prm.rho + prm.lambda / ar * y * ln_yb;
    part_ym = prm.lambda / ar * (ln_yb + 1.0);
  } else if (piece == Piece::Mid) {
    const double K = (1.0 - p) * (1.0 - p) * (1.0 - p) / (p * c.denom);
    const double q = p / (p - 1.0);
    const double yq = std::pow(y, q);
    part = K * yq;
    part_y = K * q * yq / y;
    part_yy = K * q * (q - 1.0) * yq / (y * y);
  } else {
    part = std::pow(m, p) / (p * prm.rho) + m / ar * y * ln_yb;
    part_y = m / ar * (ln_yb + 1.0);
    part_yy = m / (ar * y);
    part_m = std::pow(m, p - 1.0) / prm.rho + y * ln_yb / ar;
    part_ym = (ln_yb + 1.0) / ar;
  }
  const double A = coef.C[2 * j];
  const double dA = coef.dC[2 * j];
  // B (beta/y)^a = B_scaled (y_low/y)^a, at most B_scaled inside the piece.
  const double ratio = std::exp(a * (coef.ln_y_low[j] - ln_y));
  const double b_term = coef.B_scaled[j] * ratio;
  const double db_term = coef.dB_scaled[j] * ratio;
  const PsiEval ps = psi(y);

  out.value = A * y / beta + b_term + part + z * ps.value;
  out.dy = A / beta - a * b_term / y + part_y + z * ps.dy;
  out.dyy = a * (a + 1.0) * b_term / (y * y) + part_yy + z * ps.dyy;
  out.dz = ps.value;
  out.dyz = ps.dy;
  out.dm = dA * y / beta + db_term + part_m;
  out.dym = dA / beta - a * db_term / y + part_ym;
  return out;
}

double DualSolution::dual_pde_residual(double y, double z, double m) const {
  const auto& prm = model().params;
  const auto& c = model().consts;
  const DualEval e = dual_value(y, z, m);
  const double r = -prm.rho * e.value + prm.rho * y * e.dy + c.alpha * y * y * e.dyy +
                   prm.mu_Z * z * e.dz - c.eta * z * y * e.dyz - (prm.mu_Z - c.eta) * z * y +
                   phi(y, m);
  return std::abs(r) / (1.0 + std::abs(e.value));
}

}  // namespace dtrack
