#include "dtrack/free_boundary.hpp"

#include <algorithm>
#include <boost/math/interpolators/cubic_hermite.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <limits>
#include <string>

#include "boundary_math.hpp"
#include "dtrack/errors.hpp"
#include "numerics.hpp"

namespace dtrack {

namespace detail {

using Hermite = boost::math::interpolators::cardinal_cubic_hermite<std::vector<double>>;

struct BoundaryTable {
  double m_kink;
  double ds;
  double s_max;
  double m_max;
  std::vector<double> log_y;  // at s_i = (i + 1) ds
  Hermite interp;
};

}  // namespace detail

namespace {

constexpr double kRootTolLog = 1e-13;
constexpr double kTailFraction = 1e-10;
constexpr double kMaxLogM = 600.0;
constexpr double kNodesPerDecade = 512.0;
constexpr double kNearKinkLog = 1e-2;
constexpr double kNearKinkGap = 1e-2;

using Gauss8 = boost::math::quadrature::gauss<double, 8>;

/// g(y) with dF_m/dy = -g(y) (m^{p-1} - y).
double slope_weight(const detail::Scalars& k, double y) {
  return k.beta / ((k.alpha + k.rho) * y * y) *
         (1.0 + k.a * std::exp((k.a + 1.0) * (std::log(y) - k.ln_beta)));
}

/// H'(m) = d/dm [G(m) - F_m(m^{p-1})].
double gap_slope(const detail::Scalars& k, double m) {
  const Dual md = Dual::variable(m);
  const Dual y0 = exp(log(md) * (k.p - 1.0));
  return (detail::boundary_rhs(k, md) - detail::boundary_lhs(k, y0, md)).d;
}

/// H(m) = G(m) - F_m(m^{p-1}) >= 0; integrated from the kink where both
/// sides nearly cancel.
double kink_gap(const detail::Scalars& k, double m_kink, double m) {
  if (std::log(m / m_kink) < kNearKinkLog) {
    return Gauss8::integrate([&](double t) { return gap_slope(k, t); }, m_kink, m);
  }
  return detail::boundary_rhs(k, m) - detail::boundary_lhs(k, std::pow(m, k.p - 1.0), m);
}

/// F_m(y1) - F_m(y0) = int_{y1}^{y0} g(y) (y0 - y) dy for y1 close to y0.
double lhs_drop(const detail::Scalars& k, double y1, double y0) {
  return Gauss8::integrate([&](double y) { return slope_weight(k, y) * (y0 - y); }, y1, y0);
}

}  // namespace

FreeBoundary::FreeBoundary(const Model& model) : model_(model) {
  const auto& c = model_.consts;
  if (model_.params.lambda <= 0.0) return;

  // Walk outward until y* is negligible.
  const double beta = model_.params.beta;
  double u_max = std::log(10.0);
  for (;;) {
    const double m = c.m_kink * std::exp(u_max);
    const double y = solve_root(m);
    if (y < kTailFraction * beta || std::log(m) > kMaxLogM) {
      break;
    }
    u_max += std::log(10.0);
  }

  const double s_max = std::sqrt(u_max);
  const double du = std::log(10.0) / kNodesPerDecade;
  const double ds = du / (2.0 * s_max);
  const auto n = static_cast<std::size_t>(std::ceil(s_max / ds));

  std::vector<double> log_y(n), slope(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = ds * static_cast<double>(i + 1);
    const double m = c.m_kink * std::exp(s * s);
    const double y = solve_root(m);
    log_y[i] = std::log(y);
    // d log y / ds = 2 s m / y * dy/dm
    slope[i] = 2.0 * s * m / y * slope_at(m, y);
  }
  auto copy = log_y;
  table_.reset(new detail::BoundaryTable{
      c.m_kink, ds, ds * static_cast<double>(n), c.m_kink * std::exp(ds * ds * n * n),
      std::move(log_y), detail::Hermite(std::move(copy), std::move(slope), ds, ds)});
  table_->s_max = table_->interp.domain().second;
  table_->m_max = c.m_kink * std::exp(table_->s_max * table_->s_max);
}

FreeBoundary::~FreeBoundary() = default;
FreeBoundary::FreeBoundary(FreeBoundary&&) noexcept = default;
FreeBoundary& FreeBoundary::operator=(FreeBoundary&&) noexcept = default;

double FreeBoundary::lhs(double y, double m) const {
  return detail::boundary_lhs(detail::Scalars(model_), y, m);
}

double FreeBoundary::rhs(double m) const {
  return detail::boundary_rhs(detail::Scalars(model_), m);
}

double FreeBoundary::boundary_residual(double y, double m) const {
  const auto& c = model_.consts;
  if (model_.params.lambda <= 0.0) {
    throw DomainError("boundary equation is defined only for lambda > 0");
  }
  if (!(m >= c.m_kink * (1.0 - 1e-14))) {
    throw DomainError("boundary equation requires m >= m_kink");
  }
  const double y0 = std::pow(m, model_.params.p - 1.0);
  if (!(y > 0.0) || y > y0 * (1.0 + 1e-14)) {
    throw DomainError("boundary equation requires 0 < y <= m^{p-1}");
  }
  return lhs(y, m) - rhs(m);
}

double FreeBoundary::solve_root(double m) const {
  detail::Scalars k(model_);
  const double m_kink = model_.consts.m_kink;
  const double y0 = std::pow(m, k.p - 1.0);
  if (std::log(m / m_kink) < kNearKinkLog) {
    // Solve for the gap d = y0 - y*, which stays well conditioned as d -> 0.
    const double gap = kink_gap(k, m_kink, m);
    if (!(gap > 0.0)) return y0;
    const double d_max = kNearKinkGap * y0;
    auto f = [&](double d) { return lhs_drop(k, y0 - d, y0) - gap; };
    const double f_max = f(d_max);
    if (f_max >= 0.0) {
      std::uintmax_t iters = 200;
      auto tol = [](double a, double b) { return std::abs(a - b) <= 1e-14 * std::max(a, b); };
      const auto r = boost::math::tools::toms748_solve(f, 0.0, d_max, -gap, f_max, tol, iters);
      return y0 - 0.5 * (r.first + r.second);
    }
  }
  const double g = detail::boundary_rhs(k, m);
  const double r_hi = (k.p - 1.0) * std::log(m);
  auto f = [&](double r) { return detail::boundary_lhs(k, std::exp(r), m) - g; };
  const double f_hi = f(r_hi);
  if (f_hi >= 0.0) return y0;

  // Asymptotic guess y ~ m^{p-1} / ((1-p) lambda log m) for the lower end.
  const double lnm = std::log(m);
  double guess = r_hi - 1.0;
  const double denom = (1.0 - k.p) * k.lambda * lnm;
  if (denom > 1.0) guess = std::min(guess, r_hi - std::log(denom) - 0.5);
  double r_lo = guess;
  double f_lo = f(r_lo);
  double step = r_hi - r_lo;
  for (int i = 0; f_lo <= 0.0; ++i) {
    if (i > 60) throw ConvergenceError("y_star: lower bracket expansion failed");
    step *= 2.0;
    r_lo = r_hi - step;
    f_lo = f(r_lo);
  }
  return std::exp(detail::bracket_root(f, r_lo, r_hi, f_lo, f_hi, kRootTolLog, "y_star"));
}

double FreeBoundary::y_star_exact(double m) const {
  const auto& c = model_.consts;
  if (!(m >= c.m_floor * (1.0 - 1e-14))) throw DomainError("y_star requires m >= m_floor");
  if (m < c.m_kink) return std::pow(m, model_.params.p - 1.0);
  return solve_root(m);
}

double FreeBoundary::y_star(double m) const {
  const auto& c = model_.consts;
  if (!(m >= c.m_floor * (1.0 - 1e-14))) throw DomainError("y_star requires m >= m_floor");
  if (m < c.m_kink) return std::pow(m, model_.params.p - 1.0);
  if (!table_) return solve_root(m);
  const double s = std::sqrt(std::log(m / c.m_kink));
  if (s < table_->ds || s > table_->s_max) return solve_root(m);
  return std::exp(table_->interp(s));
}

double FreeBoundary::dy_star_dm(double m) const {
  const auto& c = model_.consts;
  const double p = model_.params.p;
  if (m < c.m_kink) {
    if (!(m >= c.m_floor * (1.0 - 1e-14))) throw DomainError("dy_star_dm requires m >= m_floor");
    return (p - 1.0) * std::pow(m, p - 2.0);
  }
  return slope_at(m, y_star(m));
}

double FreeBoundary::slope_at(double m, double y) const {
  detail::Scalars k(model_);
  const double p = model_.params.p;
  const double y0 = std::pow(m, p - 1.0);
  const double d = y0 - y;
  if (d < kNearKinkGap * y0) {
    // dy*/dm = (-H'(m) + y0' int_{y}^{y0} g) / (g(y) d), cancellation-free for small d.
    if (!(d > 0.0)) return -INFINITY;
    const double dy0 = (p - 1.0) * y0 / m;
    const double g_int = Gauss8::integrate([&](double t) { return slope_weight(k, t); }, y, y0);
    return (-gap_slope(k, m) + dy0 * g_int) / (slope_weight(k, y) * d);
  }
  const double r_y = detail::boundary_lhs_dy(k, y, m);
  const double r_m = detail::boundary_lhs(k, Dual(y), Dual::variable(m)).d -
                     detail::boundary_rhs(k, Dual::variable(m)).d;
  return -r_m / r_y;
}

double FreeBoundary::m_star_of_y(double y) const {
  const auto& c = model_.consts;
  const double beta = model_.params.beta;
  const double p = model_.params.p;
  if (!(y > 0.0) || y > beta * (1.0 + 1e-14)) throw DomainError("m_star_of_y requires 0 < y <= beta");
  y = std::min(y, beta);
  const double y_kink = std::isinf(c.m_kink) ? 0.0 : std::pow(c.m_kink, p - 1.0);
  if (y >= y_kink) return std::max(c.m_floor, std::pow(y, 1.0 / (p - 1.0)));

  detail::Scalars k(model_);
  const double ly = std::log(y);
  auto f = [&](double t) {
    const double m = std::exp(t);
    return detail::boundary_lhs(k, y, m) - detail::boundary_rhs(k, m);
  };
  double t_lo = std::log(c.m_kink);
  double t_hi;
  if (table_ && ly >= table_->log_y.back()) {
    // log_y is decreasing in the node index.
    const auto& v = table_->log_y;
    const auto it = std::lower_bound(v.begin(), v.end(), ly, std::greater<double>());
    const auto idx = static_cast<std::size_t>(it - v.begin());
    const double s_hi = table_->ds * static_cast<double>(std::min(idx + 2, v.size()));
    const double s_lo = idx >= 1 ? table_->ds * static_cast<double>(idx - 1) : 0.0;
    t_lo += s_lo * s_lo;
    t_hi = std::log(c.m_kink) + s_hi * s_hi;
  } else {
    if (table_) t_lo = std::log(table_->m_max);
    double step = std::log(10.0);
    t_hi = t_lo + step;
    for (int i = 0; f(t_hi) > 0.0; ++i) {
      if (i > 60) throw ConvergenceError("m_star_of_y: upper bracket expansion failed");
      t_lo = t_hi;
      step *= 2.0;
      t_hi = t_lo + step;
    }
  }
  return std::exp(detail::bracket_root(f, t_lo, t_hi, 1e-14, "m_star_of_y"));
}

double FreeBoundary::m_max() const {
  if (table_) return table_->m_max;
  return model_.consts.m_floor;
}

double FreeBoundary::table_ds() const { return table_ ? table_->ds : 0.0; }

std::vector<double> FreeBoundary::table_nodes() const {
  std::vector<double> out;
  if (!table_) return out;
  out.reserve(table_->log_y.size());
  for (std::size_t i = 0; i < table_->log_y.size(); ++i) {
    const double s = table_->ds * static_cast<double>(i + 1);
    out.push_back(table_->m_kink * std::exp(s * s));
  }
  return out;
}

}  // namespace dtrack
