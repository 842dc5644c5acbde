#include "dtrack/primal_policy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dtrack/errors.hpp"
#include "numerics.hpp"

namespace dtrack {

namespace {

constexpr double kTieBand = 1e-12;
constexpr int kMaxExpansions = 80;

double tie_band(double x) { return kTieBand * (1.0 + std::abs(x)); }

void require_state(double x, double z, double m) {
  if (!(std::isfinite(x) && std::isfinite(z) && std::isfinite(m)) || x < 0.0 || z < 0.0 || m < 0.0) {
    throw DomainError("primal state requires finite x, z, m >= 0");
  }
}

}  // namespace

const char* to_string(Region r) {
  switch (r) {
    case Region::R1: return "R1";
    case Region::R2: return "R2";
    case Region::R3: return "R3";
    case Region::R4: return "R4";
    case Region::R5: return "R5";
  }
  return "?";
}

PrimalPolicy::PrimalPolicy(const Model& model) : dual_(model) {}

double PrimalPolicy::F3(double z, const Coefficients& coef) const {
  return -dual_.dual_value_unchecked(coef.y_star, z, coef).dy;
}

double PrimalPolicy::dF3_dm(double z, const Coefficients& coef) const {
  // vhat_ym vanishes on the free boundary, so only the motion of y* contributes.
  const DualEval e = dual_.dual_value_unchecked(coef.y_star, z, coef);
  return -e.dyy * dual_.boundary().dy_star_dm(coef.m) - e.dym;
}

Thresholds PrimalPolicy::thresholds(double z, const Coefficients& coef) const {
  const auto& prm = model().params;
  const auto& c = model().consts;
  Thresholds t;
  if (prm.lambda > 0.0 && coef.m > c.m_kink) {
    const double y1 = std::pow(prm.lambda * coef.m, prm.p - 1.0);
    t.F1 = std::max(0.0, -dual_.dual_value_unchecked(y1, z, coef).dy);
  }
  const double y2 = std::min(std::pow(coef.m, prm.p - 1.0), prm.beta);
  t.F2 = std::max(t.F1, -dual_.dual_value_unchecked(y2, z, coef).dy);
  t.F3 = std::max(t.F2, F3(z, coef));
  return t;
}

Thresholds PrimalPolicy::thresholds(double z, double m) const {
  if (!(z >= 0.0) || !(m >= model().consts.m_floor * (1.0 - 1e-14))) {
    throw DomainError("thresholds require z >= 0 and m >= m_floor");
  }
  return thresholds(z, dual_.coefficients(std::max(m, model().consts.m_floor)));
}

double PrimalPolicy::m_star(double x, double z) const {
  return m_star_from(x, z, model().consts.m_floor);
}

double PrimalPolicy::m_star_from(double x, double z, double m_lo) const {
  require_state(x, z, m_lo);
  const double m_floor = model().consts.m_floor;
  m_lo = std::max(m_lo, m_floor);
  auto g = [&](double t) { return F3(z, dual_.coefficients(std::exp(t))) - x; };
  double lo = std::log(m_lo);
  double flo = g(lo);
  if (flo >= 0.0) {
    if (m_lo == m_floor) return m_floor;
    // Caller's lower end already lies beyond the root; restart from the floor.
    return m_star_from(x, z, m_floor);
  }
  double step = 0.05;
  double hi = lo + step;
  double fhi = g(hi);
  for (int i = 0; fhi < 0.0; ++i) {
    if (i == kMaxExpansions) throw ConvergenceError("m_star: bracket expansion failed");
    lo = hi;
    flo = fhi;
    step *= 2.0;
    hi = lo + step;
    fhi = g(hi);
  }
  const double t = detail::bracket_root(g, lo, hi, flo, fhi, 1e-14 * std::max(1.0, std::abs(hi)),
                                        "m_star");
  return std::exp(t);
}

double PrimalPolicy::dual_state(double x, double z, double m) const {
  require_state(x, z, m);
  if (m < model().consts.m_floor * (1.0 - 1e-14)) throw OutOfRegion("dual_state requires m >= m_floor");
  return dual_state(x, z, dual_.coefficients(std::max(m, model().consts.m_floor)));
}

double PrimalPolicy::dual_state(double x, double z, const Coefficients& coef, double guess) const {
  const double beta = model().params.beta;
  const double f3 = F3(z, coef);
  const double band = tie_band(x);
  if (x > f3 + band) {
    throw OutOfRegion("x = " + std::to_string(x) + " exceeds F3 = " + std::to_string(f3));
  }
  if (x >= f3 - band) return coef.y_star;
  auto g = [&](double r) { return -dual_.dual_value_unchecked(std::exp(r), z, coef).dy - x; };
  double hi = std::log(beta);
  double fhi = g(hi);
  if (fhi >= 0.0) return beta;
  double lo = std::log(coef.y_star);
  double flo = f3 - x;
  // Narrow the bracket around a caller-supplied estimate.
  if (guess > coef.y_star && guess < beta) {
    const double r0 = std::log(guess);
    for (double w : {1e-6, 1e-4, 1e-2}) {
      const double a = std::max(lo, r0 - w), b = std::min(hi, r0 + w);
      const double fa = a == lo ? flo : g(a);
      const double fb = b == hi ? fhi : g(b);
      if (fa >= 0.0 && fb <= 0.0) {
        lo = a, flo = fa, hi = b, fhi = fb;
        break;
      }
    }
  }
  const double r = detail::bracket_root(g, lo, hi, flo, fhi, 1e-14 * std::max(1.0, std::abs(lo)),
                                        "dual_state");
  return std::clamp(std::exp(r), coef.y_star, beta);
}

PolicyPoint PrimalPolicy::evaluate(double x, double z, double m) const {
  require_state(x, z, m);
  const auto& prm = model().params;
  const auto& cst = model().consts;

  PolicyPoint pt;
  pt.x = x, pt.z = z, pt.m = m;
  double m_eff = std::max(m, cst.m_floor);
  bool lifted = m < cst.m_floor;
  Coefficients coef = dual_.coefficients(m_eff);
  if (x > F3(z, coef) + tie_band(x)) {
    m_eff = m_star_from(x, z, m_eff);
    coef = dual_.coefficients(m_eff);
    lifted = true;
  }
  pt.m_eff = m_eff;
  pt.F = thresholds(z, coef);
  pt.y = dual_state(std::min(x, pt.F.F3), z, coef);
  const DualEval e = dual_.dual_value_unchecked(pt.y, z, coef);
  pt.v = e.value + x * pt.y;
  pt.vhat_yy = e.dyy;
  pt.vhat_yz = e.dyz;

  const double band = tie_band(x);
  if (lifted) {
    pt.region = Region::R5;
  } else if (std::abs(x - pt.F.F3) <= band) {
    pt.region = Region::R4;
  } else if (x >= pt.F.F2 - band) {
    pt.region = Region::R3;
  } else if (x >= pt.F.F1 - band) {
    pt.region = Region::R2;
  } else {
    pt.region = Region::R1;
  }

  switch (pt.region) {
    case Region::R1: pt.c = prm.lambda * m_eff; break;
    case Region::R2:
      pt.c = std::clamp(std::pow(pt.y, 1.0 / (prm.p - 1.0)), prm.lambda * m_eff, m_eff);
      break;
    default: pt.c = m_eff; break;
  }
  pt.theta = theta_from_dual(pt.y * e.dyy, 1.0 - e.dyz, z);
  return pt;
}

Eigen::VectorXd PrimalPolicy::theta_from_dual(double y_vyy, double one_minus_vyz, double z) const {
  const auto& cst = model().consts;
  return y_vyy * cst.merton_direction + (one_minus_vyz * z * model().params.sigma_Z) * cst.benchmark_direction;
}

double PrimalPolicy::value(double x, double z, double m) const { return evaluate(x, z, m).v; }

double PrimalPolicy::consumption(double x, double z, double m) const { return evaluate(x, z, m).c; }

Eigen::VectorXd PrimalPolicy::portfolio(double x, double z, double m) const { return evaluate(x, z, m).theta; }

Region PrimalPolicy::region_classify(double x, double z, double m) const { return evaluate(x, z, m).region; }

PrimalPartials PrimalPolicy::partials(double x, double z, double m) const {
  const PolicyPoint pt = evaluate(x, z, m);
  const DualEval e = dual_.dual_value_unchecked(pt.y, z, dual_.coefficients(pt.m_eff));
  PrimalPartials d;
  d.v = pt.v;
  d.v_x = pt.y;
  d.v_xx = -1.0 / e.dyy;
  d.v_z = e.dz;
  d.v_xz = -e.dyz / e.dyy;
  d.v_zz = -e.dyz * e.dyz / e.dyy;
  d.v_m = pt.region == Region::R5 ? 0.0 : e.dm;
  return d;
}

double PrimalPolicy::hjb_residual(double x, double z, double m) const {
  require_state(x, z, m);
  const auto& prm = model().params;
  const auto& cst = model().consts;
  if (m < cst.m_floor * (1.0 - 1e-14)) throw OutOfRegion("hjb_residual requires m >= m_floor");
  const Coefficients coef = dual_.coefficients(std::max(m, cst.m_floor));
  if (x > F3(z, coef) + tie_band(x)) throw OutOfRegion("hjb_residual requires x <= F3(z, m)");

  const PrimalPartials d = partials(x, z, m);
  const double sz = prm.sigma_Z * z;
  // b = mu v_x + sigma gamma sigma_Z z (v_xz - v_xx); b^T (sigma sigma^T)^{-1} b = |sigma^{-1} b|^2.
  const Eigen::VectorXd sb = cst.market_price * d.v_x + prm.gamma * (sz * (d.v_xz - d.v_xx));
  const double theta_sup = -0.5 * sb.squaredNorm() / d.v_xx;
  const double c_sup = dual_.phi(d.v_x, coef.m);
  const double rest = -sz * sz * d.v_xz + 0.5 * sz * sz * (d.v_xx + d.v_zz) + prm.mu_Z * z * (d.v_z - d.v_x) -
                      prm.rho * d.v;
  return std::abs(theta_sup + c_sup + rest) / (1.0 + std::abs(d.v));
}

double PrimalPolicy::original_value(double v0, double z, double m) const {
  if (!std::isfinite(v0) || v0 < 0.0) throw DomainError("original_value requires v0 >= 0");
  return value(std::max(v0 - z, 0.0), z, m) - model().params.beta * std::max(z - v0, 0.0);
}

}  // namespace dtrack

namespace dtrack {

PolicyCursor::PolicyCursor(const PrimalPolicy& policy) : policy_(&policy) {}

void PolicyCursor::reset(double m) {
  const DualSolution& dual = policy_->dual();
  coef_ = dual.coefficients(m);
  has_coef_ = true;
  const DualEval e0 = dual.dual_value_unchecked(coef_.y_star, 0.0, coef_);
  f3_const_ = -e0.dy;
  f3_slope_ = -dual.psi(coef_.y_star).dy;
  y_prev_ = 0.0;
}

double PolicyCursor::lift(double x, double z, double m) {
  // Newton in log m from the current maximum, kept inside a bracket; the
  // lift per step is small, so this usually converges in one or two steps.
  const DualSolution& dual = policy_->dual();
  double lo = std::log(m);
  double hi = INFINITY;
  double t = lo;
  for (int it = 0; it < 30; ++it) {
    const Coefficients c = dual.coefficients(std::exp(t));
    const double g = policy_->F3(z, c) - x;
    if (g > 0.0) {
      hi = std::min(hi, t);
    } else {
      lo = std::max(lo, t);
    }
    const double slope = c.m * policy_->dF3_dm(z, c);
    double next = slope > 0.0 ? t - g / slope : NAN;
    if (!(next > lo && next < hi)) next = std::isinf(hi) ? lo + 2.0 * (t - lo) + 1e-3 : 0.5 * (lo + hi);
    if (std::abs(next - t) <= 1e-14 * std::max(1.0, std::abs(t))) return std::exp(next);
    t = next;
  }
  return policy_->m_star_from(x, z, m);
}

double PolicyCursor::solve_y(double x, double z) {
  const DualSolution& dual = policy_->dual();
  const double beta = policy_->model().params.beta;
  const double f3 = f3_const_ + z * f3_slope_;
  const double band = 1e-12 * (1.0 + x);
  if (x >= f3 - band) return coef_.y_star;
  double lo = std::log(coef_.y_star), hi = std::log(beta);
  double r = y_prev_ > 0.0 ? std::clamp(std::log(y_prev_), lo, hi) : 0.5 * (lo + hi);
  for (int it = 0; it < 60; ++it) {
    const double y = std::exp(r);
    const DualEval e = dual.dual_value_unchecked(y, z, coef_);
    const double g = -e.dy - x;
    if (g > 0.0) {
      lo = r;
    } else {
      hi = r;
    }
    if (g == 0.0) return y;
    double next = r + g / (e.dyy * y);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - r) <= 1e-13 * std::max(1.0, std::abs(r)) || hi - lo <= 1e-15) {
      return std::clamp(std::exp(next), coef_.y_star, beta);
    }
    r = next;
  }
  return policy_->dual_state(x, z, coef_);
}

StepControl PolicyCursor::advance(double x, double z, double m) {
  const auto& prm = policy_->model().params;
  const double m_floor = policy_->model().consts.m_floor;
  StepControl out;
  out.lifted = m < m_floor;
  m = std::max(m, m_floor);
  if (!has_coef_ || m != coef_.m) reset(m);
  if (x > f3_const_ + z * f3_slope_ + 1e-12 * (1.0 + x)) {
    reset(lift(x, z, m));
    out.lifted = true;
  }
  out.m = coef_.m;
  out.y = solve_y(x, z);
  y_prev_ = out.y;
  const DualEval e = policy_->dual().dual_value_unchecked(out.y, z, coef_);
  out.c = std::clamp(std::pow(out.y, 1.0 / (prm.p - 1.0)), prm.lambda * out.m, out.m);
  out.y_vyy = out.y * e.dyy;
  out.one_minus_vyz = 1.0 - e.dyz;
  return out;
}

}  // namespace dtrack
