#pragma once

#include <Eigen/Dense>

#include "dtrack/dual_solution.hpp"

namespace dtrack {

/// R1: consumption at lambda m; R2: interior consumption; R3: consumption at
/// m; R4: on the free boundary x = F3; R5: outside D, m jumps to m*(x, z).
enum class Region { R1, R2, R3, R4, R5 };

const char* to_string(Region r);

struct Thresholds {
  double F1 = 0.0;
  double F2 = 0.0;
  double F3 = 0.0;
};

/// Primal state with value, dual state and feedback controls.
struct PolicyPoint {
  double x = 0.0, z = 0.0, m = 0.0;
  double m_eff = 0.0;  ///< running maximum after any Region-V jump
  double y = 0.0;      ///< f(x, z, m_eff)
  double v = 0.0;
  double c = 0.0;
  Eigen::VectorXd theta;
  Region region = Region::R1;
  Thresholds F;
  /// Dual second derivatives at y, kept for downstream use.
  double vhat_yy = 0.0;
  double vhat_yz = 0.0;
};

/// First and second primal partials obtained from the dual function.
struct PrimalPartials {
  double v = 0.0, v_x = 0.0, v_xx = 0.0, v_z = 0.0, v_xz = 0.0, v_zz = 0.0, v_m = 0.0;
};

/// Controls at one state after any Region-V lift of m.
struct StepControl {
  double m = 0.0;  ///< running maximum after the lift
  double y = 0.0;  ///< f(x, z, m)
  double c = 0.0;
  double y_vyy = 0.0;          ///< y vhat_yy(y, z, m)
  double one_minus_vyz = 0.0;  ///< 1 - vhat_yz(y, z, m)
  bool lifted = false;
};

class PrimalPolicy;

/// Incremental evaluator for a single path. Caches the coefficients of the
/// current running maximum and warm-starts every root solve from the last
/// state, which makes consecutive nearby queries cheap.
class PolicyCursor {
 public:
  explicit PolicyCursor(const PrimalPolicy& policy);

  /// Controls at (x, z, m), lifting m to m*(x, z) when x > F3(z, m).
  StepControl advance(double x, double z, double m);

 private:
  void reset(double m);
  double lift(double x, double z, double m);
  double solve_y(double x, double z);

  const PrimalPolicy* policy_;
  Coefficients coef_;
  bool has_coef_ = false;
  double f3_const_ = 0.0;  ///< F3(z, m) = f3_const_ + z f3_slope_
  double f3_slope_ = 0.0;
  double y_prev_ = 0.0;
};

class PrimalPolicy {
 public:
  explicit PrimalPolicy(const Model& model);

  const Model& model() const { return dual_.model(); }
  const DualSolution& dual() const { return dual_; }

  Thresholds thresholds(double z, double m) const;
  Thresholds thresholds(double z, const Coefficients& coef) const;
  double F3(double z, const Coefficients& coef) const;
  /// dF3/dm at fixed z.
  double dF3_dm(double z, const Coefficients& coef) const;

  /// Inverse of m -> F3(z, m); m_floor at x = 0.
  double m_star(double x, double z) const;
  /// Same, searching upward from a known m_lo with F3(z, m_lo) <= x.
  double m_star_from(double x, double z, double m_lo) const;

  /// y in [y*(m), beta] with -vhat_y(y, z, m) = x. Throws OutOfRegion when x > F3(z, m).
  double dual_state(double x, double z, double m) const;
  double dual_state(double x, double z, const Coefficients& coef, double guess = 0.0) const;

  double value(double x, double z, double m) const;
  double consumption(double x, double z, double m) const;
  Eigen::VectorXd portfolio(double x, double z, double m) const;
  Region region_classify(double x, double z, double m) const;
  PolicyPoint evaluate(double x, double z, double m) const;

  PrimalPartials partials(double x, double z, double m) const;
  /// Normalized residual of the primal HJB equation with analytic suprema.
  /// Requires x <= F3(z, m).
  double hjb_residual(double x, double z, double m) const;

  /// Value of the original problem for initial wealth v0.
  double original_value(double v0, double z, double m) const;

  PolicyCursor cursor() const { return PolicyCursor(*this); }

  /// theta from the dual quantities y vhat_yy and 1 - vhat_yz.
  Eigen::VectorXd theta_from_dual(double y_vyy, double one_minus_vyz, double z) const;

 private:
  DualSolution dual_;
};

}  // namespace dtrack
