#pragma once

#include <array>
#include <memory>

#include "dtrack/free_boundary.hpp"
#include "dtrack/model_params.hpp"

namespace dtrack {

namespace detail {
struct C6Table;
}

/// The three y-intervals of the dual function, top to bottom.
enum class Piece { Top, Mid, Bottom };

enum class Provenance { LinearSystem, PrintedFormula, Quadrature, ClosedForm };

/// C1..C6 at one m, with their m-derivatives.
///
/// The B-type coefficients C2, C4, C6 multiply (beta/y)^a, which over- or
/// underflows for large a. Evaluation therefore uses B_scaled[j] =
/// C[2j+1] (beta / y_low[j])^a, with y_low the lower end of piece j (top,
/// mid, bottom): (lambda m)^{p-1}, m^{p-1}, y*(m). C and dC hold plain
/// values and may under- or overflow when a is large.
struct Coefficients {
  double m = 0.0;
  double y_star = 0.0;
  std::array<double, 6> C{};
  std::array<double, 6> dC{};
  std::array<double, 3> B_scaled{};
  std::array<double, 3> dB_scaled{};
  std::array<double, 3> ln_y_low{};
  double log_C6 = 0.0;
  std::array<Provenance, 6> provenance{};
  /// Largest relative gap between these values and the closed-form printed
  /// expressions for C1..C5.
  double printed_discrepancy = 0.0;
  /// Normalized Neumann residual at y = beta of the piece containing beta.
  double neumann_residual = 0.0;
};

struct PsiEval {
  double value = 0.0;
  double dy = 0.0;
  double dyy = 0.0;
};

/// Dual function value and partial derivatives at (y, z, m).
struct DualEval {
  double y = 0.0, z = 0.0, m = 0.0;
  double value = 0.0;
  double dy = 0.0, dyy = 0.0;
  double dz = 0.0, dyz = 0.0;
  double dm = 0.0, dym = 0.0;
  Piece region = Piece::Bottom;
};

/// Closed-form solution of the dual free-boundary problem.
class DualSolution {
 public:
  explicit DualSolution(const Model& model);
  ~DualSolution();
  DualSolution(DualSolution&&) noexcept;
  DualSolution& operator=(DualSolution&&) noexcept;

  const Model& model() const { return boundary_.model(); }
  const FreeBoundary& boundary() const { return boundary_; }

  /// C6(m), from the closed form, the table or fresh quadrature as needed.
  double coefficient_C6(double m) const;
  /// log C6(m); representable when C6 itself underflows.
  double log_coefficient_C6(double m) const;
  /// C6(m) by fresh adaptive quadrature with exact boundary roots.
  double coefficient_C6_exact(double m) const;
  double log_coefficient_C6_exact(double m) const;
  /// h(m) = -C6'(m).
  double c6_integrand(double m) const;
  /// The integrand as printed alongside the coefficient formulas, for reporting.
  double c6_integrand_printed(double m) const;
  /// Upper bound on C6(m).
  double c6_tail_bound(double m) const;

  Coefficients coefficients(double m) const;
  /// Printed closed-form expressions for C1..C5 given C6; NaN where undefined.
  std::array<double, 5> printed_coefficients(double m, double c6) const;

  PsiEval psi(double y) const;
  /// sup over c in [lambda m, m] of U(c) - c y.
  double phi(double y, double m) const;

  DualEval dual_value(double y, double z, double m) const;
  /// Same, reusing coefficients already computed for coef.m.
  DualEval dual_value(double y, double z, const Coefficients& coef) const;
  /// Evaluates the piecewise formula without checking y >= y*(m).
  DualEval dual_value_unchecked(double y, double z, const Coefficients& coef) const;
  /// Evaluates the formula of one piece at any y in (0, beta], for auditing
  /// continuity across piece boundaries.
  DualEval dual_value_piece(double y, double z, const Coefficients& coef, Piece piece) const;

  /// Dual PDE residual normalized by 1 + |value|.
  double dual_pde_residual(double y, double z, double m) const;

 private:
  FreeBoundary boundary_;
  std::unique_ptr<detail::C6Table> table_;
  double log_c6_kink_ = 0.0;
};

}  // namespace dtrack
