#pragma once

#include <memory>
#include <vector>

#include "dtrack/model_params.hpp"

namespace dtrack {

namespace detail {
struct BoundaryTable;
}

/// The free boundary m -> y*(m) and its inverse.
///
/// On [m_floor, m_kink) the boundary is m^{p-1}. Beyond m_kink it is the root
/// of F_m(y) = G(m). Roots are tabulated on [m_kink, m_max] against the
/// coordinate s = sqrt(log(m / m_kink)), which absorbs the square-root onset
/// of the root branch at the kink; beyond m_max every query is solved exactly.
class FreeBoundary {
 public:
  explicit FreeBoundary(const Model& model);
  ~FreeBoundary();
  FreeBoundary(FreeBoundary&&) noexcept;
  FreeBoundary& operator=(FreeBoundary&&) noexcept;

  const Model& model() const { return model_; }

  /// F_m(y) - G(m). Requires lambda > 0, m >= m_kink and 0 < y <= m^{p-1}.
  double boundary_residual(double y, double m) const;

  /// Left side F_m(y) and right side G(m) separately, without domain checks.
  double lhs(double y, double m) const;
  double rhs(double m) const;

  /// y*(m) from the analytic branch or the table.
  double y_star(double m) const;
  /// y*(m) by a fresh bracketed root solve (analytic branch below m_kink).
  double y_star_exact(double m) const;
  /// dy*/dm by implicit differentiation; one-sided (root branch) at m_kink,
  /// where it is unbounded.
  double dy_star_dm(double m) const;

  /// Inverse of y_star on (0, beta].
  double m_star_of_y(double y) const;

  /// Upper end of the tabulated range (m_floor when lambda = 0).
  double m_max() const;
  bool has_table() const { return table_ != nullptr; }

  /// Tabulation nodes in m, increasing. Node i sits at
  /// s = (i + 1) * table_ds() with m = m_kink * exp(s^2).
  std::vector<double> table_nodes() const;
  double table_ds() const;

 private:
  double solve_root(double m) const;
  double slope_at(double m, double y) const;

  Model model_;
  std::unique_ptr<detail::BoundaryTable> table_;
};

}  // namespace dtrack
