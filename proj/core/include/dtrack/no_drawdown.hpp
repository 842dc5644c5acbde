#pragma once

#include <Eigen/Dense>

#include "dtrack/model_params.hpp"

namespace dtrack {

/// Closed-form solution without the drawdown constraint (lambda = 0). Uses
/// only the explicit formulas and serves as an independent reference.
class NoDrawdown {
 public:
  /// Uses the market and preference inputs of `model` with lambda set to 0.
  explicit NoDrawdown(const Model& model);

  /// f(x, z): the dual state solving the explicit wealth equation.
  double dual_state(double x, double z) const;
  double value(double x, double z) const;
  double consumption(double x, double z) const;
  Eigen::VectorXd portfolio(double x, double z) const;

  /// Wealth as a function of the dual state, x(f, z).
  double wealth(double f, double z) const;

 private:
  Model model_;
};

}  // namespace dtrack
