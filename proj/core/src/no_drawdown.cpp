#include "dtrack/no_drawdown.hpp"

#include <cmath>

#include "dtrack/errors.hpp"
#include "numerics.hpp"

namespace dtrack {

namespace {

Model without_drawdown(const Model& model) {
  ModelParams p = model.params;
  p.lambda = 0.0;
  return Model(std::move(p));
}

}  // namespace

NoDrawdown::NoDrawdown(const Model& model) : model_(without_drawdown(model)) {}

double NoDrawdown::wealth(double f, double z) const {
  const auto& prm = model_.params;
  const auto& c = model_.consts;
  const double p = prm.p;
  const double k = c.kappa;
  const double e = 1.0 / (p - 1.0);
  return (1.0 - p) * (1.0 - p) / c.denom * (std::pow(f, e) - std::pow(prm.beta, e)) +
         z * (std::pow(prm.beta, 1.0 - k) * std::pow(f, k - 1.0) - 1.0);
}

double NoDrawdown::dual_state(double x, double z) const {
  if (!(x >= 0.0) || !(z >= 0.0)) throw DomainError("no-drawdown state requires x, z >= 0");
  const double beta = model_.params.beta;
  if (x == 0.0) return beta;
  auto g = [&](double r) { return wealth(std::exp(r), z) - x; };
  const double hi = std::log(beta);
  double lo = hi - 1.0;
  double flo = g(lo);
  for (int i = 0; flo < 0.0; ++i) {
    if (i == 200) throw ConvergenceError("no-drawdown dual state: bracket expansion failed");
    lo -= 1.0 + 0.5 * std::abs(lo);
    flo = g(lo);
  }
  const double r = detail::bracket_root(g, lo, hi, flo, g(hi), 1e-15 * std::max(1.0, std::abs(lo)),
                                        "no-drawdown dual state");
  return std::exp(r);
}

double NoDrawdown::value(double x, double z) const {
  const auto& prm = model_.params;
  const auto& c = model_.consts;
  const double p = prm.p;
  const double k = c.kappa;
  const double f = dual_state(x, z);
  return (1.0 - p) * (1.0 - p) / c.denom * std::pow(prm.beta, 1.0 / (p - 1.0)) * f +
         (1.0 - p) * (1.0 - p) * (1.0 - p) / (p * c.denom) * std::pow(f, p / (p - 1.0)) + x * f +
         z * (f - std::pow(prm.beta, 1.0 - k) * std::pow(f, k) / k);
}

double NoDrawdown::consumption(double x, double z) const {
  return std::pow(dual_state(x, z), 1.0 / (model_.params.p - 1.0));
}

Eigen::VectorXd NoDrawdown::portfolio(double x, double z) const {
  const auto& prm = model_.params;
  const auto& c = model_.consts;
  const double p = prm.p;
  const double k = c.kappa;
  const double f = dual_state(x, z);
  const double bz = z * std::pow(prm.beta, 1.0 - k) * std::pow(f, k - 1.0);
  const Eigen::MatrixXd cov = prm.sigma * prm.sigma.transpose();
  const Eigen::VectorXd merton = cov.ldlt().solve(prm.mu);
  const Eigen::VectorXd bench = cov.ldlt().solve(prm.sigma * prm.gamma);
  return merton * ((1.0 - p) / c.denom * std::pow(f, 1.0 / (p - 1.0)) + (1.0 - k) * bz) +
         bench * (prm.sigma_Z * bz);
}

}  // namespace dtrack
