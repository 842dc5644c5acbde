#pragma once

#include <Eigen/Dense>
#include <limits>

namespace dtrack {

/// Market, benchmark and preference inputs.
struct ModelParams {
  int d = 1;                 ///< number of risky assets
  Eigen::VectorXd mu;        ///< excess return rates
  Eigen::MatrixXd sigma;     ///< volatility matrix (d x d), invertible
  double mu_Z = 0.0;         ///< benchmark drift
  double sigma_Z = 0.0;      ///< benchmark volatility, >= 0
  Eigen::VectorXd gamma;     ///< Brownian weights of the benchmark, |gamma| = 1
  double rho = 1.0;          ///< discount rate
  double beta = 1.0;         ///< cost per unit of injected capital
  double p = 0.5;            ///< CRRA exponent, p < 1 and p != 0
  double lambda = 0.0;       ///< consumption drawdown fraction in [0, 1]

  /// Convenience constructor for the one-asset case.
  static ModelParams scalar(double mu, double sigma, double mu_Z, double sigma_Z, double gamma,
                            double rho, double beta, double p, double lambda);
};

/// Scalars derived once from validated parameters.
struct DerivedConstants {
  double alpha = 0.0;   ///< 0.5 mu^T (sigma sigma^T)^{-1} mu
  double eta = 0.0;     ///< sigma_Z gamma^T sigma^{-1} mu
  double kappa = 0.0;   ///< positive root of alpha k^2 + (rho - eta - alpha) k + mu_Z - rho = 0
  double rho_0 = 0.0;   ///< admissibility threshold on rho
  double m_floor = 0.0; ///< beta^{1/(p-1)}
  double m_kink = std::numeric_limits<double>::infinity();  ///< m_floor / lambda

  double a = 0.0;       ///< rho / alpha, exponent of the second homogeneous solution
  double denom = 0.0;   ///< rho (1 - p) - alpha p, > 0 under the assumptions

  Eigen::VectorXd market_price;        ///< sigma^{-1} mu
  Eigen::VectorXd merton_direction;    ///< (sigma sigma^T)^{-1} mu
  Eigen::VectorXd benchmark_direction; ///< (sigma sigma^T)^{-1} sigma gamma = sigma^{-T} gamma
};

/// Checks every standing assumption and computes the derived constants.
/// Throws AssumptionViolated (naming the failed condition) or SingularSigma.
DerivedConstants validate(const ModelParams& params);

/// A validated parameter set; immutable after construction.
struct Model {
  ModelParams params;
  DerivedConstants consts;

  explicit Model(ModelParams p) : params(std::move(p)), consts(validate(params)) {}
};

/// CRRA utility c^p / p. Throws DomainError for c < 0, or c = 0 with p < 0.
double utility(double c, double p);

}  // namespace dtrack
