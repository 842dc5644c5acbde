#include "dtrack/model_params.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dtrack/errors.hpp"

namespace dtrack {

namespace {

constexpr double kGammaNormTol = 1e-12;
constexpr double kMaxConditionNumber = 1e12;

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace

ModelParams ModelParams::scalar(double mu, double sigma, double mu_Z, double sigma_Z,
                                double gamma, double rho, double beta, double p, double lambda) {
  ModelParams out;
  out.d = 1;
  out.mu = Eigen::VectorXd::Constant(1, mu);
  out.sigma = Eigen::MatrixXd::Constant(1, 1, sigma);
  out.mu_Z = mu_Z;
  out.sigma_Z = sigma_Z;
  out.gamma = Eigen::VectorXd::Constant(1, gamma);
  out.rho = rho;
  out.beta = beta;
  out.p = p;
  out.lambda = lambda;
  return out;
}

DerivedConstants validate(const ModelParams& params) {
  const int d = params.d;
  if (d < 1) throw AssumptionViolated("d", "number of assets must be positive");
  if (params.mu.size() != d || params.gamma.size() != d || params.sigma.rows() != d ||
      params.sigma.cols() != d) {
    throw AssumptionViolated("dimensions", "mu, gamma must have length d and sigma be d x d");
  }
  if (!params.mu.allFinite() || !params.sigma.allFinite() || !params.gamma.allFinite()) {
    throw AssumptionViolated("finite", "market inputs must be finite");
  }
  if (std::abs(params.gamma.norm() - 1.0) > kGammaNormTol) {
    throw AssumptionViolated("|gamma|=1", "gamma has norm " + fmt(params.gamma.norm()));
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(params.sigma);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  if (!(smin > 0.0) || smax / smin > kMaxConditionNumber) {
    throw SingularSigma("sigma is singular or ill-conditioned (condition number " +
                        fmt(smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity()) +
                        ")");
  }

  if (!(params.sigma_Z >= 0.0)) throw AssumptionViolated("sigma_Z>=0", fmt(params.sigma_Z));
  if (!(params.rho > 0.0)) throw AssumptionViolated("rho>0", fmt(params.rho));
  if (!(params.beta > 0.0)) throw AssumptionViolated("beta>0", fmt(params.beta));
  if (!(params.lambda >= 0.0 && params.lambda <= 1.0)) {
    throw AssumptionViolated("lambda in [0,1]", fmt(params.lambda));
  }
  if (!(params.p < 1.0) || params.p == 0.0) {
    throw AssumptionViolated("p<1, p!=0", fmt(params.p));
  }

  DerivedConstants c;
  const Eigen::MatrixXd sigma_inv = params.sigma.inverse();
  c.market_price = sigma_inv * params.mu;
  c.merton_direction = sigma_inv.transpose() * c.market_price;
  c.benchmark_direction = sigma_inv.transpose() * params.gamma;
  c.alpha = 0.5 * c.market_price.squaredNorm();
  c.eta = params.sigma_Z * params.gamma.dot(c.market_price);

  if (!(c.alpha > 0.0)) throw AssumptionViolated("alpha>0", "mu must be nonzero");
  if (params.mu_Z < c.eta) {
    throw AssumptionViolated("mu_Z>=eta", "mu_Z = " + fmt(params.mu_Z) + " < eta = " + fmt(c.eta));
  }

  const double p = params.p;
  c.rho_0 = p > 0.0 ? std::max(params.mu_Z, std::max(2.0 * c.alpha, c.alpha * p / (1.0 - p)))
                    : std::max(params.mu_Z, 0.0);
  if (!(params.rho > c.rho_0)) {
    throw AssumptionViolated("rho>rho_0", "rho = " + fmt(params.rho) + " <= rho_0 = " + fmt(c.rho_0));
  }

  // Positive root; the product of the roots (mu_Z - rho)/alpha is negative.
  const double b = params.rho - c.eta - c.alpha;
  const double cc = params.mu_Z - params.rho;
  const double disc = std::sqrt(b * b - 4.0 * c.alpha * cc);
  c.kappa = b >= 0.0 ? 2.0 * cc / (-b - disc) : (-b + disc) / (2.0 * c.alpha);

  c.a = params.rho / c.alpha;
  c.denom = params.rho * (1.0 - p) - c.alpha * p;
  c.m_floor = std::pow(params.beta, 1.0 / (p - 1.0));
  c.m_kink = params.lambda > 0.0 ? c.m_floor / params.lambda
                                 : std::numeric_limits<double>::infinity();
  return c;
}

double utility(double c, double p) {
  if (c < 0.0 || (c == 0.0 && p < 0.0)) {
    throw DomainError("utility undefined at c = " + fmt(c) + " for p = " + fmt(p));
  }
  return std::pow(c, p) / p;
}

}  // namespace dtrack
