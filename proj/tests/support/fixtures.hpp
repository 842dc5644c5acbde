#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "dtrack/config_io.hpp"
#include "dtrack/model_params.hpp"

namespace dtrack::testing {

inline ModelParams fig_params(const char* name) { return preset(name).params; }

inline ModelParams with_lambda(ModelParams p, double lambda) {
  p.lambda = lambda;
  return p;
}

/// rho = 2, p = -2, lambda = 0.2, mu = 0.01, sigma = 0.02, beta = 2: the
/// boundary-map illustration set, with the fig2 benchmark.
inline ModelParams reference_pm2() { return ModelParams::scalar(0.01, 0.02, 0.05, 0.05, 1.0, 2.0, 2.0, -2.0, 0.2); }

/// Two assets with a correlated benchmark.
inline ModelParams two_asset() {
  ModelParams p;
  p.d = 2;
  p.mu = Eigen::Vector2d(0.03, 0.02);
  p.sigma.resize(2, 2);
  p.sigma << 0.2, 0.0, 0.05, 0.15;
  p.gamma = Eigen::Vector2d(0.6, 0.8);
  p.mu_Z = 0.2;
  p.sigma_Z = 0.1;
  p.rho = 1.0;
  p.beta = 1.5;
  p.p = -0.5;
  p.lambda = 0.3;
  return p;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1e-300, std::abs(b)); }

inline std::vector<double> log_space(double lo, double hi, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(lo * std::pow(hi / lo, n == 1 ? 0.0 : static_cast<double>(i) / (n - 1)));
  return out;
}

}  // namespace dtrack::testing
