#pragma once

#include <optional>
#include <string>

#include "dtrack/model_params.hpp"

namespace dtrack {

/// Initial state of the original problem: wealth v, benchmark z, reference m.
struct InitialState {
  double v = 0.0;
  double z = 0.0;
  double m = 0.0;
};

struct Config {
  ModelParams params;
  std::optional<InitialState> state;
};

/// Parses {market:{d,mu,sigma,mu_Z,sigma_Z,gamma}, preference:{rho,beta,p,lambda},
/// state:{v,z,m}} with sigma row-major. `state` is optional. Scalars are
/// accepted in place of one-element arrays when d = 1. Throws ConfigError.
Config parse_config(const std::string& json_text);
Config load_config(const std::string& path);

/// Parameter sets of the sensitivity figures: "fig1" (sample path),
/// "fig2" (lambda sweep, lambda = 0.1), "fig3" (beta sweep, beta = 2) and
/// "fig4" (mu sweep, mu = 0.004). Throws ConfigError for other names.
Config preset(const std::string& name);

/// Inverse of parse_config; 17 significant digits.
std::string to_json(const Config& cfg);

}  // namespace dtrack
