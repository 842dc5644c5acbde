#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dtrack/config_io.hpp"
#include "dtrack/model_params.hpp"

namespace dtrack {

enum class Suite { Analytic, Duality, MonteCarlo, All };

struct CheckReport {
  std::string check_name;
  std::string grid;
  double max_violation = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  /// Non-gating checks are reported but never fail a run.
  bool gating = true;
  /// Worst points, most severe first.
  std::vector<std::string> findings;
};

struct VerifyOptions {
  /// Initial state for the Monte Carlo checks.
  InitialState state{20.0, 10.0, 6.0};
  double dt = 1e-3;
  std::int64_t n_paths = 10000;
  std::uint64_t seed = 20240611;
  /// Horizon chosen so that exp(-rho T) is at most this. Small enough that
  /// the truncated tail stays well below one standard error at 1e4 paths.
  double tail = 1e-7;
  /// Dual-path identity: step, paths and horizon.
  double dual_dt = 1e-4;
  std::int64_t dual_paths = 100;
  double dual_horizon = 1.0;
};

std::vector<CheckReport> run_suite(const ModelParams& params, Suite suite, const VerifyOptions& opts = {});

/// True when every gating check passed.
bool gating_pass(const std::vector<CheckReport>& reports);

std::string to_json(const std::vector<CheckReport>& reports);

Suite parse_suite(const std::string& name);

}  // namespace dtrack
