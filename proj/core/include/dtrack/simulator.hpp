#pragma once

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dtrack/primal_policy.hpp"

namespace dtrack {

enum class Scheme { ProjectedEuler };

struct SimConfig {
  double x0 = 0.0;
  double z0 = 0.0;
  double m0 = 0.0;
  /// (z0 - v0)^+, the capital injected at time zero.
  double initial_injection = 0.0;
  double dt = 1e-3;
  double horizon = 5.0;
  std::int64_t n_paths = 1000;
  std::uint64_t seed = 0;
  Scheme scheme = Scheme::ProjectedEuler;
  /// Pair path 2k+1 with the negated increments of path 2k.
  bool antithetic = true;

  /// Reflected coordinate x0 = (v0 - z0)^+ and injection (z0 - v0)^+.
  static SimConfig from_wealth(double v0, double z0, double m0);
  /// Smallest T with exp(-rho T) <= tail.
  static double horizon_for(double rho, double tail);
};

/// Per-step arrays of one simulated path. Index k is time t[k] = k dt; dL[k]
/// and the controls at k belong to the step [t[k], t[k+1]).
struct SimPath {
  std::vector<double> t, X, Z, M, dL, c, Y, V, A;
  Eigen::MatrixXd theta;  ///< d x (steps + 1)
  /// Increments of W used on each step, d x steps.
  Eigen::MatrixXd dW;
};

/// Controls for one state of a path. Implementations may cache between calls.
class ControlCursor {
 public:
  virtual ~ControlCursor() = default;
  /// Controls at (x, z, m); may raise m (the running maximum) and returns it.
  virtual void control(double x, double z, double& m, double& c, Eigen::VectorXd& theta, double& y) = 0;
};

/// A feedback rule (theta, c) with its running-maximum update.
class FeedbackRule {
 public:
  virtual ~FeedbackRule() = default;
  virtual std::unique_ptr<ControlCursor> start() const = 0;
};

/// The optimal rule from the closed-form solution.
class OptimalRule final : public FeedbackRule {
 public:
  explicit OptimalRule(const PrimalPolicy& policy) : policy_(&policy) {}
  std::unique_ptr<ControlCursor> start() const override;

 private:
  const PrimalPolicy* policy_;
};

/// Constant theta and consumption; m tracks the running maximum of c.
class ConstantRule final : public FeedbackRule {
 public:
  ConstantRule(Eigen::VectorXd theta, double c) : theta_(std::move(theta)), c_(c) {}
  std::unique_ptr<ControlCursor> start() const override;

 private:
  Eigen::VectorXd theta_;
  double c_;
};

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t n_paths = 0;
  /// exp(-rho T): weight of the truncated tail relative to the full horizon.
  double tail_factor = 0.0;
};

struct DualPathCheck {
  double rms_residual = 0.0;  ///< RMS of (observed - model) increments over Y sqrt(dt)
  double max_residual = 0.0;  ///< largest |observed - model| / (Y sqrt(dt))
  double slope = 0.0;         ///< regression slope of observed on model increments
  std::int64_t steps_used = 0;
  std::int64_t reflection_steps = 0;
  /// Largest implied dL^Y / (Y sqrt(dt)) on steps away from Y = beta.
  double off_boundary_push = 0.0;
};

class Simulator {
 public:
  explicit Simulator(const PrimalPolicy& policy) : policy_(&policy) {}

  const Model& model() const { return policy_->model(); }

  /// One path under `rule`, driven by the stream of (seed, path_index).
  SimPath simulate_path(const SimConfig& cfg, const FeedbackRule& rule, std::int64_t path_index) const;
  /// The same under the optimal rule; Y holds f(X, Z, M).
  SimPath simulate_path(const SimConfig& cfg, std::int64_t path_index) const;

  /// E[int e^{-rho t} U(c) dt - beta int e^{-rho t} dL^X] over [0, T].
  Estimate estimate_objective(const SimConfig& cfg, const FeedbackRule& rule) const;
  Estimate estimate_objective(const SimConfig& cfg) const;
  /// E[(z0 - v0)^+ + int e^{-rho t} dL^X] over [0, T] under the optimal rule.
  Estimate estimate_injection(const SimConfig& cfg) const;
  /// Both estimates from one set of optimal paths.
  std::pair<Estimate, Estimate> estimate_objective_and_injection(const SimConfig& cfg) const;
  /// E[int e^{-rho t} Y^{p/(p-1)} dt] for the reflected dual process from
  /// Y0 = f(x0, z0, m0).
  Estimate simulate_dual_Y(const SimConfig& cfg) const;
  /// E[exp(-rho T) Y_T^{p/(p-1)}] for the same process.
  Estimate dual_Y_terminal(const SimConfig& cfg) const;

 private:
  Estimate dual_Y(const SimConfig& cfg, bool terminal) const;

  const PrimalPolicy* policy_;
};

/// V = X + Z - L^X and A = (z0 - v0)^+ + L^X, filled into path.V and path.A.
void reconstruct(SimPath& path, double initial_injection);

/// Tests the increments of Y = f(X, Z, M) against dY = rho Y dt -
/// (sigma^{-1} mu)^T Y dW - dL^Y away from the reflection set.
DualPathCheck dual_path_check(const SimPath& path, const Model& model);

/// Pools dual_path_check statistics over many paths.
class DualPathStats {
 public:
  explicit DualPathStats(const Model& model) : model_(&model) {}
  void add(const SimPath& path);
  DualPathCheck result() const;

 private:
  const Model* model_;
  DualPathCheck acc_;
  double sq_ = 0.0, sp_ = 0.0, so_ = 0.0, spp_ = 0.0, spo_ = 0.0;
};

/// Stream seed for (seed, index); distinct indices give independent streams.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace dtrack
