#include <gtest/gtest.h>

#include "dtrack/errors.hpp"
#include "dtrack/simulator.hpp"
#include "fixtures.hpp"

using namespace dtrack;
using dtrack::testing::fig_params;

namespace {

SimConfig fig1_config(std::int64_t paths, double horizon = 1.0) {
  SimConfig cfg = SimConfig::from_wealth(20.0, 10.0, 6.0);
  cfg.dt = 1e-3;
  cfg.horizon = horizon;
  cfg.n_paths = paths;
  cfg.seed = 42;
  return cfg;
}

class Fig1Sim : public ::testing::Test {
 protected:
  Fig1Sim() : model_(fig_params("fig1")), pol_(model_), sim_(pol_) {}
  Model model_;
  PrimalPolicy pol_;
  Simulator sim_;
};

}  // namespace

TEST(SimConfig, FromWealthAndHorizon) {
  const SimConfig a = SimConfig::from_wealth(20.0, 10.0, 6.0);
  EXPECT_EQ(a.x0, 10.0);
  EXPECT_EQ(a.initial_injection, 0.0);
  const SimConfig b = SimConfig::from_wealth(4.0, 10.0, 6.0);
  EXPECT_EQ(b.x0, 0.0);
  EXPECT_EQ(b.initial_injection, 6.0);
  const double T = SimConfig::horizon_for(2.0, 1e-4);
  EXPECT_LE(std::exp(-2.0 * T), 1e-4 * (1 + 1e-12));
  EXPECT_GT(std::exp(-2.0 * (T - 1e-3)), 1e-4);
}

TEST(Simulator, DeterministicBenchmarkDrain) {
  ModelParams p = fig_params("fig2");
  p.sigma_Z = 0.0;
  const Model model(p);
  const PrimalPolicy pol(model);
  const Simulator sim(pol);
  SimConfig cfg;
  cfg.x0 = 0.3;
  cfg.z0 = 10.0;
  cfg.m0 = 1.0;
  cfg.dt = 1e-2;
  cfg.horizon = 20.0;
  cfg.seed = 1;
  const ConstantRule rule(Eigen::VectorXd::Zero(1), 0.0);
  SimPath path = sim.simulate_path(cfg, rule, 0);
  reconstruct(path, 0.0);
  for (std::size_t k = 0; k < path.t.size(); ++k) {
    const double Z = 10.0 * std::exp(p.mu_Z * path.t[k]);
    EXPECT_NEAR(path.Z[k], Z, 1e-12 * Z);
    EXPECT_NEAR(path.X[k], std::max(0.0, 0.3 - (Z - 10.0)), 1e-10);
    EXPECT_NEAR(path.A[k], std::max(0.0, Z - 10.3), 1e-10 * Z);
    EXPECT_NEAR(path.V[k], 10.3, 1e-10 * Z);
    EXPECT_EQ(path.M[k], 1.0);
  }
  EXPECT_GT(path.A.back(), 1.0);
}

TEST_F(Fig1Sim, PathwiseInvariants) {
  const SimConfig cfg = fig1_config(6);
  const double lam = model_.params.lambda, beta = model_.params.beta;
  for (std::int64_t i = 0; i < cfg.n_paths; ++i) {
    SimPath path = sim_.simulate_path(cfg, i);
    reconstruct(path, cfg.initial_injection);
    EXPECT_EQ(path.A.front(), 0.0);
    for (std::size_t k = 0; k < path.t.size(); ++k) {
      EXPECT_GE(path.X[k], 0.0);
      EXPECT_GT(path.Y[k], 0.0);
      EXPECT_LE(path.Y[k], beta * (1 + 1e-12));
      EXPECT_NEAR(path.V[k] + path.A[k] - path.Z[k], path.X[k], 1e-10 * (1 + path.Z[k]));
      if (k == 0) continue;
      EXPECT_GE(path.M[k], path.M[k - 1]);
      EXPECT_GE(path.A[k], path.A[k - 1]);
      EXPECT_GE(path.dL[k - 1], 0.0);
      if (path.dL[k - 1] > 0.0) {
        EXPECT_EQ(path.X[k], 0.0);
      }
    }
    for (std::size_t k = 0; k + 1 < path.t.size(); ++k) {
      EXPECT_GE(path.c[k], lam * path.M[k] * (1 - 1e-12));
      EXPECT_LE(path.c[k], path.M[k] * (1 + 1e-12));
    }
  }
}

TEST_F(Fig1Sim, ConsumptionPinnedDuringInjection) {
  const SimConfig cfg = fig1_config(20, 3.0);
  int injections = 0;
  for (std::int64_t i = 0; i < cfg.n_paths; ++i) {
    const SimPath path = sim_.simulate_path(cfg, i);
    for (std::size_t k = 0; k + 1 < path.t.size(); ++k)
      if (path.dL[k] > 0.0) {
        ++injections;
        EXPECT_NEAR(path.c[k], model_.params.lambda * path.M[k], 1e-9 * path.M[k]);
      }
  }
  EXPECT_GT(injections, 0);
}

TEST_F(Fig1Sim, Reproducible) {
  const SimConfig cfg = fig1_config(4, 0.5);
  const SimPath a = sim_.simulate_path(cfg, 3), b = sim_.simulate_path(cfg, 3);
  EXPECT_EQ(a.X, b.X);
  EXPECT_EQ(a.Z, b.Z);
  EXPECT_EQ(a.M, b.M);
  EXPECT_EQ(a.c, b.c);
  EXPECT_TRUE(a.theta == b.theta);
  const SimPath c = sim_.simulate_path(cfg, 2);
  EXPECT_TRUE(c.dW == -a.dW);
  EXPECT_NE(sim_.simulate_path(cfg, 0).X, a.X);
  const Estimate e1 = sim_.estimate_objective(cfg), e2 = sim_.estimate_objective(cfg);
  EXPECT_EQ(e1.mean, e2.mean);
  EXPECT_EQ(e1.std_error, e2.std_error);
}

TEST_F(Fig1Sim, ObjectiveAndInjectionAgreeWithSeparateRuns) {
  const SimConfig cfg = fig1_config(8, 0.5);
  const auto [obj, inj] = sim_.estimate_objective_and_injection(cfg);
  EXPECT_DOUBLE_EQ(obj.mean, sim_.estimate_objective(cfg).mean);
  EXPECT_DOUBLE_EQ(inj.mean, sim_.estimate_injection(cfg).mean);
  EXPECT_NEAR(obj.tail_factor, std::exp(-model_.params.rho * 0.5), 1e-12);
}

TEST_F(Fig1Sim, DualProcessBounds) {
  SimConfig cfg = fig1_config(200, 2.0);
  cfg.dt = 1e-2;
  const double q = model_.params.p / (model_.params.p - 1);
  const Estimate e = sim_.simulate_dual_Y(cfg);
  EXPECT_GT(e.mean, 0.0);
  EXPECT_LE(e.mean, std::pow(model_.params.beta, q) / model_.params.rho);
  double prev = std::numeric_limits<double>::infinity();
  for (double T : {1.0, 2.0, 4.0, 8.0}) {
    cfg.horizon = T;
    const double v = sim_.dual_Y_terminal(cfg).mean;
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST_F(Fig1Sim, DualPathIdentity) {
  SimConfig cfg = fig1_config(10, 0.5);
  cfg.dt = 1e-4;
  DualPathStats stats(model_);
  for (std::int64_t i = 0; i < cfg.n_paths; ++i) stats.add(sim_.simulate_path(cfg, i));
  const DualPathCheck r = stats.result();
  EXPECT_GT(r.steps_used, 0);
  EXPECT_NEAR(r.slope, 1.0, 0.05);
  EXPECT_LT(r.rms_residual, 0.05);
}

TEST(Simulator, RejectsBadConfig) {
  const Model model(fig_params("fig1"));
  const PrimalPolicy pol(model);
  const Simulator sim(pol);
  SimConfig cfg = fig1_config(1);
  cfg.dt = 0.0;
  EXPECT_THROW(sim.simulate_path(cfg, 0), DomainError);
  cfg = fig1_config(0);
  EXPECT_THROW(sim.estimate_objective(cfg), DomainError);
}
