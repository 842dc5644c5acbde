#include <gtest/gtest.h>

#include <random>

#include "dtrack/errors.hpp"
#include "dtrack/no_drawdown.hpp"
#include "dtrack/primal_policy.hpp"
#include "fixtures.hpp"

using namespace dtrack;
using dtrack::testing::fig_params;
using dtrack::testing::log_space;
using dtrack::testing::rel_err;

namespace {

const std::vector<double> kZ{0.0, 1.0, 10.0, 100.0};

class PolicyFig : public ::testing::TestWithParam<const char*> {
 protected:
  PolicyFig() : model_(fig_params(GetParam())), pol_(model_) {}
  std::vector<double> ms(int n) const { return log_space(model_.consts.m_floor, 1e3 * model_.consts.m_floor, n); }
  Model model_;
  PrimalPolicy pol_;
};

}  // namespace

TEST_P(PolicyFig, ThresholdsOrdered) {
  const double mk = model_.consts.m_kink;
  for (double m : ms(24))
    for (double z : kZ) {
      const Thresholds F = pol_.thresholds(z, m);
      EXPECT_GE(F.F1, 0.0);
      EXPECT_LE(F.F1, F.F2 * (1 + 1e-14));
      EXPECT_LE(F.F2, F.F3 * (1 + 1e-14));
      if (m <= mk) {
        EXPECT_EQ(F.F1, 0.0);
      }
    }
  for (double z : kZ) EXPECT_NEAR(pol_.thresholds(z, model_.consts.m_floor).F3, 0.0, 1e-12 * (1 + z));
}

TEST_P(PolicyFig, MStarInvertsF3) {
  for (double z : kZ) {
    EXPECT_NEAR(pol_.m_star(0.0, z), model_.consts.m_floor, 1e-12);
    double prev = 0.0;
    for (double x : log_space(1e-3, 1e4, 30)) {
      const double m = pol_.m_star(x, z);
      EXPECT_GT(m, prev);
      prev = m;
    }
    for (double m : ms(20)) EXPECT_LE(rel_err(pol_.m_star(pol_.thresholds(z, m).F3, z), m), 1e-8);
  }
}

TEST_P(PolicyFig, MStarGrowthIsAtMostLinear) {
  const double beta = model_.params.beta, p = model_.params.p;
  double worst_small = 0.0, worst_large = 0.0;
  for (double x : log_space(1.0, 1e5, 40)) {
    const double m = pol_.m_star(x, 10.0);
    const double ratio = m * std::log(beta * std::pow(m, 1 - p)) / (1 + x);
    (x < 1e3 ? worst_small : worst_large) = std::max(x < 1e3 ? worst_small : worst_large, ratio);
  }
  EXPECT_LE(worst_large, 2.0 * worst_small);
}

TEST_P(PolicyFig, DualStateEndpoints) {
  for (double m : ms(12))
    for (double z : kZ) {
      const Thresholds F = pol_.thresholds(z, m);
      EXPECT_LE(rel_err(pol_.dual_state(0.0, z, m), model_.params.beta), 1e-10);
      EXPECT_LE(rel_err(pol_.dual_state(F.F2, z, m), std::pow(m, model_.params.p - 1)), 1e-10);
      EXPECT_LE(rel_err(pol_.dual_state(F.F3, z, m), pol_.dual().boundary().y_star(m)), 1e-10);
      if (F.F3 > 0) {
        EXPECT_THROW(pol_.dual_state(F.F3 * 1.01 + 1e-6, z, m), OutOfRegion);
      }
    }
}

TEST_P(PolicyFig, ValueIsLipschitzWithSlopeF) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double beta = model_.params.beta;
  for (int i = 0; i < 300; ++i) {
    const double m = model_.consts.m_floor * std::pow(1e3, u(rng));
    const double z = kZ[i % kZ.size()];
    const double f3 = pol_.thresholds(z, m).F3;
    const double x1 = 1.5 * f3 * u(rng), x2 = 1.5 * f3 * u(rng);
    const double v1 = pol_.value(x1, z, m), v2 = pol_.value(x2, z, m);
    EXPECT_LE(std::abs(v1 - v2), beta * std::abs(x1 - x2) * (1 + 1e-12) + 1e-13);
    const double x = f3 * u(rng), h = 1e-5 * (1 + x);
    if (x > h && x + h < f3) {
      const double fd = (pol_.value(x + h, z, m) - pol_.value(x - h, z, m)) / (2 * h);
      EXPECT_LE(rel_err(fd, pol_.dual_state(x, z, m)), 1e-6);
    }
  }
}

TEST_P(PolicyFig, ConsumptionBranches) {
  const double lam = model_.params.lambda, p = model_.params.p;
  for (double m : ms(16))
    for (double z : kZ) {
      const Thresholds F = pol_.thresholds(z, m);
      if (m > model_.consts.m_kink) {
        EXPECT_LE(rel_err(pol_.consumption(0.0, z, m), lam * m), 1e-12);
        EXPECT_EQ(pol_.region_classify(0.0, z, m), Region::R1);
      } else {
        EXPECT_LE(rel_err(pol_.consumption(0.0, z, m), model_.consts.m_floor), 1e-10);
      }
      for (double s : {0.0, 0.5, 1.0}) {
        const double x = F.F2 + s * (F.F3 - F.F2);
        EXPECT_LE(rel_err(pol_.consumption(x, z, m), m), 1e-12);
      }
      // Continuity across F1 and F2.
      for (double Fi : {F.F1, F.F2}) {
        if (Fi <= 0.0) continue;
        const double lo = pol_.consumption(Fi * (1 - 1e-11), z, m), hi = pol_.consumption(Fi * (1 + 1e-11), z, m);
        EXPECT_LE(std::abs(lo - hi) / m, 1e-8);
      }
      const double xm = 0.5 * (F.F1 + F.F2);
      if (F.F2 > F.F1) {
        EXPECT_LE(rel_err(pol_.consumption(xm, z, m), std::pow(pol_.dual_state(xm, z, m), 1 / (p - 1))), 1e-12);
      }
    }
}

TEST_P(PolicyFig, RegionFiveJumps) {
  for (double m : ms(8))
    for (double z : kZ) {
      const double x = pol_.thresholds(z, m).F3 * 1.1 + 0.1;
      const PolicyPoint pt = pol_.evaluate(x, z, m);
      EXPECT_EQ(pt.region, Region::R5);
      EXPECT_GT(pt.m_eff, m);
      EXPECT_LE(rel_err(pt.c, pol_.m_star(x, z)), 1e-10);
      EXPECT_LE(rel_err(pt.v, pol_.value(x, z, pt.m_eff)), 1e-12);
    }
  EXPECT_EQ(pol_.region_classify(1.0, 1.0, 0.5 * model_.consts.m_floor), Region::R5);
}

TEST_P(PolicyFig, PortfolioPositiveWithLinearGrowth) {
  // The benchmark hedge has the sign of gamma, so positivity is claimed only for gamma > 0.
  const bool hedge_up = model_.params.gamma(0) > 0.0;
  double worst = 0.0;
  for (double m : ms(10))
    for (double z : kZ)
      for (double x : {0.0, 1.0, 10.0, 100.0, 1000.0}) {
        const Eigen::VectorXd th = pol_.portfolio(x, z, m);
        ASSERT_EQ(th.size(), 1);
        if (hedge_up) {
          EXPECT_GT(th(0), 0.0);
        }
        worst = std::max(worst, th.norm() / (1 + x + z + m));
      }
  EXPECT_TRUE(std::isfinite(worst));
  const Eigen::VectorXd far = pol_.portfolio(1e6, 10.0, 1.0);
  EXPECT_LE(far.norm() / (1 + 1e6), 10 * worst);
}

TEST_P(PolicyFig, PrimalHjbAndBoundaryIdentities) {
  for (double m : ms(10))
    for (double z : kZ) {
      const double f3 = pol_.thresholds(z, m).F3;
      for (int i = 0; i <= 8; ++i) EXPECT_LE(std::abs(pol_.hjb_residual(f3 * i / 8.0, z, m)), 1e-6);
      EXPECT_LE(rel_err(pol_.partials(0.0, z, m).v_x, model_.params.beta), 1e-12);
      const PrimalPartials d = pol_.partials(f3, z, m);
      EXPECT_LE(std::abs(d.v_m) * m / (1 + std::abs(d.v)), 1e-6);
      EXPECT_LT(d.v_xx, 0.0);
      EXPECT_THROW(pol_.hjb_residual(f3 * 1.1 + 1.0, z, m), OutOfRegion);
    }
}

TEST_P(PolicyFig, OriginalValue) {
  const double z = 10.0, m = 6.0, beta = model_.params.beta;
  EXPECT_DOUBLE_EQ(pol_.original_value(z, z, m), pol_.value(0.0, z, m));
  EXPECT_NEAR(pol_.original_value(0.0, z, m), pol_.value(0.0, z, m) - beta * z, 1e-12);
  double prev = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 100; ++i) {
    const double w = pol_.original_value(0.4 * i, z, m);
    EXPECT_GE(w, prev);
    prev = w;
  }
}

TEST_P(PolicyFig, CursorAgreesWithEvaluate) {
  PolicyCursor cur = pol_.cursor();
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  double x = 5.0, z = 10.0, m = 6.0;
  for (int k = 0; k < 400; ++k) {
    x = std::max(0.0, x + 0.3 * n(rng));
    z = z * std::exp(0.02 * n(rng));
    const StepControl s = cur.advance(x, z, m);
    const PolicyPoint pt = pol_.evaluate(x, z, m);
    EXPECT_LE(rel_err(s.m, pt.m_eff), 1e-10);
    EXPECT_LE(rel_err(s.c, pt.c), 1e-9);
    EXPECT_LE(rel_err(s.y, pt.y), 1e-9);
    const Eigen::VectorXd th = pol_.theta_from_dual(s.y_vyy, s.one_minus_vyz, z);
    EXPECT_LE((th - pt.theta).norm() / (1 + pt.theta.norm()), 1e-8);
    m = s.m;
  }
}

INSTANTIATE_TEST_SUITE_P(Presets, PolicyFig, ::testing::Values("fig1", "fig2", "fig3", "fig4"));

TEST(PrimalPolicy, NoDrawdownMatchesClosedForm) {
  for (const char* name : {"fig1", "fig2", "fig3"}) {
    const Model model(dtrack::testing::with_lambda(fig_params(name), 0.0));
    const PrimalPolicy pol(model);
    const NoDrawdown nd(model);
    for (double m : log_space(model.consts.m_floor, 1e3 * model.consts.m_floor, 6))
      for (double z : kZ) {
        const double f3 = pol.thresholds(z, m).F3;
        for (int i = 0; i <= 6; ++i) {
          const double x = f3 * i / 6.0;
          EXPECT_LE(rel_err(pol.value(x, z, m), nd.value(x, z)), 1e-10);
          EXPECT_LE(rel_err(pol.consumption(x, z, m), nd.consumption(x, z)), 1e-10);
          EXPECT_LE(rel_err(pol.consumption(x, z, m), std::pow(nd.dual_state(x, z), 1 / (model.params.p - 1))), 1e-10);
          EXPECT_LE((pol.portfolio(x, z, m) - nd.portfolio(x, z)).norm() / nd.portfolio(x, z).norm(), 1e-10);
        }
      }
  }
}

TEST(PrimalPolicy, NoDrawdownWealthInverse) {
  const Model model(dtrack::testing::with_lambda(fig_params("fig2"), 0.0));
  const NoDrawdown nd(model);
  for (double z : kZ)
    for (double x : {0.0, 0.5, 5.0, 50.0, 500.0}) EXPECT_NEAR(nd.wealth(nd.dual_state(x, z), z), x, 1e-10 * (1 + x));
  EXPECT_NEAR(nd.dual_state(0.0, 3.0), model.params.beta, 1e-12);
}

TEST(PrimalPolicy, DrawdownLowersConsumptionAtLargeWealth) {
  const Model m0(dtrack::testing::with_lambda(fig_params("fig2"), 0.0));
  const PrimalPolicy p0(m0);
  const double z = 10.0, m = 20.0;
  const double x0 = p0.thresholds(z, m).F3;
  for (double lam : {0.05, 0.1, 0.5, 1.0}) {
    const Model ml(dtrack::testing::with_lambda(fig_params("fig2"), lam));
    const PrimalPolicy pl(ml);
    for (double x : {1.5 * x0, 5 * x0, 20 * x0}) EXPECT_LE(pl.consumption(x, z, m), p0.consumption(x, z, m)) << lam;
  }
}

TEST(PrimalPolicy, TwoAssetHjb) {
  const Model model(dtrack::testing::two_asset());
  const PrimalPolicy pol(model);
  for (double m : log_space(model.consts.m_floor, 1e2 * model.consts.m_floor, 5))
    for (double z : kZ) {
      const double f3 = pol.thresholds(z, m).F3;
      for (int i = 0; i <= 4; ++i) EXPECT_LE(std::abs(pol.hjb_residual(f3 * i / 4.0, z, m)), 1e-6);
    }
}
