#include <gtest/gtest.h>

#include <random>

#include "dtrack/dual_solution.hpp"
#include "dtrack/errors.hpp"
#include "fixtures.hpp"

using namespace dtrack;
using dtrack::testing::fig_params;
using dtrack::testing::log_space;
using dtrack::testing::rel_err;

namespace {

// Interior y points on each piece of [y*(m), beta].
std::vector<double> y_points(const Model& model, const Coefficients& coef, int per_piece) {
  const double beta = model.params.beta, p = model.params.p, lam = model.params.lambda;
  const double y2 = std::min(beta, std::pow(coef.m, p - 1.0));
  const double y1 = lam > 0 ? std::min(beta, std::pow(lam * coef.m, p - 1.0)) : beta;
  std::vector<double> out;
  for (auto [lo, hi] : {std::pair{y1, beta}, std::pair{y2, y1}, std::pair{coef.y_star, y2}}) {
    if (!(hi > lo * (1 + 1e-9))) continue;
    for (int i = 0; i < per_piece; ++i) out.push_back(lo * std::pow(hi / lo, (i + 0.5) / per_piece));
  }
  return out;
}

class DualFig : public ::testing::TestWithParam<const char*> {
 protected:
  DualFig() : model_(fig_params(GetParam())), dual_(model_) {}
  std::vector<double> ms(int n) const { return log_space(model_.consts.m_floor, 1e3 * model_.consts.m_floor, n); }
  Model model_;
  DualSolution dual_;
};

}  // namespace

TEST(DualSolution, C6NoDrawdownClosedForm) {
  const Model model(dtrack::testing::with_lambda(fig_params("fig2"), 0.0));
  const DualSolution dual(model);
  const double al = model.consts.alpha, rho = model.params.rho, p = model.params.p, beta = model.params.beta;
  const double D = rho * (1 - p) - al * p;
  for (double m : log_space(model.consts.m_floor, 1e3 * model.consts.m_floor, 20)) {
    const double expected = std::pow(al, 3) * std::pow(beta, -rho / al) * std::pow(m, (al * p - (1 - p) * rho) / al) /
                            (rho * std::pow(al + rho, 2) * D);
    EXPECT_LE(rel_err(dual.coefficient_C6(m), expected), 1e-8) << m;
    EXPECT_LE(rel_err(dual.coefficient_C6_exact(m), expected), 1e-8) << m;
  }
}

TEST(DualSolution, NoDrawdownMidCoefficients) {
  const Model model(dtrack::testing::with_lambda(fig_params("fig2"), 0.0));
  const DualSolution dual(model);
  const double al = model.consts.alpha, rho = model.params.rho, p = model.params.p, beta = model.params.beta;
  const double c3 = (1 - p) * (1 - p) * std::pow(beta, p / (p - 1)) / (rho * (1 - p) - al * p);
  for (double m : log_space(model.consts.m_floor, 1e2 * model.consts.m_floor, 9)) {
    const Coefficients c = dual.coefficients(m);
    EXPECT_LE(rel_err(c.C[2], c3), 1e-12) << m;
    // C4 vanishes up to the rounding of the linear solve, measured on the scale it multiplies.
    EXPECT_LE(std::abs(c.B_scaled[1]), 1e-12 * c3) << m;
  }
}

TEST_P(DualFig, C6PositiveAndBelowTailBound) {
  const double al = model_.consts.alpha, rho = model_.params.rho, p = model_.params.p, beta = model_.params.beta;
  const double D = rho * (1 - p) - al * p;
  for (double m : ms(50)) {
    const double log_c6 = dual_.log_coefficient_C6(m);
    const double log_bound = -(rho / al) * std::log(beta) - (D / al) * std::log(m) - std::log(rho * (al + rho) * D);
    EXPECT_TRUE(std::isfinite(log_c6)) << m;
    EXPECT_LE(log_c6, log_bound + 1e-12) << m;
    EXPECT_NEAR(log_c6, dual_.log_coefficient_C6_exact(m), 1e-9) << m;
  }
}

TEST_P(DualFig, NeumannAndPrintedFormulas) {
  for (double m : ms(32)) {
    const Coefficients c = dual_.coefficients(m);
    EXPECT_LE(c.neumann_residual, 1e-8) << m;
    EXPECT_LE(c.printed_discrepancy, 1e-6) << m;
    for (double z : {0.0, 1.0, 10.0, 100.0}) EXPECT_NEAR(dual_.dual_value(model_.params.beta, z, c).dy, 0.0, 1e-10);
  }
}

TEST_P(DualFig, PsiClosedForm) {
  const double beta = model_.params.beta, k = model_.consts.kappa;
  const PsiEval top = dual_.psi(beta);
  EXPECT_NEAR(top.dy, 0.0, 1e-15);
  EXPECT_NEAR(top.value, beta * (1 - 1 / k), 1e-13 * beta);
  const double muZ = model_.params.mu_Z, rho = model_.params.rho, eta = model_.consts.eta, al = model_.consts.alpha;
  for (double y : log_space(1e-4 * beta, beta, 20)) {
    const PsiEval s = dual_.psi(y);
    const double r = (muZ - rho) * s.value + (rho - eta) * y * s.dy + al * y * y * s.dyy - (muZ - eta) * y;
    EXPECT_LE(std::abs(r), 1e-10 * (std::abs(s.value) + y)) << y;
  }
  EXPECT_THROW(dual_.psi(0.0), DomainError);
  EXPECT_THROW(dual_.psi(1.1 * beta), DomainError);
}

TEST_P(DualFig, PhiIsTheConsumptionSup) {
  const double p = model_.params.p, lam = model_.params.lambda;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 30; ++i) {
    const double m = model_.consts.m_floor * std::pow(100.0, u(rng));
    const double y = model_.params.beta * std::pow(1e-3, u(rng));
    double best = -std::numeric_limits<double>::infinity();
    const double lo = std::max(lam * m, 1e-3 * m);
    for (int j = 0; j <= 10000; ++j) {
      const double c = lo + (m - lo) * j / 10000.0;
      best = std::max(best, utility(c, p) - c * y);
    }
    if (lam * m > 0.0 || std::pow(y, 1 / (p - 1)) > lo) {
      EXPECT_LE(rel_err(dual_.phi(y, m), best), 1e-6) << y << " " << m;
    }
  }
  if (lam > 0) {
    const double m = 3 * model_.consts.m_kink;
    const double y1 = std::pow(lam * m, p - 1), y2 = std::pow(m, p - 1);
    EXPECT_NEAR(dual_.phi(y1 * (1 + 1e-13), m), dual_.phi(y1 * (1 - 1e-13), m), 1e-11 * std::abs(dual_.phi(y1, m)));
    EXPECT_NEAR(dual_.phi(y2 * (1 + 1e-13), m), dual_.phi(y2 * (1 - 1e-13), m), 1e-11 * std::abs(dual_.phi(y2, m)));
  }
}

TEST_P(DualFig, ConvexDecreasingAndSeparated) {
  for (double m : log_space(model_.consts.m_floor, 1e3 * model_.consts.m_floor, 5)) {
    const Coefficients c = dual_.coefficients(m);
    for (double y : y_points(model_, c, 7))
      for (double z : {0.0, 0.5, 3.0, 10.0, 100.0}) {
        const DualEval e = dual_.dual_value(y, z, c);
        EXPECT_GT(e.dyy, 0.0);
        EXPECT_LE(e.dy, 1e-12);
        const DualEval e0 = dual_.dual_value(y, 0.0, c);
        EXPECT_NEAR(e.value - e0.value, z * dual_.psi(y).value, 1e-12 * (std::abs(e.value) + std::abs(e0.value)));
        EXPECT_NEAR(e.dyz, dual_.psi(y).dy, 1e-15);
      }
  }
}

TEST_P(DualFig, GradientsMatchDifferences) {
  for (double m : log_space(model_.consts.m_floor * 1.01, 1e3 * model_.consts.m_floor, 9)) {
    const Coefficients c = dual_.coefficients(m);
    const double hm = 1e-5 * m;
    const Coefficients cp = dual_.coefficients(m + hm), cm = dual_.coefficients(m - hm);
    for (double y : y_points(model_, c, 5)) {
      for (double z : {0.0, 10.0}) {
        const DualEval e = dual_.dual_value(y, z, c);
        const double hy = 1e-5 * y;
        const DualEval yp = dual_.dual_value_unchecked(y + hy, z, c), ym = dual_.dual_value_unchecked(y - hy, z, c);
        const double scale = 1.0 + std::abs(e.value);
        EXPECT_LE(std::abs((yp.value - ym.value) / (2 * hy) - e.dy) * y / scale, 1e-6);
        EXPECT_LE(std::abs((yp.dy - ym.dy) / (2 * hy) - e.dyy) * y * y / scale, 1e-6);
        const DualEval mp = dual_.dual_value_unchecked(y, z, cp), mm = dual_.dual_value_unchecked(y, z, cm);
        EXPECT_LE(std::abs((mp.value - mm.value) / (2 * hm) - e.dm) * m / scale, 1e-6) << "y=" << y << " m=" << m;
        EXPECT_LE(std::abs((mp.dy - mm.dy) / (2 * hm) - e.dym) * m * y / scale, 1e-6) << "y=" << y << " m=" << m;
      }
    }
  }
}

TEST_P(DualFig, SuperContactAtFreeBoundary) {
  for (double m : log_space(model_.consts.m_floor * 1.01, 1e3 * model_.consts.m_floor, 15)) {
    const Coefficients c = dual_.coefficients(m);
    for (double z : {0.0, 10.0}) {
      const DualEval e = dual_.dual_value(c.y_star, z, c);
      EXPECT_LE(std::abs(e.dm) * m / (1 + std::abs(e.value)), 1e-8) << m;
      EXPECT_LE(std::abs(e.dym) * m * c.y_star / (1 + std::abs(e.value)), 1e-8) << m;
    }
  }
}

TEST_P(DualFig, PdeResidualAcrossPieces) {
  for (double m : ms(5)) {
    const Coefficients c = dual_.coefficients(m);
    for (double y : y_points(model_, c, 10))
      for (double z : {0.0, 1.0, 10.0, 50.0, 100.0}) EXPECT_LE(std::abs(dual_.dual_pde_residual(y, z, m)), 1e-8);
  }
}

INSTANTIATE_TEST_SUITE_P(Presets, DualFig, ::testing::Values("fig1", "fig2", "fig3", "fig4"));

TEST(DualSolution, ReferenceSetPassesResidual) {
  const Model model(dtrack::testing::reference_pm2());
  const DualSolution dual(model);
  for (double m : log_space(model.consts.m_floor, 1e3 * model.consts.m_floor, 5)) {
    const Coefficients c = dual.coefficients(m);
    EXPECT_LE(c.neumann_residual, 1e-8);
    for (double y : y_points(model, c, 10))
      for (double z : {0.0, 1.0, 10.0, 50.0, 100.0}) EXPECT_LE(std::abs(dual.dual_pde_residual(y, z, m)), 1e-8);
  }
}

TEST(DualSolution, RatchetingCase) {
  const Model model(dtrack::testing::with_lambda(fig_params("fig2"), 1.0));
  const DualSolution dual(model);
  for (double m : log_space(model.consts.m_floor * 1.01, 1e3 * model.consts.m_floor, 9)) {
    const Coefficients c = dual.coefficients(m);
    EXPECT_LE(c.neumann_residual, 1e-8);
    for (double y : y_points(model, c, 10)) EXPECT_LE(std::abs(dual.dual_pde_residual(y, 10.0, m)), 1e-8);
  }
}

TEST(DualSolution, TwoAssets) {
  const Model model(dtrack::testing::two_asset());
  const DualSolution dual(model);
  for (double m : log_space(model.consts.m_floor, 1e3 * model.consts.m_floor, 7)) {
    const Coefficients c = dual.coefficients(m);
    for (double y : y_points(model, c, 8)) EXPECT_LE(std::abs(dual.dual_pde_residual(y, 5.0, m)), 1e-8);
  }
}

TEST(DualSolution, DomainErrors) {
  const Model model(fig_params("fig2"));
  const DualSolution dual(model);
  const double m = 3 * model.consts.m_kink;
  const Coefficients c = dual.coefficients(m);
  EXPECT_THROW(dual.dual_value(0.5 * c.y_star, 1.0, c), DomainError);
  EXPECT_THROW(dual.dual_value(1.01 * model.params.beta, 1.0, c), DomainError);
  EXPECT_THROW(dual.coefficients(0.9 * model.consts.m_floor), DomainError);
}
