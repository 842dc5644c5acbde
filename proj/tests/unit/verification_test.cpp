#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "dtrack/errors.hpp"
#include "dtrack/verification.hpp"
#include "fixtures.hpp"

using namespace dtrack;
using dtrack::testing::fig_params;

namespace {

void expect_consistent(const std::vector<CheckReport>& reports) {
  ASSERT_FALSE(reports.empty());
  for (const CheckReport& r : reports) {
    EXPECT_EQ(r.pass, r.max_violation <= r.tolerance) << r.check_name;
    EXPECT_FALSE(r.grid.empty()) << r.check_name;
  }
}

void expect_all_pass(const std::vector<CheckReport>& reports) {
  for (const CheckReport& r : reports)
    if (r.gating) {
      EXPECT_TRUE(r.pass) << r.check_name << " " << r.max_violation;
    }
  EXPECT_TRUE(gating_pass(reports));
}

}  // namespace

TEST(Verification, AnalyticSuitePasses) {
  for (const char* name : {"fig2", "fig3"}) {
    const auto reports = run_suite(fig_params(name), Suite::Analytic);
    expect_consistent(reports);
    expect_all_pass(reports);
  }
}

TEST(Verification, DualitySuitePasses) {
  const auto reports = run_suite(fig_params("fig1"), Suite::Duality);
  expect_consistent(reports);
  expect_all_pass(reports);
}

TEST(Verification, SmallMonteCarloIsDeterministic) {
  VerifyOptions opts;
  opts.n_paths = 200;
  opts.dt = 1e-2;
  opts.tail = 1e-2;
  opts.dual_paths = 4;
  opts.dual_dt = 1e-3;
  opts.dual_horizon = 0.2;
  const auto a = run_suite(fig_params("fig1"), Suite::MonteCarlo, opts);
  const auto b = run_suite(fig_params("fig1"), Suite::MonteCarlo, opts);
  expect_consistent(a);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].check_name, b[i].check_name);
    EXPECT_EQ(a[i].max_violation, b[i].max_violation) << a[i].check_name;
  }
  EXPECT_EQ(to_json(a), to_json(b));
}

TEST(Verification, GatingIgnoresInformationalChecks) {
  CheckReport gate{"a", "g", 0.0, 1.0, true, true, {}};
  CheckReport info{"b", "g", 5.0, 1.0, false, false, {}};
  EXPECT_TRUE(gating_pass({gate, info}));
  gate.pass = false;
  EXPECT_FALSE(gating_pass({gate, info}));
}

TEST(Verification, JsonReport) {
  CheckReport r{"x", "grid", std::numeric_limits<double>::quiet_NaN(), 1e-8, false, true, {"worst at m=1"}};
  const auto doc = nlohmann::json::parse(to_json({r}));
  EXPECT_EQ(doc["pass"], false);
  const auto& j = doc["checks"];
  ASSERT_TRUE(j.is_array());
  ASSERT_EQ(j.size(), 1u);
  EXPECT_EQ(j[0]["check_name"], "x");
  EXPECT_TRUE(j[0]["max_violation"].is_null());
  EXPECT_EQ(j[0]["tolerance"], 1e-8);
  EXPECT_EQ(j[0]["pass"], false);
  EXPECT_EQ(j[0]["findings"][0], "worst at m=1");
}

TEST(Verification, ParseSuite) {
  EXPECT_EQ(parse_suite("analytic"), Suite::Analytic);
  EXPECT_EQ(parse_suite("duality"), Suite::Duality);
  EXPECT_EQ(parse_suite("montecarlo"), Suite::MonteCarlo);
  EXPECT_EQ(parse_suite("mc"), Suite::MonteCarlo);
  EXPECT_EQ(parse_suite("all"), Suite::All);
  EXPECT_THROW(parse_suite("everything"), ConfigError);
}
