#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dtrack/config_io.hpp"
#include "dtrack/errors.hpp"
#include "dtrack/primal_policy.hpp"
#include "dtrack/simulator.hpp"
#include "dtrack/verification.hpp"
#include "table.hpp"

namespace {

using dtrack::cli::Cell;
using dtrack::cli::Table;

constexpr int kConfigExit = 2;
constexpr int kGatingExit = 3;

struct Globals {
  std::string config_path;
  std::string preset;
  std::uint64_t seed = 20240611;
  std::string out;
  std::string format = "csv";
};

struct XGrid {
  double x_min = 0.0;
  double x_max = 50.0;
  int points = 11;

  std::vector<double> values() const {
    if (points < 1) throw dtrack::ConfigError("--x-points must be at least 1");
    std::vector<double> xs;
    for (int i = 0; i < points; ++i)
      xs.push_back(points == 1 ? x_min : x_min + (x_max - x_min) * i / (points - 1));
    return xs;
  }
};

void add_grid(CLI::App* cmd, XGrid& g) {
  cmd->add_option("--x-min", g.x_min, "Smallest x")->capture_default_str();
  cmd->add_option("--x-max", g.x_max, "Largest x")->capture_default_str();
  cmd->add_option("--x-points", g.points, "Number of evenly spaced x values")->capture_default_str();
}

dtrack::Config load(const Globals& g) {
  std::string path = g.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("DT_CONFIG")) path = env;
  }
  if (!path.empty()) return dtrack::load_config(path);
  if (!g.preset.empty()) return dtrack::preset(g.preset);
  throw dtrack::ConfigError("no configuration: pass --config, --preset or set DT_CONFIG");
}

// State from --v/--z/--m when given, else from the config, else `fallback`.
dtrack::InitialState state_of(const dtrack::Config& cfg, const std::optional<double>& v,
                              const std::optional<double>& z, const std::optional<double>& m,
                              dtrack::InitialState fallback) {
  dtrack::InitialState s = cfg.state.value_or(fallback);
  if (v) s.v = *v;
  if (z) s.z = *z;
  if (m) s.m = *m;
  return s;
}

void emit(const Globals& g, const Table& t) {
  std::ofstream file;
  std::ostream* os = &std::cout;
  if (!g.out.empty()) {
    file.open(g.out, std::ios::binary);
    if (!file) throw dtrack::ConfigError("cannot open output file: " + g.out);
    os = &file;
  }
  if (g.format == "json")
    t.write_json(*os);
  else
    t.write_csv(*os);
}

std::vector<std::string> theta_columns(const std::string& stem, int d) {
  std::vector<std::string> cols;
  for (int i = 1; i <= d; ++i) cols.push_back(stem + "_" + std::to_string(i));
  return cols;
}

// ---------------------------------------------------------------- verify

struct VerifyArgs {
  std::string suite = "all";
  std::optional<double> v, z, m;
  dtrack::VerifyOptions opts;
};

int run_verify(const Globals& g, const VerifyArgs& a) {
  const dtrack::Config cfg = load(g);
  dtrack::VerifyOptions opts = a.opts;
  opts.seed = g.seed;
  opts.state = state_of(cfg, a.v, a.z, a.m, opts.state);
  const auto reports = dtrack::run_suite(cfg.params, dtrack::parse_suite(a.suite), opts);
  const std::string text = dtrack::to_json(reports) + "\n";
  if (g.out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(g.out, std::ios::binary);
    if (!f) throw dtrack::ConfigError("cannot open output file: " + g.out);
    f << text;
  }
  return dtrack::gating_pass(reports) ? 0 : kGatingExit;
}

// ---------------------------------------------------------------- policy-eval

struct PolicyArgs {
  XGrid grid;
  std::optional<double> z, m;
};

int run_policy_eval(const Globals& g, const PolicyArgs& a) {
  const dtrack::Config cfg = load(g);
  const dtrack::Model model(cfg.params);
  const dtrack::PrimalPolicy pol(model);
  const dtrack::InitialState s = state_of(cfg, std::nullopt, a.z, a.m, {0.0, 10.0, 1.0});

  std::vector<std::string> cols{"x", "region", "y", "v", "c_star"};
  for (auto& c : theta_columns("theta_star", cfg.params.d)) cols.push_back(c);
  for (const char* c : {"F1", "F2", "F3", "m_star"}) cols.emplace_back(c);
  Table t(cols);
  for (double x : a.grid.values()) {
    const dtrack::PolicyPoint pt = pol.evaluate(x, s.z, s.m);
    std::vector<Cell> row{x, std::string(dtrack::to_string(pt.region)), pt.y, pt.v, pt.c};
    for (Eigen::Index i = 0; i < pt.theta.size(); ++i) row.emplace_back(pt.theta(i));
    row.insert(row.end(), {pt.F.F1, pt.F.F2, pt.F.F3, pol.m_star(x, s.z)});
    t.add(std::move(row));
  }
  emit(g, t);
  return 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::optional<double> v, z, m;
  double dt = 1e-3;
  std::optional<double> horizon;
  double tail = 1e-4;
  std::int64_t paths = 1000;
  std::int64_t dump_paths = 0;
  std::string dump_file = "paths.csv";
};

int run_simulate(const Globals& g, const SimulateArgs& a) {
  const dtrack::Config cfg = load(g);
  const dtrack::Model model(cfg.params);
  const dtrack::PrimalPolicy pol(model);
  const dtrack::Simulator sim(pol);
  const dtrack::InitialState s = state_of(cfg, a.v, a.z, a.m, {20.0, 10.0, 6.0});

  dtrack::SimConfig sc = dtrack::SimConfig::from_wealth(s.v, s.z, s.m);
  sc.dt = a.dt;
  sc.horizon = a.horizon.value_or(dtrack::SimConfig::horizon_for(cfg.params.rho, a.tail));
  sc.n_paths = a.paths;
  sc.seed = g.seed;

  const auto [obj, inj] = sim.estimate_objective_and_injection(sc);
  const dtrack::Estimate dual = sim.simulate_dual_Y(sc);
  Table t({"quantity", "mean", "std_error", "n_paths", "tail_factor"});
  t.add({std::string("objective"), obj.mean, obj.std_error, obj.n_paths, obj.tail_factor});
  t.add({std::string("injection"), inj.mean, inj.std_error, inj.n_paths, inj.tail_factor});
  t.add({std::string("dual_Y_integral"), dual.mean, dual.std_error, dual.n_paths, dual.tail_factor});
  t.add({std::string("value"), pol.original_value(s.v, s.z, s.m), 0.0, std::int64_t{0}, 0.0});
  emit(g, t);

  if (a.dump_paths > 0) {
    std::vector<std::string> cols{"path", "t", "X", "Z", "M", "dL", "c"};
    for (auto& c : theta_columns("theta", cfg.params.d)) cols.push_back(c);
    for (const char* c : {"Y", "V", "A"}) cols.emplace_back(c);
    Table pt(cols);
    for (std::int64_t i = 0; i < std::min(a.dump_paths, a.paths); ++i) {
      dtrack::SimPath p = sim.simulate_path(sc, i);
      dtrack::reconstruct(p, sc.initial_injection);
      for (std::size_t k = 0; k < p.t.size(); ++k) {
        std::vector<Cell> row{i, p.t[k], p.X[k], p.Z[k], p.M[k], p.dL[k], p.c[k]};
        for (Eigen::Index j = 0; j < p.theta.rows(); ++j) row.emplace_back(p.theta(j, static_cast<Eigen::Index>(k)));
        row.insert(row.end(), {p.Y[k], p.V[k], p.A[k]});
        pt.add(std::move(row));
      }
    }
    std::ofstream f(a.dump_file, std::ios::binary);
    if (!f) throw dtrack::ConfigError("cannot open dump file: " + a.dump_file);
    if (g.format == "json")
      pt.write_json(f);
    else
      pt.write_csv(f);
  }
  return 0;
}

// ---------------------------------------------------------------- sensitivity

struct SensitivityArgs {
  std::string param = "lambda";
  std::vector<double> values;
  XGrid grid;
  std::optional<double> z, m;
  bool injection = true;
  double dt = 1e-2;
  double tail = 1e-4;
  std::int64_t paths = 2000;
};

dtrack::ModelParams with_value(dtrack::ModelParams p, const std::string& name, double value) {
  if (name == "lambda") p.lambda = value;
  else if (name == "beta") p.beta = value;
  else if (name == "mu") p.mu.setConstant(value);
  else if (name == "rho") p.rho = value;
  else if (name == "p") p.p = value;
  else if (name == "sigma_Z") p.sigma_Z = value;
  else throw dtrack::ConfigError("unknown sweep parameter '" + name + "' (expected lambda, beta, mu, rho, p or sigma_Z)");
  return p;
}

int run_sensitivity(const Globals& g, const SensitivityArgs& a) {
  const dtrack::Config cfg = load(g);
  if (a.values.empty()) throw dtrack::ConfigError("--values is empty");
  const dtrack::InitialState s = state_of(cfg, std::nullopt, a.z, a.m, {0.0, 10.0, 1.0});
  const int d = cfg.params.d;

  std::vector<std::string> cols{"parameter", "value", "x", "c_star"};
  if (d == 1) {
    cols.emplace_back("theta_star");
    cols.emplace_back("theta_over_x");
  } else {
    for (auto& c : theta_columns("theta_star", d)) cols.push_back(c);
    for (auto& c : theta_columns("theta_over_x", d)) cols.push_back(c);
  }
  cols.emplace_back("injection_estimate");
  cols.emplace_back("injection_std_error");
  Table t(cols);

  for (double value : a.values) {
    if (!std::isfinite(value)) throw dtrack::ConfigError("sweep value is not finite");
    std::unique_ptr<dtrack::Model> model;
    try {
      model = std::make_unique<dtrack::Model>(with_value(cfg.params, a.param, value));
    } catch (const dtrack::Error& e) {
      throw dtrack::ConfigError(a.param + " = " + dtrack::cli::format_double(value) + ": " + e.what());
    }
    const dtrack::PrimalPolicy pol(*model);
    const dtrack::Simulator sim(pol);
    for (double x : a.grid.values()) {
      const dtrack::PolicyPoint pt = pol.evaluate(x, s.z, s.m);
      std::vector<Cell> row{a.param, value, x, pt.c};
      for (Eigen::Index i = 0; i < pt.theta.size(); ++i) row.emplace_back(pt.theta(i));
      for (Eigen::Index i = 0; i < pt.theta.size(); ++i)
        row.emplace_back(x > 0.0 ? pt.theta(i) / x : std::nan(""));
      double inj = std::nan(""), se = std::nan("");
      if (a.injection) {
        dtrack::SimConfig sc;
        sc.x0 = x;
        sc.z0 = s.z;
        sc.m0 = s.m;
        sc.dt = a.dt;
        sc.horizon = dtrack::SimConfig::horizon_for(model->params.rho, a.tail);
        sc.n_paths = a.paths;
        sc.seed = g.seed;
        const dtrack::Estimate e = sim.estimate_injection(sc);
        inj = e.mean;
        se = e.std_error;
      }
      row.emplace_back(inj);
      row.emplace_back(se);
      t.add(std::move(row));
    }
  }
  emit(g, t);
  return 0;
}

// ---------------------------------------------------------------- boundary-table

struct BoundaryArgs {
  std::optional<double> m_min, m_max;
  int points = 200;
};

int run_boundary_table(const Globals& g, const BoundaryArgs& a) {
  const dtrack::Config cfg = load(g);
  const dtrack::Model model(cfg.params);
  const dtrack::FreeBoundary fb(model);
  const double lo = a.m_min.value_or(model.consts.m_floor);
  const double hi = a.m_max.value_or(1e3 * model.consts.m_floor);
  if (!(hi > lo) || a.points < 2) throw dtrack::ConfigError("boundary-table needs m-max > m-min and points >= 2");
  Table t({"m", "y_star", "m_pow"});
  for (int i = 0; i < a.points; ++i) {
    const double m = lo * std::pow(hi / lo, static_cast<double>(i) / (a.points - 1));
    t.add({m, fb.y_star(m), std::pow(m, model.params.p - 1.0)});
  }
  emit(g, t);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal consumption with relaxed benchmark tracking and a consumption drawdown constraint"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "JSON configuration (DT_CONFIG is used when absent)");
  app.add_option("--preset", g.preset, "Built-in parameter set: fig1, fig2, fig3, fig4");
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--out", g.out, "Output file (stdout when absent)");
  app.add_option("--format", g.format, "Table format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "Run verification suites and print a JSON report");
  verify->add_option("--suite", va.suite, "analytic, duality, montecarlo or all")->capture_default_str();
  verify->add_option("--v", va.v, "Initial wealth for the Monte Carlo checks");
  verify->add_option("--z", va.z, "Initial benchmark");
  verify->add_option("--m", va.m, "Initial reference consumption");
  verify->add_option("--dt", va.opts.dt, "Time step")->capture_default_str();
  verify->add_option("--paths", va.opts.n_paths, "Monte Carlo paths")->capture_default_str();
  verify->add_option("--tail", va.opts.tail, "Horizon chosen so that exp(-rho T) <= tail")->capture_default_str();
  verify->add_option("--dual-dt", va.opts.dual_dt, "Time step of the dual-path check")->capture_default_str();
  verify->add_option("--dual-paths", va.opts.dual_paths, "Paths of the dual-path check")->capture_default_str();
  verify->add_option("--dual-horizon", va.opts.dual_horizon, "Horizon of the dual-path check")->capture_default_str();

  PolicyArgs pa;
  auto* policy = app.add_subcommand("policy-eval", "Tabulate value and feedback controls over an x grid");
  add_grid(policy, pa.grid);
  policy->add_option("--z", pa.z, "Benchmark level");
  policy->add_option("--m", pa.m, "Reference consumption level");

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo estimates under the optimal policy");
  simulate->add_option("--v", sa.v, "Initial wealth");
  simulate->add_option("--z", sa.z, "Initial benchmark");
  simulate->add_option("--m", sa.m, "Initial reference consumption");
  simulate->add_option("--dt", sa.dt, "Time step")->capture_default_str();
  simulate->add_option("--horizon", sa.horizon, "Horizon T (default: exp(-rho T) <= tail)");
  simulate->add_option("--tail", sa.tail, "Tail weight used for the default horizon")->capture_default_str();
  simulate->add_option("--paths", sa.paths, "Number of paths")->capture_default_str();
  simulate->add_option("--dump-paths", sa.dump_paths, "Write the first N paths step by step")->capture_default_str();
  simulate->add_option("--dump-file", sa.dump_file, "Destination of --dump-paths")->capture_default_str();

  SensitivityArgs ka;
  auto* sens = app.add_subcommand("sensitivity", "Sweep one parameter and tabulate controls and injection");
  sens->add_option("--param", ka.param, "lambda, beta, mu, rho, p or sigma_Z")->capture_default_str();
  sens->add_option("--values", ka.values, "Sweep values")->delimiter(',')->required();
  add_grid(sens, ka.grid);
  sens->add_option("--z", ka.z, "Benchmark level");
  sens->add_option("--m", ka.m, "Reference consumption level");
  sens->add_flag("!--no-injection", ka.injection, "Skip the Monte Carlo injection estimate");
  sens->add_option("--dt", ka.dt, "Time step of the injection estimate")->capture_default_str();
  sens->add_option("--tail", ka.tail, "Tail weight of the injection horizon")->capture_default_str();
  sens->add_option("--paths", ka.paths, "Paths of the injection estimate")->capture_default_str();

  BoundaryArgs ba;
  auto* boundary = app.add_subcommand("boundary-table", "Tabulate the free boundary y*(m) next to m^{p-1}");
  boundary->add_option("--m-min", ba.m_min, "Smallest m (default beta^{1/(p-1)})");
  boundary->add_option("--m-max", ba.m_max, "Largest m (default 1e3 beta^{1/(p-1)})");
  boundary->add_option("--points", ba.points, "Number of log-spaced m values")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigExit;
  }

  try {
    if (*verify) return run_verify(g, va);
    if (*policy) return run_policy_eval(g, pa);
    if (*simulate) return run_simulate(g, sa);
    if (*sens) return run_sensitivity(g, ka);
    if (*boundary) return run_boundary_table(g, ba);
  } catch (const dtrack::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigExit;
  } catch (const dtrack::AssumptionViolated& e) {
    std::cerr << "assumption violated: " << e.what() << "\n";
    return kConfigExit;
  } catch (const dtrack::SingularSigma& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
