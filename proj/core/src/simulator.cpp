#include "dtrack/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "dtrack/errors.hpp"

namespace dtrack {

namespace {

constexpr double kOverflowGuard = 1e150;

class OptimalCursor final : public ControlCursor {
 public:
  explicit OptimalCursor(const PrimalPolicy& policy) : policy_(&policy), cursor_(policy) {}

  void control(double x, double z, double& m, double& c, Eigen::VectorXd& theta, double& y) override {
    const StepControl s = cursor_.advance(x, z, m);
    const auto& cst = policy_->model().consts;
    m = s.m;
    c = s.c;
    y = s.y;
    theta.noalias() = s.y_vyy * cst.merton_direction +
                      (s.one_minus_vyz * z * policy_->model().params.sigma_Z) * cst.benchmark_direction;
  }

 private:
  const PrimalPolicy* policy_;
  PolicyCursor cursor_;
};

class ConstantCursor final : public ControlCursor {
 public:
  ConstantCursor(const Eigen::VectorXd& theta, double c) : theta_(theta), c_(c) {}

  void control(double, double, double& m, double& c, Eigen::VectorXd& theta, double& y) override {
    m = std::max(m, c_);
    c = c_;
    theta = theta_;
    y = NAN;
  }

 private:
  const Eigen::VectorXd& theta_;
  double c_;
};

/// Gaussian increments for one path; the antithetic partner negates them.
class Increments {
 public:
  Increments(std::uint64_t stream, bool negate, double sqrt_dt)
      : rng_(stream), sign_(negate ? -sqrt_dt : sqrt_dt) {}

  void draw(Eigen::VectorXd& dW) {
    for (Eigen::Index i = 0; i < dW.size(); ++i) dW[i] = sign_ * normal_(rng_);
  }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
  double sign_;
};

std::int64_t step_count(const SimConfig& cfg) {
  if (!(cfg.dt > 0.0) || !(cfg.horizon > 0.0) || cfg.n_paths < 1) {
    throw DomainError("simulation requires dt > 0, horizon > 0 and n_paths >= 1");
  }
  return static_cast<std::int64_t>(std::llround(std::ceil(cfg.horizon / cfg.dt - 1e-9)));
}

std::uint64_t path_stream(const SimConfig& cfg, std::int64_t path, bool& negate) {
  const auto idx = static_cast<std::uint64_t>(path);
  negate = cfg.antithetic && (idx % 2 == 1);
  return stream_seed(cfg.seed, cfg.antithetic ? idx / 2 : idx);
}

/// Runs one path of the projected Euler scheme and reports each step to sink.
/// sink(k, t, X, Z, M, c, theta, y, dW, dL) is called for k = 0..n-1 with the
/// state at t_k and the increments of [t_k, t_k+1); sink.finish(...) at t_n.
template <class Sink>
void run_path(const Model& model, const SimConfig& cfg, ControlCursor& rule, std::int64_t path, Sink& sink) {
  const auto& prm = model.params;
  const std::int64_t n = step_count(cfg);
  bool negate = false;
  const std::uint64_t stream = path_stream(cfg, path, negate);
  Increments inc(stream, negate, std::sqrt(cfg.dt));

  const double z_drift = (prm.mu_Z - 0.5 * prm.sigma_Z * prm.sigma_Z) * cfg.dt;
  Eigen::VectorXd theta(prm.d), dW(prm.d), sdW(prm.d);
  double x = cfg.x0, z = cfg.z0, m = cfg.m0;
  double c = 0.0, y = 0.0;
  for (std::int64_t k = 0; k < n; ++k) {
    rule.control(x, z, m, c, theta, y);
    inc.draw(dW);
    sdW.noalias() = prm.sigma * dW;
    const double z_next = z * std::exp(z_drift + prm.sigma_Z * prm.gamma.dot(dW));
    // X SDE: theta^T (mu dt + sigma dW) - c dt - dZ, with dZ taken from the exact step.
    const double x_tilde = x + (theta.dot(prm.mu) - c) * cfg.dt + theta.dot(sdW) - (z_next - z);
    const double dL = std::max(0.0, -x_tilde);
    sink(k, static_cast<double>(k) * cfg.dt, x, z, m, c, theta, y, dW, dL);
    x = x_tilde + dL;
    z = z_next;
    if (!(std::abs(x) < kOverflowGuard && z < kOverflowGuard && m < kOverflowGuard)) {
      throw NumericalBlowup("state left the overflow guard at step " + std::to_string(k));
    }
  }
  rule.control(x, z, m, c, theta, y);
  sink.finish(n, static_cast<double>(n) * cfg.dt, x, z, m, c, theta, y);
}

struct RecordSink {
  SimPath& p;

  void record(std::int64_t k, double t, double x, double z, double m, double c, const Eigen::VectorXd& theta,
              double y) {
    const auto i = static_cast<std::size_t>(k);
    p.t[i] = t;
    p.X[i] = x;
    p.Z[i] = z;
    p.M[i] = m;
    p.c[i] = c;
    p.Y[i] = y;
    p.theta.col(k) = theta;
  }
  void operator()(std::int64_t k, double t, double x, double z, double m, double c, const Eigen::VectorXd& theta,
                  double y, const Eigen::VectorXd& dW, double dL) {
    record(k, t, x, z, m, c, theta, y);
    p.dW.col(k) = dW;
    p.dL[static_cast<std::size_t>(k)] = dL;
  }
  void finish(std::int64_t k, double t, double x, double z, double m, double c, const Eigen::VectorXd& theta,
              double y) {
    record(k, t, x, z, m, c, theta, y);
    p.dL[static_cast<std::size_t>(k)] = 0.0;
  }
};

/// Discounted running sums: utility with exact discount weights, and the
/// injection with the left-point rule.
struct ObjectiveSink {
  double rho, p, beta, weight, step_discount;
  double discount = 1.0;
  double utility = 0.0;
  double injection = 0.0;

  void operator()(std::int64_t, double, double, double, double, double c, const Eigen::VectorXd&, double,
                  const Eigen::VectorXd&, double dL) {
    utility += discount * weight * std::pow(c, p) / p;
    injection += discount * dL;
    discount *= step_discount;
  }
  void finish(std::int64_t, double, double, double, double, double, const Eigen::VectorXd&, double) {}
};

double pairwise_sum(const double* v, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

/// Mean and standard error from per-path values; antithetic pairs are
/// averaged first and treated as one sample.
Estimate summarize(const std::vector<double>& values, bool antithetic, double tail) {
  std::vector<double> units;
  if (antithetic) {
    for (std::size_t i = 0; i + 1 < values.size(); i += 2) units.push_back(0.5 * (values[i] + values[i + 1]));
    if (values.size() % 2 == 1) units.push_back(values.back());
  } else {
    units = values;
  }
  Estimate e;
  e.n_paths = static_cast<std::int64_t>(values.size());
  e.tail_factor = tail;
  e.mean = pairwise_sum(values.data(), values.size()) / static_cast<double>(values.size());
  const std::size_t u = units.size();
  if (u > 1) {
    const double mu = pairwise_sum(units.data(), u) / static_cast<double>(u);
    std::vector<double> sq(u);
    for (std::size_t i = 0; i < u; ++i) sq[i] = (units[i] - mu) * (units[i] - mu);
    e.std_error = std::sqrt(pairwise_sum(sq.data(), u) / static_cast<double>(u - 1) / static_cast<double>(u));
  }
  return e;
}

}  // namespace

SimConfig SimConfig::from_wealth(double v0, double z0, double m0) {
  SimConfig c;
  c.x0 = std::max(v0 - z0, 0.0);
  c.z0 = z0;
  c.m0 = m0;
  c.initial_injection = std::max(z0 - v0, 0.0);
  return c;
}

double SimConfig::horizon_for(double rho, double tail) { return -std::log(tail) / rho; }

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer over a combination of the two words
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::unique_ptr<ControlCursor> OptimalRule::start() const { return std::make_unique<OptimalCursor>(*policy_); }

std::unique_ptr<ControlCursor> ConstantRule::start() const {
  return std::make_unique<ConstantCursor>(theta_, c_);
}

SimPath Simulator::simulate_path(const SimConfig& cfg, const FeedbackRule& rule, std::int64_t path_index) const {
  const std::int64_t n = step_count(cfg);
  const auto len = static_cast<std::size_t>(n + 1);
  const int d = model().params.d;
  SimPath p;
  for (auto* v : {&p.t, &p.X, &p.Z, &p.M, &p.dL, &p.c, &p.Y, &p.V, &p.A}) v->assign(len, 0.0);
  p.theta.resize(d, n + 1);
  p.dW.resize(d, n);
  RecordSink sink{p};
  auto cursor = rule.start();
  run_path(model(), cfg, *cursor, path_index, sink);
  reconstruct(p, cfg.initial_injection);
  return p;
}

SimPath Simulator::simulate_path(const SimConfig& cfg, std::int64_t path_index) const {
  return simulate_path(cfg, OptimalRule(*policy_), path_index);
}

Estimate Simulator::estimate_objective(const SimConfig& cfg, const FeedbackRule& rule) const {
  const auto& prm = model().params;
  std::vector<double> values(static_cast<std::size_t>(cfg.n_paths));
  for (std::int64_t i = 0; i < cfg.n_paths; ++i) {
    ObjectiveSink sink{prm.rho, prm.p, prm.beta, (1.0 - std::exp(-prm.rho * cfg.dt)) / prm.rho,
                       std::exp(-prm.rho * cfg.dt)};
    auto cursor = rule.start();
    run_path(model(), cfg, *cursor, i, sink);
    values[static_cast<std::size_t>(i)] = sink.utility - prm.beta * sink.injection;
  }
  return summarize(values, cfg.antithetic, std::exp(-prm.rho * static_cast<double>(step_count(cfg)) * cfg.dt));
}

Estimate Simulator::estimate_objective(const SimConfig& cfg) const {
  return estimate_objective(cfg, OptimalRule(*policy_));
}

Estimate Simulator::estimate_injection(const SimConfig& cfg) const {
  return estimate_objective_and_injection(cfg).second;
}

std::pair<Estimate, Estimate> Simulator::estimate_objective_and_injection(const SimConfig& cfg) const {
  const auto& prm = model().params;
  const OptimalRule rule(*policy_);
  std::vector<double> objective(static_cast<std::size_t>(cfg.n_paths));
  std::vector<double> injection(objective.size());
  for (std::int64_t i = 0; i < cfg.n_paths; ++i) {
    ObjectiveSink sink{prm.rho, prm.p, prm.beta, (1.0 - std::exp(-prm.rho * cfg.dt)) / prm.rho,
                       std::exp(-prm.rho * cfg.dt)};
    auto cursor = rule.start();
    run_path(model(), cfg, *cursor, i, sink);
    objective[static_cast<std::size_t>(i)] = sink.utility - prm.beta * sink.injection;
    injection[static_cast<std::size_t>(i)] = cfg.initial_injection + sink.injection;
  }
  const double tail = std::exp(-prm.rho * static_cast<double>(step_count(cfg)) * cfg.dt);
  return {summarize(objective, cfg.antithetic, tail), summarize(injection, cfg.antithetic, tail)};
}

Estimate Simulator::simulate_dual_Y(const SimConfig& cfg) const { return dual_Y(cfg, false); }

Estimate Simulator::dual_Y_terminal(const SimConfig& cfg) const { return dual_Y(cfg, true); }

Estimate Simulator::dual_Y(const SimConfig& cfg, bool terminal) const {
  const auto& prm = model().params;
  const auto& cst = model().consts;
  const std::int64_t n = step_count(cfg);
  const double y0 = policy_->evaluate(cfg.x0, cfg.z0, cfg.m0).y;
  const double q = prm.p / (prm.p - 1.0);
  const double weight = (1.0 - std::exp(-prm.rho * cfg.dt)) / prm.rho;
  const double step_discount = std::exp(-prm.rho * cfg.dt);
  const double drift = (prm.rho - cst.alpha) * cfg.dt;
  std::vector<double> values(static_cast<std::size_t>(cfg.n_paths));
  Eigen::VectorXd dW(prm.d);
  for (std::int64_t i = 0; i < cfg.n_paths; ++i) {
    bool negate = false;
    const std::uint64_t stream = path_stream(cfg, i, negate);
    Increments inc(stream, negate, std::sqrt(cfg.dt));
    double y = y0, discount = 1.0, sum = 0.0;
    for (std::int64_t k = 0; k < n; ++k) {
      sum += discount * weight * std::pow(y, q);
      inc.draw(dW);
      // exact geometric step, then projection onto (0, beta]
      y = std::min(prm.beta, y * std::exp(drift - cst.market_price.dot(dW)));
      discount *= step_discount;
    }
    values[static_cast<std::size_t>(i)] = terminal ? discount * std::pow(y, q) : sum;
  }
  return summarize(values, cfg.antithetic, std::exp(-prm.rho * static_cast<double>(n) * cfg.dt));
}

void reconstruct(SimPath& path, double initial_injection) {
  const std::size_t n = path.X.size();
  path.V.resize(n);
  path.A.resize(n);
  double L = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0) L += path.dL[k - 1];
    path.V[k] = path.X[k] + path.Z[k] - L;
    path.A[k] = initial_injection + L;
  }
}

void DualPathStats::add(const SimPath& path) {
  const double beta = model_->params.beta;
  const double rho = model_->params.rho;
  const Eigen::VectorXd& mp = model_->consts.market_price;
  if (path.dL.size() < 2) return;
  const std::size_t n = path.dL.size() - 1;
  const double dt = path.t[1] - path.t[0];
  const double sdt = std::sqrt(dt);
  const double tol = 1e-9 * beta;
  for (std::size_t k = 0; k < n; ++k) {
    const double y0 = path.Y[k], y1 = path.Y[k + 1];
    if (path.dL[k] > 0.0 || y0 >= beta - tol || y1 >= beta - tol) {
      ++acc_.reflection_steps;
      continue;
    }
    const double model_inc = rho * y0 * dt - y0 * mp.dot(path.dW.col(static_cast<Eigen::Index>(k)));
    const double obs = y1 - y0;
    const double r = (obs - model_inc) / (y0 * sdt);
    sq_ += r * r;
    acc_.max_residual = std::max(acc_.max_residual, std::abs(r));
    acc_.off_boundary_push = std::max(acc_.off_boundary_push, -r);
    sp_ += model_inc;
    so_ += obs;
    spp_ += model_inc * model_inc;
    spo_ += model_inc * obs;
    ++acc_.steps_used;
  }
}

DualPathCheck DualPathStats::result() const {
  DualPathCheck out = acc_;
  if (out.steps_used > 0) {
    const auto u = static_cast<double>(out.steps_used);
    out.rms_residual = std::sqrt(sq_ / u);
    const double var = spp_ - sp_ * sp_ / u;
    out.slope = var > 0.0 ? (spo_ - sp_ * so_ / u) / var : NAN;
  }
  return out;
}

DualPathCheck dual_path_check(const SimPath& path, const Model& model) {
  DualPathStats stats(model);
  stats.add(path);
  return stats.result();
}

}  // namespace dtrack
