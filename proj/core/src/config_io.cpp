#include "dtrack/config_io.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <vector>

#include "dtrack/errors.hpp"

namespace dtrack {

namespace {

using nlohmann::json;

const json& section(const json& j, const char* name) {
  if (!j.contains(name) || !j.at(name).is_object()) {
    throw ConfigError(std::string("missing object '") + name + "'");
  }
  return j.at(name);
}

double number(const json& j, const char* key, const char* where) {
  if (!j.contains(key)) throw ConfigError(std::string("missing '") + where + "." + key + "'");
  const json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(std::string("'") + where + "." + key + "' must be a number");
  return v.get<double>();
}

std::vector<double> numbers(const json& j, const char* key, const char* where, std::size_t n) {
  if (!j.contains(key)) throw ConfigError(std::string("missing '") + where + "." + key + "'");
  const json& v = j.at(key);
  std::vector<double> out;
  if (v.is_number()) {
    out.push_back(v.get<double>());
  } else if (v.is_array()) {
    for (const json& e : v) {
      if (e.is_array()) {
        for (const json& f : e) {
          if (!f.is_number()) throw ConfigError(std::string("'") + where + "." + key + "' holds a non-number");
          out.push_back(f.get<double>());
        }
      } else if (e.is_number()) {
        out.push_back(e.get<double>());
      } else {
        throw ConfigError(std::string("'") + where + "." + key + "' holds a non-number");
      }
    }
  } else {
    throw ConfigError(std::string("'") + where + "." + key + "' must be a number or array");
  }
  if (out.size() != n) {
    throw ConfigError(std::string("'") + where + "." + key + "' needs " + std::to_string(n) + " entries, got " +
                      std::to_string(out.size()));
  }
  return out;
}

}  // namespace

Config parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  Config cfg;
  const json& mk = section(j, "market");
  const double d_raw = mk.contains("d") ? number(mk, "d", "market") : 1.0;
  if (d_raw < 1.0 || d_raw != static_cast<double>(static_cast<int>(d_raw))) {
    throw ConfigError("'market.d' must be a positive integer");
  }
  const int d = static_cast<int>(d_raw);
  const auto n = static_cast<std::size_t>(d);
  ModelParams& p = cfg.params;
  p.d = d;
  p.mu = Eigen::Map<const Eigen::VectorXd>(numbers(mk, "mu", "market", n).data(), d);
  const auto sig = numbers(mk, "sigma", "market", n * n);
  p.sigma = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(sig.data(), d, d);
  p.gamma = Eigen::Map<const Eigen::VectorXd>(numbers(mk, "gamma", "market", n).data(), d);
  p.mu_Z = number(mk, "mu_Z", "market");
  p.sigma_Z = number(mk, "sigma_Z", "market");

  const json& pr = section(j, "preference");
  p.rho = number(pr, "rho", "preference");
  p.beta = number(pr, "beta", "preference");
  p.p = number(pr, "p", "preference");
  p.lambda = number(pr, "lambda", "preference");

  if (j.contains("state")) {
    const json& st = section(j, "state");
    InitialState s;
    s.v = number(st, "v", "state");
    s.z = number(st, "z", "state");
    s.m = number(st, "m", "state");
    if (!(s.v >= 0.0 && s.z >= 0.0 && s.m >= 0.0)) throw ConfigError("'state' entries must be nonnegative");
    cfg.state = s;
  }
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

Config preset(const std::string& name) {
  // gamma = -1 in fig1 keeps mu_Z >= eta; the benchmark then moves against the asset.
  if (name == "fig1") return {ModelParams::scalar(0.1, 0.1, 0.01, 0.05, -1.0, 2.0, 2.0, -0.1, 0.2), InitialState{20.0, 10.0, 6.0}};
  if (name == "fig2") return {ModelParams::scalar(0.01, 0.02, 0.05, 0.05, 1.0, 2.0, 2.0, -0.1, 0.1), InitialState{20.0, 10.0, 20.0}};
  if (name == "fig3") return {ModelParams::scalar(0.01, 0.02, 0.5, 0.5, 1.0, 2.0, 2.0, -0.1, 0.2), InitialState{40.0, 20.0, 6.0}};
  if (name == "fig4") return {ModelParams::scalar(0.004, 0.02, 0.5, 0.5, 1.0, 2.0, 2.0, -0.1, 0.2), InitialState{40.0, 20.0, 6.0}};
  throw ConfigError("unknown preset '" + name + "' (expected fig1, fig2, fig3 or fig4)");
}

std::string to_json(const Config& cfg) {
  const ModelParams& p = cfg.params;
  json j;
  json mk;
  mk["d"] = p.d;
  mk["mu"] = std::vector<double>(p.mu.data(), p.mu.data() + p.mu.size());
  json rows = json::array();
  for (int r = 0; r < p.sigma.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(p.sigma.cols()));
    for (int c = 0; c < p.sigma.cols(); ++c) row[static_cast<std::size_t>(c)] = p.sigma(r, c);
    rows.push_back(row);
  }
  mk["sigma"] = rows;
  mk["mu_Z"] = p.mu_Z;
  mk["sigma_Z"] = p.sigma_Z;
  mk["gamma"] = std::vector<double>(p.gamma.data(), p.gamma.data() + p.gamma.size());
  j["market"] = mk;
  j["preference"] = {{"rho", p.rho}, {"beta", p.beta}, {"p", p.p}, {"lambda", p.lambda}};
  if (cfg.state) j["state"] = {{"v", cfg.state->v}, {"z", cfg.state->z}, {"m", cfg.state->m}};
  return j.dump(2);
}

}  // namespace dtrack
