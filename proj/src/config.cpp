#include "pspin/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "pspin/calibration.hpp"

namespace pspin {

void ExperimentConfig::validate() const {
  if (N < 2 || p < 2) throw ConfigError("config: N >= 2 and p >= 2 required");
  if (K < 1) throw ConfigError("config: K >= 1 required");
  if (!(eps >= 0.0 && eps <= 1.0)) throw ConfigError("config: eps in [0,1]");
  if (!(gamma > 0.0 && delta > 0.0 && iota > 0.0))
    throw ConfigError("config: gamma, delta, iota must be positive");
  if (d < 0) throw ConfigError("config: d >= 0");
  if (replicas < 1 || jobs < 1) throw ConfigError("config: replicas, jobs >= 1");
  if (preset == "paper-regime") {
    // gamma >> iota >> delta >> eps >> 1/K, with factor 3 standing in for >>.
    auto dominates = [](double a, double b) { return a > 3.0 * b; };
    if (!dominates(gamma, iota) || !dominates(iota, delta) ||
        !dominates(delta, eps) || !dominates(eps, 1.0 / K))
      throw ConfigError(
          "config: paper-regime preset requires gamma >> iota >> delta >> eps >> 1/K "
          "(each ratio above 3)");
  }
}

std::string ExperimentConfig::to_json(int indent) const {
  nlohmann::json j;
  j["experiment"] = experiment;
  j["preset"] = preset;
  j["N"] = N;
  j["p"] = p;
  j["K"] = K;
  j["eps"] = eps;
  j["gamma"] = gamma;
  j["delta"] = delta;
  j["d"] = d;
  j["iota"] = iota;
  j["eta"] = eta;
  j["max_iters"] = max_iters;
  j["tol"] = tol;
  j["mu"] = mu;
  j["seed"] = seed;
  j["replicas"] = replicas;
  j["jobs"] = jobs;
  j["out_dir"] = out_dir;
  j["mode"] = mode;
  j["couple_omega"] = couple_omega;
  j["memory_budget"] = memory_budget;
  return j.dump(indent);
}

ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig c;
  c.preset = name;
  if (name == "fast-ci") {
    c.N = 30;
    c.K = 6;
    c.eps = 0.1;
    c.gamma = 0.3;
    c.delta = 0.1;
    c.iota = 0.05;
    c.replicas = 4;
  } else if (name == "planted") {
    c.N = 80;
    c.K = 40;
    c.eps = 0.005;
    c.gamma = 0.5;
    c.delta = 0.05;
    c.iota = 0.05;
    c.d = 0;
    c.mu = 2.0;
    c.replicas = 20;
  } else if (name == "paper-regime") {
    c.N = 80;
    c.K = 700;
    c.eps = 0.005;
    c.gamma = 0.5;
    c.delta = 0.016;
    c.iota = 0.05;
    c.d = 0;
    c.replicas = 8;
  } else {
    throw ConfigError("unknown preset: " + name);
  }
  return c;
}

namespace {

std::string strip(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                        (s.front() == '\'' && s.back() == '\'')))
    return s.substr(1, s.size() - 2);
  return s;
}

}  // namespace

void apply_override(ExperimentConfig& cfg, const std::string& key,
                    const std::string& raw) {
  const std::string value = unquote(strip(raw));
  try {
    if (key == "experiment") cfg.experiment = value;
    else if (key == "preset") cfg.preset = value;
    else if (key == "N") cfg.N = std::stoi(value);
    else if (key == "p") cfg.p = std::stoi(value);
    else if (key == "K") cfg.K = std::stoi(value);
    else if (key == "eps" || key == "epsilon") cfg.eps = std::stod(value);
    else if (key == "gamma") cfg.gamma = std::stod(value);
    else if (key == "delta") cfg.delta = std::stod(value);
    else if (key == "d") cfg.d = std::stoi(value);
    else if (key == "iota") cfg.iota = std::stod(value);
    else if (key == "eta") cfg.eta = std::stod(value);
    else if (key == "max_iters") cfg.max_iters = std::stol(value);
    else if (key == "tol") cfg.tol = std::stod(value);
    else if (key == "mu") cfg.mu = std::stod(value);
    else if (key == "seed") cfg.seed = std::stoull(value);
    else if (key == "replicas") cfg.replicas = std::stoi(value);
    else if (key == "jobs") cfg.jobs = std::stoi(value);
    else if (key == "out_dir" || key == "out") cfg.out_dir = value;
    else if (key == "mode") cfg.mode = value;
    else if (key == "couple_omega") cfg.couple_omega = (value == "true" || value == "1");
    else if (key == "memory_budget") cfg.memory_budget = std::stoull(value);
    else throw ConfigError("unknown config key: " + key);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("bad value for config key '" + key + "': " + value);
  }
}

ExperimentConfig parse_config_text(const std::string& text,
                                   const ExperimentConfig& base) {
  ExperimentConfig cfg = base;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = strip(line);
    if (line.empty()) continue;
    if (line.front() == '[')     // table headers carry no information here
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key = value");
    const std::string key = strip(line.substr(0, eq));
    apply_override(cfg, key, line.substr(eq + 1));
  }
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path,
                                  const ExperimentConfig& base) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str(), base);
}

}  // namespace pspin
