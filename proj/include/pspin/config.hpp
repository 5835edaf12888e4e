#pragma once

#include <map>
#include <optional>
#include <string>

#include "pspin/common.hpp"

namespace pspin {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string experiment;
  std::string preset = "fast-ci";
  int N = 30;
  int p = 3;
  int K = 6;
  double eps = 0.1;
  double gamma = 0.3;
  double delta = 0.1;
  int d = 0;
  double iota = 0.05;
  double eta = 0.01;
  long max_iters = 2000;
  double tol = 1e-6;
  double mu = 2.0;  // planted spike strength
  std::uint64_t seed = 1;
  int replicas = 4;
  int jobs = 1;
  std::string out_dir = "out";
  std::string mode = "planted";  // follow modes: planted | spinglass | verification
  bool couple_omega = true;       // share aux randomness across correlated pairs
  std::size_t memory_budget = std::size_t{2} << 30;

  void validate() const;  // parameter-order check for the paper-regime preset
  std::string to_json(int indent = 2) const;
};

ExperimentConfig preset_config(const std::string& name);

// Key-value config text (TOML-compatible grammar: `key = value` lines, `#`
// comments, quoted strings). Keys match the field names above.
ExperimentConfig parse_config_text(const std::string& text,
                                   const ExperimentConfig& base);
ExperimentConfig load_config_file(const std::string& path,
                                  const ExperimentConfig& base);

// Applies `key=value` overrides (CLI flags take precedence over file values).
void apply_override(ExperimentConfig& cfg, const std::string& key,
                    const std::string& value);

}  // namespace pspin
