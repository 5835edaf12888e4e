#pragma once

#include <string>
#include <vector>

#include "pspin/config.hpp"
#include "pspin/optimize.hpp"

namespace pspin {

// CSV with `#` header lines embedding the config snapshot and content hash;
// a gnuplot-friendly .dat twin (space-separated, same rows) can be emitted
// alongside.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns,
            const ExperimentConfig& cfg, bool with_dat_twin = true);
  ~CsvWriter();

  void row(const std::vector<double>& values);
  void comment(const std::string& line);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::string buffer_;
  std::string dat_buffer_;
  std::size_t n_cols_;
  bool with_dat_;
};

// Fixed trajectory schema: iter, energy_per_N, grad_norm_per_sqrtN,
// radial_derivative.
void write_trajectory_csv(const std::string& path, const Trajectory& traj, int N,
                          const ExperimentConfig& cfg);

struct RunRecord {
  ExperimentConfig config;
  std::string experiment;
  double wall_seconds = 0.0;
  std::vector<std::string> artifact_paths;
  std::string summary_json;  // experiment-specific payload

  void write(const std::string& path) const;
};

std::string sha1_hex_of_file(const std::string& path);

void ensure_dir(const std::string& path);

}  // namespace pspin
