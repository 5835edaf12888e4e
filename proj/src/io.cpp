#include "pspin/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pspin/version.hpp"

namespace pspin {

namespace {

std::string fmt_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& columns,
                     const ExperimentConfig& cfg, bool with_dat_twin)
    : path_(path), n_cols_(columns.size()), with_dat_(with_dat_twin) {
  std::string header = "# content_hash=" + std::string(kContentHash) + "\n";
  std::string cfg_json = cfg.to_json(-1);
  header += "# config=" + cfg_json + "\n";
  buffer_ = header;
  dat_buffer_ = header;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    buffer_ += (i ? "," : "") + columns[i];
    dat_buffer_ += (i ? " " : "# ") + columns[i];
  }
  buffer_ += "\n";
  dat_buffer_ += "\n";
}

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != n_cols_)
    throw InvalidInput("CsvWriter: row width mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::string v = fmt_full(values[i]);
    buffer_ += (i ? "," : "") + v;
    dat_buffer_ += (i ? " " : "") + v;
  }
  buffer_ += "\n";
  dat_buffer_ += "\n";
}

void CsvWriter::comment(const std::string& line) {
  buffer_ += "# " + line + "\n";
  dat_buffer_ += "# " + line + "\n";
}

CsvWriter::~CsvWriter() {
  std::ofstream f(path_);
  f << buffer_;
  if (with_dat_) {
    std::string dat = path_;
    const auto dot = dat.rfind(".csv");
    if (dot != std::string::npos) dat = dat.substr(0, dot);
    std::ofstream g(dat + ".dat");
    g << dat_buffer_;
  }
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj, int N,
                          const ExperimentConfig& cfg) {
  CsvWriter csv(path, {"iter", "energy_per_N", "grad_norm_per_sqrtN",
                       "radial_derivative"},
                cfg);
  const double root_n = sqrt_n(N);
  for (std::size_t i = 0; i < traj.energies.size(); ++i) {
    csv.row({static_cast<double>(i), traj.energies[i], traj.grad_norms[i] / root_n,
             traj.radials[i]});
  }
}

void RunRecord::write(const std::string& path) const {
  std::ofstream f(path);
  f << "{\n";
  f << "  \"experiment\": \"" << experiment << "\",\n";
  f << "  \"content_hash\": \"" << kContentHash << "\",\n";
  f << "  \"wall_seconds\": " << fmt_full(wall_seconds) << ",\n";
  f << "  \"artifacts\": [";
  for (std::size_t i = 0; i < artifact_paths.size(); ++i)
    f << (i ? ", " : "") << '"' << artifact_paths[i] << '"';
  f << "],\n";
  f << "  \"config\": " << config.to_json(2) << ",\n";
  f << "  \"summary\": " << (summary_json.empty() ? "null" : summary_json) << "\n";
  f << "}\n";
}

std::string sha1_hex_of_file(const std::string& path) {
  // FNV-1a fingerprint; only used for bit-exact replay comparisons.
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::uint64_t h = 1469598103934665603ull;
  char c;
  while (f.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

void ensure_dir(const std::string& path) {
  std::filesystem::create_directories(path);
}

}  // namespace pspin
