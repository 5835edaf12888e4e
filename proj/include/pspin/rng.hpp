#pragma once

#include <cstdint>
#include <random>

#include "pspin/common.hpp"

namespace pspin {

// Named generator: mt19937_64 with gaussians drawn by the polar method.
// The engine's output stream is fixed by the standard, and the polar method
// avoids the implementation-defined std::normal_distribution, so a seed
// reproduces the same tensors everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0,1), 53-bit resolution.
  double uniform() {
    return (engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double gaussian();

  void fill_gaussian(double* out, std::size_t n);

  Vector gaussian_vector(int n) {
    Vector v(n);
    fill_gaussian(v.data(), static_cast<std::size_t>(n));
    return v;
  }

  // Uniform in the d-dimensional ball of the given radius.
  Vector ball_vector(int d, double radius);

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// splitmix64 finalizer; used to derive per-replica / per-stream seeds so that
// parallel replicas are deterministic: replica r uses split_seed(base, r).
std::uint64_t split_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace pspin
