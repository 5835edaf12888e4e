#include "pspin/rng.hpp"

#include <cmath>

namespace pspin {

double Rng::gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  // Marsaglia polar method.
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  have_spare_ = true;
  return u * f;
}

void Rng::fill_gaussian(double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = gaussian();
}

Vector Rng::ball_vector(int d, double radius) {
  if (d == 0) return Vector(0);
  // Gaussian direction, radius by inverse CDF of r^d.
  Vector v = gaussian_vector(d);
  const double norm = v.norm();
  if (norm == 0.0) return Vector::Zero(d);
  const double r = radius * std::pow(uniform(), 1.0 / d);
  return v * (r / norm);
}

std::uint64_t split_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace pspin
