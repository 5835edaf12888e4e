#pragma once

#include <functional>
#include <string>

#include "pspin/sphere.hpp"
#include "pspin/wells.hpp"

namespace pspin {

enum class StopReason { GradientThreshold, MaxIters };

struct AscentConfig {
  double eta = 0.01;
  // <= 0 selects the cap ceil(10 C_hat delta^-2 eta^-1) with the calibrated
  // smoothness constant; the gradient threshold stops runs much earlier.
  long max_iters = -1;
  double delta_stop = 0.05;  // stop once ||grad_sp|| <= delta_stop * sqrt(N)
  bool record_points = true;

  static long default_max_iters(double C_hat, double delta, double eta);
};

struct Trajectory {
  std::vector<Vector> points;  // only when record_points
  Vector final_coords;
  std::vector<double> energies;     // H/N per accepted iterate
  std::vector<double> grad_norms;   // ||grad_sp|| per iterate
  std::vector<double> radials;
  StopReason stop_reason = StopReason::MaxIters;
  long iters = 0;
  // Number of steps violating the per-step gain bound eta ||grad||^2 / (2N).
  int gain_violations = 0;
  double min_gain_slack = 0.0;

  double final_energy() const { return energies.back(); }
  SpherePoint final_point() const { return SpherePoint::checked(final_coords); }
};

// Spherical gradient ascent sigma <- sqrt(N) (sigma + eta grad_sp) / ||...||.
Trajectory gd_ascent(const Hamiltonian& H, const SpherePoint& sigma0,
                     const AscentConfig& cfg);

struct HessianAscentConfig {
  double r0_frac = 0.1;      // starting radius as a fraction of sqrt(N)
  double step_frac = 0.01;   // step length s = step_frac * sqrt(N)
  double power_tol = 1e-8;
  int power_iters = 200;
  std::uint64_t seed = 0;
  bool record_points = false;
};

// Reference optimizer: walk outward from a small random start along the top
// eigenvector of the Riemannian Hessian at the renormalized point.
Trajectory hessian_ascent(const Hamiltonian& H, const HessianAscentConfig& cfg);

// x * min(1, sqrt(N)/||x||): nearest point of the ball B_N.
Vector round_to_ball(const Vector& x);

// Seedable map (Hamiltonian, aux randomness) -> point of B_N.
struct AlgorithmHandle {
  std::string name;
  std::function<Vector(const Hamiltonian&, std::uint64_t omega_seed)> run;
};

AlgorithmHandle make_gd_algorithm(const AscentConfig& cfg);
AlgorithmHandle make_constant_algorithm(const Vector& point);
// First coefficient row of the disorder tensor, rounded into B_N. Its exact
// stability constant is 2 before rounding (Gaussian algebra).
AlgorithmHandle make_linear_slice_algorithm();

struct StabilityEstimate {
  double s_hat = 0.0;
  double stderr_ = 0.0;
  int reps = 0;
};

// Monte Carlo E ||A(H) - A(H_{1-eps})||^2 / (N eps) over (1-eps)-correlated
// pairs. Aux randomness is coupled across the pair by default.
StabilityEstimate estimate_stability(const AlgorithmHandle& A, double eps, int reps,
                                     int N, int p, std::uint64_t seed,
                                     bool couple_omega = true);

struct OverlapRow {
  double q = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  int reps = 0;
};

std::vector<OverlapRow> measure_overlap(const AlgorithmHandle& A,
                                        const std::vector<double>& q_grid, int reps,
                                        int N, int p, std::uint64_t seed);

}  // namespace pspin
