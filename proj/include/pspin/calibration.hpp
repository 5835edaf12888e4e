#pragma once

#include "pspin/common.hpp"

namespace pspin::calib {

// Bounded-derivative constant C for the K_N events, measured as 1.25x the
// largest derivative-norm ratio max_k ||grad^k H(sigma)||_op / N^{1-k/2} over
// 200 Hamiltonians at N=60 (p=3) / 100 at N=40 (p=4), 8 ball probes each
// (`pspin calibrate`, seeds 2026/2027). The top derivative order binds.
inline constexpr double kn_constant_p3 = 12.72;
inline constexpr double kn_constant_p4 = 55.42;

// Largest observed Hessian operator norm from the same runs; feeds the safe
// step eta_max = 1/(4 C_hat) and the default iteration cap of gradient ascent.
inline constexpr double grad_lipschitz_hat = 6.31;

// Max near-zero outlier count k(gamma) observed for p=3 wells at desk scale.
inline constexpr int well_outlier_k = 4;

inline double kn_constant(int p) {
  return p <= 3 ? kn_constant_p3 : kn_constant_p4;
}

}  // namespace pspin::calib
