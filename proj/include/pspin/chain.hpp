#pragma once

#include <string>
#include <vector>

#include "pspin/tensor.hpp"

namespace pspin {

// K+1 Hamiltonians with pairwise coefficient correlation (1-eps)^{|i-j|}.
struct HamiltonianChain {
  std::vector<Hamiltonian> hams;
  double epsilon = 0.0;
  std::vector<std::uint64_t> seeds;
  std::string mode;  // "forward" or "bridge"

  int K() const { return static_cast<int>(hams.size()) - 1; }
  int N() const { return hams.front().dim(); }
  int p() const { return hams.front().order(); }

  std::string manifest_json(int indent = 2) const;
};

// Forward OU recursion H^{(i+1)} = (1-eps) H^{(i)} + sqrt(1-(1-eps)^2) G.
HamiltonianChain ou_chain(int N, int p, int K, double eps, std::uint64_t seed,
                          std::size_t memory_budget = kDefaultMemoryBudget);

// (1-eps)^K H0 + sqrt(1 - (1-eps)^{2K}) H, coefficientwise.
Hamiltonian endpoint_embed(const Hamiltonian& H0, const Hamiltonian& H, int K,
                           double eps);

// Conditional law of element k given (k-1, K) in the stationary AR(1) chain
// with rho = 1-eps:
//   mean_prev = rho (1-rho^{2(K-k)}) / (1-rho^{2(K-k+1)})
//   mean_end  = rho^{K-k} (1-rho^2)  / (1-rho^{2(K-k+1)})
//   a^2       = (1-rho^2)(1-rho^{2(K-k)}) / (1-rho^{2(K-k+1)})
struct BridgeCoefficients {
  int k = 0;
  int K = 0;
  double mean_prev = 0.0;
  double mean_end = 0.0;
  double noise_scale = 0.0;  // a(K,k)
};

BridgeCoefficients bridge_coeffs(int k, int K, double eps);

Hamiltonian bridge_fill(const Hamiltonian& H_prev, const Hamiltonian& H_end, int k,
                        int K, double eps, const DisorderTensor& fresh);

// Full bridge construction from (H0, H): endpoint embed then fill 1..K-1.
HamiltonianChain bridge_chain(const Hamiltonian& H0, const Hamiltonian& H, int K,
                              double eps, std::uint64_t fresh_seed,
                              std::size_t memory_budget = kDefaultMemoryBudget);

struct ChainCovCheck {
  Matrix empirical;       // (K+1)x(K+1) average coefficient correlations
  Matrix target;          // rho^{|i-j|}
  double max_abs_dev = 0.0;
  double max_sigmas = 0.0;  // worst deviation in standard-error units
  bool pass = false;        // all entries within 4 standard errors
};

// Statistical verdict over >= 30 replica chains.
ChainCovCheck verify_chain_covariance(const std::vector<HamiltonianChain>& replicas);

}  // namespace pspin
