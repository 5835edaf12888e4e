#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pspin/common.hpp"
#include "pspin/rng.hpp"

namespace pspin {

inline constexpr std::size_t kDefaultMemoryBudget = std::size_t{2} << 30;  // 2 GiB

std::size_t tensor_bytes(int N, int p);

// Raw Gaussian coefficient tensor g_{i1..ip}, row-major (last index fastest),
// unit variance i.i.d. at sampling time. Stored unsymmetrized; derivative
// code sums contractions over index slots instead.
struct DisorderTensor {
  int p = 0;
  int N = 0;
  std::uint64_t seed = 0;
  std::vector<double> entries;

  std::size_t size() const { return entries.size(); }
};

DisorderTensor sample_disorder(int N, int p, std::uint64_t seed,
                               std::size_t memory_budget = kDefaultMemoryBudget);

// H(sigma) = N^{-(p-1)/2} <G, sigma^{otimes p}>.
struct Hamiltonian {
  DisorderTensor tensor;

  int dim() const { return tensor.N; }
  int order() const { return tensor.p; }
  double normalization() const {
    return std::pow(static_cast<double>(tensor.N), -(tensor.p - 1) / 2.0);
  }
};

Hamiltonian sample_hamiltonian(int N, int p, std::uint64_t seed,
                               std::size_t memory_budget = kDefaultMemoryBudget);

double evaluate(const Hamiltonian& H, const Vector& sigma);
Vector gradient(const Hamiltonian& H, const Vector& sigma);
Matrix hessian(const Hamiltonian& H, const Vector& sigma);

// Caches the suffix contraction chain of G at a fixed sigma so that
// evaluate/gradient/hessian requested together share the heavy contractions.
class EvalWorkspace {
 public:
  EvalWorkspace(const Hamiltonian& H, const Vector& sigma);

  double value() const;
  Vector gradient() const;
  Matrix hessian() const;
  const Vector& point() const { return sigma_; }

 private:
  const Hamiltonian& ham_;
  Vector sigma_;
  // chain_[k] = G contracted with sigma over the last k modes; chain_[0] is
  // a view of the raw entries (not stored).
  std::vector<std::vector<double>> chain_;
};

// qH + sqrt(1-q^2) H' with fresh i.i.d. H'; marginal law is preserved.
Hamiltonian correlated_copy(const Hamiltonian& H, double q, std::uint64_t seed);

// Unnormalized Euclidean distance between coefficient tensors.
double coeff_distance(const Hamiltonian& a, const Hamiltonian& b);

// ---------------------------------------------------------------------------
// Generic dense k-tensor contractions (row-major, arbitrary dims).

std::vector<double> contract_last(const double* data, const std::vector<int>& dims,
                                  const Vector& v);
std::vector<double> contract_first(const double* data, const std::vector<int>& dims,
                                   const Vector& v);
std::vector<double> contract_mode(const double* data, const std::vector<int>& dims,
                                  int mode, const Vector& v);

struct OpNormConfig {
  int iters = 60;
  int restarts = 8;
  std::uint64_t seed = 1234;
};

// Lower bound on the injective operator norm via alternating rank-one fits
// from several random starts. Monotone nondecreasing in iters and restarts
// (restarts share a common seeded start sequence).
double tensor_opnorm_estimate(const double* data, const std::vector<int>& dims,
                              const OpNormConfig& cfg = {});

// ---------------------------------------------------------------------------
// Derivative tensors and the bounded-derivative set K_N.

// Sum of G over all p! slot permutations. The k-th derivative tensor of H is
// then normalization/(p-k)! times this sum contracted (p-k) times with sigma.
std::vector<double> slot_symmetrized_sum(const DisorderTensor& t);

// Operator norms ||grad^k H(sigma)||_op for k = 0..p at one probe point.
// A precomputed slot_symmetrized_sum may be passed to amortize across probes.
std::vector<double> derivative_opnorms(const Hamiltonian& H, const Vector& sigma,
                                       const std::vector<double>* sym_sum = nullptr,
                                       const OpNormConfig& cfg = {});

struct KnReport {
  bool inside = false;
  double worst_margin = 0.0;  // min over probes,k of C*N^{1-k/2} - ||grad^k||
  double max_ratio = 0.0;     // max over probes,k of ||grad^k|| / (C*N^{1-k/2})
  int worst_order = -1;
};

// Checks ||grad^k H(sigma)||_op < C * N^{1-k/2} for all 0<=k<=p at each probe.
KnReport in_K_N(const Hamiltonian& H, double C, const std::vector<Vector>& probes,
                const OpNormConfig& cfg = {});

// ---------------------------------------------------------------------------
// Binary tensor container: 32-byte header (magic "PSPN", version, p, N, seed)
// followed by little-endian float64 entries, plus a JSON provenance sidecar.

void save_tensor(const DisorderTensor& t, const std::string& path,
                 bool write_sidecar = true);
DisorderTensor load_tensor(const std::string& path,
                           std::size_t memory_budget = kDefaultMemoryBudget);

}  // namespace pspin
