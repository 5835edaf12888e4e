#pragma once

#include <functional>
#include <optional>
#include <string>

#include "pspin/chain.hpp"
#include "pspin/optimize.hpp"
#include "pspin/wells.hpp"

namespace pspin {

struct FollowParams {
  double gamma = 0.5;
  double delta = 0.05;
  double iota = 0.05;
  int d = 0;
  double eps = 0.005;
  int K = 40;
  double tol = 1e-6;
  double trust_c = 10.0;  // c(d,iota) trust bound: ||z|| <= trust_c * delta * sqrt(N)
  int max_newton = 30;
  double kn_constant = 0.0;  // calibrated C for the boundedness events; 0 = preset
  int kn_probes = 3;
  bool check_bdd = true;
  OpNormConfig opnorm{25, 3, 99};

  double delta_prime_prime() const { return std::pow(delta, 0.6); }
};

enum class FollowErrorKind {
  NewtonDiverged,
  StepTooLarge,
  PreconditionFailed,
  DavisKahanFailed,
  GramSchmidtDegenerate,
};

class FollowError : public std::runtime_error {
 public:
  FollowError(FollowErrorKind kind, const std::string& quantity, double value,
              const std::string& what)
      : std::runtime_error(what), kind(kind), quantity(quantity), value(value) {}
  FollowErrorKind kind;
  std::string quantity;  // which gate / quantity was violated
  double value;
};

const char* to_string(FollowErrorKind k);

// ---------------------------------------------------------------------------
// One step of state following: restricted Newton for the stationary point of
// F(y) = Htilde(T_sigma(y)) over y in u + U_iota^perp(sigma; H).

struct FollowStepResult {
  SpherePoint sigma_new;
  double residual = 0.0;   // ||P_{U^perp} grad F|| at the solution
  int newton_iters = 0;
  double z_norm = 0.0;     // ||y - u||
  double y_norm = 0.0;
  double move_norm = 0.0;  // ||sigma_new - sigma||
};

// z0_ambient optionally restarts the Newton iteration away from z = 0 (used
// by the uniqueness probes); it is projected onto U_iota^perp internally.
FollowStepResult follow_step(const Hamiltonian& H, const Hamiltonian& Htilde,
                             const SpherePoint& sigma, const TangentVector& u,
                             const FollowParams& pr,
                             const SpectralData* sd = nullptr,
                             const Vector* z0_ambient = nullptr);

// Transport an orthonormal basis of U_iota(sigma;H) to one of the near-zero
// eigenspace at (sigma_new, Htilde), Davis-Kahan style: project the old
// columns and re-orthonormalize in order (nested spans are preserved).
struct TransportResult {
  Matrix basis;  // N x d, ambient
  double min_pivot = 1.0;
  double max_col_change = 0.0;
};

// In-order modified Gram-Schmidt; keeps span(cols 0..j) = span(out 0..j) for
// every j. Throws GramSchmidtDegenerate below pivot_tol.
Matrix gram_schmidt_in_order(const Matrix& cols, double pivot_tol,
                             double* min_pivot = nullptr);

TransportResult transport_basis(const Hamiltonian& H, const Hamiltonian& Htilde,
                                const SpherePoint& sigma, const SpherePoint& sigma_new,
                                const Matrix& basis, double iota, int d,
                                const SpectralData* sd_new = nullptr);

// Coordinates in `basis` of the projection of log_map(sigma, target).
Vector choose_u_oracle(const SpherePoint& sigma, const Matrix& basis,
                       const SpherePoint& target);

// ---------------------------------------------------------------------------
// Event accounting.

struct EventLedger {
  std::vector<bool> s_solve;  // strict typed-well membership per element
  std::vector<bool> s_stab;   // per step
  bool s_bdd = false;
  bool s_all = false;
  std::vector<double> elem_tau_solve;  // per element, in [1, 1.6]
  std::vector<double> bdd_ratios;      // per element and per step, clamped
  double tau_solve = 1.6;
  double tau_bdd = 1.6;
  double tau_all = 1.6;
  double a_star = 0.0;

  void finalize();
  std::string to_json(int indent = -1) const;
};

double a_star_of_tau(double tau_all);

// Lenient tau components for a single element; 1.6 encodes "unsatisfiable".
struct TauParts {
  double radial = 1.6;
  double gradient = 1.6;
  double spectral = 1.6;
  double combined() const { return std::max(radial, std::max(gradient, spectral)); }
};

TauParts element_tau_solve(const WellReport& rep, const Vector& eigenvalues, int N,
                           int p, const FollowParams& pr);

EventLedger event_report(const HamiltonianChain& chain,
                         const std::vector<SpherePoint>& sigmas,
                         const FollowParams& pr);

struct TauStar {
  double tau_solve = 1.6;
  double tau_bdd = 1.6;
  double tau_all = 1.6;
};

TauStar compute_tau_star(const HamiltonianChain& chain,
                         const std::vector<SpherePoint>& sigmas,
                         const FollowParams& pr, EventLedger* ledger = nullptr);

// ---------------------------------------------------------------------------
// The K-step driver and its globally Lipschitz rescaling.

struct AuxRandomness {
  Hamiltonian H0;
  SpherePoint sigma0;
  Matrix basis0;                // N x d, ambient
  std::vector<Vector> u_tilde;  // K vectors in R^d, ||.|| < sqrt(N)
  std::uint64_t fresh_seed = 0;
  std::uint64_t seed = 0;
};

// Draw omega: run the base algorithm on a fresh H0, extract the near-zero
// basis, sample the ball-uniform u_tilde's and the bridge noise seed.
AuxRandomness make_aux(const Hamiltonian& H0, const AlgorithmHandle& base,
                       const FollowParams& pr, std::uint64_t seed,
                       bool zero_u = false);

struct StepDiag {
  int j = 0;
  double energy = 0.0;
  double grad_norm = 0.0;
  double radial = 0.0;
  double tau_solve = 1.6;
  int newton_iters = 0;
  double residual = 0.0;
  double z_norm = 0.0;
  double u_norm = 0.0;
  double move_norm = 0.0;
};

// When set, overrides omega.u_tilde[j]; used by verification mode to enforce
// the correct-u coupling against a base algorithm's outputs.
using UChooser = std::function<Vector(int j, const SpherePoint& sigma_j,
                                      const Matrix& basis_j, const Hamiltonian& H_next)>;

struct LocLipResult {
  std::optional<SpherePoint> point;
  std::string undefined_reason;  // empty when defined
  int failed_step = -1;
  std::vector<Vector> sigmas;  // tracked points, ambient coords
  std::vector<StepDiag> diags;
  EventLedger ledger;
  std::optional<HamiltonianChain> chain;

  bool defined() const { return point.has_value(); }
};

LocLipResult run_loclip(const Hamiltonian& H, const AuxRandomness& omega,
                        const FollowParams& pr, bool keep_chain = true,
                        const UChooser& chooser = nullptr);

// a* run_loclip, 0 in B_N whenever the locally Lipschitz map is undefined.
Vector run_lip(const Hamiltonian& H, const AuxRandomness& omega,
               const FollowParams& pr, EventLedger* ledger_out = nullptr);

// ---------------------------------------------------------------------------
// Empirical Lipschitz probing in the coefficient metric.

struct ProbeResult {
  double max_ratio = 0.0;
  std::vector<double> ratios;
  int domain_exits = 0;
};

// Max over probes of ||op(H + dg) - op(H)|| / ||dg|| with ||dg|| = step*sqrt(N).
// extra_directions are deterministic coefficient directions probed alongside
// the random ones (e.g. the rank-one spike aligned with a tracked point).
ProbeResult empirical_lipschitz_probe(
    const std::function<Vector(const Hamiltonian&)>& op, const Hamiltonian& base,
    int n_probes, double step, std::uint64_t seed,
    const std::vector<std::vector<double>>& extra_directions = {});

}  // namespace pspin
