#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pspin/sphere.hpp"

namespace pspin {

struct WellParams {
  double gamma = 0.0;
  double delta = 0.0;
};

// Typed well: d near-zero eigenvalues, spectrum avoiding +-[a,b]. The [iota,
// 3*iota] shorthand sets a = iota, b = 3*iota.
struct WellType {
  int d = 0;
  double a = 0.0;
  double b = 0.0;

  static WellType band(int d, double a, double b);
  static WellType iota_short(int d, double iota) { return band(d, iota, 3.0 * iota); }
};

struct WellReport {
  double grad_norm = 0.0;
  double radial = 0.0;
  double energy = 0.0;
  bool is_well = false;
  double grad_margin = 0.0;    // delta*sqrt(N) - grad_norm
  double radial_margin = 0.0;  // radial - 2 sqrt(p(p-1)) - gamma
  std::vector<double> eigenvalues;  // descending, empty unless requested
  std::optional<std::pair<int, double>> classification;  // (d, iota)

  std::string to_json(int indent = -1) const;
};

// Tangent-space spectral data of grad^2_sp at one point; shared by the well
// predicates so the eigensolve happens once. Carries the first-order data of
// the same evaluation.
struct SpectralData {
  TangentFrame frame;
  Vector eigenvalues;   // ascending (Eigen order)
  Matrix eigenvectors;  // frame coordinates, columns matching eigenvalues
  double energy = 0.0;
  double radial = 0.0;
  double grad_norm = 0.0;  // ||grad_sp||
};

SpectralData compute_spectrum(const Hamiltonian& H, const SpherePoint& sigma);

// Assemble the well predicate values from precomputed spectral data.
WellReport report_from_spectrum(const SpectralData& sd, double gamma, double delta,
                                int N, int p);

WellReport well_report(const Hamiltonian& H, const SpherePoint& sigma, double gamma,
                       double delta, bool with_spectrum = true);

// Span of eigenvectors with eigenvalues in [-iota, iota], ambient coordinates.
struct Subspace {
  SpherePoint base;
  Matrix basis;  // N x d, orthonormal columns orthogonal to base

  int dim() const { return static_cast<int>(basis.cols()); }
};

Subspace near_zero_eigenspace(const Hamiltonian& H, const SpherePoint& sigma,
                              double iota);
Subspace near_zero_eigenspace(const SpectralData& sd, double iota);

// Ladder scan iota_i = 10^{i-k-5} gamma, i = 0..k+3: first rung whose band
// [iota_i, iota_{i+1}) contains no |eigenvalue|; d = #{|lambda| <= iota_i}.
std::optional<std::pair<int, double>> classify_spectrum(const Vector& eigenvalues,
                                                        double gamma, int k);
std::optional<std::pair<int, double>> classify_well(const Hamiltonian& H,
                                                    const SpherePoint& sigma,
                                                    double gamma, double delta, int k);

bool in_typed_well(const Hamiltonian& H, const SpherePoint& sigma, double gamma,
                   double delta, const WellType& wt);
bool spectrum_matches_type(const Vector& eigenvalues, const WellType& wt);

// Membership in W(gamma/tau, delta^{1/tau}, d, [tau*iota, 3*iota/tau]).
bool in_lenient_well(const Hamiltonian& H, const SpherePoint& sigma, double gamma,
                     double delta, int d, double iota, double tau);
bool in_lenient_well(const WellReport& rep, const Vector& eigenvalues_desc, int N,
                     double gamma, double delta, int d, double iota, double tau,
                     int p);

// ---------------------------------------------------------------------------
// Davis-Kahan subspace tracking between two symmetric matrices.

class TrackingError : public std::runtime_error {
 public:
  TrackingError(const std::string& what, std::vector<double> offending)
      : std::runtime_error(what), offending_eigenvalues(std::move(offending)) {}
  std::vector<double> offending_eigenvalues;
};

struct TrackResult {
  Matrix basis;        // columns spanning V' (same coordinates as the inputs)
  double proj_dist;    // ||P_V - P_V'||_op
  double input_dist;   // ||A - A'||_op
  double ratio;        // proj_dist / input_dist (0 if input_dist == 0)
  int d;
};

// Requires A to have exactly d eigenvalues in [-iota,iota] and none in
// +-(iota,3iota]. Returns the span of A'-eigenvectors in [-1.1iota,1.1iota];
// throws TrackingError if A' has eigenvalues in +-[1.1iota,2.9iota] or a
// different count in the inner band.
TrackResult davis_kahan_track(const Matrix& A, const Matrix& Aprime, double iota,
                              int d);

// H'(sigma) = H(sigma) + mu N (<sigma,w>/N)^p, realized by adding the
// rank-one spike mu N^{-(p-1)/2} w^{otimes p} to the raw coefficients.
Hamiltonian plant_well(const Hamiltonian& H, const SpherePoint& w, double mu);

}  // namespace pspin
