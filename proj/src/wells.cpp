#include "pspin/wells.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace pspin {

namespace {

// Band membership uses closed intervals with a 1e-10 endpoint tolerance,
// resolved toward membership in [-iota, iota].
constexpr double kBandTol = 1e-10;

bool below(double x, double c) { return x <= c + kBandTol; }

int count_inside(const Vector& eigs, double iota) {
  int d = 0;
  for (Eigen::Index i = 0; i < eigs.size(); ++i)
    if (below(std::abs(eigs(i)), iota)) ++d;
  return d;
}

bool band_occupied(const Vector& eigs, double a, double b) {
  for (Eigen::Index i = 0; i < eigs.size(); ++i) {
    const double x = std::abs(eigs(i));
    if (!below(x, a) && x <= b - kBandTol) return true;
  }
  return false;
}

double opnorm_sym(const Matrix& A) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(A, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

}  // namespace

WellType WellType::band(int d, double a, double b) {
  if (!(0.0 < a && a < b)) throw InvalidInput("WellType requires 0 < a < b");
  if (d < 0) throw InvalidInput("WellType requires d >= 0");
  return WellType{d, a, b};
}

SpectralData compute_spectrum(const Hamiltonian& H, const SpherePoint& sigma) {
  SpectralData sd;
  sd.frame = make_frame(sigma);
  EvalWorkspace ws(H, sigma.coords);
  const Matrix hess = riemannian_hessian(ws, sd.frame);
  Eigen::SelfAdjointEigenSolver<Matrix> es(hess);
  sd.eigenvalues = es.eigenvalues();
  sd.eigenvectors = es.eigenvectors();
  sd.energy = ws.value();
  const Vector grad = ws.gradient();
  sd.radial = grad.dot(sigma.coords) / sigma.dim();
  sd.grad_norm = (grad - sigma.coords * sd.radial).norm();
  return sd;
}

WellReport report_from_spectrum(const SpectralData& sd, double gamma, double delta,
                                int N, int p) {
  WellReport rep;
  rep.energy = sd.energy;
  rep.radial = sd.radial;
  rep.grad_norm = sd.grad_norm;
  rep.grad_margin = delta * sqrt_n(N) - rep.grad_norm;
  rep.radial_margin = rep.radial - bulk_edge(p) - gamma;
  rep.is_well = rep.grad_norm < delta * sqrt_n(N) && rep.radial_margin > 0.0;
  rep.eigenvalues.assign(sd.eigenvalues.data(),
                         sd.eigenvalues.data() + sd.eigenvalues.size());
  std::sort(rep.eigenvalues.begin(), rep.eigenvalues.end(), std::greater<>());
  return rep;
}

WellReport well_report(const Hamiltonian& H, const SpherePoint& sigma, double gamma,
                       double delta, bool with_spectrum) {
  WellReport rep;
  const int n = sigma.dim();
  const int p = H.order();
  EvalWorkspace ws(H, sigma.coords);
  const Vector grad = ws.gradient();
  rep.energy = ws.value();
  rep.radial = grad.dot(sigma.coords) / n;
  Vector tang = grad - sigma.coords * (rep.radial);  // sigma * <sigma,g>/N
  rep.grad_norm = tang.norm();
  rep.grad_margin = delta * sqrt_n(n) - rep.grad_norm;
  rep.radial_margin = rep.radial - bulk_edge(p) - gamma;
  rep.is_well = rep.grad_norm < delta * sqrt_n(n) && rep.radial_margin > 0.0;
  if (with_spectrum) {
    TangentFrame frame = make_frame(sigma);
    Matrix hess = riemannian_hessian(ws, frame);
    Eigen::SelfAdjointEigenSolver<Matrix> es(hess, Eigen::EigenvaluesOnly);
    rep.eigenvalues.assign(es.eigenvalues().data(),
                           es.eigenvalues().data() + es.eigenvalues().size());
    std::sort(rep.eigenvalues.begin(), rep.eigenvalues.end(), std::greater<>());
  }
  return rep;
}

std::string WellReport::to_json(int indent) const {
  nlohmann::json j;
  j["grad_norm"] = grad_norm;
  j["radial"] = radial;
  j["energy"] = energy;
  j["is_well"] = is_well;
  j["grad_margin"] = grad_margin;
  j["radial_margin"] = radial_margin;
  j["eigenvalues"] = eigenvalues;
  if (classification) {
    j["classification"] = {{"d", classification->first},
                           {"iota", classification->second}};
  } else {
    j["classification"] = nullptr;
  }
  return j.dump(indent);
}

Subspace near_zero_eigenspace(const SpectralData& sd, double iota) {
  if (!(iota > 0.0)) throw InvalidInput("iota must be positive");
  const Eigen::Index m = sd.eigenvalues.size();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < m; ++i)
    if (below(std::abs(sd.eigenvalues(i)), iota)) keep.push_back(i);
  Matrix basis(sd.frame.base.dim(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c)
    basis.col(c) = sd.frame.columns * sd.eigenvectors.col(keep[c]);
  return Subspace{sd.frame.base, std::move(basis)};
}

Subspace near_zero_eigenspace(const Hamiltonian& H, const SpherePoint& sigma,
                              double iota) {
  return near_zero_eigenspace(compute_spectrum(H, sigma), iota);
}

std::optional<std::pair<int, double>> classify_spectrum(const Vector& eigenvalues,
                                                        double gamma, int k) {
  if (!(gamma > 0.0) || k < 0) throw InvalidInput("classify: gamma>0, k>=0 required");
  for (int i = 0; i <= k + 3; ++i) {
    const double lo = std::pow(10.0, i - k - 5) * gamma;
    const double hi = 10.0 * lo;
    bool occupied = false;
    for (Eigen::Index j = 0; j < eigenvalues.size(); ++j) {
      const double x = std::abs(eigenvalues(j));
      if (!below(x, lo) && x < hi - kBandTol) {
        occupied = true;
        break;
      }
    }
    if (!occupied) return std::make_pair(count_inside(eigenvalues, lo), lo);
  }
  return std::nullopt;
}

std::optional<std::pair<int, double>> classify_well(const Hamiltonian& H,
                                                    const SpherePoint& sigma,
                                                    double gamma, double delta,
                                                    int k) {
  const WellReport rep = well_report(H, sigma, gamma, delta, false);
  if (!rep.is_well)
    throw InvalidInput("classify_well: point fails the (gamma,delta)-well predicate");
  const SpectralData sd = compute_spectrum(H, sigma);
  return classify_spectrum(sd.eigenvalues, gamma, k);
}

bool spectrum_matches_type(const Vector& eigenvalues, const WellType& wt) {
  return count_inside(eigenvalues, wt.a) == wt.d &&
         !band_occupied(eigenvalues, wt.a, wt.b);
}

bool in_typed_well(const Hamiltonian& H, const SpherePoint& sigma, double gamma,
                   double delta, const WellType& wt) {
  const WellReport rep = well_report(H, sigma, gamma, delta, false);
  if (!rep.is_well) return false;
  const SpectralData sd = compute_spectrum(H, sigma);
  return spectrum_matches_type(sd.eigenvalues, wt);
}

bool in_lenient_well(const WellReport& rep, const Vector& eigenvalues_desc, int N,
                     double gamma, double delta, int d, double iota, double tau,
                     int p) {
  if (!(tau >= 1.0 && tau <= 1.6)) throw InvalidInput("tau must lie in [1, 1.6]");
  const double root_n = sqrt_n(N);
  if (!(rep.grad_norm < std::pow(delta, 1.0 / tau) * root_n)) return false;
  if (!(rep.radial - bulk_edge(p) > gamma / tau)) return false;
  const WellType wt = WellType::band(d, tau * iota, 3.0 * iota / tau);
  return spectrum_matches_type(eigenvalues_desc, wt);
}

bool in_lenient_well(const Hamiltonian& H, const SpherePoint& sigma, double gamma,
                     double delta, int d, double iota, double tau) {
  if (!(tau >= 1.0 && tau <= 1.6)) throw InvalidInput("tau must lie in [1, 1.6]");
  const WellReport rep = well_report(H, sigma, gamma, delta, false);
  const SpectralData sd = compute_spectrum(H, sigma);
  return in_lenient_well(rep, sd.eigenvalues, sigma.dim(), gamma, delta, d, iota, tau,
                         H.order());
}

TrackResult davis_kahan_track(const Matrix& A, const Matrix& Aprime, double iota,
                              int d) {
  if (A.rows() != Aprime.rows() || A.cols() != Aprime.cols())
    throw DimensionMismatch("davis_kahan_track: shape mismatch");
  Eigen::SelfAdjointEigenSolver<Matrix> esA(A);
  const Vector evA = esA.eigenvalues();
  if (count_inside(evA, iota) != d)
    throw InvalidInput("davis_kahan_track: A does not have d eigenvalues in [-iota,iota]");
  if (band_occupied(evA, iota, 3.0 * iota))
    throw InvalidInput("davis_kahan_track: A has eigenvalues in +-(iota,3iota]");

  Eigen::SelfAdjointEigenSolver<Matrix> esB(Aprime);
  const Vector evB = esB.eigenvalues();

  std::vector<double> offenders;
  for (Eigen::Index i = 0; i < evB.size(); ++i) {
    const double x = std::abs(evB(i));
    if (!below(x, 1.1 * iota) && x <= 2.9 * iota - kBandTol) offenders.push_back(evB(i));
  }
  const int d_prime = count_inside(evB, 1.1 * iota);
  if (!offenders.empty())
    throw TrackingError("tracked matrix has eigenvalues in the forbidden band "
                        "+-[1.1iota, 2.9iota]",
                        offenders);
  if (d_prime != d) {
    for (Eigen::Index i = 0; i < evB.size(); ++i)
      if (below(std::abs(evB(i)), 1.1 * iota)) offenders.push_back(evB(i));
    throw TrackingError("tracked matrix has " + std::to_string(d_prime) +
                            " eigenvalues in [-1.1iota, 1.1iota], expected " +
                            std::to_string(d),
                        offenders);
  }

  TrackResult res;
  res.d = d;
  res.basis.resize(A.rows(), d);
  {
    int c = 0;
    for (Eigen::Index i = 0; i < evB.size(); ++i)
      if (below(std::abs(evB(i)), 1.1 * iota)) res.basis.col(c++) = esB.eigenvectors().col(i);
  }
  Matrix P = Matrix::Zero(A.rows(), A.cols());
  for (Eigen::Index i = 0; i < evA.size(); ++i)
    if (below(std::abs(evA(i)), iota))
      P.noalias() += esA.eigenvectors().col(i) * esA.eigenvectors().col(i).transpose();
  const Matrix Pp = res.basis * res.basis.transpose();
  res.proj_dist = opnorm_sym(P - Pp);
  res.input_dist = opnorm_sym(A - Aprime);
  res.ratio = res.input_dist > 0.0 ? res.proj_dist / res.input_dist : 0.0;
  return res;
}

Hamiltonian plant_well(const Hamiltonian& H, const SpherePoint& w, double mu) {
  if (mu < 0.0) throw InvalidInput("plant_well: mu must be nonnegative");
  if (w.dim() != H.dim()) throw DimensionMismatch("plant_well: w has wrong length");
  const int p = H.order();
  const int N = H.dim();
  Hamiltonian out = H;
  if (mu == 0.0) return out;
  // Spike coefficients: mu N^{-(p-1)/2} w^{otimes p}, so that the energy gain
  // is exactly mu N (<sigma,w>/N)^p.
  const double scale = mu * std::pow(static_cast<double>(N), -(p - 1) / 2.0);
  std::vector<int> idx(p, 0);
  std::vector<double> prefix(p, 1.0);  // prefix[j] = prod_{i<j} w[idx[i]]
  for (int m = 0; m + 1 < p; ++m) prefix[m + 1] = prefix[m] * w.coords(idx[m]);
  const std::size_t total = out.tensor.size();
  for (std::size_t flat = 0; flat < total; ++flat) {
    // Rebuild the product lazily from the deepest changed digit.
    double prod = prefix[p - 1] * w.coords(idx[p - 1]);
    out.tensor.entries[flat] += scale * prod;
    int j = p - 1;
    for (; j >= 0; --j) {
      if (++idx[j] < N) break;
      idx[j] = 0;
    }
    if (flat + 1 < total) {
      if (j < 0) j = 0;
      for (int m = j; m < p - 1; ++m) prefix[m + 1] = prefix[m] * w.coords(idx[m]);
    }
  }
  return out;
}

}  // namespace pspin
