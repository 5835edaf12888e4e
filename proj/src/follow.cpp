#include "pspin/follow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "json.hpp"
#include "pspin/calibration.hpp"

namespace pspin {

namespace {

double clamp_tau(double t) {
  if (!std::isfinite(t)) return 1.6;
  return std::clamp(t, 1.0, 1.6);
}

double resolved_kn_constant(const FollowParams& pr, int p) {
  return pr.kn_constant > 0.0 ? pr.kn_constant : calib::kn_constant(p);
}

// Probe points for the boundedness events: the trajectory point plus a few
// seeded ball points.
std::vector<Vector> bdd_probes(const Vector& sigma, int n_random, int N,
                               std::uint64_t seed) {
  std::vector<Vector> probes;
  probes.push_back(sigma);
  Rng rng(seed);
  for (int i = 0; i < n_random; ++i) probes.push_back(rng.ball_vector(N, sqrt_n(N)));
  return probes;
}

double kn_max_ratio(const Hamiltonian& H, double C, const std::vector<Vector>& probes,
                    const OpNormConfig& cfg) {
  return in_K_N(H, C, probes, cfg).max_ratio;
}

// (Htilde - H) / sqrt(2 eps); for eps == 0 the difference is identically 0.
std::optional<Hamiltonian> scaled_difference(const Hamiltonian& H,
                                             const Hamiltonian& Ht, double eps) {
  if (eps <= 0.0) return std::nullopt;
  Hamiltonian diff;
  diff.tensor.N = H.dim();
  diff.tensor.p = H.order();
  diff.tensor.seed = 0;
  const double scale = 1.0 / std::sqrt(2.0 * eps);
  const std::size_t n = H.tensor.size();
  diff.tensor.entries.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    diff.tensor.entries[i] = scale * (Ht.tensor.entries[i] - H.tensor.entries[i]);
  return diff;
}

// Indices of the d smallest-|lambda| eigenvalues.
std::vector<Eigen::Index> inner_indices(const Vector& eigs, int d) {
  std::vector<Eigen::Index> idx(eigs.size());
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(eigs(a)) < std::abs(eigs(b));
  });
  idx.resize(d);
  return idx;
}

}  // namespace

const char* to_string(FollowErrorKind k) {
  switch (k) {
    case FollowErrorKind::NewtonDiverged: return "NewtonDiverged";
    case FollowErrorKind::StepTooLarge: return "StepTooLarge";
    case FollowErrorKind::PreconditionFailed: return "PreconditionFailed";
    case FollowErrorKind::DavisKahanFailed: return "DavisKahanFailed";
    case FollowErrorKind::GramSchmidtDegenerate: return "GramSchmidtDegenerate";
  }
  return "unknown";
}

double a_star_of_tau(double tau_all) {
  return std::max(0.0, std::min(1.0, 14.0 - 10.0 * tau_all));
}

void EventLedger::finalize() {
  tau_solve = 1.0;
  for (double t : elem_tau_solve) tau_solve = std::max(tau_solve, t);
  tau_bdd = 1.0;
  for (double r : bdd_ratios) tau_bdd = std::max(tau_bdd, clamp_tau(r));
  if (elem_tau_solve.empty()) tau_solve = 1.6;
  tau_all = std::min(tau_solve, tau_bdd);
  a_star = a_star_of_tau(tau_all);
  bool solve_all = true;
  for (bool b : s_solve) solve_all = solve_all && b;
  bool stab_all = true;
  for (bool b : s_stab) stab_all = stab_all && b;
  s_all = solve_all && stab_all && s_bdd;
}

std::string EventLedger::to_json(int indent) const {
  nlohmann::json j;
  j["s_solve"] = s_solve;
  j["s_stab"] = s_stab;
  j["s_bdd"] = s_bdd;
  j["s_all"] = s_all;
  j["elem_tau_solve"] = elem_tau_solve;
  j["bdd_ratios"] = bdd_ratios;
  j["tau_solve"] = tau_solve;
  j["tau_bdd"] = tau_bdd;
  j["tau_all"] = tau_all;
  j["a_star"] = a_star;
  return j.dump(indent);
}

TauParts element_tau_solve(const WellReport& rep, const Vector& eigenvalues, int N,
                           int p, const FollowParams& pr) {
  TauParts t;
  // Radial: need radial - 2 sqrt(p(p-1)) > gamma / tau.
  const double margin = rep.radial - bulk_edge(p);
  t.radial = margin > 0.0 ? clamp_tau(pr.gamma / margin) : 1.6;
  // Gradient: need grad_norm < delta^{1/tau} sqrt(N).
  const double g = rep.grad_norm / sqrt_n(N);
  if (g <= pr.delta)
    t.gradient = 1.0;
  else if (g >= 1.0)
    t.gradient = 1.6;
  else
    t.gradient = clamp_tau(std::log(pr.delta) / std::log(g));
  // Spectral: exactly d inside [-tau iota, tau iota], band [tau iota, 3 iota/tau]
  // empty. Resolved via the d-th and (d+1)-th smallest |lambda|.
  std::vector<double> abs_sorted(eigenvalues.size());
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
    abs_sorted[i] = std::abs(eigenvalues(i));
  std::sort(abs_sorted.begin(), abs_sorted.end());
  double t_in = 1.0, t_out = 1.0;
  if (pr.d > static_cast<int>(abs_sorted.size())) {
    t.spectral = 1.6;
    return t;
  }
  if (pr.d >= 1) t_in = abs_sorted[pr.d - 1] / pr.iota;
  if (pr.d < static_cast<int>(abs_sorted.size())) {
    const double next = abs_sorted[pr.d];
    t_out = next > 0.0 ? 3.0 * pr.iota / next : std::numeric_limits<double>::infinity();
  }
  t.spectral = clamp_tau(std::max(t_in, t_out));
  return t;
}

// ---------------------------------------------------------------------------
// follow_step

FollowStepResult follow_step(const Hamiltonian& H, const Hamiltonian& Htilde,
                             const SpherePoint& sigma, const TangentVector& u,
                             const FollowParams& pr, const SpectralData* sd_in,
                             const Vector* z0_ambient) {
  const int N = H.dim();
  const int p = H.order();
  const double root_n = sqrt_n(N);

  if (pr.d > N - 1) throw InvalidInput("follow_step: d exceeds the tangent dimension");

  SpectralData sd_local;
  if (!sd_in) {
    sd_local = compute_spectrum(H, sigma);
    sd_in = &sd_local;
  }
  const SpectralData& sd = *sd_in;

  // Lenient well at tau = 1.6 for (H, sigma).
  const WellReport rep = report_from_spectrum(sd, pr.gamma, pr.delta, N, p);
  if (!in_lenient_well(rep, sd.eigenvalues, N, pr.gamma, pr.delta, pr.d, pr.iota,
                       1.6, p)) {
    if (!(rep.radial - bulk_edge(p) > pr.gamma / 1.6))
      throw FollowError(FollowErrorKind::PreconditionFailed, "radial_margin",
                        rep.radial - bulk_edge(p),
                        "lenient well: radial margin below gamma/1.6");
    if (!(rep.grad_norm < std::pow(pr.delta, 1.0 / 1.6) * root_n))
      throw FollowError(FollowErrorKind::PreconditionFailed, "grad_norm",
                        rep.grad_norm, "lenient well: gradient above delta^{1/1.6}");
    throw FollowError(FollowErrorKind::PreconditionFailed, "spectral_band",
                      pr.d >= 1 ? sd.eigenvalues.cwiseAbs().minCoeff() : 0.0,
                      "lenient well: near-zero count or spectral band fails at 1.6");
  }

  const double u_norm = u.ambient.norm();
  const double u_cap = pr.delta_prime_prime() * root_n;
  if (!(u_norm < u_cap))
    throw FollowError(FollowErrorKind::PreconditionFailed, "u_norm", u_norm,
                      "||u|| must be below delta^{0.6} sqrt(N)");

  // Probe-based bounded-derivative events at tau = 1.6.
  if (pr.check_bdd) {
    const double C = resolved_kn_constant(pr, p);
    const auto probes = bdd_probes(sigma.coords, pr.kn_probes, N, pr.opnorm.seed);
    const double r_ham = kn_max_ratio(H, C, probes, pr.opnorm);
    if (r_ham > 1.6)
      throw FollowError(FollowErrorKind::PreconditionFailed, "bounded_ham", r_ham,
                        "H escapes 1.6 K_N at the probes");
    if (auto diff = scaled_difference(H, Htilde, pr.eps)) {
      const double r_step = kn_max_ratio(*diff, C, probes, pr.opnorm);
      if (r_step > 1.6)
        throw FollowError(FollowErrorKind::PreconditionFailed, "bounded_step", r_step,
                          "(Htilde-H)/sqrt(2 eps) escapes 1.6 K_N at the probes");
    }
  }

  // Split the tangent space at sigma into the near-zero eigenspace (frozen
  // during this step) and its complement.
  const int m = N - 1 - pr.d;
  const auto inner = inner_indices(sd.eigenvalues, pr.d);
  Matrix Vin(N - 1, pr.d);
  for (int c = 0; c < pr.d; ++c) Vin.col(c) = sd.eigenvectors.col(inner[c]);
  Matrix Vout(N - 1, m);
  {
    std::vector<bool> is_inner(N - 1, false);
    for (auto i : inner) is_inner[static_cast<std::size_t>(i)] = true;
    int c = 0;
    for (Eigen::Index i = 0; i < N - 1; ++i)
      if (!is_inner[static_cast<std::size_t>(i)]) Vout.col(c++) = sd.eigenvectors.col(i);
  }

  Vector uf = sd.frame.columns.transpose() * u.ambient;
  if (pr.d > 0) {
    const Vector in_coords = Vin.transpose() * uf;
    const double out_part = (uf - Vin * in_coords).norm();
    if (out_part > 1e-6 * root_n)
      throw FollowError(FollowErrorKind::PreconditionFailed, "u_outside_subspace",
                        out_part, "u has a component outside U_iota(sigma;H)");
    uf = Vin * in_coords;
  } else {
    if (u_norm > 1e-9 * root_n)
      throw FollowError(FollowErrorKind::PreconditionFailed, "u_outside_subspace",
                        u_norm, "d = 0 but u != 0");
    uf.setZero();
  }

  const double trust = pr.trust_c * pr.delta * root_n;
  Vector z = Vector::Zero(m);
  if (z0_ambient) {
    if (z0_ambient->size() != N)
      throw DimensionMismatch("follow_step: z0 has wrong length");
    z = Vout.transpose() * (sd.frame.columns.transpose() * *z0_ambient);
  }
  auto residual_at = [&](const Vector& zz, bool with_hess) {
    GeodesicPullback gp = geodesic_pullback(Htilde, sd.frame, uf + Vout * zz, with_hess);
    return gp;
  };

  GeodesicPullback gp = residual_at(z, true);
  Vector R = Vout.transpose() * gp.grad_frame;
  double rnorm = R.norm();
  int iters = 0;
  while (rnorm > pr.tol * root_n) {
    if (iters >= pr.max_newton)
      throw FollowError(FollowErrorKind::NewtonDiverged, "residual", rnorm,
                        "restricted Newton did not reach tol within max_newton");
    const Matrix J = Vout.transpose() * gp.hess_frame * Vout;
    const Vector dz = J.ldlt().solve(-R);
    double alpha = 1.0;
    bool accepted = false;
    for (int h = 0; h < 30; ++h) {
      const Vector zt = z + alpha * dz;
      GeodesicPullback gt = residual_at(zt, false);
      const double rt = (Vout.transpose() * gt.grad_frame).norm();
      if (rt < rnorm) {
        z = zt;
        rnorm = rt;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted)
      throw FollowError(FollowErrorKind::NewtonDiverged, "residual", rnorm,
                        "damped Newton failed to reduce the residual");
    if (z.norm() > trust)
      throw FollowError(FollowErrorKind::StepTooLarge, "z_norm", z.norm(),
                        "Newton iterate escaped the c(d,iota) delta sqrt(N) trust bound");
    gp = residual_at(z, true);
    R = Vout.transpose() * gp.grad_frame;
    rnorm = R.norm();
    ++iters;
  }

  FollowStepResult out{SpherePoint{Vector()}, rnorm, iters, z.norm(), 0.0, 0.0};
  const Vector y_frame = uf + Vout * z;
  const Vector y_amb = sd.frame.columns * y_frame;
  out.y_norm = y_amb.norm();
  out.sigma_new = exp_map(sigma, TangentVector{sigma.coords, y_amb});
  out.move_norm = (out.sigma_new.coords - sigma.coords).norm();
  return out;
}

TransportResult transport_basis(const Hamiltonian& H, const Hamiltonian& Htilde,
                                const SpherePoint& sigma, const SpherePoint& sigma_new,
                                const Matrix& basis, double iota, int d,
                                const SpectralData* sd_new) {
  (void)H;
  (void)sigma;
  TransportResult res;
  if (d == 0) {
    res.basis = Matrix(sigma_new.dim(), 0);
    return res;
  }
  if (basis.cols() != d) throw DimensionMismatch("transport_basis: basis has != d columns");

  SpectralData local;
  if (!sd_new) {
    local = compute_spectrum(Htilde, sigma_new);
    sd_new = &local;
  }
  const Vector& eig = sd_new->eigenvalues;
  std::vector<double> offenders;
  int d_inner = 0;
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    const double x = std::abs(eig(i));
    if (x <= 1.1 * iota + 1e-10) ++d_inner;
    else if (x <= 2.9 * iota - 1e-10) offenders.push_back(eig(i));
  }
  if (!offenders.empty() || d_inner != d) {
    std::string msg = !offenders.empty()
                          ? "eigenvalue in the forbidden band +-[1.1iota,2.9iota]"
                          : ("near-zero count " + std::to_string(d_inner) +
                             " != d = " + std::to_string(d));
    throw FollowError(FollowErrorKind::DavisKahanFailed, "spectral_band",
                      offenders.empty() ? static_cast<double>(d_inner) : offenders[0],
                      "basis transport: " + msg);
  }

  // Ambient basis of U_{1.1 iota}(sigma_new; Htilde).
  Matrix U(sigma_new.dim(), d);
  {
    int c = 0;
    for (Eigen::Index i = 0; i < eig.size(); ++i)
      if (std::abs(eig(i)) <= 1.1 * iota + 1e-10)
        U.col(c++) = sd_new->frame.columns * sd_new->eigenvectors.col(i);
  }
  // Project the old columns and orthonormalize in order (nested spans).
  const Matrix projected = U * (U.transpose() * basis);
  res.basis = gram_schmidt_in_order(projected, 1e-3, &res.min_pivot);
  for (int j = 0; j < d; ++j)
    res.max_col_change =
        std::max(res.max_col_change, (res.basis.col(j) - basis.col(j)).norm());
  return res;
}

Matrix gram_schmidt_in_order(const Matrix& cols, double pivot_tol,
                             double* min_pivot) {
  Matrix out(cols.rows(), cols.cols());
  double worst = std::numeric_limits<double>::infinity();
  for (int j = 0; j < cols.cols(); ++j) {
    Vector w = cols.col(j);
    for (int i = 0; i < j; ++i) w -= out.col(i).dot(w) * out.col(i);
    const double pivot = w.norm();
    worst = std::min(worst, pivot);
    if (pivot < pivot_tol)
      throw FollowError(FollowErrorKind::GramSchmidtDegenerate, "pivot", pivot,
                        "projected basis vectors are nearly dependent");
    out.col(j) = w / pivot;
  }
  if (min_pivot) *min_pivot = cols.cols() ? worst : 1.0;
  return out;
}

Vector choose_u_oracle(const SpherePoint& sigma, const Matrix& basis,
                       const SpherePoint& target) {
  const TangentVector lg = log_map(sigma, target);
  return basis.transpose() * lg.ambient;
}

// ---------------------------------------------------------------------------
// Driver

AuxRandomness make_aux(const Hamiltonian& H0, const AlgorithmHandle& base,
                       const FollowParams& pr, std::uint64_t seed, bool zero_u) {
  AuxRandomness aux;
  aux.seed = seed;
  aux.H0 = H0;
  aux.sigma0 = SpherePoint::rescaled(base.run(H0, split_seed(seed, 1)));
  const SpectralData sd = compute_spectrum(H0, aux.sigma0);
  const auto inner = inner_indices(sd.eigenvalues, pr.d);
  aux.basis0.resize(H0.dim(), pr.d);
  for (int c = 0; c < pr.d; ++c)
    aux.basis0.col(c) = sd.frame.columns * sd.eigenvectors.col(inner[c]);
  Rng rng(split_seed(seed, 2));
  aux.u_tilde.resize(pr.K);
  for (int j = 0; j < pr.K; ++j)
    aux.u_tilde[j] = zero_u ? Vector::Zero(pr.d)
                            : rng.ball_vector(pr.d, sqrt_n(H0.dim()));
  aux.fresh_seed = split_seed(seed, 3);
  return aux;
}

LocLipResult run_loclip(const Hamiltonian& H, const AuxRandomness& omega,
                        const FollowParams& pr, bool keep_chain,
                        const UChooser& chooser) {
  LocLipResult res;
  const int N = H.dim();
  const int p = H.order();
  const double C = resolved_kn_constant(pr, p);

  const Hamiltonian HK = endpoint_embed(omega.H0, H, pr.K, pr.eps);
  HamiltonianChain chain;
  if (keep_chain) {
    chain.epsilon = pr.eps;
    chain.mode = "bridge";
    chain.hams.resize(pr.K + 1);
    chain.hams[0] = omega.H0;
    chain.hams[pr.K] = HK;
  }

  SpherePoint sigma = omega.sigma0;
  Matrix basis = omega.basis0;
  Hamiltonian cur = omega.H0;
  res.sigmas.push_back(sigma.coords);

  auto undefined = [&](int step, const std::string& reason) {
    res.undefined_reason = reason;
    res.failed_step = step;
    res.ledger.tau_solve = res.ledger.tau_bdd = res.ledger.tau_all = 1.6;
    res.ledger.a_star = 0.0;
    res.ledger.s_all = false;
    if (keep_chain) res.chain = std::move(chain);
    return res;
  };

  SpectralData sd = compute_spectrum(cur, sigma);
  for (int j = 0; j <= pr.K; ++j) {
    // Element-j gates and lenient margins.
    const WellReport rep = report_from_spectrum(sd, pr.gamma, pr.delta, N, p);
    const TauParts parts = element_tau_solve(rep, sd.eigenvalues, N, p, pr);
    const double tau_elem = parts.combined();
    res.ledger.elem_tau_solve.push_back(tau_elem);
    res.ledger.s_solve.push_back(
        in_lenient_well(rep, sd.eigenvalues, N, pr.gamma, pr.delta, pr.d, pr.iota,
                        1.0, p));
    StepDiag diag;
    diag.j = j;
    diag.energy = sd.energy;
    diag.grad_norm = sd.grad_norm;
    diag.radial = sd.radial;
    diag.tau_solve = tau_elem;
    if (tau_elem >= 1.6)
      return undefined(j, "S_solve(" + std::to_string(j) + "): lenient well fails at tau=1.6");

    const double r_ham = pr.check_bdd
                             ? kn_max_ratio(cur, C,
                                            bdd_probes(sigma.coords, pr.kn_probes, N,
                                                       split_seed(pr.opnorm.seed, j)),
                                            pr.opnorm)
                             : 0.0;
    res.ledger.bdd_ratios.push_back(r_ham);
    if (r_ham > 1.6)
      return undefined(j, "S_bdd(" + std::to_string(j) + "): H escapes 1.6 K_N");

    if (j == pr.K) {
      res.diags.push_back(diag);
      break;
    }

    // Next chain element.
    Hamiltonian next;
    if (j + 1 == pr.K) {
      next = HK;
    } else {
      const DisorderTensor fresh = sample_disorder(
          N, p, split_seed(omega.fresh_seed, static_cast<std::uint64_t>(j + 1)));
      next = bridge_fill(cur, HK, j + 1, pr.K, pr.eps, fresh);
    }

    // Step boundedness.
    if (pr.check_bdd) {
      if (auto diff = scaled_difference(cur, next, pr.eps)) {
        const double r_step =
            kn_max_ratio(*diff, C,
                         bdd_probes(sigma.coords, pr.kn_probes, N,
                                    split_seed(pr.opnorm.seed, 1000 + j)),
                         pr.opnorm);
        res.ledger.bdd_ratios.push_back(r_step);
        if (r_step > 1.6)
          return undefined(j, "S_bdd(" + std::to_string(j) +
                                  "): step difference escapes 1.6 sqrt(2eps) K_N");
      } else {
        res.ledger.bdd_ratios.push_back(0.0);
      }
    }

    // Translation u^{(j)} in the current near-zero basis.
    Vector ut = chooser ? chooser(j, sigma, basis, next) : omega.u_tilde[j];
    if (ut.size() != pr.d)
      return undefined(j, "omega: u_tilde(" + std::to_string(j) + ") has wrong dimension");
    const Vector u_amb = pr.d > 0 ? Vector(basis * ut) : Vector(Vector::Zero(N));
    diag.u_norm = u_amb.norm();

    FollowStepResult step;
    try {
      FollowParams pr_step = pr;
      pr_step.check_bdd = false;  // the driver just gated both events
      step = follow_step(cur, next, sigma, TangentVector{sigma.coords, u_amb},
                         pr_step, &sd);
    } catch (const FollowError& e) {
      return undefined(j, std::string("follow_step(") + std::to_string(j) + "): " +
                              to_string(e.kind) + " [" + e.quantity + "=" +
                              std::to_string(e.value) + "]");
    } catch (const std::exception& e) {
      return undefined(j, std::string("follow_step(") + std::to_string(j) + "): " +
                              e.what());
    }
    diag.newton_iters = step.newton_iters;
    diag.residual = step.residual;
    diag.z_norm = step.z_norm;
    diag.move_norm = step.move_norm;
    res.ledger.s_stab.push_back(step.move_norm / sqrt_n(N) < pr.delta);

    // Spectrum at the new point (next element's gate + basis transport).
    SpectralData sd_next = compute_spectrum(next, step.sigma_new);
    try {
      TransportResult tr = transport_basis(cur, next, sigma, step.sigma_new, basis,
                                           pr.iota, pr.d, &sd_next);
      basis = std::move(tr.basis);
    } catch (const FollowError& e) {
      return undefined(j, std::string("transport_basis(") + std::to_string(j) +
                              "): " + to_string(e.kind) + " [" + e.quantity + "=" +
                              std::to_string(e.value) + "]");
    } catch (const std::exception& e) {
      return undefined(j, std::string("transport_basis(") + std::to_string(j) +
                              "): " + e.what());
    }

    sigma = step.sigma_new;
    res.sigmas.push_back(sigma.coords);
    res.diags.push_back(diag);
    if (keep_chain) chain.hams[j + 1] = next;
    cur = std::move(next);
    sd = std::move(sd_next);
  }

  res.point = sigma;
  bool bdd_ok = true;
  for (double r : res.ledger.bdd_ratios) bdd_ok = bdd_ok && r <= 1.0;
  res.ledger.s_bdd = bdd_ok;
  res.ledger.finalize();
  if (keep_chain) res.chain = std::move(chain);
  return res;
}

Vector run_lip(const Hamiltonian& H, const AuxRandomness& omega,
               const FollowParams& pr, EventLedger* ledger_out) {
  LocLipResult res = run_loclip(H, omega, pr, /*keep_chain=*/false);
  if (ledger_out) *ledger_out = res.ledger;
  if (!res.defined()) return Vector::Zero(H.dim());
  return res.ledger.a_star * res.point->coords;
}

// ---------------------------------------------------------------------------
// Standalone event accounting over a realized chain.

EventLedger event_report(const HamiltonianChain& chain,
                         const std::vector<SpherePoint>& sigmas,
                         const FollowParams& pr) {
  if (sigmas.size() != chain.hams.size())
    throw DimensionMismatch("event_report: sigmas must align with the chain");
  const int N = chain.N();
  const int p = chain.p();
  const double C = resolved_kn_constant(pr, p);
  EventLedger led;
  for (std::size_t i = 0; i < chain.hams.size(); ++i) {
    const SpectralData sd = compute_spectrum(chain.hams[i], sigmas[i]);
    const WellReport rep = report_from_spectrum(sd, pr.gamma, pr.delta, N, p);
    led.s_solve.push_back(in_lenient_well(rep, sd.eigenvalues, N, pr.gamma, pr.delta,
                                          pr.d, pr.iota, 1.0, p));
    led.elem_tau_solve.push_back(
        element_tau_solve(rep, sd.eigenvalues, N, p, pr).combined());
    if (pr.check_bdd) {
      led.bdd_ratios.push_back(
          kn_max_ratio(chain.hams[i], C,
                       bdd_probes(sigmas[i].coords, pr.kn_probes, N,
                                  split_seed(pr.opnorm.seed, 7000 + i)),
                       pr.opnorm));
    }
  }
  for (std::size_t i = 0; i + 1 < sigmas.size(); ++i) {
    led.s_stab.push_back((sigmas[i].coords - sigmas[i + 1].coords).norm() / sqrt_n(N) <
                         pr.delta);
    if (pr.check_bdd) {
      if (auto diff = scaled_difference(chain.hams[i], chain.hams[i + 1], chain.epsilon))
        led.bdd_ratios.push_back(
            kn_max_ratio(*diff, C,
                         bdd_probes(sigmas[i].coords, pr.kn_probes, N,
                                    split_seed(pr.opnorm.seed, 8000 + i)),
                         pr.opnorm));
      else
        led.bdd_ratios.push_back(0.0);
    }
  }
  bool bdd_ok = true;
  for (double r : led.bdd_ratios) bdd_ok = bdd_ok && r <= 1.0;
  led.s_bdd = bdd_ok;
  led.finalize();
  return led;
}

TauStar compute_tau_star(const HamiltonianChain& chain,
                         const std::vector<SpherePoint>& sigmas,
                         const FollowParams& pr, EventLedger* ledger) {
  EventLedger led = event_report(chain, sigmas, pr);
  TauStar t{led.tau_solve, led.tau_bdd, led.tau_all};
  if (ledger) *ledger = std::move(led);
  return t;
}

ProbeResult empirical_lipschitz_probe(
    const std::function<Vector(const Hamiltonian&)>& op, const Hamiltonian& base,
    int n_probes, double step, std::uint64_t seed,
    const std::vector<std::vector<double>>& extra_directions) {
  const double target_norm = step * sqrt_n(base.dim());
  const Vector base_out = op(base);
  ProbeResult res;
  Rng rng(seed);
  const std::size_t n = base.tensor.size();
  auto probe_with = [&](const std::vector<double>& dir) {
    double norm = 0.0;
    for (double x : dir) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) return;
    Hamiltonian pert = base;
    const double scale = target_norm / norm;
    for (std::size_t i = 0; i < n; ++i) pert.tensor.entries[i] += scale * dir[i];
    try {
      const Vector out = op(pert);
      res.ratios.push_back((out - base_out).norm() / target_norm);
      res.max_ratio = std::max(res.max_ratio, res.ratios.back());
    } catch (const std::exception&) {
      ++res.domain_exits;
    }
  };
  for (const auto& dir : extra_directions) {
    if (dir.size() != n) throw DimensionMismatch("probe direction has wrong length");
    probe_with(dir);
  }
  std::vector<double> dir(n);
  for (int i = 0; i < n_probes; ++i) {
    rng.fill_gaussian(dir.data(), n);
    probe_with(dir);
  }
  return res;
}

}  // namespace pspin
