#include "pspin/optimize.hpp"

#include "pspin/calibration.hpp"

#include <cmath>
#include <limits>

namespace pspin {

long AscentConfig::default_max_iters(double C_hat, double delta, double eta) {
  return static_cast<long>(std::ceil(10.0 * C_hat / (delta * delta * eta)));
}

Trajectory gd_ascent(const Hamiltonian& H, const SpherePoint& sigma0,
                     const AscentConfig& cfg) {
  if (!(cfg.eta > 0.0)) throw InvalidInput("gd_ascent: eta must be positive");
  AscentConfig resolved = cfg;
  if (resolved.max_iters <= 0) {
    if (!(cfg.delta_stop > 0.0))
      throw InvalidInput("gd_ascent: the default iteration cap needs delta_stop > 0");
    resolved.max_iters = AscentConfig::default_max_iters(calib::grad_lipschitz_hat,
                                                         cfg.delta_stop, cfg.eta);
  }
  const auto& cfg_r = resolved;
  const int n = H.dim();
  const double root_n = sqrt_n(n);
  if (sigma0.dim() != n) throw DimensionMismatch("gd_ascent: sigma0 length");
  if (std::abs(sigma0.coords.norm() - root_n) > 1e-8 * root_n)
    throw InvalidInput("gd_ascent: sigma0 is off the sphere");

  Trajectory traj;
  traj.min_gain_slack = std::numeric_limits<double>::infinity();
  Vector sigma = sigma0.coords;

  auto push = [&](const Vector& s, double energy, double gnorm, double radial) {
    if (cfg_r.record_points) traj.points.push_back(s);
    traj.energies.push_back(energy / n);
    traj.grad_norms.push_back(gnorm);
    traj.radials.push_back(radial);
  };

  EvalWorkspace ws(H, sigma);
  Vector grad = ws.gradient();
  double radial = grad.dot(sigma) / n;
  Vector tang = grad - sigma * radial;
  double energy = ws.value();
  push(sigma, energy, tang.norm(), radial);

  for (long it = 0; it < cfg_r.max_iters; ++it) {
    const double gnorm = traj.grad_norms.back();
    if (gnorm <= cfg.delta_stop * root_n) {
      traj.stop_reason = StopReason::GradientThreshold;
      traj.final_coords = sigma;
      return traj;
    }
    Vector next = sigma + cfg.eta * tang;
    next *= root_n / next.norm();

    EvalWorkspace ws2(H, next);
    const double e2 = ws2.value();
    // Per-step gain bound from the ascent lemma, valid below the safe step.
    const double gain = (e2 - energy) / n;
    const double bound = cfg.eta * gnorm * gnorm / (2.0 * n);
    traj.min_gain_slack = std::min(traj.min_gain_slack, gain - bound);
    if (gain < bound) ++traj.gain_violations;

    sigma = std::move(next);
    energy = e2;
    grad = ws2.gradient();
    radial = grad.dot(sigma) / n;
    tang = grad - sigma * radial;
    push(sigma, energy, tang.norm(), radial);
    traj.iters = it + 1;
  }
  if (traj.grad_norms.back() <= cfg.delta_stop * root_n)
    traj.stop_reason = StopReason::GradientThreshold;
  else
    traj.stop_reason = StopReason::MaxIters;
  traj.final_coords = sigma;
  return traj;
}

Trajectory hessian_ascent(const Hamiltonian& H, const HessianAscentConfig& cfg) {
  const int n = H.dim();
  const double root_n = sqrt_n(n);
  const double step = cfg.step_frac * root_n;

  Rng rng(cfg.seed);
  Vector x = rng.gaussian_vector(n);
  x *= cfg.r0_frac * root_n / x.norm();

  Trajectory traj;
  traj.min_gain_slack = 0.0;
  Vector power_vec = rng.gaussian_vector(n - 1).normalized();

  while (true) {
    SpherePoint sigma = SpherePoint::rescaled(x);
    EvalWorkspace ws(H, sigma.coords);
    const Vector grad = ws.gradient();
    const double radial = grad.dot(sigma.coords) / n;
    const Vector tang = grad - sigma.coords * radial;
    if (cfg.record_points) traj.points.push_back(sigma.coords);
    traj.energies.push_back(ws.value() / n);
    traj.grad_norms.push_back(tang.norm());
    traj.radials.push_back(radial);

    if (x.norm() >= root_n) break;

    const TangentFrame frame = make_frame(sigma);
    const Matrix hess = riemannian_hessian(ws, frame);
    // Top (most positive) eigenvector by shifted power iteration, warm-started
    // from the previous step's direction.
    const double shift = 2.0 * bulk_edge(H.order()) + std::abs(radial) + 1.0;
    Vector v = power_vec;
    double prev_rq = -1e300;
    for (int i = 0; i < cfg.power_iters; ++i) {
      Vector w = hess * v + shift * v;
      w.normalize();
      const double rq = w.dot(hess * w);
      v = std::move(w);
      if (std::abs(rq - prev_rq) <= cfg.power_tol * std::max(1.0, std::abs(rq))) break;
      prev_rq = rq;
    }
    power_vec = v;
    Vector dir = frame.columns * v;
    const double along = dir.dot(grad);
    if (along < 0.0) dir = -dir;
    x += step * dir;
    traj.iters += 1;
  }
  traj.stop_reason = StopReason::MaxIters;
  traj.final_coords = SpherePoint::rescaled(x).coords;
  if (!traj.points.empty()) traj.points.back() = traj.final_coords;
  return traj;
}

Vector round_to_ball(const Vector& x) {
  const double root_n = sqrt_n(static_cast<int>(x.size()));
  const double norm = x.norm();
  if (norm <= root_n || norm == 0.0) return x;
  return x * (root_n / norm);
}

AlgorithmHandle make_gd_algorithm(const AscentConfig& cfg) {
  AlgorithmHandle h;
  h.name = "gd_ascent(eta=" + std::to_string(cfg.eta) + ")";
  h.run = [cfg](const Hamiltonian& H, std::uint64_t omega_seed) {
    Rng rng(omega_seed);
    SpherePoint start = SpherePoint::rescaled(rng.gaussian_vector(H.dim()));
    AscentConfig c = cfg;
    c.record_points = false;
    return gd_ascent(H, start, c).final_coords;
  };
  return h;
}

AlgorithmHandle make_constant_algorithm(const Vector& point) {
  AlgorithmHandle h;
  h.name = "constant";
  h.run = [point](const Hamiltonian&, std::uint64_t) { return point; };
  return h;
}

AlgorithmHandle make_linear_slice_algorithm() {
  AlgorithmHandle h;
  h.name = "linear_slice";
  h.run = [](const Hamiltonian& H, std::uint64_t) {
    const int n = H.dim();
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = H.tensor.entries[static_cast<std::size_t>(i)];
    return round_to_ball(v);
  };
  return h;
}

StabilityEstimate estimate_stability(const AlgorithmHandle& A, double eps, int reps,
                                     int N, int p, std::uint64_t seed,
                                     bool couple_omega) {
  if (!(eps > 0.0 && eps <= 1.0)) throw InvalidInput("stability: eps in (0,1]");
  if (reps < 2) throw InvalidInput("stability: reps >= 2");
  const double q = 1.0 - eps;
  double sum = 0.0, sum_sq = 0.0;
  for (int r = 0; r < reps; ++r) {
    const std::uint64_t s_h = split_seed(seed, 3 * r);
    const std::uint64_t s_c = split_seed(seed, 3 * r + 1);
    const std::uint64_t s_w = split_seed(seed, 3 * r + 2);
    const Hamiltonian H = sample_hamiltonian(N, p, s_h);
    const Hamiltonian Ht = correlated_copy(H, q, s_c);
    const std::uint64_t w2 = couple_omega ? s_w : split_seed(s_w, 1);
    const Vector a = A.run(H, s_w);
    const Vector b = A.run(Ht, w2);
    const double val = (a - b).squaredNorm() / (N * eps);
    sum += val;
    sum_sq += val * val;
  }
  StabilityEstimate est;
  est.reps = reps;
  est.s_hat = sum / reps;
  const double var = std::max(0.0, sum_sq / reps - est.s_hat * est.s_hat);
  est.stderr_ = std::sqrt(var / reps);
  return est;
}

std::vector<OverlapRow> measure_overlap(const AlgorithmHandle& A,
                                        const std::vector<double>& q_grid, int reps,
                                        int N, int p, std::uint64_t seed) {
  std::vector<OverlapRow> rows;
  for (std::size_t qi = 0; qi < q_grid.size(); ++qi) {
    const double q = q_grid[qi];
    if (!(q >= 0.0 && q <= 1.0)) throw InvalidInput("overlap: q in [0,1]");
    double sum = 0.0, sum_sq = 0.0;
    for (int r = 0; r < reps; ++r) {
      const std::uint64_t s_h = split_seed(seed, 1000 * qi + 3 * r);
      const std::uint64_t s_c = split_seed(seed, 1000 * qi + 3 * r + 1);
      const std::uint64_t s_w = split_seed(seed, 1000 * qi + 3 * r + 2);
      const Hamiltonian H = sample_hamiltonian(N, p, s_h);
      const Hamiltonian Hq = correlated_copy(H, q, s_c);
      const double ov = A.run(H, s_w).dot(A.run(Hq, s_w)) / N;
      sum += ov;
      sum_sq += ov * ov;
    }
    OverlapRow row;
    row.q = q;
    row.reps = reps;
    row.mean = sum / reps;
    row.variance = std::max(0.0, sum_sq / reps - row.mean * row.mean);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace pspin
