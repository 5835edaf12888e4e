// Acceptance suite: prints one PASS/FAIL line per criterion and exits nonzero
// if any fail. Criterion ids can be passed as arguments to run a subset.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <set>
#include <thread>
#include <vector>

#include "pspin/calibration.hpp"
#include "pspin/follow.hpp"
#include "pspin/io.hpp"

using namespace pspin;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& why) {
    if (!ok && pass) {
      pass = false;
      detail = why;
    }
  }
  void note(const std::string& txt) {
    if (!detail.empty()) detail += "; ";
    detail += txt;
  }
};

char buf[512];

Hamiltonian zero_ham(int N, int p) {
  Hamiltonian H = sample_hamiltonian(N, p, 1);
  for (auto& e : H.tensor.entries) e = 0.0;
  return H;
}

SpherePoint axis_point(int N) {
  Vector v = Vector::Zero(N);
  v(0) = std::sqrt(static_cast<double>(N));
  return SpherePoint::checked(v);
}

SpherePoint random_point(int N, std::uint64_t seed) {
  Rng rng(seed);
  return SpherePoint::rescaled(rng.gaussian_vector(N));
}

FollowParams planted_params() {
  FollowParams pr;
  pr.gamma = 0.5;
  pr.delta = 0.05;
  pr.iota = 0.05;
  pr.d = 0;
  pr.eps = 0.005;
  pr.K = 40;
  pr.tol = 1e-6;
  return pr;
}

// Planted base algorithm: ascend from a 0.9-correlated start, then polish to
// a Newton-stationary point of the restricted system.
AlgorithmHandle planted_base(const SpherePoint& w, const FollowParams& pr) {
  AscentConfig ac;
  ac.eta = 0.01;
  ac.delta_stop = 0.02;
  AlgorithmHandle h;
  h.name = "gd_near_spike+polish";
  h.run = [w, ac, pr](const Hamiltonian& Hb, std::uint64_t os) {
    Rng r2(os);
    Vector start = 0.9 * w.coords + 0.45 * r2.gaussian_vector(w.dim());
    SpherePoint sigma = gd_ascent(Hb, SpherePoint::rescaled(start), ac).final_point();
    try {
      FollowParams pp = pr;
      pp.check_bdd = false;
      sigma = follow_step(Hb, Hb, sigma,
                          TangentVector{sigma.coords, Vector::Zero(w.dim())}, pp)
                  .sigma_new;
    } catch (const std::exception&) {
    }
    return sigma.coords;
  };
  return h;
}

// ---------------------------------------------------------------------------

Outcome criterion1_euler() {
  Outcome out;
  double worst = 0.0;
  int idx = 0;
  for (int N : {20, 80}) {
    for (int p : {3, 4}) {
      for (int rep = 0; rep < 25; ++rep) {
        const Hamiltonian H = sample_hamiltonian(N, p, split_seed(10'000, idx));
        const SpherePoint s = random_point(N, split_seed(10'001, idx));
        ++idx;
        EvalWorkspace ws(H, s.coords);
        const double radial = ws.gradient().dot(s.coords) / N;
        const double expected = p * ws.value() / N;
        const double rel = std::abs(radial - expected) /
                           (std::abs(radial) + std::abs(expected) + 1e-6);
        worst = std::max(worst, rel);
      }
    }
  }
  out.require(worst <= 1e-10, "relative error above 1e-10");
  std::snprintf(buf, sizeof(buf), "100 cases, worst rel err %.2e", worst);
  out.note(buf);
  return out;
}

Outcome criterion2_derivative_oracles() {
  Outcome out;
  double worst1 = 0.0, worst2 = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const int p = rep % 2 ? 4 : 3;
    const int N = p == 4 ? 12 : 20;
    const Hamiltonian H = sample_hamiltonian(N, p, split_seed(20'000, rep));
    const SpherePoint s = random_point(N, split_seed(20'001, rep));
    const TangentFrame frame = make_frame(s);
    EvalWorkspace ws(H, s.coords);
    const Vector grad = ws.gradient();
    const double radial = grad.dot(s.coords) / N;
    const Vector gsp = grad - s.coords * radial;
    const Matrix hsp = riemannian_hessian(ws, frame);

    Rng rng(split_seed(20'002, rep));
    Vector u = rng.gaussian_vector(N);
    u -= s.coords * (s.coords.dot(u) / N);
    u.normalize();
    auto f = [&](double t) {
      return evaluate(H, exp_map(s, TangentVector{s.coords, t * u}).coords);
    };
    const double h = 1e-4 * std::sqrt(static_cast<double>(N));
    const double d1 = (f(h) - f(-h)) / (2 * h);
    const double want1 = gsp.dot(u);
    worst1 = std::max(worst1, std::abs(d1 - want1) / std::max(1.0, std::abs(want1)));
    const double d2 = (f(h) - 2 * f(0) + f(-h)) / (h * h);
    const Vector uf = frame.columns.transpose() * u;
    const double want2 = uf.dot(hsp * uf);
    worst2 = std::max(worst2, std::abs(d2 - want2) / std::max(1.0, std::abs(want2)));
  }
  out.require(worst1 <= 1e-4, "first geodesic derivative mismatch");
  out.require(worst2 <= 1e-4, "second geodesic derivative mismatch");
  std::snprintf(buf, sizeof(buf), "worst rel err: grad %.2e, hess %.2e", worst1,
                worst2);
  out.note(buf);
  return out;
}

Outcome criterion3_covariance() {
  Outcome out;
  const int N = 30, p = 3, reps = 2000;
  const double root_n = std::sqrt(static_cast<double>(N));
  Vector s = Vector::Zero(N), r_orth = Vector::Zero(N), r_half = Vector::Zero(N);
  s(0) = root_n;
  r_orth(1) = root_n;
  r_half(0) = 0.5 * root_n;
  r_half(1) = std::sqrt(0.75) * root_n;
  struct Geo {
    const char* name;
    Vector r;
    double q;
  };
  const std::vector<Geo> geos = {
      {"rho=sigma", s, 1.0}, {"orthogonal", r_orth, 0.0}, {"q=0.5", r_half, 0.5}};
  double worst_sigmas = 0.0;
  for (const auto& g : geos) {
    double acc = 0.0, acc2 = 0.0;
    for (int i = 0; i < reps; ++i) {
      const Hamiltonian H = sample_hamiltonian(N, p, split_seed(30'000, i));
      const double v = evaluate(H, s) * evaluate(H, g.r);
      acc += v;
      acc2 += v * v;
    }
    const double mean = acc / reps;
    const double se = std::sqrt(std::max(acc2 / reps - mean * mean, 1e-12) / reps);
    const double target = N * std::pow(g.q, p);
    const double sig = std::abs(mean - target) / se;
    worst_sigmas = std::max(worst_sigmas, sig);
    out.require(sig <= 4.0, std::string(g.name) + " off by more than 4 SE");
  }
  std::snprintf(buf, sizeof(buf), "3 geometries x %d samples, worst %.2f SE", reps,
                worst_sigmas);
  out.note(buf);
  return out;
}

Outcome criterion4_spectral() {
  Outcome out;
  const int N = 120, p = 3;
  const double edge = bulk_edge(p);  // 2 sqrt(6)

  // (a) random point: unshifted tangential Hessian inside [-5.40, 5.40]
  const Hamiltonian H = sample_hamiltonian(N, p, split_seed(40'000, 0));
  const SpherePoint s = random_point(N, split_seed(40'001, 0));
  const TangentFrame frame = make_frame(s);
  EvalWorkspace ws(H, s.coords);
  const Matrix tang = frame.columns.transpose() * ws.hessian() * frame.columns;
  Eigen::SelfAdjointEigenSolver<Matrix> es(tang, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues()(0), hi = es.eigenvalues()(N - 2);
  out.require(lo >= -(edge + 0.5) && hi <= edge + 0.5,
              "tangential spectrum escapes [-5.40, 5.40]");
  out.require(std::abs(hi - edge) <= 0.08 * edge,
              "top tangential eigenvalue more than 8% from 2 sqrt(6)");

  // (b) gd endpoint: top bulk eigenvalue of grad^2_sp near 2 sqrt(6) - radial.
  // A mild stop keeps the endpoint inside the regime where the uniform
  // over-the-sphere edge statement is informative; ascent endpoints carry no
  // above-edge outliers, so the bulk top is the maximal eigenvalue itself.
  AscentConfig cfg;
  cfg.eta = 0.01;
  cfg.delta_stop = 0.3;
  const SpherePoint opt =
      gd_ascent(H, random_point(N, split_seed(40'002, 0)), cfg).final_point();
  const SpectralData sd = compute_spectrum(H, opt);
  const double bulk_top = sd.eigenvalues(N - 2);
  const double predicted = edge - sd.radial;
  out.require(std::abs(bulk_top - predicted) <= 0.4,
              "bulk-top eigenvalue misses 2 sqrt(6) - radial by more than 0.4");
  std::snprintf(buf, sizeof(buf),
                "top %.3f vs edge %.3f; bulk_top %.3f vs predicted %.3f", hi, edge,
                bulk_top, predicted);
  out.note(buf);
  return out;
}

Outcome criterion5_chain_law() {
  Outcome out;
  // bridge-filled chains match rho^{|i-j|} entrywise within 4 SE
  const int K = 6, N = 8, p = 3;
  const double eps = 0.3;
  std::vector<HamiltonianChain> replicas;
  for (int r = 0; r < 300; ++r) {
    const std::uint64_t s = split_seed(50'000, r);
    const Hamiltonian a = sample_hamiltonian(N, p, split_seed(s, 0));
    const Hamiltonian b = sample_hamiltonian(N, p, split_seed(s, 1));
    replicas.push_back(bridge_chain(a, b, K, eps, split_seed(s, 2)));
  }
  const ChainCovCheck check = verify_chain_covariance(replicas);
  out.require(check.pass, "bridge chain covariance off target at 4 SE");

  // closed-form bridge coefficients equal dense conditioning at K <= 8
  double worst = 0.0;
  for (int KK = 2; KK <= 8; ++KK) {
    for (int k = 1; k <= KK - 1; ++k) {
      for (double e : {0.1, 0.3, 0.5, 0.75}) {
        const double rho = 1.0 - e;
        Matrix cov(KK + 1, KK + 1);
        for (int i = 0; i <= KK; ++i)
          for (int j = 0; j <= KK; ++j) cov(i, j) = std::pow(rho, std::abs(i - j));
        Matrix s22(2, 2);
        s22 << cov(k - 1, k - 1), cov(k - 1, KK), cov(KK, k - 1), cov(KK, KK);
        Vector s12(2);
        s12 << cov(k, k - 1), cov(k, KK);
        const Vector beta = s22.ldlt().solve(s12);
        const double var = cov(k, k) - s12.dot(beta);
        const BridgeCoefficients c = bridge_coeffs(k, KK, e);
        worst = std::max(worst, std::abs(c.mean_prev - beta(0)));
        worst = std::max(worst, std::abs(c.mean_end - beta(1)));
        worst = std::max(worst, std::abs(c.noise_scale * c.noise_scale - var));
      }
    }
  }
  out.require(worst <= 1e-12, "bridge coefficients deviate from dense conditioning");
  std::snprintf(buf, sizeof(buf), "max |emp-target| %.4f (%.2f SE); oracle dev %.1e",
                check.max_abs_dev, check.max_sigmas, worst);
  out.note(buf);
  return out;
}

Outcome criterion6_optimizer_band() {
  Outcome out;
  const int N = 150, p = 3;
  AscentConfig cfg;
  cfg.eta = 0.01;
  cfg.delta_stop = 0.05;
  cfg.record_points = false;
  std::vector<double> finals(10);
  bool stops_ok = true;
  std::vector<std::thread> pool;
  for (int t = 0; t < 2; ++t)
    pool.emplace_back([&, t] {
      for (int s = t; s < 10; s += 2) {
        const Hamiltonian H = sample_hamiltonian(N, p, split_seed(60'000, s));
        const Trajectory traj =
            gd_ascent(H, random_point(N, split_seed(60'001, s)), cfg);
        finals[s] = traj.final_energy();
        if (traj.stop_reason == StopReason::GradientThreshold &&
            traj.grad_norms.back() > cfg.delta_stop * std::sqrt(150.0))
          stops_ok = false;
      }
    });
  for (auto& th : pool) th.join();
  std::vector<double> sorted = finals;
  std::sort(sorted.begin(), sorted.end());
  const double med = 0.5 * (sorted[4] + sorted[5]);
  out.require(med >= 1.40 && med <= 1.75, "median terminal energy outside [1.40,1.75]");
  out.require(stops_ok, "a stop-by-threshold run ended above delta sqrt(N)");
  std::snprintf(buf, sizeof(buf), "median H/N = %.4f, anchor ALG(3) = %.5f", med,
                alg_threshold(3));
  out.note(buf);
  return out;
}

Outcome criterion7_fixed_point() {
  Outcome out;
  const int N = 80, p = 3;
  FollowParams pr = planted_params();
  pr.eps = 0.0;
  const SpherePoint w = axis_point(N);
  const Hamiltonian H0 = plant_well(sample_hamiltonian(N, p, 70'001), w, 2.0);
  const AuxRandomness aux = make_aux(H0, planted_base(w, pr), pr, 70'002);
  const LocLipResult res = run_loclip(H0, aux, pr);
  out.require(res.defined(), "run_loclip undefined: " + res.undefined_reason);
  if (res.defined()) {
    const double dist = (res.point->coords - aux.sigma0.coords).norm();
    out.require(dist <= 1e-7 * std::sqrt(static_cast<double>(N)),
                "endpoint moved away from sigma0");
    std::snprintf(buf, sizeof(buf), "||sigma_K - sigma_0|| = %.2e sqrt(N), K = %d",
                  dist / std::sqrt(static_cast<double>(N)), pr.K);
    out.note(buf);
  }
  return out;
}

Outcome criterion8_planted_tracking() {
  Outcome out;
  const int N = 80, p = 3;
  FollowParams pr = planted_params();
  const int seeds = 20;
  std::vector<int> defined(seeds, 0), final_well(seeds, 0);
  std::vector<std::thread> pool;
  for (int t = 0; t < 2; ++t)
    pool.emplace_back([&, t] {
      for (int s = t; s < seeds; s += 2) {
        const std::uint64_t base_seed = split_seed(80'000, s);
        Rng rng(split_seed(base_seed, 9));
        const SpherePoint w = SpherePoint::rescaled(rng.gaussian_vector(N));
        const Hamiltonian H0 =
            plant_well(sample_hamiltonian(N, p, split_seed(base_seed, 0)), w, 2.0);
        const Hamiltonian H =
            plant_well(sample_hamiltonian(N, p, split_seed(base_seed, 1)), w, 2.0);
        const AuxRandomness aux =
            make_aux(H0, planted_base(w, pr), pr, split_seed(base_seed, 2));
        const LocLipResult res = run_loclip(H, aux, pr);
        defined[s] = res.defined() ? 1 : 0;
        if (res.defined() && res.chain) {
          final_well[s] =
              in_lenient_well(res.chain->hams.back(), *res.point, pr.gamma / 2,
                              std::pow(pr.delta, 1.0 / 3.0), pr.d, pr.iota, 1.0)
                  ? 1 : 0;
        }
      }
    });
  for (auto& th : pool) th.join();
  int def_count = 0, well_count = 0;
  for (int s = 0; s < seeds; ++s) {
    def_count += defined[s];
    well_count += final_well[s];
  }
  out.require(def_count >= 18, "run_loclip defined on fewer than 90% of seeds");
  out.require(well_count == def_count,
              "a defined run missed the (gamma/2, delta^{1/3}) well");

  // uniqueness probe: 5 Newton restarts agree to 1e-6 sqrt(N)
  {
    const SpherePoint w = axis_point(N);
    const Hamiltonian H =
        plant_well(sample_hamiltonian(N, p, split_seed(80'500, 0)), w, 2.0);
    const SpherePoint sigma = SpherePoint::rescaled(
        planted_base(w, pr).run(H, split_seed(80'500, 1)));
    const Hamiltonian Ht = correlated_copy(H, 1.0 - pr.eps, split_seed(80'500, 2));
    const SpectralData sd = compute_spectrum(H, sigma);
    FollowParams pp = pr;
    pp.check_bdd = false;
    const FollowStepResult ref = follow_step(
        H, Ht, sigma, TangentVector{sigma.coords, Vector::Zero(N)}, pp, &sd);
    Rng rng(split_seed(80'500, 3));
    double worst = 0.0;
    for (int rep = 0; rep < 5; ++rep) {
      Vector z0 = rng.gaussian_vector(N);
      z0 -= sigma.coords * (sigma.coords.dot(z0) / N);
      z0 *= 0.4 * pp.trust_c * pp.delta * std::sqrt(static_cast<double>(N)) / z0.norm();
      const FollowStepResult again = follow_step(
          H, Ht, sigma, TangentVector{sigma.coords, Vector::Zero(N)}, pp, &sd, &z0);
      worst = std::max(worst,
                       (again.sigma_new.coords - ref.sigma_new.coords).norm());
    }
    out.require(worst <= 1e-6 * std::sqrt(static_cast<double>(N)),
                "Newton restarts disagree beyond 1e-6 sqrt(N)");
    std::snprintf(buf, sizeof(buf),
                  "defined %d/20, wells %d/%d, restart spread %.1e sqrt(N)",
                  def_count, well_count, def_count,
                  worst / std::sqrt(static_cast<double>(N)));
    out.note(buf);
  }
  return out;
}

Outcome criterion9_tau_algebra() {
  Outcome out;
  out.require(a_star_of_tau(1.3) == 1.0, "a*(1.3) != 1");
  out.require(a_star_of_tau(1.5) == 0.0, "a*(1.5) != 0");
  out.require(a_star_of_tau(1.55) == 0.0, "a*(1.55) != 0");
  out.require(a_star_of_tau(1.6) == 0.0, "a*(1.6) != 0");
  out.require(std::abs(a_star_of_tau(1.35) - 0.5) < 1e-12, "a*(1.35) != 0.5");
  out.require(a_star_of_tau(1.0) == 1.0, "a*(1.0) != 1");

  // totality of run_lip on adversarial inputs
  const int N = 16, p = 3;
  FollowParams pr = planted_params();
  pr.K = 3;
  pr.kn_probes = 1;
  const double root_n = std::sqrt(static_cast<double>(N));
  int defined = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const std::uint64_t s = split_seed(90'000, rep);
    Hamiltonian H0 = sample_hamiltonian(N, p, split_seed(s, 0));
    Hamiltonian H = sample_hamiltonian(N, p, split_seed(s, 1));
    Rng rng(split_seed(s, 2));
    if (rep % 7 == 1)
      for (auto& e : H.tensor.entries) e *= 50.0;
    if (rep % 7 == 2)
      for (auto& e : H0.tensor.entries) e = 0.0;
    if (rep % 7 == 3)
      for (auto& e : H.tensor.entries) e *= 1e-6;
    AuxRandomness aux;
    aux.H0 = H0;
    aux.sigma0 = SpherePoint::rescaled(rng.gaussian_vector(N));
    aux.basis0 = Matrix(N, 0);
    aux.u_tilde.assign(pr.K, Vector::Zero(0));
    aux.fresh_seed = split_seed(s, 3);
    if (rep % 7 == 4) {
      const SpherePoint w = axis_point(N);
      aux.H0 = plant_well(H0, w, 2.0);
      H = plant_well(H, w, 2.0);
      aux.sigma0 = SpherePoint::rescaled(planted_base(w, pr).run(aux.H0, 1));
    }
    EventLedger led;
    Vector lip;
    try {
      lip = run_lip(H, aux, pr, &led);
    } catch (const std::exception& e) {
      out.require(false, std::string("run_lip threw: ") + e.what());
      break;
    }
    out.require(lip.norm() <= root_n * (1 + 1e-9), "output escaped B_N");
    out.require(led.a_star == a_star_of_tau(led.tau_all), "a* formula violated");
    out.require(led.tau_all == std::min(led.tau_solve, led.tau_bdd),
                "tau_all != min(tau_solve, tau_bdd)");
    if (lip.norm() > 0) ++defined;
  }
  std::snprintf(buf, sizeof(buf), "unit table exact; 1000 inputs total, %d nonzero",
                defined);
  out.note(buf);
  return out;
}

Outcome criterion10_lipschitz_probes() {
  Outcome out;
  std::vector<double> follow_fit, tau_fit;
  for (int N : {40, 80, 160}) {
    const int p = 3;
    FollowParams pr = planted_params();
    pr.check_bdd = false;
    const SpherePoint w = axis_point(N);
    const Hamiltonian H =
        plant_well(sample_hamiltonian(N, p, split_seed(100'000, N)), w, 2.0);
    const SpherePoint sigma = SpherePoint::rescaled(
        planted_base(w, pr).run(H, split_seed(100'001, N)));
    const Hamiltonian Ht = correlated_copy(H, 1.0 - pr.eps, split_seed(100'002, N));

    // rank-one probe direction aligned with the tracked point
    const Hamiltonian spike_dir = plant_well(zero_ham(N, p), sigma, 1.0);
    const std::vector<std::vector<double>> aligned = {spike_dir.tensor.entries};

    // follow_step as a map of the incoming Hamiltonian copy
    const auto follow_op = [&](const Hamiltonian& Hq) {
      FollowParams pp = pr;
      return follow_step(H, Hq, sigma, TangentVector{sigma.coords, Vector::Zero(N)},
                         pp)
          .sigma_new.coords;
    };
    const ProbeResult fres =
        empirical_lipschitz_probe(follow_op, Ht, 6, 0.01, split_seed(100'003, N),
                                  aligned);
    follow_fit.push_back(fres.max_ratio);

    // tau* of the single-element chain, radial margin tuned to be binding
    const SpectralData sd = compute_spectrum(H, sigma);
    FollowParams pt = pr;
    pt.gamma = 1.25 * (sd.radial - bulk_edge(p));
    pt.kn_probes = 1;
    pt.opnorm = OpNormConfig{20, 2, 5};
    // tau*_all = min(tau_solve, tau_bdd) is pinned by the healthy bounded
    // family here, so probe the solve-family leniency, which the cited
    // Lipschitz property covers per family.
    const auto tau_op = [&](const Hamiltonian& Hq) {
      HamiltonianChain chain;
      chain.epsilon = 0.0;
      chain.mode = "probe";
      chain.hams = {Hq};
      Vector v(1);
      v(0) = compute_tau_star(chain, {sigma}, pt).tau_solve;
      return v;
    };
    const ProbeResult tres =
        empirical_lipschitz_probe(tau_op, H, 6, 0.01, split_seed(100'004, N),
                                  aligned);
    tau_fit.push_back(tres.max_ratio * std::sqrt(static_cast<double>(N)));
  }
  auto spread = [](const std::vector<double>& v) {
    const double lo = *std::min_element(v.begin(), v.end());
    const double hi = *std::max_element(v.begin(), v.end());
    return hi / std::max(lo, 1e-12);
  };
  out.require(spread(follow_fit) < 2.0, "follow_step ratios vary by a factor >= 2");
  out.require(spread(tau_fit) < 2.0, "tau* fitted constants vary by a factor >= 2");
  std::snprintf(buf, sizeof(buf),
                "follow ratios {%.3f, %.3f, %.3f}; tau* sqrt(N)-fits {%.3f, %.3f, "
                "%.3f}",
                follow_fit[0], follow_fit[1], follow_fit[2], tau_fit[0], tau_fit[1],
                tau_fit[2]);
  out.note(buf);
  return out;
}

Outcome criterion11_success_stability() {
  Outcome out;
  const int N = 80, p = 3, K = 10;
  const double eps = 0.01;
  FollowParams pr;
  pr.gamma = 0.02;
  pr.delta = 0.05;
  pr.iota = 0.05;
  pr.d = 0;
  pr.eps = eps;
  pr.K = K;
  pr.check_bdd = true;
  pr.kn_probes = 1;
  pr.opnorm = OpNormConfig{15, 2, 3};
  AscentConfig ac;
  ac.eta = 0.01;
  ac.delta_stop = 0.05;
  ac.record_points = false;

  const int chains = 200;
  std::vector<int> all_ok(chains, 0), solve0(chains, 0), stab0(chains, 0);
  std::vector<std::thread> pool;
  for (int t = 0; t < 2; ++t)
    pool.emplace_back([&, t] {
      for (int c = t; c < chains; c += 2) {
        const std::uint64_t s = split_seed(110'000, c);
        const HamiltonianChain chain = ou_chain(N, p, K, eps, split_seed(s, 0));
        const std::uint64_t omega = split_seed(s, 1);
        std::vector<SpherePoint> sigmas;
        for (const auto& Hi : chain.hams) {
          Rng rng(omega);
          sigmas.push_back(
              gd_ascent(Hi, SpherePoint::rescaled(rng.gaussian_vector(N)), ac)
                  .final_point());
        }
        const EventLedger led = event_report(chain, sigmas, pr);
        all_ok[c] = led.s_all ? 1 : 0;
        solve0[c] = led.s_solve.front() ? 1 : 0;
        stab0[c] = led.s_stab.front() ? 1 : 0;
      }
    });
  for (auto& th : pool) th.join();
  double p_all = 0, p_solve = 0, p_stab = 0;
  for (int c = 0; c < chains; ++c) {
    p_all += all_ok[c];
    p_solve += solve0[c];
    p_stab += stab0[c];
  }
  p_all /= chains;
  p_solve /= chains;
  p_stab /= chains;
  const double p_unstable = 1.0 - p_stab;
  const double bound =
      std::pow(std::max(0.0, p_solve * p_solve - p_unstable), 2.0 * K);
  const double sigma_mc =
      std::sqrt(std::max(p_all * (1.0 - p_all), 1e-12) / chains);
  out.require(p_all >= bound - 2.0 * sigma_mc,
              "P[S_all] fell below the success-and-stability bound");
  std::snprintf(buf, sizeof(buf),
                "p_solve %.3f, p_unstable %.3f, P[S_all] %.3f >= bound %.3g - 2x%.3g",
                p_solve, p_unstable, p_all, bound, sigma_mc);
  out.note(buf);
  return out;
}

Outcome criterion12_stability_meter() {
  Outcome out;
  const int N = 100, p = 3, reps = 40;

  const auto zero = estimate_stability(make_constant_algorithm(Vector::Zero(N)),
                                       0.01, reps, N, p, 1);
  out.require(zero.s_hat == 0.0, "constant algorithm S_hat != 0");

  double worst_lin = 0.0;
  for (double eps : {1e-3, 1e-2, 1e-1}) {
    const auto est = estimate_stability(make_linear_slice_algorithm(), eps, reps, N,
                                        p, 120'001);
    const double sig = std::abs(est.s_hat - (2.0 - eps)) / est.stderr_;
    worst_lin = std::max(worst_lin, sig);
    out.require(sig <= 4.0, "rounded linear algorithm S_hat misses 2-eps at 4 SE");
  }

  AscentConfig ac;
  ac.eta = 0.01;
  ac.max_iters = 200;
  ac.delta_stop = 0.0;
  const AlgorithmHandle gd = make_gd_algorithm(ac);
  std::vector<double> shats;
  for (double eps : {1e-3, 1e-2, 1e-1})
    shats.push_back(estimate_stability(gd, eps, reps, N, p, 120'002).s_hat);
  const double lo = *std::min_element(shats.begin(), shats.end());
  const double hi = *std::max_element(shats.begin(), shats.end());
  out.require(hi / lo <= 3.0, "gd S_hat varies by more than a factor 3 over eps");
  std::snprintf(buf, sizeof(buf),
                "linear worst %.2f SE; gd S_hat in [%.2f, %.2f] (ratio %.2f)",
                worst_lin, lo, hi, hi / lo);
  out.note(buf);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  struct Entry {
    int id;
    const char* name;
    Outcome (*fn)();
  };
  const std::vector<Entry> entries = {
      {1, "Euler/radial identity", criterion1_euler},
      {2, "derivative oracles vs finite differences", criterion2_derivative_oracles},
      {3, "covariance law", criterion3_covariance},
      {4, "spectral structure", criterion4_spectral},
      {5, "chain law and bridge coefficients", criterion5_chain_law},
      {6, "optimizer energy band", criterion6_optimizer_band},
      {7, "state-following fixed point", criterion7_fixed_point},
      {8, "planted tracking", criterion8_planted_tracking},
      {9, "tau*/a* algebra and run_lip totality", criterion9_tau_algebra},
      {10, "dimension-free Lipschitz evidence", criterion10_lipschitz_probes},
      {11, "success-and-stability bound", criterion11_success_stability},
      {12, "stability meter", criterion12_stability_meter},
  };
  bool all_pass = true;
  for (const auto& e : entries) {
    if (!only.empty() && !only.count(e.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = e.fn();
    } catch (const std::exception& ex) {
      o.pass = false;
      o.detail = std::string("exception: ") + ex.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] criterion %2d: %s (%s) [%.1fs]\n", o.pass ? "PASS" : "FAIL",
                e.id, e.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    all_pass = all_pass && o.pass;
  }
  return all_pass ? 0 : 1;
}
