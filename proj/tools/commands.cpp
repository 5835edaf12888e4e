#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

#include "json.hpp"
#include "pspin/calibration.hpp"
#include "pspin/chain.hpp"
#include "pspin/follow.hpp"
#include "pspin/io.hpp"

namespace pspin::cli {

namespace {

// Replica-level worker pool; replica r is fully determined by its split seed,
// so results are independent of scheduling.
template <class F>
void parallel_replicas(int n, int jobs, F&& fn) {
  if (jobs <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

FollowParams follow_params_from(const ExperimentConfig& cfg) {
  FollowParams pr;
  pr.gamma = cfg.gamma;
  pr.delta = cfg.delta;
  pr.iota = cfg.iota;
  pr.d = cfg.d;
  pr.eps = cfg.eps;
  pr.K = cfg.K;
  pr.tol = cfg.tol;
  return pr;
}

AscentConfig ascent_from(const ExperimentConfig& cfg, double delta_stop) {
  AscentConfig ac;
  ac.eta = cfg.eta;
  ac.max_iters = cfg.max_iters;
  ac.delta_stop = delta_stop;
  return ac;
}

}  // namespace

int cmd_spectrum(const ExperimentConfig& cfg) {
  cfg.validate();
  ensure_dir(cfg.out_dir);
  const auto t0 = std::chrono::steady_clock::now();
  const Hamiltonian H = sample_hamiltonian(cfg.N, cfg.p, split_seed(cfg.seed, 0),
                                           cfg.memory_budget);
  SpherePoint sigma = [&] {
    Rng rng(split_seed(cfg.seed, 1));
    SpherePoint start = SpherePoint::rescaled(rng.gaussian_vector(cfg.N));
    if (cfg.mode == "optimized")
      return gd_ascent(H, start, ascent_from(cfg, cfg.delta)).final_point();
    return start;
  }();

  const SpectralData sd = compute_spectrum(H, sigma);
  const double edge = bulk_edge(cfg.p);
  const double predicted_top = edge - sd.radial;

  CsvWriter csv(cfg.out_dir + "/spectrum.csv", {"index", "eigenvalue"}, cfg);
  for (Eigen::Index i = 0; i < sd.eigenvalues.size(); ++i)
    csv.row({static_cast<double>(i), sd.eigenvalues(i)});

  nlohmann::json j;
  j["bulk_edge_constant"] = edge;  // 2 sqrt(p(p-1))
  j["radial"] = sd.radial;
  j["energy_per_N"] = sd.energy / cfg.N;
  j["predicted_bulk_top"] = predicted_top;
  j["max_eigenvalue"] = sd.eigenvalues(sd.eigenvalues.size() - 1);
  j["min_eigenvalue"] = sd.eigenvalues(0);
  j["mode"] = cfg.mode;

  RunRecord rec;
  rec.config = cfg;
  rec.experiment = "spectrum";
  rec.summary_json = j.dump(2);
  rec.artifact_paths = {cfg.out_dir + "/spectrum.csv"};
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rec.write(cfg.out_dir + "/spectrum.json");
  std::cout << "spectrum: N=" << cfg.N << " p=" << cfg.p
            << " bulk_edge=" << edge << " predicted_top=" << predicted_top
            << " max_eig=" << j["max_eigenvalue"].get<double>() << "\n";
  return 0;
}

int cmd_optimize(const ExperimentConfig& cfg) {
  cfg.validate();
  ensure_dir(cfg.out_dir);
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> finals(cfg.replicas);
  std::vector<int> well_hits(cfg.replicas, 0);
  std::vector<int> stop_ok(cfg.replicas, 0);
  const double root_n = sqrt_n(cfg.N);

  parallel_replicas(cfg.replicas, cfg.jobs, [&](int r) {
    const std::uint64_t s = split_seed(cfg.seed, r);
    const Hamiltonian H = sample_hamiltonian(cfg.N, cfg.p, split_seed(s, 0),
                                             cfg.memory_budget);
    Trajectory traj;
    if (cfg.mode == "hessian") {
      HessianAscentConfig hc;
      hc.seed = split_seed(s, 1);
      traj = hessian_ascent(H, hc);
    } else {
      Rng rng(split_seed(s, 1));
      SpherePoint start = SpherePoint::rescaled(rng.gaussian_vector(cfg.N));
      traj = gd_ascent(H, start, ascent_from(cfg, cfg.delta));
    }
    finals[r] = traj.energies.back();
    for (std::size_t i = 0; i < traj.energies.size(); ++i) {
      if (traj.grad_norms[i] < cfg.delta * root_n &&
          traj.radials[i] - bulk_edge(cfg.p) > cfg.gamma) {
        well_hits[r] = 1;
        break;
      }
    }
    if (traj.stop_reason == StopReason::GradientThreshold &&
        traj.grad_norms.back() <= cfg.delta * root_n)
      stop_ok[r] = 1;
    write_trajectory_csv(cfg.out_dir + "/trajectory_" + std::to_string(r) + ".csv",
                         traj, cfg.N, cfg);
  });

  const double med = median(finals);
  double well_rate = 0.0, stop_rate = 0.0;
  for (int r = 0; r < cfg.replicas; ++r) {
    well_rate += well_hits[r];
    stop_rate += stop_ok[r];
  }
  well_rate /= cfg.replicas;
  stop_rate /= cfg.replicas;

  nlohmann::json j;
  j["ALG_p"] = alg_threshold(cfg.p);
  j["ALG_3"] = alg_threshold(3);
  j["ALG_4"] = alg_threshold(4);
  j["median_final_energy_per_N"] = med;
  j["final_energies"] = finals;
  j["well_rate"] = well_rate;
  j["stop_threshold_rate"] = stop_rate;
  j["optimizer"] = cfg.mode == "hessian" ? "hessian_ascent" : "gd_ascent";

  RunRecord rec;
  rec.config = cfg;
  rec.experiment = "optimize";
  rec.summary_json = j.dump(2);
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rec.write(cfg.out_dir + "/optimize.json");
  std::printf("optimize: ALG(%d)=%.5f median H/N=%.4f well_rate=%.2f\n", cfg.p,
              alg_threshold(cfg.p), med, well_rate);
  return 0;
}

int cmd_follow(const ExperimentConfig& cfg) {
  cfg.validate();
  ensure_dir(cfg.out_dir);
  const auto t0 = std::chrono::steady_clock::now();
  FollowParams pr = follow_params_from(cfg);

  std::vector<int> defined(cfg.replicas, 0);
  std::vector<int> final_well(cfg.replicas, 0);
  std::vector<int> azero(cfg.replicas, 0);
  std::vector<int> solve0(cfg.replicas, 0);
  std::vector<int> ball_violations(cfg.replicas, 0);
  std::vector<std::string> reasons(cfg.replicas);

  parallel_replicas(cfg.replicas, cfg.jobs, [&](int r) {
    const std::uint64_t s = split_seed(cfg.seed, 100 + r);
    Hamiltonian H0 = sample_hamiltonian(cfg.N, cfg.p, split_seed(s, 0),
                                        cfg.memory_budget);
    Hamiltonian H = sample_hamiltonian(cfg.N, cfg.p, split_seed(s, 1),
                                       cfg.memory_budget);
    AlgorithmHandle base;
    if (cfg.mode == "planted" || cfg.mode == "verification") {
      Rng rng(split_seed(s, 2));
      const SpherePoint w = SpherePoint::rescaled(rng.gaussian_vector(cfg.N));
      H0 = plant_well(H0, w, cfg.mu);
      H = plant_well(H, w, cfg.mu);
      AscentConfig ac = ascent_from(cfg, std::min(cfg.delta * 0.5, 0.02));
      base.name = "gd_from_near_spike";
      base.run = [w, ac](const Hamiltonian& Hb, std::uint64_t omega_seed) {
        Rng r2(omega_seed);
        Vector start = 0.9 * w.coords + 0.45 * r2.gaussian_vector(w.dim());
        return gd_ascent(Hb, SpherePoint::rescaled(start), ac).final_coords;
      };
    } else {
      base = make_gd_algorithm(ascent_from(cfg, std::min(cfg.delta * 0.5, 0.02)));
    }

    const AuxRandomness aux = make_aux(H0, base, pr, split_seed(s, 3));
    solve0[r] = in_lenient_well(H0, aux.sigma0, pr.gamma, pr.delta, pr.d, pr.iota, 1.0)
                    ? 1 : 0;

    UChooser chooser = nullptr;
    if (cfg.mode == "verification") {
      const std::uint64_t base_omega = split_seed(aux.seed, 1);
      chooser = [&base, base_omega](int, const SpherePoint& sig, const Matrix& basis,
                                    const Hamiltonian& Hn) {
        const SpherePoint target = SpherePoint::rescaled(base.run(Hn, base_omega));
        return choose_u_oracle(sig, basis, target);
      };
    }

    LocLipResult res = run_loclip(H, aux, pr, /*keep_chain=*/true, chooser);
    defined[r] = res.defined() ? 1 : 0;
    reasons[r] = res.undefined_reason;
    if (res.defined() && res.chain) {
      final_well[r] = in_lenient_well(res.chain->hams.back(), *res.point,
                                      pr.gamma / 2.0, std::pow(pr.delta, 1.0 / 3.0),
                                      pr.d, pr.iota, 1.0)
                          ? 1 : 0;
    }
    EventLedger led;
    const Vector lip = run_lip(H, aux, pr, &led);
    if (led.a_star == 0.0) azero[r] = 1;
    if (lip.norm() > sqrt_n(cfg.N) * (1.0 + 1e-9)) ball_violations[r] = 1;

    // per-step trajectory with the leniency column
    {
      CsvWriter csv(cfg.out_dir + "/follow_traj_" + std::to_string(r) + ".csv",
                    {"iter", "energy_per_N", "grad_norm_per_sqrtN",
                     "radial_derivative", "tau_solve"},
                    cfg);
      for (const auto& dgn : res.diags)
        csv.row({static_cast<double>(dgn.j), dgn.energy / cfg.N,
                 dgn.grad_norm / sqrt_n(cfg.N), dgn.radial, dgn.tau_solve});
    }

    std::ofstream rec_out(cfg.out_dir + "/follow_run_" + std::to_string(r) + ".json");
    nlohmann::json jr;
    jr["defined"] = res.defined();
    jr["undefined_reason"] = res.undefined_reason;
    jr["failed_step"] = res.failed_step;
    jr["ledger"] = nlohmann::json::parse(res.ledger.to_json());
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& dgn : res.diags) {
      steps.push_back({{"j", dgn.j},
                       {"energy_per_N", dgn.energy / cfg.N},
                       {"grad_norm", dgn.grad_norm},
                       {"radial", dgn.radial},
                       {"tau_solve", dgn.tau_solve},
                       {"newton_iters", dgn.newton_iters},
                       {"residual", dgn.residual},
                       {"z_norm", dgn.z_norm},
                       {"u_norm", dgn.u_norm},
                       {"move_norm", dgn.move_norm}});
    }
    jr["steps"] = steps;
    rec_out << jr.dump(2) << "\n";
  });

  double def_rate = 0.0, well_rate = 0.0, azero_rate = 0.0, solve_rate = 0.0;
  int def_count = 0, ball_bad = 0, solve_count = 0, def_and_solve = 0;
  for (int r = 0; r < cfg.replicas; ++r) {
    def_rate += defined[r];
    well_rate += final_well[r];
    azero_rate += azero[r];
    solve_rate += solve0[r];
    def_count += defined[r];
    ball_bad += ball_violations[r];
    solve_count += solve0[r];
    def_and_solve += defined[r] && solve0[r] ? 1 : 0;
  }
  def_rate /= cfg.replicas;
  azero_rate /= cfg.replicas;
  solve_rate /= cfg.replicas;
  const double cond_well = def_count > 0 ? well_rate / def_count : 0.0;
  const double cond_defined =
      solve_count > 0 ? static_cast<double>(def_and_solve) / solve_count : 0.0;

  nlohmann::json j;
  j["mode"] = cfg.mode;
  j["defined_rate"] = def_rate;
  j["final_well_rate_given_defined"] = cond_well;
  j["a_star_zero_rate"] = azero_rate;
  j["s_solve0_rate"] = solve_rate;
  j["defined_rate_given_solve0"] = cond_defined;
  j["ball_violations"] = ball_bad;
  nlohmann::json rj = nlohmann::json::array();
  for (const auto& s : reasons) rj.push_back(s);
  j["undefined_reasons"] = rj;

  RunRecord rec;
  rec.config = cfg;
  rec.experiment = "follow";
  rec.summary_json = j.dump(2);
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rec.write(cfg.out_dir + "/follow.json");
  std::printf(
      "follow(%s): defined=%.2f defined|solve0=%.2f final_well|defined=%.2f "
      "a*=0 rate=%.2f\n",
      cfg.mode.c_str(), def_rate, cond_defined, cond_well, azero_rate);
  return ball_bad == 0 ? 0 : 3;
}

int cmd_stability(const ExperimentConfig& cfg) {
  cfg.validate();
  ensure_dir(cfg.out_dir);
  const std::vector<double> eps_grid = {1e-3, 1e-2, 1e-1};
  const std::vector<double> q_grid = {0.0, 0.5, 1.0};

  AscentConfig ac = ascent_from(cfg, 0.0);  // fixed iteration count
  ac.max_iters = std::min<long>(cfg.max_iters, 200);
  std::vector<AlgorithmHandle> algos = {
      make_constant_algorithm(Vector::Zero(cfg.N)),
      make_linear_slice_algorithm(),
      make_gd_algorithm(ac),
  };

  CsvWriter csv(cfg.out_dir + "/stability.csv",
                {"algo_id", "eps", "s_hat", "stderr"}, cfg);
  int rc = 0;
  for (std::size_t a = 0; a < algos.size(); ++a) {
    std::printf("%s:\n", algos[a].name.c_str());
    for (double eps : eps_grid) {
      const auto est = estimate_stability(algos[a], eps, cfg.replicas, cfg.N, cfg.p,
                                          split_seed(cfg.seed, a), cfg.couple_omega);
      csv.row({static_cast<double>(a), eps, est.s_hat, est.stderr_});
      std::printf("  eps=%g  S_hat=%.4f +- %.4f\n", eps, est.s_hat, est.stderr_);
    }
    const auto rows = measure_overlap(algos[a], q_grid, cfg.replicas, cfg.N, cfg.p,
                                      split_seed(cfg.seed, 100 + a));
    for (const auto& row : rows)
      std::printf("  q=%g overlap mean=%.4f var=%.5f\n", row.q, row.mean,
                  row.variance);
  }
  return rc;
}

int cmd_events(const ExperimentConfig& cfg) {
  cfg.validate();
  ensure_dir(cfg.out_dir);
  FollowParams pr = follow_params_from(cfg);
  pr.kn_probes = 2;
  AscentConfig ac = ascent_from(cfg, cfg.delta);

  std::vector<int> all_ok(cfg.replicas, 0), solve0(cfg.replicas, 0),
      solve1(cfg.replicas, 0), stab0(cfg.replicas, 0);
  parallel_replicas(cfg.replicas, cfg.jobs, [&](int r) {
    const std::uint64_t s = split_seed(cfg.seed, 500 + r);
    const HamiltonianChain chain = ou_chain(cfg.N, cfg.p, cfg.K, cfg.eps,
                                            split_seed(s, 0));
    const std::uint64_t omega = split_seed(s, 1);
    std::vector<SpherePoint> sigmas;
    for (const auto& Hi : chain.hams) {
      Rng rng(omega);
      SpherePoint start = SpherePoint::rescaled(rng.gaussian_vector(cfg.N));
      sigmas.push_back(gd_ascent(Hi, start, ac).final_point());
    }
    const EventLedger led = event_report(chain, sigmas, pr);
    all_ok[r] = led.s_all ? 1 : 0;
    solve0[r] = led.s_solve.front() ? 1 : 0;
    solve1[r] = led.s_solve.size() > 1 && led.s_solve[1] ? 1 : 0;
    stab0[r] = led.s_stab.front() ? 1 : 0;
  });

  double p_all = 0.0, p_solve = 0.0, p_stab = 0.0;
  for (int r = 0; r < cfg.replicas; ++r) {
    p_all += all_ok[r];
    p_solve += solve0[r];
    p_stab += stab0[r];
  }
  p_all /= cfg.replicas;
  p_solve /= cfg.replicas;
  p_stab /= cfg.replicas;
  const double p_unstable = 1.0 - p_stab;
  const double base = std::max(0.0, p_solve * p_solve - p_unstable);
  const double bound = std::pow(base, 2.0 * cfg.K);
  const double sigma_mc = std::sqrt(std::max(p_all * (1.0 - p_all), 1e-12) /
                                    cfg.replicas);

  // Plug-in p_unstable <= S eps / delta^2 from the stability meter.
  const auto s_est = estimate_stability(make_gd_algorithm(ac), cfg.eps,
                                        std::min(cfg.replicas, 40), cfg.N, cfg.p,
                                        split_seed(cfg.seed, 999));
  const double plug_unstable = std::min(1.0, s_est.s_hat * cfg.eps /
                                                 (cfg.delta * cfg.delta));
  const double plug_bound =
      std::pow(std::max(0.0, p_solve * p_solve - plug_unstable), 2.0 * cfg.K);

  nlohmann::json j;
  j["p_solve_hat"] = p_solve;
  j["p_unstable_hat"] = p_unstable;
  j["P_S_all"] = p_all;
  j["bound_empirical"] = bound;
  j["bound_plugin_S"] = plug_bound;
  j["S_hat"] = s_est.s_hat;
  j["sigma_mc"] = sigma_mc;
  j["satisfied"] = p_all >= bound - 2.0 * sigma_mc;

  RunRecord rec;
  rec.config = cfg;
  rec.experiment = "events";
  rec.summary_json = j.dump(2);
  rec.write(cfg.out_dir + "/events.json");
  std::printf(
      "events: p_solve=%.3f p_unstable=%.3f P[S_all]=%.3f bound=%.3g (+-%.3g)\n",
      p_solve, p_unstable, p_all, bound, 2.0 * sigma_mc);
  return j["satisfied"].get<bool>() ? 0 : 3;
}

int cmd_chain_verify(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<HamiltonianChain> forward, bridged;
  for (int r = 0; r < std::max(cfg.replicas, 30); ++r) {
    const std::uint64_t s = split_seed(cfg.seed, 300 + r);
    forward.push_back(ou_chain(cfg.N, cfg.p, cfg.K, cfg.eps, split_seed(s, 0)));
    const Hamiltonian H0 = sample_hamiltonian(cfg.N, cfg.p, split_seed(s, 1));
    const Hamiltonian H = sample_hamiltonian(cfg.N, cfg.p, split_seed(s, 2));
    bridged.push_back(bridge_chain(H0, H, cfg.K, cfg.eps, split_seed(s, 3)));
  }
  const ChainCovCheck fw = verify_chain_covariance(forward);
  const ChainCovCheck br = verify_chain_covariance(bridged);
  std::printf("chain-verify: forward max_dev=%.4f (%.2f sigma) %s\n", fw.max_abs_dev,
              fw.max_sigmas, fw.pass ? "PASS" : "FAIL");
  std::printf("chain-verify: bridge  max_dev=%.4f (%.2f sigma) %s\n", br.max_abs_dev,
              br.max_sigmas, br.pass ? "PASS" : "FAIL");
  return (fw.pass && br.pass) ? 0 : 3;
}

int cmd_calibrate(const ExperimentConfig& cfg) {
  // Measures the K_N constant: max_k ||grad^k H(sigma)||_op / N^{1-k/2} over
  // `replicas` Hamiltonians with 8 ball probes each; C = 1.25 * max ratio.
  const int n_ham = cfg.replicas;
  std::vector<double> per_k(cfg.p + 1, 0.0);
  double worst = 0.0;
  parallel_replicas(n_ham, cfg.jobs, [&](int r) {
    const Hamiltonian H = sample_hamiltonian(cfg.N, cfg.p, split_seed(cfg.seed, r));
    Rng rng(split_seed(cfg.seed, 10000 + r));
    const auto sym = slot_symmetrized_sum(H.tensor);
    for (int pi = 0; pi < 8; ++pi) {
      const Vector probe = rng.ball_vector(cfg.N, sqrt_n(cfg.N));
      const auto norms = derivative_opnorms(H, probe, &sym);
      for (int k = 0; k <= cfg.p; ++k) {
        const double ratio =
            norms[k] / std::pow(static_cast<double>(cfg.N), 1.0 - k / 2.0);
        per_k[k] = std::max(per_k[k], ratio);
        worst = std::max(worst, ratio);
      }
    }
  });
  std::printf("calibrate: N=%d p=%d hamiltonians=%d\n", cfg.N, cfg.p, n_ham);
  for (int k = 0; k <= cfg.p; ++k)
    std::printf("  max ratio ||grad^%d||/N^{1-%d/2} = %.4f\n", k, k, per_k[k]);
  std::printf("  C (1.25 x max) = %.4f\n", 1.25 * worst);
  std::printf("  hessian opnorm bound (gradient Lipschitz hat) = %.4f\n", per_k[2]);
  return 0;
}

}  // namespace pspin::cli
