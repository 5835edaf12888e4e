#include "pspin/chain.hpp"

#include <cmath>

#include "json.hpp"
#include "pspin/version.hpp"

namespace pspin {

namespace {

void require_same_shape(const Hamiltonian& a, const Hamiltonian& b) {
  if (a.dim() != b.dim() || a.order() != b.order())
    throw DimensionMismatch("chain elements must share (N,p)");
}

Hamiltonian combine(const Hamiltonian& a, double ca, const Hamiltonian& b, double cb) {
  require_same_shape(a, b);
  Hamiltonian out;
  out.tensor.N = a.dim();
  out.tensor.p = a.order();
  out.tensor.seed = 0;  // derived deterministically from its inputs
  const std::size_t n = a.tensor.size();
  out.tensor.entries.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    out.tensor.entries[i] = ca * a.tensor.entries[i] + cb * b.tensor.entries[i];
  return out;
}

}  // namespace

std::string HamiltonianChain::manifest_json(int indent) const {
  nlohmann::json j;
  j["N"] = N();
  j["p"] = p();
  j["K"] = K();
  j["epsilon"] = epsilon;
  j["seeds"] = seeds;
  j["mode"] = mode;
  j["content_hash"] = kContentHash;
  return j.dump(indent);
}

HamiltonianChain ou_chain(int N, int p, int K, double eps, std::uint64_t seed,
                          std::size_t memory_budget) {
  if (K < 1) throw InvalidInput("ou_chain: K >= 1");
  if (!(eps >= 0.0 && eps <= 1.0)) throw InvalidInput("ou_chain: eps in [0,1]");
  const double rho = 1.0 - eps;
  const double noise = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  HamiltonianChain chain;
  chain.epsilon = eps;
  chain.mode = "forward";
  chain.seeds.push_back(split_seed(seed, 0));
  chain.hams.push_back(sample_hamiltonian(N, p, chain.seeds.back(), memory_budget));
  for (int i = 0; i < K; ++i) {
    const std::uint64_t s = split_seed(seed, static_cast<std::uint64_t>(i) + 1);
    chain.seeds.push_back(s);
    const Hamiltonian G = sample_hamiltonian(N, p, s, memory_budget);
    chain.hams.push_back(combine(chain.hams.back(), rho, G, noise));
  }
  return chain;
}

Hamiltonian endpoint_embed(const Hamiltonian& H0, const Hamiltonian& H, int K,
                           double eps) {
  if (K < 1) throw InvalidInput("endpoint_embed: K >= 1");
  if (!(eps >= 0.0 && eps <= 1.0)) throw InvalidInput("endpoint_embed: eps in [0,1]");
  require_same_shape(H0, H);
  const double q = std::pow(1.0 - eps, K);
  return combine(H0, q, H, std::sqrt(std::max(0.0, 1.0 - q * q)));
}

BridgeCoefficients bridge_coeffs(int k, int K, double eps) {
  if (!(k >= 1 && k <= K - 1)) throw InvalidInput("bridge_coeffs: 1 <= k <= K-1");
  if (!(eps >= 0.0 && eps <= 1.0)) throw InvalidInput("bridge_coeffs: eps in [0,1]");
  const int m = K - k;
  BridgeCoefficients c;
  c.k = k;
  c.K = K;
  const double rho = 1.0 - eps;
  if (rho >= 1.0 - 1e-13) {
    // Deterministic chain limit.
    c.mean_prev = static_cast<double>(m) / (m + 1);
    c.mean_end = 1.0 / (m + 1);
    c.noise_scale = 0.0;
    return c;
  }
  const double r2 = rho * rho;
  const double num = 1.0 - std::pow(r2, m);
  const double den = 1.0 - std::pow(r2, m + 1);
  c.mean_prev = rho * num / den;
  c.mean_end = std::pow(rho, m) * (1.0 - r2) / den;
  c.noise_scale = std::sqrt(std::max(0.0, (1.0 - r2) * num / den));
  return c;
}

Hamiltonian bridge_fill(const Hamiltonian& H_prev, const Hamiltonian& H_end, int k,
                        int K, double eps, const DisorderTensor& fresh) {
  require_same_shape(H_prev, H_end);
  if (fresh.N != H_prev.dim() || fresh.p != H_prev.order())
    throw DimensionMismatch("bridge_fill: fresh tensor shape mismatch");
  const BridgeCoefficients c = bridge_coeffs(k, K, eps);
  Hamiltonian out = combine(H_prev, c.mean_prev, H_end, c.mean_end);
  const std::size_t n = out.tensor.size();
  for (std::size_t i = 0; i < n; ++i)
    out.tensor.entries[i] += c.noise_scale * fresh.entries[i];
  out.tensor.seed = fresh.seed;
  return out;
}

HamiltonianChain bridge_chain(const Hamiltonian& H0, const Hamiltonian& H, int K,
                              double eps, std::uint64_t fresh_seed,
                              std::size_t memory_budget) {
  HamiltonianChain chain;
  chain.epsilon = eps;
  chain.mode = "bridge";
  chain.hams.resize(K + 1);
  chain.hams[0] = H0;
  chain.hams[K] = endpoint_embed(H0, H, K, eps);
  chain.seeds.push_back(fresh_seed);
  for (int k = 1; k <= K - 1; ++k) {
    const std::uint64_t s = split_seed(fresh_seed, static_cast<std::uint64_t>(k));
    chain.seeds.push_back(s);
    const DisorderTensor fresh = sample_disorder(H0.dim(), H0.order(), s, memory_budget);
    chain.hams[k] = bridge_fill(chain.hams[k - 1], chain.hams[K], k, K, eps, fresh);
  }
  return chain;
}

ChainCovCheck verify_chain_covariance(const std::vector<HamiltonianChain>& replicas) {
  if (replicas.size() < 30)
    throw InvalidInput("verify_chain_covariance: need at least 30 replicas");
  const int K = replicas.front().K();
  const double rho = 1.0 - replicas.front().epsilon;
  const std::size_t entries = replicas.front().hams.front().tensor.size();
  for (const auto& c : replicas) {
    if (c.K() != K || c.hams.front().tensor.size() != entries)
      throw DimensionMismatch("verify_chain_covariance: inhomogeneous replicas");
  }
  ChainCovCheck res;
  res.empirical = Matrix::Identity(K + 1, K + 1);
  res.target = Matrix::Zero(K + 1, K + 1);
  const double n_samples = static_cast<double>(replicas.size()) * entries;
  for (int i = 0; i <= K; ++i)
    for (int j = 0; j <= K; ++j) res.target(i, j) = std::pow(rho, std::abs(i - j));

  for (int i = 0; i <= K; ++i) {
    for (int j = i + 1; j <= K; ++j) {
      double sxy = 0.0, sxx = 0.0, syy = 0.0;
      for (const auto& c : replicas) {
        Eigen::Map<const Vector> x(c.hams[i].tensor.entries.data(), entries);
        Eigen::Map<const Vector> y(c.hams[j].tensor.entries.data(), entries);
        sxy += x.dot(y);
        sxx += x.squaredNorm();
        syy += y.squaredNorm();
      }
      const double corr = sxy / std::sqrt(sxx * syy);
      res.empirical(i, j) = res.empirical(j, i) = corr;
      const double tgt = res.target(i, j);
      const double se = std::max((1.0 - tgt * tgt) / std::sqrt(n_samples), 1e-15);
      const double dev = std::abs(corr - tgt);
      res.max_abs_dev = std::max(res.max_abs_dev, dev);
      res.max_sigmas = std::max(res.max_sigmas, dev / se);
    }
  }
  res.pass = res.max_sigmas <= 4.0;
  return res;
}

}  // namespace pspin
