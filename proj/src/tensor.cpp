#include "pspin/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "json.hpp"
#include "pspin/version.hpp"

namespace pspin {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMap = Eigen::Map<const RowMat>;

std::size_t checked_pow(int N, int p) {
  std::size_t n = 1;
  for (int i = 0; i < p; ++i) {
    if (n > (std::size_t{1} << 48) / static_cast<std::size_t>(N))
      throw InvalidInput("tensor shape overflows");
    n *= static_cast<std::size_t>(N);
  }
  return n;
}

void require_same_shape(const Hamiltonian& a, const Hamiltonian& b) {
  if (a.dim() != b.dim() || a.order() != b.order())
    throw DimensionMismatch("Hamiltonians have different (N,p)");
}

void require_dim(const Hamiltonian& H, const Vector& sigma) {
  if (sigma.size() != H.dim())
    throw DimensionMismatch("sigma has length " + std::to_string(sigma.size()) +
                            ", expected " + std::to_string(H.dim()));
}

}  // namespace

std::size_t tensor_bytes(int N, int p) { return checked_pow(N, p) * sizeof(double); }

DisorderTensor sample_disorder(int N, int p, std::uint64_t seed,
                               std::size_t memory_budget) {
  if (N < 2) throw InvalidInput("N must be >= 2");
  if (p < 2) throw InvalidInput("p must be >= 2");
  const std::size_t bytes = tensor_bytes(N, p);
  if (bytes > memory_budget) throw MemoryBudgetExceeded(bytes, memory_budget);

  DisorderTensor t;
  t.N = N;
  t.p = p;
  t.seed = seed;
  t.entries.resize(checked_pow(N, p));
  Rng rng(seed);
  rng.fill_gaussian(t.entries.data(), t.entries.size());
  return t;
}

Hamiltonian sample_hamiltonian(int N, int p, std::uint64_t seed,
                               std::size_t memory_budget) {
  return Hamiltonian{sample_disorder(N, p, seed, memory_budget)};
}

// ---------------------------------------------------------------------------
// Contractions

std::vector<double> contract_last(const double* data, const std::vector<int>& dims,
                                  const Vector& v) {
  const int n = dims.back();
  if (v.size() != n) throw DimensionMismatch("contract_last: vector length mismatch");
  std::size_t rows = 1;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) rows *= dims[i];
  std::vector<double> out(rows);
  RowMap A(data, static_cast<Eigen::Index>(rows), n);
  Eigen::Map<Vector>(out.data(), static_cast<Eigen::Index>(rows)).noalias() = A * v;
  return out;
}

std::vector<double> contract_first(const double* data, const std::vector<int>& dims,
                                   const Vector& v) {
  const int n = dims.front();
  if (v.size() != n) throw DimensionMismatch("contract_first: vector length mismatch");
  std::size_t cols = 1;
  for (std::size_t i = 1; i < dims.size(); ++i) cols *= dims[i];
  std::vector<double> out(cols);
  RowMap A(data, n, static_cast<Eigen::Index>(cols));
  Eigen::Map<Vector>(out.data(), static_cast<Eigen::Index>(cols)).noalias() =
      A.transpose() * v;
  return out;
}

std::vector<double> contract_mode(const double* data, const std::vector<int>& dims,
                                  int mode, const Vector& v) {
  const int k = static_cast<int>(dims.size());
  if (mode < 0 || mode >= k) throw InvalidInput("contract_mode: bad mode");
  if (mode == k - 1) return contract_last(data, dims, v);
  if (mode == 0) return contract_first(data, dims, v);
  const int n = dims[mode];
  if (v.size() != n) throw DimensionMismatch("contract_mode: vector length mismatch");
  std::size_t outer = 1, inner = 1;
  for (int i = 0; i < mode; ++i) outer *= dims[i];
  for (int i = mode + 1; i < k; ++i) inner *= dims[i];
  std::vector<double> out(outer * inner);
  for (std::size_t o = 0; o < outer; ++o) {
    RowMap B(data + o * n * inner, n, static_cast<Eigen::Index>(inner));
    Eigen::Map<Vector>(out.data() + o * inner, static_cast<Eigen::Index>(inner))
        .noalias() = B.transpose() * v;
  }
  return out;
}

// ---------------------------------------------------------------------------
// EvalWorkspace: suffix chain S_k = G contracted over the last k modes.

EvalWorkspace::EvalWorkspace(const Hamiltonian& H, const Vector& sigma)
    : ham_(H), sigma_(sigma) {
  require_dim(H, sigma);
  const int p = H.order();
  const int N = H.dim();
  chain_.resize(p);
  std::vector<int> dims(p, N);
  const double* src = H.tensor.entries.data();
  for (int k = 1; k <= p - 1; ++k) {
    chain_[k] = contract_last(src, dims, sigma_);
    dims.pop_back();
    src = chain_[k].data();
  }
}

double EvalWorkspace::value() const {
  const int N = ham_.dim();
  Eigen::Map<const Vector> last(chain_.back().data(), N);
  return ham_.normalization() * last.dot(sigma_);
}

Vector EvalWorkspace::gradient() const {
  const int p = ham_.order();
  const int N = ham_.dim();
  Vector g = Vector::Zero(N);
  // Slot s contributes front^{s}(S_{p-1-s}): contract the s leading modes of
  // the suffix-chain element that still has modes 0..s.
  for (int s = 0; s < p; ++s) {
    const double* src = (p - 1 - s == 0) ? ham_.tensor.entries.data()
                                         : chain_[p - 1 - s].data();
    std::vector<int> dims(s + 1, N);
    std::vector<double> cur;
    for (int step = 0; step < s; ++step) {
      cur = contract_first(src, dims, sigma_);
      dims.erase(dims.begin());
      src = cur.data();
    }
    g += Eigen::Map<const Vector>(src, N);
  }
  return ham_.normalization() * g;
}

Matrix EvalWorkspace::hessian() const {
  const int p = ham_.order();
  const int N = ham_.dim();
  Matrix hess = Matrix::Zero(N, N);
  // Ordered pairs of distinct slots; C_st leaves slot s as the row index and
  // slot t as the column index, then the transpose covers (t,s).
  for (int t = 1; t < p; ++t) {
    const double* base = (p - 1 - t == 0) ? ham_.tensor.entries.data()
                                          : chain_[p - 1 - t].data();
    for (int s = 0; s < t; ++s) {
      std::vector<int> dims(t + 1, N);
      const double* src = base;
      std::vector<double> cur;
      // contract the modes strictly between s and t
      for (int m = t - 1; m > s; --m) {
        cur = contract_mode(src, dims, m, sigma_);
        dims.pop_back();
        src = cur.data();
      }
      // contract the modes before s
      for (int step = 0; step < s; ++step) {
        cur = contract_first(src, dims, sigma_);
        dims.erase(dims.begin());
        src = cur.data();
      }
      RowMap C(src, N, N);
      hess += C + C.transpose();
    }
  }
  return ham_.normalization() * hess;
}

double evaluate(const Hamiltonian& H, const Vector& sigma) {
  return EvalWorkspace(H, sigma).value();
}

Vector gradient(const Hamiltonian& H, const Vector& sigma) {
  return EvalWorkspace(H, sigma).gradient();
}

Matrix hessian(const Hamiltonian& H, const Vector& sigma) {
  return EvalWorkspace(H, sigma).hessian();
}

// ---------------------------------------------------------------------------

Hamiltonian correlated_copy(const Hamiltonian& H, double q, std::uint64_t seed) {
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidInput("correlation q must lie in [0,1]");
  Hamiltonian out;
  out.tensor.N = H.dim();
  out.tensor.p = H.order();
  out.tensor.seed = seed;
  const std::size_t n = H.tensor.size();
  out.tensor.entries.resize(n);
  const double w = std::sqrt(1.0 - q * q);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i)
    out.tensor.entries[i] = q * H.tensor.entries[i] + w * rng.gaussian();
  return out;
}

double coeff_distance(const Hamiltonian& a, const Hamiltonian& b) {
  require_same_shape(a, b);
  const std::size_t n = a.tensor.size();
  Eigen::Map<const Vector> va(a.tensor.entries.data(), n);
  Eigen::Map<const Vector> vb(b.tensor.entries.data(), n);
  return (va - vb).norm();
}

// ---------------------------------------------------------------------------
// Operator norm estimate (alternating rank-one fit, multiple restarts).

double tensor_opnorm_estimate(const double* data, const std::vector<int>& dims,
                              const OpNormConfig& cfg) {
  const int k = static_cast<int>(dims.size());
  if (k == 0) throw InvalidInput("opnorm of a scalar");
  std::size_t total = 1;
  for (int d : dims) total *= d;
  if (k == 1) return Eigen::Map<const Vector>(data, dims[0]).norm();

  Rng rng(cfg.seed);
  double best = 0.0;
  for (int r = 0; r < cfg.restarts; ++r) {
    std::vector<Vector> vs(k);
    for (int m = 0; m < k; ++m) vs[m] = rng.gaussian_vector(dims[m]).normalized();
    double value = 0.0;
    for (int it = 0; it < cfg.iters; ++it) {
      double prev = value;
      for (int m = 0; m < k; ++m) {
        // contract every mode except m
        std::vector<int> cur_dims = dims;
        const double* src = data;
        std::vector<double> cur;
        for (int mm = k - 1; mm > m; --mm) {
          cur = contract_last(src, cur_dims, vs[mm]);
          cur_dims.pop_back();
          src = cur.data();
        }
        for (int mm = 0; mm < m; ++mm) {
          cur = contract_first(src, cur_dims, vs[mm]);
          cur_dims.erase(cur_dims.begin());
          src = cur.data();
        }
        Eigen::Map<const Vector> w(src, dims[m]);
        const double norm = w.norm();
        if (norm == 0.0) break;
        vs[m] = w / norm;
        value = norm;
      }
      if (value - prev <= 1e-13 * std::max(1.0, value)) break;
    }
    best = std::max(best, value);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Derivative tensors and K_N.

std::vector<double> slot_symmetrized_sum(const DisorderTensor& t) {
  const int p = t.p;
  const int N = t.N;
  const std::size_t total = t.entries.size();
  // Strides for the row-major layout: stride[j] = N^{p-1-j}.
  std::vector<std::size_t> stride(p);
  stride[p - 1] = 1;
  for (int j = p - 2; j >= 0; --j) stride[j] = stride[j + 1] * N;

  // All permutations of the slot order.
  std::vector<std::vector<int>> perms;
  std::vector<int> perm(p);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    perms.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));

  std::vector<double> out(total, 0.0);
  std::vector<int> idx(p, 0);
  for (std::size_t flat = 0; flat < total; ++flat) {
    double s = 0.0;
    for (const auto& pi : perms) {
      std::size_t off = 0;
      for (int j = 0; j < p; ++j) off += idx[pi[j]] * stride[j];
      s += t.entries[off];
    }
    out[flat] = s;
    for (int j = p - 1; j >= 0; --j) {
      if (++idx[j] < N) break;
      idx[j] = 0;
    }
  }
  return out;
}

std::vector<double> derivative_opnorms(const Hamiltonian& H, const Vector& sigma,
                                       const std::vector<double>* sym_sum,
                                       const OpNormConfig& cfg) {
  require_dim(H, sigma);
  const int p = H.order();
  const int N = H.dim();
  std::vector<double> local;
  if (!sym_sum) {
    local = slot_symmetrized_sum(H.tensor);
    sym_sum = &local;
  }
  double factorial = 1.0;  // (p-k)! accumulated along the chain
  std::vector<double> norms(p + 1, 0.0);

  // Order-p tensor is sigma-independent: norm of the symmetrized sum itself.
  {
    std::vector<int> dims(p, N);
    norms[p] = H.normalization() *
               tensor_opnorm_estimate(sym_sum->data(), dims, cfg);
  }
  const double* src = sym_sum->data();
  std::vector<double> cur;
  std::vector<int> dims(p, N);
  for (int k = p - 1; k >= 0; --k) {
    cur = contract_last(src, dims, sigma);
    dims.pop_back();
    src = cur.data();
    factorial *= (p - k);
    const double scale = H.normalization() / factorial;
    if (k == 0) {
      norms[0] = scale * std::abs(cur[0]);
    } else if (k == 1) {
      norms[1] = scale * Eigen::Map<const Vector>(src, N).norm();
    } else if (k == 2) {
      RowMap A(src, N, N);
      Eigen::SelfAdjointEigenSolver<Matrix> es(Matrix(A), Eigen::EigenvaluesOnly);
      const auto& ev = es.eigenvalues();
      norms[2] = scale * std::max(std::abs(ev(0)), std::abs(ev(N - 1)));
    } else {
      norms[k] = scale * tensor_opnorm_estimate(src, dims, cfg);
    }
  }
  return norms;
}

KnReport in_K_N(const Hamiltonian& H, double C, const std::vector<Vector>& probes,
                const OpNormConfig& cfg) {
  const int p = H.order();
  const int N = H.dim();
  const double rootN = sqrt_n(N);
  for (const auto& probe : probes) {
    if (probe.norm() > rootN * (1.0 + 1e-9))
      throw InvalidInput("K_N probes must lie inside radius sqrt(N)");
  }
  const auto sym = slot_symmetrized_sum(H.tensor);
  KnReport rep;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  for (const auto& probe : probes) {
    const auto norms = derivative_opnorms(H, probe, &sym, cfg);
    for (int k = 0; k <= p; ++k) {
      const double bound = C * std::pow(static_cast<double>(N), 1.0 - k / 2.0);
      const double margin = bound - norms[k];
      const double ratio = norms[k] / bound;
      if (margin < rep.worst_margin) {
        rep.worst_margin = margin;
        rep.worst_order = k;
      }
      rep.max_ratio = std::max(rep.max_ratio, ratio);
    }
  }
  rep.inside = rep.worst_margin > 0.0;
  return rep;
}

// ---------------------------------------------------------------------------
// Binary container

namespace {

struct TensorHeader {
  char magic[4];
  std::uint32_t version;
  std::uint32_t p;
  std::uint32_t N;
  std::uint64_t seed;
  std::uint64_t reserved;
};
static_assert(sizeof(TensorHeader) == 32);
static_assert(std::endian::native == std::endian::little,
              "container writes little-endian doubles directly");

}  // namespace

void save_tensor(const DisorderTensor& t, const std::string& path, bool write_sidecar) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  TensorHeader h{};
  std::memcpy(h.magic, "PSPN", 4);
  h.version = 1;
  h.p = static_cast<std::uint32_t>(t.p);
  h.N = static_cast<std::uint32_t>(t.N);
  h.seed = t.seed;
  h.reserved = 0;
  f.write(reinterpret_cast<const char*>(&h), sizeof(h));
  f.write(reinterpret_cast<const char*>(t.entries.data()),
          static_cast<std::streamsize>(t.entries.size() * sizeof(double)));
  if (!f) throw std::runtime_error("short write to " + path);
  if (write_sidecar) {
    nlohmann::json j;
    j["magic"] = "PSPN";
    j["version"] = 1;
    j["p"] = t.p;
    j["N"] = t.N;
    j["seed"] = t.seed;
    j["entries"] = t.entries.size();
    j["content_hash"] = kContentHash;
    std::ofstream s(path + ".json");
    s << j.dump(2) << "\n";
  }
}

DisorderTensor load_tensor(const std::string& path, std::size_t memory_budget) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  TensorHeader h{};
  f.read(reinterpret_cast<char*>(&h), sizeof(h));
  if (!f || std::memcmp(h.magic, "PSPN", 4) != 0)
    throw std::runtime_error(path + ": not a PSPN tensor container");
  if (h.version != 1)
    throw std::runtime_error(path + ": unsupported container version");
  const std::size_t bytes = tensor_bytes(static_cast<int>(h.N), static_cast<int>(h.p));
  if (bytes > memory_budget) throw MemoryBudgetExceeded(bytes, memory_budget);
  DisorderTensor t;
  t.p = static_cast<int>(h.p);
  t.N = static_cast<int>(h.N);
  t.seed = h.seed;
  t.entries.resize(bytes / sizeof(double));
  f.read(reinterpret_cast<char*>(t.entries.data()),
         static_cast<std::streamsize>(bytes));
  if (!f) throw std::runtime_error(path + ": truncated tensor data");
  return t;
}

}  // namespace pspin
