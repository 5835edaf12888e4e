#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace pspin {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Invalid shapes, parameter ranges, off-sphere inputs and the like.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionMismatch : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

// Refusal to allocate a tensor above the configured memory budget.
class MemoryBudgetExceeded : public std::runtime_error {
 public:
  MemoryBudgetExceeded(std::size_t required, std::size_t budget)
      : std::runtime_error("tensor requires " + std::to_string(required) +
                           " bytes, exceeding the budget of " +
                           std::to_string(budget) +
                           " bytes (raise memory_budget to override)"),
        required_bytes(required),
        budget_bytes(budget) {}
  std::size_t required_bytes;
  std::size_t budget_bytes;
};

inline double sqrt_n(int n) { return std::sqrt(static_cast<double>(n)); }

// Algorithmic threshold 2*sqrt((p-1)/p).
inline double alg_threshold(int p) {
  return 2.0 * std::sqrt((p - 1.0) / p);
}

// Bulk-edge constant 2*sqrt(p(p-1)) of the tangential Hessian spectrum.
inline double bulk_edge(int p) {
  return 2.0 * std::sqrt(static_cast<double>(p) * (p - 1.0));
}

}  // namespace pspin
