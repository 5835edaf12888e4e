#pragma once

#include "pspin/common.hpp"
#include "pspin/tensor.hpp"

namespace pspin {

// Point on S_N = { ||sigma|| = sqrt(N) }. Construction rejects inputs off the
// sphere beyond relative 1e-8 instead of renormalizing silently.
struct SpherePoint {
  Vector coords;

  int dim() const { return static_cast<int>(coords.size()); }

  static SpherePoint checked(Vector v);
  // Rescale an arbitrary nonzero vector onto the sphere.
  static SpherePoint rescaled(const Vector& v);
};

// Vector in the tangent space at `base`: <ambient, base> = 0.
struct TangentVector {
  Vector base;
  Vector ambient;

  double norm() const { return ambient.norm(); }

  static TangentVector checked(const SpherePoint& base, Vector ambient);
};

// Orthonormal basis of base^perp, as the columns of an N x (N-1) matrix.
// Built from a single Householder reflection (deterministic in sigma); the
// reflection axis falls back through the standard axes when sigma/sqrt(N) is
// within 1e-3 of the active axis pole.
struct TangentFrame {
  SpherePoint base;
  Matrix columns;  // N x (N-1)
};

TangentFrame make_frame(const SpherePoint& sigma, int axis = 0);

TangentVector tangent_project(const SpherePoint& sigma, const Vector& x);

TangentVector spherical_gradient(const Hamiltonian& H, const SpherePoint& sigma);

// <sigma, grad H(sigma)> / N; equals p H(sigma)/N by homogeneity.
double radial_derivative(const Hamiltonian& H, const SpherePoint& sigma);

// Frame coordinates of grad^2_sp H = M^T grad^2 H M - (radial derivative) I.
Matrix riemannian_hessian(const Hamiltonian& H, const SpherePoint& sigma,
                          const TangentFrame& frame);
// Variant reusing an EvalWorkspace built at sigma.
Matrix riemannian_hessian(const EvalWorkspace& ws, const TangentFrame& frame);

// Exponential map T_sigma(u) = cos(theta) sigma + sin(theta) v with u = theta v,
// ||v|| = sqrt(N). Requires ||u|| < sqrt(N) (theta < 1 chart).
SpherePoint exp_map(const SpherePoint& sigma, const TangentVector& u);

// Inverse of exp_map on the same-hemisphere chart; rejects <sigma,x> <= 0 and
// theta >= 1.
TangentVector log_map(const SpherePoint& sigma, const SpherePoint& x);

// ---------------------------------------------------------------------------
// Pullback F(y) = H(T_sigma(y)) for y in sigma^perp, expressed in the frame.
// Gradient and Hessian include the curvature of the exponential map, so that
// Newton steps on F are exact. Used by the state-following solver.

struct GeodesicPullback {
  double value = 0.0;
  Vector grad_frame;   // (N-1)
  Matrix hess_frame;   // (N-1) x (N-1), only if with_hessian
};

GeodesicPullback geodesic_pullback(const Hamiltonian& H, const TangentFrame& frame,
                                   const Vector& y_frame, bool with_hessian);

}  // namespace pspin
