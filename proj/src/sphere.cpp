#include "pspin/sphere.hpp"

#include <cmath>

namespace pspin {

namespace {

constexpr double kSphereRelTol = 1e-8;

void require_on_sphere(const Vector& v) {
  const double root_n = sqrt_n(static_cast<int>(v.size()));
  if (std::abs(v.norm() - root_n) > kSphereRelTol * root_n)
    throw InvalidInput("point is off the sphere ||sigma|| = sqrt(N)");
}

// sin(theta)/theta and its scaled derivatives, stable near zero.
double sinc(double t) {
  if (std::abs(t) < 1e-4) {
    const double t2 = t * t;
    return 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
  }
  return std::sin(t) / t;
}

// s'(theta) = (cos(theta) - sinc(theta)) / theta
double sinc_d1(double t) {
  if (std::abs(t) < 1e-3) {
    const double t2 = t * t;
    return t * (-1.0 / 3.0 + t2 / 30.0 - t2 * t2 / 840.0);
  }
  return (std::cos(t) - sinc(t)) / t;
}

// s''(theta) = (-sin(theta) - 2 s'(theta)) / theta
double sinc_d2(double t) {
  if (std::abs(t) < 1e-3) {
    const double t2 = t * t;
    return -1.0 / 3.0 + t2 / 10.0 - t2 * t2 / 168.0;
  }
  return (-std::sin(t) - 2.0 * sinc_d1(t)) / t;
}

}  // namespace

SpherePoint SpherePoint::checked(Vector v) {
  require_on_sphere(v);
  return SpherePoint{std::move(v)};
}

SpherePoint SpherePoint::rescaled(const Vector& v) {
  const double norm = v.norm();
  if (norm == 0.0) throw InvalidInput("cannot rescale the zero vector to the sphere");
  return SpherePoint{v * (sqrt_n(static_cast<int>(v.size())) / norm)};
}

TangentVector TangentVector::checked(const SpherePoint& base, Vector ambient) {
  if (ambient.size() != base.coords.size())
    throw DimensionMismatch("tangent vector has wrong length");
  const double ip = std::abs(ambient.dot(base.coords));
  const double tol = 1e-10 * std::max(ambient.norm(), 1e-300) * sqrt_n(base.dim());
  if (ip > std::max(tol, 1e-12))
    throw InvalidInput("vector is not orthogonal to its base point");
  return TangentVector{base.coords, std::move(ambient)};
}

TangentVector tangent_project(const SpherePoint& sigma, const Vector& x) {
  if (x.size() != sigma.coords.size())
    throw DimensionMismatch("tangent_project: length mismatch");
  const double n = static_cast<double>(sigma.dim());
  Vector amb = x - sigma.coords * (sigma.coords.dot(x) / n);
  return TangentVector{sigma.coords, std::move(amb)};
}

TangentFrame make_frame(const SpherePoint& sigma, int axis) {
  const int n = sigma.dim();
  const Vector shat = sigma.coords / sqrt_n(n);
  // Reflection through the bisector of (e_axis, shat): swaps e_axis <-> -shat,
  // so columns != axis are an orthonormal basis of shat^perp. Continuous in
  // sigma away from shat = -e_axis; fall through axes near that pole.
  int a = axis;
  for (; a < n; ++a) {
    if (1.0 + shat(a) >= 1e-3) break;
  }
  if (a >= n) throw InvalidInput("make_frame: no admissible reflection axis");
  Vector u = shat;
  u(a) += 1.0;
  u.normalize();
  Matrix cols(n, n - 1);
  int c = 0;
  for (int j = 0; j < n; ++j) {
    if (j == a) continue;
    Vector col = -2.0 * u(j) * u;
    col(j) += 1.0;
    cols.col(c++) = col;
  }
  return TangentFrame{sigma, std::move(cols)};
}

TangentVector spherical_gradient(const Hamiltonian& H, const SpherePoint& sigma) {
  require_on_sphere(sigma.coords);
  return tangent_project(sigma, gradient(H, sigma.coords));
}

double radial_derivative(const Hamiltonian& H, const SpherePoint& sigma) {
  require_on_sphere(sigma.coords);
  return gradient(H, sigma.coords).dot(sigma.coords) / sigma.dim();
}

Matrix riemannian_hessian(const EvalWorkspace& ws, const TangentFrame& frame) {
  const Vector& sigma = ws.point();
  const int n = static_cast<int>(sigma.size());
  const Matrix full = ws.hessian();
  const double radial = ws.gradient().dot(sigma) / n;
  Matrix out = frame.columns.transpose() * full * frame.columns;
  out.diagonal().array() -= radial;
  return out;
}

Matrix riemannian_hessian(const Hamiltonian& H, const SpherePoint& sigma,
                          const TangentFrame& frame) {
  require_on_sphere(sigma.coords);
  if (!frame.base.coords.isApprox(sigma.coords, 1e-14))
    throw InvalidInput("frame is not based at sigma");
  EvalWorkspace ws(H, sigma.coords);
  return riemannian_hessian(ws, frame);
}

SpherePoint exp_map(const SpherePoint& sigma, const TangentVector& u) {
  require_on_sphere(sigma.coords);
  const int n = sigma.dim();
  const double root_n = sqrt_n(n);
  const double norm = u.ambient.norm();
  if (norm >= root_n) throw InvalidInput("exp_map: ||u|| >= sqrt(N), outside chart");
  const double theta = norm / root_n;
  // cos(theta) sigma + sinc(theta) u; exact sphere norm by construction.
  return SpherePoint{std::cos(theta) * sigma.coords + sinc(theta) * u.ambient};
}

TangentVector log_map(const SpherePoint& sigma, const SpherePoint& x) {
  require_on_sphere(sigma.coords);
  require_on_sphere(x.coords);
  const int n = sigma.dim();
  const double c = sigma.coords.dot(x.coords) / n;
  if (c <= 0.0) throw InvalidInput("log_map: point is antipodal or orthogonal");
  const double theta = std::acos(std::min(1.0, c));
  if (theta >= 1.0) throw InvalidInput("log_map: theta >= 1, outside chart");
  Vector tang = x.coords - sigma.coords * c;
  const double tn = tang.norm();
  if (tn == 0.0) return TangentVector{sigma.coords, Vector::Zero(n)};
  return TangentVector{sigma.coords, tang * (theta * sqrt_n(n) / tn)};
}

GeodesicPullback geodesic_pullback(const Hamiltonian& H, const TangentFrame& frame,
                                   const Vector& y_frame, bool with_hessian) {
  const int n = frame.base.dim();
  const double root_n = sqrt_n(n);
  if (y_frame.size() != n - 1)
    throw DimensionMismatch("geodesic_pullback: y must be in frame coordinates");

  const Vector y = frame.columns * y_frame;
  const double r = y.norm();
  const double theta = r / root_n;
  if (theta >= 1.0) throw InvalidInput("geodesic_pullback: theta >= 1");

  const double s = sinc(theta);
  const Vector x = std::cos(theta) * frame.base.coords + s * y;
  EvalWorkspace ws(H, x);

  GeodesicPullback out;
  out.value = ws.value();
  const Vector g = ws.gradient();
  const Vector gt = frame.columns.transpose() * g;
  const double g_sigma = g.dot(frame.base.coords);

  if (r < 1e-9 * root_n) {
    // Limit at the chart origin: grad F = tangential gradient,
    // hess F = tangential Hessian - radial derivative.
    out.grad_frame = gt;
    if (with_hessian) {
      const Matrix full = ws.hessian();
      out.hess_frame = frame.columns.transpose() * full * frame.columns;
      out.hess_frame.diagonal().array() -= g_sigma / n;
    }
    return out;
  }

  const double s1 = sinc_d1(theta);
  const double s2 = sinc_d2(theta);
  const Vector yhat = y / r;
  const Vector a = (frame.columns.transpose() * yhat) / root_n;  // q(w) = a.w
  const double g_y = g.dot(y);
  // dT[w] = s w + q(w) m with m = -sin(theta) sigma + s'(theta) y.
  const Vector m = -std::sin(theta) * frame.base.coords + s1 * y;

  out.grad_frame = s * gt + (-std::sin(theta) * g_sigma + s1 * g_y) * a;
  if (with_hessian) {
    const Matrix full = ws.hessian();
    const Matrix A = frame.columns.transpose() * full * frame.columns;
    const Vector h = frame.columns.transpose() * (full * m);
    const double c1 = m.dot(full * m);
    const double c2 = -std::sin(theta) * g_sigma + s1 * g_y;
    const double c3 = g.dot(-std::cos(theta) * frame.base.coords + s2 * y);
    Matrix hess = s * s * A;
    hess.noalias() += s * (h * a.transpose() + a * h.transpose());
    hess.noalias() += s1 * (gt * a.transpose() + a * gt.transpose());
    hess.noalias() += (c1 + c3) * (a * a.transpose());
    const double dq_coeff = c2 / (r * root_n);
    hess.noalias() -= dq_coeff * static_cast<double>(n) * (a * a.transpose());
    hess.diagonal().array() += dq_coeff;
    out.hess_frame = std::move(hess);
  }
  return out;
}

}  // namespace pspin
