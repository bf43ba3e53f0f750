#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "amswarm/types.hpp"

namespace amswarm {

/// Axis-aligned ellipsoid semi-axes (a, b, c), the diagonal of Theta.
template <typename Scalar>
struct EllipsoidShape {
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

  Scalar a = Scalar(1);
  Scalar b = Scalar(1);
  Scalar c = Scalar(1);

  EllipsoidShape() = default;
  EllipsoidShape(Scalar a_, Scalar b_, Scalar c_) : a(a_), b(b_), c(c_) {
    if (!(a > 0 && b > 0 && c > 0)) {
      throw std::invalid_argument("EllipsoidShape: semi-axes must be positive");
    }
  }

  static EllipsoidShape sphere(Scalar r) { return {r, r, r}; }

  Vector3 axes() const { return {a, b, c}; }

  /// Semi-axis-wise sum, used to pad one envelope by another.
  EllipsoidShape inflated(const EllipsoidShape& other) const {
    return {a + other.a, b + other.b, c + other.c};
  }

  /// ||Theta^-1 diff||. The point is outside the ellipsoid iff this exceeds 1.
  Scalar metric(const Vector3& diff) const { return diff.cwiseQuotient(axes()).norm(); }

  bool isotropic() const { return a == b && b == c; }

  friend bool operator==(const EllipsoidShape&, const EllipsoidShape&) = default;
};

template <typename Scalar>
struct Angles {
  Scalar alpha;  // azimuth
  Scalar beta;   // polar angle in [0, pi]
};

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> omega(Scalar alpha, Scalar beta) {
  using std::cos;
  using std::sin;
  const Scalar sb = sin(beta);
  return {cos(alpha) * sb, sin(alpha) * sb, cos(beta)};
}

template <typename Scalar>
Angles<Scalar> angles_of(const Eigen::Matrix<Scalar, 3, 1>& dir) {
  using std::atan2;
  using std::hypot;
  return {atan2(dir.y(), dir.x()), atan2(hypot(dir.x(), dir.y()), dir.z())};
}

namespace detail {

// Unit vector along the smallest semi-axis; ties resolve x, then y, then z.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> min_axis_direction(const Eigen::Matrix<Scalar, 3, 1>& axes) {
  Eigen::Index i = 0;
  axes.minCoeff(&i);
  Eigen::Matrix<Scalar, 3, 1> u = Eigen::Matrix<Scalar, 3, 1>::Zero();
  u[i] = Scalar(1);
  return u;
}

}  // namespace detail

/// Direction of Theta^-1 diff. This is the joint minimizer over (omega, d) of
/// ||diff - d Theta omega||, and the exact per-sample minimizer for a fixed d
/// only when the shape is a sphere.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> radial_direction(const Eigen::Matrix<Scalar, 3, 1>& diff,
                                             const EllipsoidShape<Scalar>& shape) {
  Eigen::Matrix<Scalar, 3, 1> u = diff.cwiseQuotient(shape.axes());
  const Scalar len = u.norm();
  if (!(len > Scalar(0))) return detail::min_axis_direction<Scalar>(shape.axes());
  return u / len;
}

template <typename Scalar>
Angles<Scalar> radial_angles(const Eigen::Matrix<Scalar, 3, 1>& diff, const EllipsoidShape<Scalar>& shape) {
  return angles_of<Scalar>(radial_direction(diff, shape));
}

/// Euclidean closest point to y on the ellipsoid surface with semi-axes e.
///
/// Stationary points are x_i = e_i^2 y_i / (e_i^2 + t); the global minimizer is
/// the one with t >= -min(e)^2, found as the root of the convex decreasing
///   F(t) = sum_i (e_i y_i / (t + e_i^2))^2 - 1
/// by Newton's method started left of the root (monotone, no overshoot). When y
/// has no component along the smallest axis and F(-min(e)^2) <= 0 the minimizer
/// sits at t = -min(e)^2 and the smallest axis absorbs the remaining length.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> closest_point_on_ellipsoid(const Eigen::Matrix<Scalar, 3, 1>& y,
                                                       const Eigen::Matrix<Scalar, 3, 1>& e) {
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
  const Vector3 z = y.cwiseAbs();
  const Scalar emin = e.minCoeff();
  const Scalar emin2 = emin * emin;

  bool min_axis_loaded = false;
  for (int i = 0; i < 3; ++i) {
    if (e[i] == emin && z[i] > 0) min_axis_loaded = true;
  }

  Vector3 x = Vector3::Zero();
  Scalar t_start = -emin2;
  if (!min_axis_loaded) {
    Scalar sum = 0;
    for (int i = 0; i < 3; ++i) {
      if (e[i] != emin && z[i] > 0) {
        const Scalar r = e[i] * z[i] / (e[i] * e[i] - emin2);
        sum += r * r;
      }
    }
    if (sum <= Scalar(1)) {
      int first_min = -1;
      for (int i = 0; i < 3; ++i) {
        if (e[i] != emin) {
          x[i] = e[i] * e[i] * z[i] / (e[i] * e[i] - emin2);
        } else if (first_min < 0) {
          first_min = i;
        }
      }
      x[first_min] = emin * std::sqrt(std::max(Scalar(0), Scalar(1) - sum));
      for (int i = 0; i < 3; ++i) {
        if (y[i] < 0) x[i] = -x[i];
      }
      return x;
    }
  }

  for (int i = 0; i < 3; ++i) {
    if (z[i] > 0) t_start = std::max(t_start, e[i] * z[i] - e[i] * e[i]);
  }

  Scalar t = t_start;
  for (int it = 0; it < 100; ++it) {
    Scalar f = -1;
    Scalar df = 0;
    for (int i = 0; i < 3; ++i) {
      if (z[i] > 0) {
        const Scalar den = t + e[i] * e[i];
        const Scalar r = e[i] * z[i] / den;
        f += r * r;
        df -= Scalar(2) * r * r / den;
      }
    }
    if (f <= 0 || df >= 0) break;
    const Scalar step = -f / df;
    t += step;
    if (step <= std::numeric_limits<Scalar>::epsilon() * std::max(Scalar(1), std::abs(t))) break;
  }

  for (int i = 0; i < 3; ++i) {
    x[i] = (z[i] > 0) ? e[i] * e[i] * z[i] / (t + e[i] * e[i]) : Scalar(0);
    if (y[i] < 0) x[i] = -x[i];
  }
  return x;
}

/// Direction omega minimizing ||diff - d Theta omega||^2 over the unit sphere.
/// For d <= 0 the objective does not depend on omega and the radial direction
/// is returned.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> project_direction(const Eigen::Matrix<Scalar, 3, 1>& diff, Scalar d,
                                              const EllipsoidShape<Scalar>& shape) {
  if (!(d > Scalar(0)) || shape.isotropic()) return radial_direction(diff, shape);
  if (!(diff.squaredNorm() > Scalar(0))) return detail::min_axis_direction<Scalar>(shape.axes());
  const Eigen::Matrix<Scalar, 3, 1> e = d * shape.axes();
  Eigen::Matrix<Scalar, 3, 1> u = closest_point_on_ellipsoid<Scalar>(diff, e).cwiseQuotient(e);
  const Scalar len = u.norm();
  if (!(len > Scalar(0))) return detail::min_axis_direction<Scalar>(shape.axes());
  return u / len;
}

template <typename Scalar>
Angles<Scalar> project_angles(const Eigen::Matrix<Scalar, 3, 1>& diff, Scalar d,
                              const EllipsoidShape<Scalar>& shape) {
  return angles_of<Scalar>(project_direction(diff, d, shape));
}

/// Batched projection over rows of `diff` (one sample per row) with per-row
/// magnitudes. Returns (alpha, beta).
template <typename Scalar>
std::pair<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>, Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> project_angles(
    const Samples3<Scalar>& diff, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& d,
    const EllipsoidShape<Scalar>& shape) {
  if (d.size() != diff.rows()) throw std::invalid_argument("project_angles: one magnitude per row required");
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> alpha(diff.rows()), beta(diff.rows());
  for (Eigen::Index r = 0; r < diff.rows(); ++r) {
    const auto ang = project_angles<Scalar>(diff.row(r).transpose(), d[r], shape);
    alpha[r] = ang.alpha;
    beta[r] = ang.beta;
  }
  return {alpha, beta};
}

/// Minimizer of ||diff - d Theta dir||^2 over d in [lo, hi] (hi may be +inf).
template <typename Scalar>
Scalar solve_magnitude(const Eigen::Matrix<Scalar, 3, 1>& diff, const Eigen::Matrix<Scalar, 3, 1>& dir,
                       const EllipsoidShape<Scalar>& shape, Scalar lo, Scalar hi) {
  const Eigen::Matrix<Scalar, 3, 1> sd = shape.axes().cwiseProduct(dir);
  const Scalar den = sd.squaredNorm();
  if (den < Scalar(1e-12)) return lo;
  const Scalar d = sd.dot(diff) / den;
  return std::min(std::max(d, lo), hi);
}

template <typename Scalar>
Scalar solve_magnitude(const Eigen::Matrix<Scalar, 3, 1>& diff, Scalar alpha, Scalar beta,
                       const EllipsoidShape<Scalar>& shape, Scalar lo, Scalar hi) {
  return solve_magnitude<Scalar>(diff, omega(alpha, beta), shape, lo, hi);
}

/// Lower bound on d[k] from d[k-1] under the discrete-time barrier condition.
template <typename Scalar>
Scalar bf_lower_bound(Scalar d_prev, Scalar gamma) {
  if (!(gamma >= Scalar(0) && gamma <= Scalar(1))) {
    throw std::invalid_argument("bf_lower_bound: gamma must lie in [0, 1]");
  }
  return Scalar(1) + (Scalar(1) - gamma) * (d_prev - Scalar(1));
}

/// Polar variables for every (step, constraint family) pair. Column 0 is the
/// velocity family, column 1 acceleration, column 2 + j collision target j.
/// Directions are stored as the unit vector omega(alpha, beta).
template <typename Scalar>
struct PolarField {
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Array ux, uy, uz;
  Array d;

  /// alpha = beta = 0, d = 0.
  static PolarField zeros(int K, int families) {
    PolarField p;
    p.ux = Array::Zero(K, families);
    p.uy = Array::Zero(K, families);
    p.uz = Array::Ones(K, families);
    p.d = Array::Zero(K, families);
    return p;
  }

  static PolarField from_angles(const Array& alpha, const Array& beta, const Array& d) {
    PolarField p;
    p.ux = alpha.cos() * beta.sin();
    p.uy = alpha.sin() * beta.sin();
    p.uz = beta.cos();
    p.d = d;
    return p;
  }

  Eigen::Index steps() const { return d.rows(); }
  Eigen::Index families() const { return d.cols(); }

  Eigen::Matrix<Scalar, 3, 1> direction(Eigen::Index k, Eigen::Index f) const {
    return {ux(k, f), uy(k, f), uz(k, f)};
  }
  void set_direction(Eigen::Index k, Eigen::Index f, const Eigen::Matrix<Scalar, 3, 1>& u) {
    ux(k, f) = u.x();
    uy(k, f) = u.y();
    uz(k, f) = u.z();
  }

  Array alpha() const { return uy.binaryExpr(ux, [](Scalar y, Scalar x) { return std::atan2(y, x); }); }
  Array beta() const {
    const Array rho = (ux.square() + uy.square()).sqrt();
    return rho.binaryExpr(uz, [](Scalar r, Scalar z) { return std::atan2(r, z); });
  }
};

using Shape = EllipsoidShape<double>;
using PolarVars = PolarField<double>;

}  // namespace amswarm
