#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "amswarm/types.hpp"

namespace amswarm {

/// Bernstein basis of degree n sampled at K uniformly spaced steps of length dt.
///
/// Row k of W holds the n+1 basis functions evaluated at t = k*dt on the
/// normalized interval [0, (K-1)*dt]. W1 and W2 hold the exact first and second
/// time derivatives (per second, per second squared) at the same samples.
/// W_pinv is the least-squares left inverse of W used to re-fit coefficients to
/// sampled positions.
template <typename Scalar>
struct BasisSet {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  int K = 0;
  int n = 0;
  Scalar dt = 0;
  Matrix W, W1, W2;
  Matrix W_pinv;

  Scalar duration() const { return dt * static_cast<Scalar>(K - 1); }
};

namespace detail {

// C(n, m) for m = 0..n, built by the multiplicative recurrence.
template <typename Scalar>
std::vector<Scalar> binomial_row(int n) {
  std::vector<Scalar> row(static_cast<std::size_t>(n) + 1);
  row[0] = Scalar(1);
  for (int m = 1; m <= n; ++m) {
    row[m] = row[m - 1] * static_cast<Scalar>(n - m + 1) / static_cast<Scalar>(m);
  }
  return row;
}

// Values of the degree-`deg` Bernstein polynomials at normalized time tau.
// Degree < 0 yields an empty vector.
template <typename Scalar>
std::vector<Scalar> bernstein_values(int deg, Scalar tau) {
  if (deg < 0) return {};
  const auto binom = binomial_row<Scalar>(deg);
  std::vector<Scalar> v(static_cast<std::size_t>(deg) + 1);
  for (int m = 0; m <= deg; ++m) {
    v[m] = binom[m] * std::pow(Scalar(1) - tau, deg - m) * std::pow(tau, m);
  }
  return v;
}

}  // namespace detail

/// Builds W, W1, W2 for horizon K, degree n and step dt.
///
/// Derivatives use the degree-reduction identity
///   d/dt B_{m,n} = (n / T) (B_{m-1,n-1} - B_{m,n-1}),
/// applied twice for W2, with T = (K-1) dt. Out-of-range lower-degree terms are
/// zero. Throws std::invalid_argument for K < 2, n < 1 or dt <= 0.
template <typename Scalar = double>
BasisSet<Scalar> build_basis(int K, int n, Scalar dt) {
  if (K < 2) throw std::invalid_argument("build_basis: horizon K must be at least 2");
  if (n < 1) throw std::invalid_argument("build_basis: degree n must be at least 1");
  if (!(dt > Scalar(0))) throw std::invalid_argument("build_basis: dt must be positive");

  BasisSet<Scalar> basis;
  basis.K = K;
  basis.n = n;
  basis.dt = dt;
  basis.W.setZero(K, n + 1);
  basis.W1.setZero(K, n + 1);
  basis.W2.setZero(K, n + 1);

  const Scalar T = basis.duration();
  const Scalar s1 = static_cast<Scalar>(n) / T;
  const Scalar s2 = static_cast<Scalar>(n) * static_cast<Scalar>(n - 1) / (T * T);

  for (int k = 0; k < K; ++k) {
    // Last sample lands exactly on tau = 1.
    const Scalar tau = (k == K - 1) ? Scalar(1) : static_cast<Scalar>(k) / static_cast<Scalar>(K - 1);
    const auto b0 = detail::bernstein_values<Scalar>(n, tau);
    const auto b1 = detail::bernstein_values<Scalar>(n - 1, tau);
    const auto b2 = detail::bernstein_values<Scalar>(n - 2, tau);
    auto at = [](const std::vector<Scalar>& v, int i) {
      return (i >= 0 && i < static_cast<int>(v.size())) ? v[i] : Scalar(0);
    };
    for (int m = 0; m <= n; ++m) {
      basis.W(k, m) = b0[m];
      basis.W1(k, m) = s1 * (at(b1, m - 1) - at(b1, m));
      basis.W2(k, m) = s2 * (at(b2, m - 2) - Scalar(2) * at(b2, m - 1) + at(b2, m));
    }
  }

  basis.W_pinv = basis.W.completeOrthogonalDecomposition().pseudoInverse();
  return basis;
}

/// Positions, velocities and accelerations sampled on the basis grid, K x 3 each.
template <typename Scalar>
struct SampledTrajectory {
  Samples3<Scalar> position;
  Samples3<Scalar> velocity;
  Samples3<Scalar> acceleration;
};

template <typename Scalar>
SampledTrajectory<Scalar> sample_trajectory(const BasisSet<Scalar>& basis,
                                            const CoeffMatrix<Scalar>& coeffs) {
  if (coeffs.rows() != basis.n + 1) {
    throw std::invalid_argument("sample_trajectory: coefficient rows must equal n+1");
  }
  return {basis.W * coeffs, basis.W1 * coeffs, basis.W2 * coeffs};
}

/// Least-squares Bernstein coefficients reproducing K x 3 position samples.
template <typename Scalar>
CoeffMatrix<Scalar> fit_coefficients(const BasisSet<Scalar>& basis, const Samples3<Scalar>& positions) {
  if (positions.rows() != basis.K) {
    throw std::invalid_argument("fit_coefficients: expected K position samples");
  }
  return basis.W_pinv * positions;
}

/// Coefficients of the trajectory advanced by one step: samples shifted up one
/// row, terminal sample held, then re-fitted.
template <typename Scalar>
CoeffMatrix<Scalar> shift_coefficients(const BasisSet<Scalar>& basis, const CoeffMatrix<Scalar>& coeffs) {
  Samples3<Scalar> p = basis.W * coeffs;
  Samples3<Scalar> shifted(basis.K, 3);
  shifted.topRows(basis.K - 1) = p.bottomRows(basis.K - 1);
  shifted.row(basis.K - 1) = p.row(basis.K - 1);
  return fit_coefficients(basis, shifted);
}

}  // namespace amswarm
