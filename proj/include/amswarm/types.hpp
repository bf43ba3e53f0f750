#pragma once

#include <Eigen/Dense>

namespace amswarm {

using Vec3 = Eigen::Vector3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using ArrX = Eigen::ArrayXXd;

// K x 3 sampled quantities: one row per horizon step, columns x, y, z.
template <typename Scalar>
using Samples3 = Eigen::Matrix<Scalar, Eigen::Dynamic, 3>;
using MatX3 = Samples3<double>;

// (n+1) x 3 Bernstein coefficients, one column per axis. Column-major storage
// makes coeffs.reshaped() the stacked vector [c_x; c_y; c_z].
template <typename Scalar>
using CoeffMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, 3>;
using TrajectoryCoeffs = CoeffMatrix<double>;

inline constexpr double kGravity = 9.81;

}  // namespace amswarm
