#pragma once

#include <Eigen/Core>

namespace quadloco::spatial {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

/// Axis times angle, angle in [0, pi].
Eigen::Vector3d rotation_vector(const Eigen::Matrix3d& R);

/// Rodrigues formula; inverse of rotation_vector.
Eigen::Matrix3d exp_so3(const Eigen::Vector3d& phi);

/// Left Jacobian of SO(3): world angular velocity of exp(phi(t)) is J(phi) * phi'.
Eigen::Matrix3d left_jacobian(const Eigen::Vector3d& phi);

Eigen::Matrix3d rot_x(double a);
Eigen::Matrix3d rot_y(double a);
Eigen::Matrix3d rot_z(double a);

/// R = Rz(yaw) Ry(pitch) Rx(roll) for rpy = (roll, pitch, yaw).
Eigen::Matrix3d rpy_to_matrix(const Eigen::Vector3d& rpy);

/// World angular velocity produced by roll/pitch/yaw rates.
Eigen::Vector3d rpy_rates_to_omega(const Eigen::Vector3d& rpy, const Eigen::Vector3d& rpy_d);

/// Time derivative of rpy_rates_to_omega.
Eigen::Vector3d rpy_accel_to_omega_dot(const Eigen::Vector3d& rpy, const Eigen::Vector3d& rpy_d,
                                       const Eigen::Vector3d& rpy_dd);

bool is_rotation(const Eigen::Matrix3d& R, double tol = 1e-9);

}  // namespace quadloco::spatial
