#include "quadloco/spatial.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

namespace quadloco::spatial {

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d S;
  S << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return S;
}

Eigen::Vector3d rotation_vector(const Eigen::Matrix3d& R) {
  const Eigen::Vector3d w(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  const double s = 0.5 * w.norm();
  const double c = 0.5 * (R.trace() - 1.0);
  const double angle = std::atan2(s, c);
  if (angle < 1e-6) {
    // first order plus the cubic correction of angle / sin(angle)
    return 0.5 * (1.0 + angle * angle / 6.0) * w;
  }
  if (std::numbers::pi - angle > 1e-6) return angle / (2.0 * std::sin(angle)) * w;

  const Eigen::Matrix3d B = 0.25 * (R + R.transpose()) + 0.5 * Eigen::Matrix3d::Identity();
  int k = 0;
  B.diagonal().maxCoeff(&k);
  Eigen::Vector3d axis = B.col(k) / std::sqrt(std::max(B(k, k), 1e-300));
  axis.normalize();
  if (std::numbers::pi - angle > 1e-12) {
    // near pi the antisymmetric part still fixes the sign
    if (axis.dot(w) < 0.0) axis = -axis;
  } else {
    for (int i = 0; i < 3; ++i) {
      if (std::abs(axis(i)) > 1e-12) {
        if (axis(i) < 0.0) axis = -axis;
        break;
      }
    }
  }
  return angle * axis;
}

Eigen::Matrix3d exp_so3(const Eigen::Vector3d& phi) {
  const double a = phi.norm();
  const Eigen::Matrix3d K = skew(phi);
  double s1, s2;
  if (a < 1e-4) {
    const double a2 = a * a;
    s1 = 1.0 - a2 / 6.0 + a2 * a2 / 120.0;
    s2 = 0.5 - a2 / 24.0 + a2 * a2 / 720.0;
  } else {
    s1 = std::sin(a) / a;
    s2 = (1.0 - std::cos(a)) / (a * a);
  }
  return Eigen::Matrix3d::Identity() + s1 * K + s2 * K * K;
}

Eigen::Matrix3d left_jacobian(const Eigen::Vector3d& phi) {
  const double a = phi.norm();
  const Eigen::Matrix3d K = skew(phi);
  double s1, s2;
  if (a < 1e-4) {
    const double a2 = a * a;
    s1 = 0.5 - a2 / 24.0;
    s2 = 1.0 / 6.0 - a2 / 120.0;
  } else {
    s1 = (1.0 - std::cos(a)) / (a * a);
    s2 = (a - std::sin(a)) / (a * a * a);
  }
  return Eigen::Matrix3d::Identity() + s1 * K + s2 * K * K;
}

Eigen::Matrix3d rot_x(double a) {
  Eigen::Matrix3d R;
  R << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  return R;
}

Eigen::Matrix3d rot_y(double a) {
  Eigen::Matrix3d R;
  R << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  return R;
}

Eigen::Matrix3d rot_z(double a) {
  Eigen::Matrix3d R;
  R << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return R;
}

Eigen::Matrix3d rpy_to_matrix(const Eigen::Vector3d& rpy) { return rot_z(rpy.z()) * rot_y(rpy.y()) * rot_x(rpy.x()); }

namespace {

// Columns map (roll, pitch, yaw) rates to world angular velocity.
Eigen::Matrix3d rate_matrix(const Eigen::Vector3d& rpy) {
  const Eigen::Matrix3d Rz = rot_z(rpy.z());
  const Eigen::Matrix3d Rzy = Rz * rot_y(rpy.y());
  Eigen::Matrix3d E;
  E.col(0) = Rzy.col(0);
  E.col(1) = Rz.col(1);
  E.col(2) = Eigen::Vector3d::UnitZ();
  return E;
}

}  // namespace

Eigen::Vector3d rpy_rates_to_omega(const Eigen::Vector3d& rpy, const Eigen::Vector3d& rpy_d) {
  return rate_matrix(rpy) * rpy_d;
}

Eigen::Vector3d rpy_accel_to_omega_dot(const Eigen::Vector3d& rpy, const Eigen::Vector3d& rpy_d,
                                       const Eigen::Vector3d& rpy_dd) {
  const Eigen::Matrix3d E = rate_matrix(rpy);
  // d/dt of E columns: col1 = Rz e_y, col0 = Rz Ry e_x
  const Eigen::Vector3d wz(0.0, 0.0, rpy_d.z());
  const Eigen::Vector3d wzy = wz + E.col(1) * rpy_d.y();
  Eigen::Matrix3d Ed;
  Ed.col(0) = wzy.cross(E.col(0));
  Ed.col(1) = wz.cross(E.col(1));
  Ed.col(2).setZero();
  return E * rpy_dd + Ed * rpy_d;
}

bool is_rotation(const Eigen::Matrix3d& R, double tol) {
  return (R.transpose() * R - Eigen::Matrix3d::Identity()).lpNorm<Eigen::Infinity>() < tol &&
         std::abs(R.determinant() - 1.0) < tol;
}

}  // namespace quadloco::spatial
