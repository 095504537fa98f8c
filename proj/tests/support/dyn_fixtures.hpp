#pragma once

#include <Eigen/Dense>

#include <random>

#include "quadloco/wbc_dynamics.hpp"

namespace testsupport {

using namespace quadloco::dyn;
using quadloco::spatial::exp_so3;
namespace spatial = quadloco::spatial;

inline Eigen::Matrix3d random_rotation(std::mt19937& rng) {
  std::normal_distribution<double> nd;
  Eigen::Quaterniond q(nd(rng), nd(rng), nd(rng), nd(rng));
  q.normalize();
  return q.toRotationMatrix();
}

inline RobotState random_state(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  RobotState s;
  s.base.position = Eigen::Vector3d(u(rng), u(rng), 0.5 + 0.1 * u(rng));
  s.base.rotation = exp_so3(0.3 * Eigen::Vector3d(u(rng), u(rng), u(rng)));
  s.base.velocity = Eigen::Vector3d(u(rng), u(rng), u(rng));
  s.base.omega = Eigen::Vector3d(u(rng), u(rng), u(rng));
  s.q = nominal_joint_angles();
  for (int i = 0; i < kJoints; ++i) {
    s.q(i) += 0.4 * u(rng);
    s.qd(i) = 2.0 * u(rng);
  }
  return s;
}

inline Vector18 random_vector18(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Vector18 v;
  for (int i = 0; i < kDofs; ++i) v(i) = u(rng);
  return v;
}

// Kinematic state along p(t) = p + v t + a t^2 / 2, R(t) = exp(w t + wd t^2 / 2) R0, q(t) likewise.
struct Moving {
  RobotState s0;
  Vector18 acc;

  RobotState at(double t) const {
    RobotState s = s0;
    s.base.position = s0.base.position + s0.base.velocity * t + 0.5 * acc.head<3>() * t * t;
    s.base.velocity = s0.base.velocity + acc.head<3>() * t;
    const Eigen::Vector3d phi = s0.base.omega * t + 0.5 * acc.segment<3>(3) * t * t;
    s.base.rotation = exp_so3(phi) * s0.base.rotation;
    s.base.omega = spatial::left_jacobian(phi) * (s0.base.omega + acc.segment<3>(3) * t);
    s.q = s0.q + s0.qd * t + 0.5 * acc.tail<12>() * t * t;
    s.qd = s0.qd + acc.tail<12>() * t;
    return s;
  }
};

inline Vector18 generalized_velocity(const RobotState& s) {
  Vector18 u;
  u << s.base.velocity, s.base.omega, s.qd;
  return u;
}

inline RobotState symmetric_rest() {
  RobotState s;
  s.base.position = {0.2, -0.1, 0.55};
  s.q = nominal_joint_angles();
  return s;
}

// Distance from the base rows of the bias to the range of the base contact Jacobian transpose.
inline double least_squares_base_residual(const Eigen::MatrixXd& J_base, const Vector6d& base_bias) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(J_base.transpose(), Eigen::ComputeThinU);
  const int rank = static_cast<int>((svd.singularValues().array() > 1e-8 * svd.singularValues()(0)).count());
  const Eigen::MatrixXd U = svd.matrixU().leftCols(rank);
  return (base_bias - U * (U.transpose() * base_bias)).norm();
}

}  // namespace testsupport
