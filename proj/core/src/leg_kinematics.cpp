#include "quadloco/leg_kinematics.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

#include "quadloco/error.hpp"
#include "quadloco/spatial.hpp"

namespace quadloco::dyn {

Kinematics forward_kinematics(const RobotModel& model, const Eigen::Vector3d& base_position,
                              const Eigen::Matrix3d& base_rotation, const Vector12& q) {
  Kinematics kin;
  kin.base.origin = base_position;
  kin.base.rotation = base_rotation;
  kin.base.com = base_position + base_rotation * model.base.com;
  for (int i = 0; i < kJoints; ++i) {
    const Link& l = model.links[i];
    const LinkFrame& parent = l.parent < 0 ? kin.base : kin.links[l.parent];
    LinkFrame& f = kin.links[i];
    f.origin = parent.origin + parent.rotation * l.origin;
    f.axis = parent.rotation * l.axis;
    f.rotation = parent.rotation * spatial::exp_so3(l.axis * q(i));
    f.com = f.origin + f.rotation * l.com;
  }
  return kin;
}

Eigen::Vector3d foot_position(const RobotModel& model, const Kinematics& kin, Leg leg) {
  const Foot& foot = model.feet[index(leg)];
  const LinkFrame& f = kin.links[foot.link];
  return f.origin + f.rotation * foot.position;
}

Eigen::Vector3d foot_position(const RobotModel& model, const RobotState& state, Leg leg) {
  return foot_position(model, forward_kinematics(model, state.base.position, state.base.rotation, state.q), leg);
}

Eigen::Matrix3d leg_jacobian(const RobotModel& model, const Kinematics& kin, Leg leg) {
  const Eigen::Vector3d p = foot_position(model, kin, leg);
  Eigen::Matrix3d J;
  for (int j = 0; j < 3; ++j) {
    const LinkFrame& f = kin.links[RobotModel::joint_index(leg, j)];
    J.col(j) = f.axis.cross(p - f.origin);
  }
  return J;
}

Eigen::Vector3d center_of_mass(const RobotModel& model, const Kinematics& kin) {
  Eigen::Vector3d c = model.base.mass * kin.base.com;
  for (int i = 0; i < kJoints; ++i) c += model.links[i].mass * kin.links[i].com;
  return c / model.total_mass();
}

Eigen::Vector3d leg_ik(const RobotModel& model, const Eigen::Vector3d& base_position,
                       const Eigen::Matrix3d& base_rotation, Leg leg, const Eigen::Vector3d& target,
                       const Eigen::Vector3d& guess) {
  Vector12 q = Vector12::Zero();
  const int k = 3 * index(leg);
  q.segment<3>(k) = guess;
  double err = 0.0;
  for (int it = 0; it < 100; ++it) {
    const Kinematics kin = forward_kinematics(model, base_position, base_rotation, q);
    const Eigen::Vector3d e = target - foot_position(model, kin, leg);
    err = e.norm();
    if (err < 1e-12) return q.segment<3>(k);
    const Eigen::Matrix3d J = leg_jacobian(model, kin, leg);
    // damped least squares keeps the step bounded near full extension
    const double lambda = 1e-6;
    Eigen::Vector3d dq = (J.transpose() * J + lambda * Eigen::Matrix3d::Identity()).ldlt().solve(J.transpose() * e);
    const double n = dq.norm();
    if (n > 0.3) dq *= 0.3 / n;
    q.segment<3>(k) += dq;
  }
  if (err < 1e-9) return q.segment<3>(k);
  std::ostringstream msg;
  msg << "inverse kinematics for " << to_string(leg) << " did not converge (residual " << err << " m)";
  throw Error(Stage::kDynamics, msg.str());
}

}  // namespace quadloco::dyn
