#pragma once

#include <Eigen/Core>

#include <array>

#include "quadloco/robot_model.hpp"

namespace quadloco::dyn {

struct BaseState {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();  // world
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();     // world
};

struct RobotState {
  BaseState base;
  Vector12 q = Vector12::Zero();
  Vector12 qd = Vector12::Zero();
};

/// World placement of one body; axis is the joint axis (zero for the base).
struct LinkFrame {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d axis = Eigen::Vector3d::Zero();
  Eigen::Vector3d com = Eigen::Vector3d::Zero();
};

struct Kinematics {
  LinkFrame base;
  std::array<LinkFrame, kJoints> links;
};

Kinematics forward_kinematics(const RobotModel& model, const Eigen::Vector3d& base_position,
                              const Eigen::Matrix3d& base_rotation, const Vector12& q);

Eigen::Vector3d foot_position(const RobotModel& model, const Kinematics& kin, Leg leg);
Eigen::Vector3d foot_position(const RobotModel& model, const RobotState& state, Leg leg);

/// d(foot)/d(q_leg) in world coordinates.
Eigen::Matrix3d leg_jacobian(const RobotModel& model, const Kinematics& kin, Leg leg);

Eigen::Vector3d center_of_mass(const RobotModel& model, const Kinematics& kin);

/// Joint angles placing the foot at `target` (world); Newton iterations from `guess`.
/// Throws a dynamics error when the target is out of reach.
Eigen::Vector3d leg_ik(const RobotModel& model, const Eigen::Vector3d& base_position,
                       const Eigen::Matrix3d& base_rotation, Leg leg, const Eigen::Vector3d& target,
                       const Eigen::Vector3d& guess);

}  // namespace quadloco::dyn
