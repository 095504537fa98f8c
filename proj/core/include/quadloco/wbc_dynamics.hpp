#pragma once

#include <Eigen/Core>

#include <vector>

#include "quadloco/leg_kinematics.hpp"
#include "quadloco/robot_model.hpp"
#include "quadloco/spatial.hpp"

namespace quadloco::dyn {

inline constexpr double kGravity = 9.81;
inline constexpr int kDofs = 6 + kJoints;

using spatial::Matrix6d;
using spatial::Vector6d;
using Vector18 = Eigen::Matrix<double, kDofs, 1>;
using Matrix18 = Eigen::Matrix<double, kDofs, kDofs>;

/// Trunk pose at the CoG with world-frame velocities.
struct BodyPose {
  Eigen::Vector3d x_cog = Eigen::Vector3d::Zero();
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();
};

struct Gains {
  Eigen::Vector3d P_x = Eigen::Vector3d::Constant(2000.0);
  Eigen::Vector3d D_x = Eigen::Vector3d::Constant(400.0);
  Eigen::Vector3d P_theta = Eigen::Vector3d::Constant(600.0);
  Eigen::Vector3d D_theta = Eigen::Vector3d::Constant(60.0);
  double Kp = 50.0;
  double Kd = 2.0;
  double torque_limit = 150.0;

  void validate() const;
};

/// (F_vm, T_vm) from virtual springs and dampers on the trunk.
Vector6d virtual_model_wrench(const BodyPose& desired, const BodyPose& actual, const Gains& gains);

/// Locked inertia of the whole robot at its CoG, world aligned, ordered (linear, angular).
Matrix6d composite_inertia(const RobotModel& model, const Kinematics& kin);

/// planned + I_c^-1 wrench.
Vector6d reference_acceleration(const Vector6d& planned, const Vector6d& wrench, const Matrix6d& composite);
Vector6d reference_acceleration(const Vector6d& planned, const Vector6d& wrench, const RobotModel& model,
                                const Kinematics& kin);

/// Shifts a (linear, angular) acceleration from the CoG to a point `offset` away (world).
Vector6d cog_to_base_acceleration(const Vector6d& acc_cog, const Eigen::Vector3d& offset);
Vector6d base_to_cog_acceleration(const Vector6d& acc_base, const Eigen::Vector3d& offset);

/// b = M (base_acc, qdd) + h by floating-base recursive Newton-Euler.
/// base_acc is the world acceleration of the base origin and the angular acceleration.
/// Base rows are the world force and the moment about the base origin.
Vector18 inverse_dynamics_bias(const RobotModel& model, const RobotState& state, const Vector6d& base_acc,
                               const Vector12& qdd, double gravity = kGravity);

/// Joint-space inertia from unit accelerations of the bias computation.
Matrix18 mass_matrix(const RobotModel& model, const RobotState& state);

/// Base acceleration that realizes a CoG acceleration (linear CoG acc, angular acc) given joint accelerations.
Vector6d base_acceleration_for_cog(const RobotModel& model, const RobotState& state, const Vector6d& cog_acc,
                                   const Vector12& qdd);

struct ContactJacobian {
  std::vector<Leg> stance;
  Eigen::MatrixXd base;    // 3k x 6
  Eigen::MatrixXd joints;  // 3k x 12
};

ContactJacobian contact_jacobian(const RobotModel& model, const RobotState& state, const std::vector<Leg>& stance);

struct WholeBodyCommand {
  Vector12 tau = Vector12::Zero();
  Eigen::VectorXd lambda;
  std::vector<Leg> stance;
  Vector6d reference_acc = Vector6d::Zero();
  Vector18 bias = Vector18::Zero();
  /// Least-squares residual of the base rows.
  double base_residual = 0.0;
  /// Contact forces cannot balance an arbitrary base wrench (fewer than two stance feet).
  bool rank_warning = false;
};

WholeBodyCommand whole_body_torques(const RobotModel& model, const RobotState& state, const Vector6d& base_acc,
                                    const Vector12& qdd, const std::vector<Leg>& stance,
                                    double gravity = kGravity);

/// Clamped joint-space PD.
Vector12 joint_feedback(const Vector12& q_d, const Vector12& q, const Vector12& qd_d, const Vector12& qd,
                        const Gains& gains);

}  // namespace quadloco::dyn
