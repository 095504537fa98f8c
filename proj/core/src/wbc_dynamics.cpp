#include "quadloco/wbc_dynamics.hpp"

#include <Eigen/Dense>

#include <cmath>

#include "quadloco/error.hpp"

namespace quadloco::dyn {

namespace {

Error dyn_error(const std::string& what) { return Error(Stage::kDynamics, what); }

struct BodyMotion {
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();
  Eigen::Vector3d omega_dot = Eigen::Vector3d::Zero();
  Eigen::Vector3d acc = Eigen::Vector3d::Zero();  // origin acceleration
};

void check_finite(const RobotState& s) {
  if (!s.base.position.allFinite() || !s.base.rotation.allFinite() || !s.base.velocity.allFinite() ||
      !s.base.omega.allFinite() || !s.q.allFinite() || !s.qd.allFinite()) {
    throw dyn_error("non-finite robot state");
  }
}

}  // namespace

void Gains::validate() const {
  for (const auto* g : {&P_x, &D_x, &P_theta, &D_theta}) {
    if (!(g->minCoeff() > 0.0)) throw dyn_error("virtual model gains must be strictly positive");
  }
  if (!(Kp >= 0.0) || !(Kd >= 0.0)) throw dyn_error("joint gains must be non-negative");
  if (!(torque_limit > 0.0)) throw dyn_error("torque limit must be positive");
}

Vector6d virtual_model_wrench(const BodyPose& desired, const BodyPose& actual, const Gains& gains) {
  Vector6d w;
  w.head<3>() = gains.P_x.cwiseProduct(desired.x_cog - actual.x_cog) + gains.D_x.cwiseProduct(desired.v - actual.v);
  w.tail<3>() = gains.P_theta.cwiseProduct(spatial::rotation_vector(desired.R * actual.R.transpose())) +
                gains.D_theta.cwiseProduct(desired.omega - actual.omega);
  return w;
}

Matrix6d composite_inertia(const RobotModel& model, const Kinematics& kin) {
  const Eigen::Vector3d c = center_of_mass(model, kin);
  Eigen::Matrix3d I = Eigen::Matrix3d::Zero();
  const auto add = [&](const Link& l, const LinkFrame& f) {
    const Eigen::Matrix3d S = spatial::skew(f.com - c);
    I += f.rotation * l.inertia * f.rotation.transpose() - l.mass * S * S;
  };
  add(model.base, kin.base);
  for (int i = 0; i < kJoints; ++i) add(model.links[i], kin.links[i]);
  Matrix6d Ic = Matrix6d::Zero();
  Ic.topLeftCorner<3, 3>() = model.total_mass() * Eigen::Matrix3d::Identity();
  Ic.bottomRightCorner<3, 3>() = I;
  return Ic;
}

Vector6d reference_acceleration(const Vector6d& planned, const Vector6d& wrench, const Matrix6d& composite) {
  Eigen::LDLT<Matrix6d> ldlt(composite);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) throw dyn_error("composite inertia is not positive definite");
  return planned + ldlt.solve(wrench);
}

Vector6d reference_acceleration(const Vector6d& planned, const Vector6d& wrench, const RobotModel& model,
                                const Kinematics& kin) {
  return reference_acceleration(planned, wrench, composite_inertia(model, kin));
}

Vector6d cog_to_base_acceleration(const Vector6d& acc_cog, const Eigen::Vector3d& offset) {
  Vector6d out = acc_cog;
  out.head<3>() += acc_cog.tail<3>().cross(offset);
  return out;
}

Vector6d base_to_cog_acceleration(const Vector6d& acc_base, const Eigen::Vector3d& offset) {
  Vector6d out = acc_base;
  out.head<3>() -= acc_base.tail<3>().cross(offset);
  return out;
}

Vector18 inverse_dynamics_bias(const RobotModel& model, const RobotState& state, const Vector6d& base_acc,
                               const Vector12& qdd, double gravity) {
  check_finite(state);
  if (!base_acc.allFinite() || !qdd.allFinite()) throw dyn_error("non-finite reference acceleration");
  const Kinematics kin = forward_kinematics(model, state.base.position, state.base.rotation, state.q);

  // forward pass; gravity enters as an upward acceleration of the base
  BodyMotion base;
  base.omega = state.base.omega;
  base.omega_dot = base_acc.tail<3>();
  base.acc = base_acc.head<3>() + Eigen::Vector3d(0.0, 0.0, gravity);
  std::array<BodyMotion, kJoints> mo;
  for (int i = 0; i < kJoints; ++i) {
    const Link& l = model.links[i];
    const BodyMotion& pm = l.parent < 0 ? base : mo[l.parent];
    const LinkFrame& pf = l.parent < 0 ? kin.base : kin.links[l.parent];
    const LinkFrame& f = kin.links[i];
    const Eigen::Vector3d r = f.origin - pf.origin;
    BodyMotion& m = mo[i];
    m.omega = pm.omega + f.axis * state.qd(i);
    m.omega_dot = pm.omega_dot + f.axis * qdd(i) + pm.omega.cross(f.axis * state.qd(i));
    m.acc = pm.acc + pm.omega_dot.cross(r) + pm.omega.cross(pm.omega.cross(r));
  }

  // backward pass: force on each body from its parent and moment about the joint origin
  const auto body_wrench = [](const Link& l, const LinkFrame& f, const BodyMotion& m, Eigen::Vector3d& F,
                              Eigen::Vector3d& N) {
    const Eigen::Vector3d rc = f.com - f.origin;
    const Eigen::Vector3d ac = m.acc + m.omega_dot.cross(rc) + m.omega.cross(m.omega.cross(rc));
    const Eigen::Matrix3d Iw = f.rotation * l.inertia * f.rotation.transpose();
    F = l.mass * ac;
    N = Iw * m.omega_dot + m.omega.cross(Iw * m.omega) + rc.cross(F);
  };
  std::array<Eigen::Vector3d, kJoints> f, n;
  for (int i = 0; i < kJoints; ++i) body_wrench(model.links[i], kin.links[i], mo[i], f[i], n[i]);
  Eigen::Vector3d f0, n0;
  body_wrench(model.base, kin.base, base, f0, n0);

  Vector18 b;
  for (int i = kJoints - 1; i >= 0; --i) {
    b(6 + i) = kin.links[i].axis.dot(n[i]);
    const int p = model.links[i].parent;
    const Eigen::Vector3d& po = p < 0 ? kin.base.origin : kin.links[p].origin;
    Eigen::Vector3d& fp = p < 0 ? f0 : f[p];
    Eigen::Vector3d& np = p < 0 ? n0 : n[p];
    fp += f[i];
    np += n[i] + (kin.links[i].origin - po).cross(f[i]);
  }
  b.head<3>() = f0;
  b.segment<3>(3) = n0;
  return b;
}

Matrix18 mass_matrix(const RobotModel& model, const RobotState& state) {
  RobotState still = state;
  still.base.velocity.setZero();
  still.base.omega.setZero();
  still.qd.setZero();
  Matrix18 M;
  const Vector18 h0 = inverse_dynamics_bias(model, still, Vector6d::Zero(), Vector12::Zero(), 0.0);
  for (int j = 0; j < kDofs; ++j) {
    Vector18 e = Vector18::Zero();
    e(j) = 1.0;
    M.col(j) = inverse_dynamics_bias(model, still, e.head<6>(), e.tail<12>(), 0.0) - h0;
  }
  return M;
}

Vector6d base_acceleration_for_cog(const RobotModel& model, const RobotState& state, const Vector6d& cog_acc,
                                   const Vector12& qdd) {
  // total force without gravity is m times the CoG acceleration and depends on the base linear
  // acceleration only through m * I
  Vector6d guess;
  guess.head<3>() = cog_acc.head<3>();
  guess.tail<3>() = cog_acc.tail<3>();
  const Vector18 b = inverse_dynamics_bias(model, state, guess, qdd, 0.0);
  const double m = model.total_mass();
  guess.head<3>() += cog_acc.head<3>() - b.head<3>() / m;
  return guess;
}

ContactJacobian contact_jacobian(const RobotModel& model, const RobotState& state, const std::vector<Leg>& stance) {
  const Kinematics kin = forward_kinematics(model, state.base.position, state.base.rotation, state.q);
  ContactJacobian J;
  J.stance = stance;
  const int k = static_cast<int>(stance.size());
  J.base = Eigen::MatrixXd::Zero(3 * k, 6);
  J.joints = Eigen::MatrixXd::Zero(3 * k, kJoints);
  for (int i = 0; i < k; ++i) {
    const Eigen::Vector3d p = foot_position(model, kin, stance[i]);
    J.base.block<3, 3>(3 * i, 0).setIdentity();
    J.base.block<3, 3>(3 * i, 3) = -spatial::skew(p - kin.base.origin);
    J.joints.block<3, 3>(3 * i, 3 * index(stance[i])) = leg_jacobian(model, kin, stance[i]);
  }
  return J;
}

WholeBodyCommand whole_body_torques(const RobotModel& model, const RobotState& state, const Vector6d& base_acc,
                                    const Vector12& qdd, const std::vector<Leg>& stance, double gravity) {
  WholeBodyCommand cmd;
  cmd.stance = stance;
  cmd.reference_acc = base_acc;
  cmd.bias = inverse_dynamics_bias(model, state, base_acc, qdd, gravity);
  const Vector6d bb = cmd.bias.head<6>();
  if (stance.empty()) {
    cmd.tau = cmd.bias.tail<12>();
    cmd.lambda.resize(0);
    cmd.base_residual = bb.norm();
    cmd.rank_warning = true;
    return cmd;
  }
  const ContactJacobian J = contact_jacobian(model, state, stance);
  const Eigen::MatrixXd A = J.base.transpose();
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
  cod.setThreshold(1e-8);
  cod.compute(A);
  cmd.lambda = cod.solve(bb);
  cmd.base_residual = (A * cmd.lambda - bb).norm();
  cmd.rank_warning = stance.size() < 2;
  cmd.tau = cmd.bias.tail<12>() - J.joints.transpose() * cmd.lambda;
  if (!cmd.tau.allFinite() || !cmd.lambda.allFinite()) throw dyn_error("non-finite joint torques");
  return cmd;
}

Vector12 joint_feedback(const Vector12& q_d, const Vector12& q, const Vector12& qd_d, const Vector12& qd,
                        const Gains& gains) {
  const Vector12 tau = gains.Kp * (q_d - q) + gains.Kd * (qd_d - qd);
  return tau.cwiseMax(-gains.torque_limit).cwiseMin(gains.torque_limit);
}

}  // namespace quadloco::dyn
