#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "dyn_fixtures.hpp"
#include "quadloco/error.hpp"
#include "quadloco/wbc_dynamics.hpp"

using namespace quadloco;
using namespace quadloco::dyn;
using spatial::exp_so3;
using spatial::rotation_vector;
using testsupport::generalized_velocity;
using testsupport::Moving;
using testsupport::random_rotation;
using testsupport::random_state;
using testsupport::random_vector18;
using testsupport::symmetric_rest;

namespace {

constexpr double kPi = std::numbers::pi;

// Velocities of every body from the ancestor-sum formula.
struct BodyVel {
  std::vector<Eigen::Vector3d> v;
  std::vector<Eigen::Vector3d> w;
  std::vector<Eigen::Vector3d> c;
  std::vector<Eigen::Matrix3d> I;
  std::vector<double> m;
};

BodyVel body_velocities(const RobotModel& model, const RobotState& s) {
  const Kinematics kin = forward_kinematics(model, s.base.position, s.base.rotation, s.q);
  BodyVel out;
  const auto push = [&](const Link& l, const LinkFrame& f, int self) {
    Eigen::Vector3d v = s.base.velocity + s.base.omega.cross(f.com - s.base.position);
    Eigen::Vector3d w = s.base.omega;
    for (int j = self; j >= 0; j = model.links[j].parent) {
      v += kin.links[j].axis.cross(f.com - kin.links[j].origin) * s.qd(j);
      w += kin.links[j].axis * s.qd(j);
    }
    out.v.push_back(v);
    out.w.push_back(w);
    out.c.push_back(f.com);
    out.I.push_back(f.rotation * l.inertia * f.rotation.transpose());
    out.m.push_back(l.mass);
  };
  push(model.base, kin.base, -1);
  for (int i = 0; i < kJoints; ++i) push(model.links[i], kin.links[i], i);
  return out;
}

Eigen::Vector3d linear_momentum(const BodyVel& b) {
  Eigen::Vector3d P = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < b.m.size(); ++i) P += b.m[i] * b.v[i];
  return P;
}

Eigen::Vector3d angular_momentum(const BodyVel& b, const Eigen::Vector3d& o) {
  Eigen::Vector3d L = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < b.m.size(); ++i) L += (b.c[i] - o).cross(b.m[i] * b.v[i]) + b.I[i] * b.w[i];
  return L;
}

double kinetic_energy(const BodyVel& b) {
  double T = 0.0;
  for (std::size_t i = 0; i < b.m.size(); ++i) T += 0.5 * b.m[i] * b.v[i].squaredNorm() + 0.5 * b.w[i].dot(b.I[i] * b.w[i]);
  return T;
}

}  // namespace

TEST_CASE("dyn: fixture totals 90 kg and parses strictly") {
  const RobotModel& m = default_model();
  CHECK(m.total_mass() == doctest::Approx(90.0).epsilon(1e-12));
  CHECK(m.links[RobotModel::joint_index(Leg::RH, 2)].name == "rh_kfe");
  std::istringstream bad("link base - 70 0 0 0 1 1 1 0 0 0 0 0 0 0 0 0\nwheel x\n");
  CHECK_THROWS_AS(parse_model(bad), Error);
  std::string text = default_model_text();
  text.replace(text.find("link lf_hfe lf_haa 3"), 20, "link lf_hfe lf_haa -3");
  std::istringstream neg(text);
  CHECK_THROWS_AS(parse_model(neg), Error);
}

TEST_CASE("dyn: rotation vector") {
  CHECK(rotation_vector(Eigen::Matrix3d::Identity()).norm() == 0.0);
  const Eigen::Vector3d rx = rotation_vector(spatial::rot_x(kPi / 2));
  CHECK((rx - Eigen::Vector3d(kPi / 2, 0, 0)).norm() < 1e-12);

  std::mt19937 rng(11);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Matrix3d R = random_rotation(rng);
    const Eigen::Vector3d phi = rotation_vector(R);
    CHECK(phi.norm() <= kPi + 1e-15);
    CHECK((exp_so3(phi) - R).lpNorm<Eigen::Infinity>() <= 1e-9);
  }
  // at and near pi
  for (const Eigen::Vector3d& axis : {Eigen::Vector3d(0, 0, 1), Eigen::Vector3d(1, -2, 2).normalized(),
                                     Eigen::Vector3d(-1, 0.5, 0.1).normalized()}) {
    for (double a : {kPi, kPi - 1e-9, kPi - 1e-7, kPi - 1e-5}) {
      const Eigen::Matrix3d R = Eigen::AngleAxisd(a, axis).toRotationMatrix();
      const Eigen::Vector3d phi = rotation_vector(R);
      CHECK((exp_so3(phi) - R).lpNorm<Eigen::Infinity>() <= 1e-9);
      CHECK(std::abs(phi.norm() - a) < 1e-6);
    }
  }
  const Eigen::Vector3d flip = rotation_vector(Eigen::AngleAxisd(kPi, Eigen::Vector3d(-1, 0, 0)).toRotationMatrix());
  CHECK((flip - Eigen::Vector3d(kPi, 0, 0)).norm() < 1e-9);

  // series branch against the closed form in extended precision
  for (double a : {1e-9, 1e-7, 5e-7, 2e-6, 5e-5, 9e-5}) {
    const Eigen::Vector3d axis = Eigen::Vector3d(0.3, -0.5, 0.8).normalized();
    const Eigen::Matrix3d R = Eigen::AngleAxisd(a, axis).toRotationMatrix();
    const Eigen::Vector3d w(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
    const long double s = 0.5L * static_cast<long double>(w.norm());
    const long double ang = std::asin(s);
    const Eigen::Vector3d exact = static_cast<double>(ang / (2.0L * s)) * w;
    CHECK((rotation_vector(R) - exact).norm() < 1e-12);
  }
}

TEST_CASE("dyn: virtual model wrench") {
  Gains g;
  BodyPose a;
  CHECK(virtual_model_wrench(a, a, g).norm() == 0.0);
  BodyPose d = a;
  d.x_cog.x() = 0.1;
  g.P_x.setConstant(1000.0);
  CHECK((virtual_model_wrench(d, a, g) - (Vector6d() << 100, 0, 0, 0, 0, 0).finished()).norm() < 1e-12);
  BodyPose r;
  r.R = spatial::rot_y(0.4);
  BodyPose rd = r;
  rd.R = spatial::rot_z(0.2) * r.R;
  g.P_theta.setConstant(500.0);
  CHECK((virtual_model_wrench(rd, r, g).tail<3>() - Eigen::Vector3d(0, 0, 100)).norm() < 1e-9);

  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  for (int i = 0; i < 20; ++i) {
    BodyPose x, y;
    x.x_cog = Eigen::Vector3d(u(rng), u(rng), u(rng));
    x.v = Eigen::Vector3d(u(rng), u(rng), u(rng));
    x.omega = Eigen::Vector3d(u(rng), u(rng), u(rng));
    x.R = exp_so3(Eigen::Vector3d(u(rng), u(rng), u(rng)));
    Gains g2 = g;
    g2.P_x *= 2;
    g2.D_x *= 2;
    g2.P_theta *= 2;
    g2.D_theta *= 2;
    CHECK(virtual_model_wrench(x, y, g2) == 2.0 * virtual_model_wrench(x, y, g));
  }
}

TEST_CASE("dyn: composite inertia and reference acceleration") {
  const RobotModel& model = default_model();
  std::mt19937 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    RobotState s = random_state(rng);
    const Kinematics kin = forward_kinematics(model, s.base.position, s.base.rotation, s.q);
    const Matrix6d Ic = composite_inertia(model, kin);
    CHECK((Ic.topLeftCorner<3, 3>() - 90.0 * Eigen::Matrix3d::Identity()).norm() < 1e-12);
    // base block of the joint-space inertia shifted to the CoG
    const Matrix18 M = mass_matrix(model, s);
    const Eigen::Vector3d r = center_of_mass(model, kin) - s.base.position;
    Matrix6d X = Matrix6d::Identity();
    X.topRightCorner<3, 3>() = -spatial::skew(r);
    const Matrix6d shifted = X.transpose().inverse() * M.topLeftCorner<6, 6>() * X.inverse();
    CHECK((shifted - Ic).lpNorm<Eigen::Infinity>() < 1e-9);
  }
  const RobotState s = symmetric_rest();
  const Kinematics kin = forward_kinematics(model, s.base.position, s.base.rotation, s.q);
  Vector6d planned;
  planned << 0.1, 0.2, 0.3, 0.4, 0.5, 0.6;
  CHECK(reference_acceleration(planned, Vector6d::Zero(), model, kin) == planned);
  Vector6d w = Vector6d::Zero();
  w(2) = 180.0;
  const Vector6d acc = reference_acceleration(Vector6d::Zero(), w, model, kin);
  CHECK(acc(2) == doctest::Approx(2.0));
  CHECK(acc.tail<3>().norm() < 1e-12);
}

TEST_CASE("dyn: CoG to base acceleration transform") {
  Vector6d a;
  a << 1, 2, 3, 0, 0, 0;
  CHECK(cog_to_base_acceleration(a, {0, 0, 0}) == a);
  Vector6d alpha;
  alpha << 0, 0, 0, 0, 0, 2;
  const Vector6d b = cog_to_base_acceleration(alpha, {0.5, 0, 0});
  CHECK((b.head<3>() - Eigen::Vector3d(0, 1, 0)).norm() < 1e-15);
  const Vector6d x = (Vector6d() << 0.3, -1, 2, 0.7, -0.2, 1.1).finished();
  const Eigen::Vector3d off(0.1, -0.05, 0.2);
  CHECK((base_to_cog_acceleration(cog_to_base_acceleration(x, off), off) - x).norm() < 1e-12);
}

TEST_CASE("dyn: statics at rest") {
  const RobotModel& model = default_model();
  std::mt19937 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    RobotState s = random_state(rng);
    s.base.velocity.setZero();
    s.base.omega.setZero();
    s.qd.setZero();
    const Vector18 b = inverse_dynamics_bias(model, s, Vector6d::Zero(), Vector12::Zero());
    const Kinematics kin = forward_kinematics(model, s.base.position, s.base.rotation, s.q);
    const Eigen::Vector3d g(0, 0, model.total_mass() * kGravity);
    CHECK((b.head<3>() - g).norm() < 1e-9);
    const Eigen::Vector3d c = center_of_mass(model, kin);
    CHECK((b.segment<3>(3) - (c - s.base.position).cross(g)).norm() < 1e-9);
    // joint torque: moment of the gravity of everything beyond the joint
    for (int j = 0; j < kJoints; ++j) {
      Eigen::Vector3d moment = Eigen::Vector3d::Zero();
      for (int i = 0; i < kJoints; ++i) {
        bool beyond = false;
        for (int k = i; k >= 0; k = model.links[k].parent) beyond |= (k == j);
        if (beyond) {
          moment += (kin.links[i].com - kin.links[j].origin).cross(Eigen::Vector3d(0, 0, model.links[i].mass * kGravity));
        }
      }
      CHECK(b(6 + j) == doctest::Approx(kin.links[j].axis.dot(moment)).epsilon(1e-12));
    }
  }
}

TEST_CASE("dyn: inertia matrix from unit accelerations") {
  const RobotModel& model = default_model();
  std::mt19937 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const RobotState s = random_state(rng);
    const Matrix18 M = mass_matrix(model, s);
    CHECK((M - M.transpose()).lpNorm<Eigen::Infinity>() < 1e-10);
    CHECK(Eigen::SelfAdjointEigenSolver<Matrix18>(M).eigenvalues().minCoeff() > 0.0);
    CHECK((M.topLeftCorner<3, 3>() - 90.0 * Eigen::Matrix3d::Identity()).norm() < 1e-12);
    const Vector18 a = random_vector18(rng);
    const Vector18 h = inverse_dynamics_bias(model, s, Vector6d::Zero(), Vector12::Zero());
    const Vector18 b = inverse_dynamics_bias(model, s, a.head<6>(), a.tail<12>());
    CHECK((b - (M * a + h)).norm() < 1e-8 * (1.0 + b.norm()));
  }
}

TEST_CASE("dyn: bias forces match momentum and energy rates") {
  const RobotModel& model = default_model();
  std::mt19937 rng(10);
  const double h = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    const Moving mv{random_state(rng), random_vector18(rng)};
    const RobotState s = mv.at(0.0);
    const Vector18 b = inverse_dynamics_bias(model, s, mv.acc.head<6>(), mv.acc.tail<12>(), 0.0);
    const BodyVel plus = body_velocities(model, mv.at(h));
    const BodyVel minus = body_velocities(model, mv.at(-h));
    const Eigen::Vector3d o = s.base.position;
    const Eigen::Vector3d dP = (linear_momentum(plus) - linear_momentum(minus)) / (2 * h);
    const Eigen::Vector3d dL = (angular_momentum(plus, o) - angular_momentum(minus, o)) / (2 * h);
    const double dT = (kinetic_energy(plus) - kinetic_energy(minus)) / (2 * h);
    const double scale = 1.0 + b.lpNorm<Eigen::Infinity>();
    CHECK((dP - b.head<3>()).lpNorm<Eigen::Infinity>() < 1e-5 * scale);
    CHECK((dL - b.segment<3>(3)).lpNorm<Eigen::Infinity>() < 1e-5 * scale);
    CHECK(std::abs(dT - generalized_velocity(s).dot(b)) < 1e-5 * scale);
  }
}

TEST_CASE("dyn: contact Jacobian") {
  const RobotModel& model = default_model();
  std::mt19937 rng(12);
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    Moving mv{random_state(rng), Vector18::Zero()};
    const RobotState s = mv.at(0.0);
    const std::vector<Leg> stance{Leg::LF, Leg::RH, Leg::LH};
    const ContactJacobian J = contact_jacobian(model, s, stance);
    const Eigen::VectorXd v = J.base * generalized_velocity(s).head<6>() + J.joints * s.qd;
    for (std::size_t i = 0; i < stance.size(); ++i) {
      const Eigen::Vector3d fd =
          (foot_position(model, mv.at(h), stance[i]) - foot_position(model, mv.at(-h), stance[i])) / (2 * h);
      CHECK((fd - v.segment<3>(3 * i)).lpNorm<Eigen::Infinity>() < 1e-6);
      CHECK(J.base.block<3, 3>(3 * i, 0) == Eigen::Matrix3d::Identity());
    }
    CHECK(J.joints.middleCols<3>(3 * index(Leg::RF)).norm() == 0.0);
  }
}

TEST_CASE("dyn: whole-body torques") {
  const RobotModel& model = default_model();
  const std::vector<Leg> all(kAllLegs.begin(), kAllLegs.end());
  {
    const auto cmd = whole_body_torques(model, symmetric_rest(), Vector6d::Zero(), Vector12::Zero(), all, 0.0);
    CHECK(cmd.tau.norm() == 0.0);
    CHECK(cmd.lambda.norm() == 0.0);
  }
  {
    const auto cmd = whole_body_torques(model, symmetric_rest(), Vector6d::Zero(), Vector12::Zero(), all);
    const double mg = model.total_mass() * kGravity;
    double sum = 0.0;
    for (int i = 0; i < 4; ++i) {
      sum += cmd.lambda(3 * i + 2);
      CHECK(std::abs(cmd.lambda(3 * i + 2) - mg / 4.0) < 1e-6);
      CHECK(cmd.lambda.segment<2>(3 * i).norm() < 1e-6);
    }
    CHECK(std::abs(sum - mg) < 1e-6);
  }

  std::mt19937 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const RobotState s = random_state(rng);
    const Vector18 a = random_vector18(rng);
    std::vector<Leg> stance = all;
    if (trial % 2) stance.erase(stance.begin() + trial % 4);
    const auto cmd = whole_body_torques(model, s, a.head<6>(), a.tail<12>(), stance);
    const ContactJacobian J = contact_jacobian(model, s, stance);
    const Matrix18 M = mass_matrix(model, s);
    const Vector18 hh = inverse_dynamics_bias(model, s, Vector6d::Zero(), Vector12::Zero());
    Eigen::MatrixXd Jc(J.base.rows(), kDofs);
    Jc << J.base, J.joints;
    Vector18 Stau = Vector18::Zero();
    Stau.tail<12>() = cmd.tau;
    const Vector18 res = M * a + hh - Stau - Jc.transpose() * cmd.lambda;
    const double bnorm = cmd.bias.lpNorm<Eigen::Infinity>();
    CHECK(res.tail<12>().lpNorm<Eigen::Infinity>() < 1e-8 * (1.0 + bnorm));
    const double least = testsupport::least_squares_base_residual(J.base, cmd.bias.head<6>());
    CHECK(std::abs(res.head<6>().norm() - least) < 1e-8 * (1.0 + bnorm));
    CHECK(std::abs(cmd.base_residual - least) < 1e-8 * (1.0 + bnorm));
    CHECK(!cmd.rank_warning);
  }
  const auto single = whole_body_torques(model, symmetric_rest(), Vector6d::Zero(), Vector12::Zero(), {Leg::LF});
  CHECK(single.rank_warning);
  CHECK(single.tau.allFinite());
}

TEST_CASE("dyn: joint feedback") {
  Gains g;
  Vector12 z = Vector12::Zero();
  CHECK(joint_feedback(z, z, z, z, g) == z);
  Vector12 qd = z;
  qd(3) = 0.1;
  CHECK(joint_feedback(qd, z, z, z, g)(3) == doctest::Approx(5.0));
  qd(3) = 10.0;
  CHECK(joint_feedback(qd, z, z, z, g)(3) == 150.0);
  CHECK(joint_feedback(z, qd, z, z, g)(3) == -150.0);
}

TEST_CASE("dyn: leg inverse kinematics") {
  const RobotModel& model = default_model();
  RobotState s = symmetric_rest();
  const Kinematics kin = forward_kinematics(model, s.base.position, s.base.rotation, s.q);
  for (Leg l : kAllLegs) {
    const Eigen::Vector3d target = foot_position(model, kin, l) + Eigen::Vector3d(0.05, -0.03, 0.04);
    const Eigen::Vector3d q = leg_ik(model, s.base.position, s.base.rotation, l, target, s.q.segment<3>(3 * index(l)));
    Vector12 full = s.q;
    full.segment<3>(3 * index(l)) = q;
    CHECK((foot_position(model, forward_kinematics(model, s.base.position, s.base.rotation, full), l) - target).norm() <
          1e-9);
  }
  CHECK_THROWS_AS(leg_ik(model, s.base.position, s.base.rotation, Leg::LF, {5, 0, 0}, s.q.head<3>()), Error);
}
