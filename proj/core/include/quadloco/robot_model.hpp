#pragma once

#include <Eigen/Core>

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "quadloco/legs.hpp"

namespace quadloco::dyn {

inline constexpr int kJoints = 12;
using Vector12 = Eigen::Matrix<double, kJoints, 1>;

struct Link {
  std::string name;
  /// Index into RobotModel::links, or -1 for the base.
  int parent = -1;
  double mass = 0.0;
  Eigen::Vector3d com = Eigen::Vector3d::Zero();
  /// Rotational inertia about the link CoM in link coordinates.
  Eigen::Matrix3d inertia = Eigen::Matrix3d::Zero();
  Eigen::Vector3d axis = Eigen::Vector3d::Zero();
  /// Joint position in the parent frame.
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
};

struct Foot {
  Leg leg = Leg::LF;
  int link = 0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
};

/// Floating base plus four three-joint legs. links[3 * leg + j] is joint j (HAA, HFE, KFE) of that leg.
struct RobotModel {
  Link base;
  std::vector<Link> links;
  std::array<Foot, 4> feet;

  double total_mass() const;
  void validate() const;

  static int joint_index(Leg leg, int j) { return 3 * index(leg) + j; }
};

/// Parses the fixture table; throws a dynamics error on malformed input.
RobotModel parse_model(std::istream& is);

/// The fixture compiled into the library.
const RobotModel& default_model();
const char* default_model_text();

/// Nominal joint angles: front knees bend backwards, hind knees forwards.
Vector12 nominal_joint_angles();

}  // namespace quadloco::dyn
