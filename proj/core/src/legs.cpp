#include "quadloco/legs.hpp"

#include <cmath>

#include "quadloco/error.hpp"

namespace quadloco {

const char* to_string(Leg leg) {
  switch (leg) {
    case Leg::LF: return "LF";
    case Leg::RF: return "RF";
    case Leg::LH: return "LH";
    case Leg::RH: return "RH";
  }
  return "?";
}

Leg leg_from_string(const std::string& name) {
  for (Leg leg : kAllLegs) {
    if (name == to_string(leg)) return leg;
  }
  throw Error(Stage::kConfig, "unknown leg '" + name + "'");
}

Eigen::Vector2d StanceGeometry::foot(const Eigen::Vector2d& body, double yaw, Leg leg) const {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  const Eigen::Vector2d o = offset(leg);
  return body + Eigen::Vector2d(c * o.x() - s * o.y(), s * o.x() + c * o.y());
}

}  // namespace quadloco
