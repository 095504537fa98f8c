#pragma once

#include <Eigen/Core>

#include <array>
#include <string>

namespace quadloco {

enum class Leg { LF = 0, RF = 1, LH = 2, RH = 3 };

inline constexpr std::array<Leg, 4> kAllLegs{Leg::LF, Leg::RF, Leg::LH, Leg::RH};

inline int index(Leg leg) { return static_cast<int>(leg); }
const char* to_string(Leg leg);
/// Throws a config error for unknown names.
Leg leg_from_string(const std::string& name);

inline bool is_left(Leg leg) { return leg == Leg::LF || leg == Leg::LH; }
inline bool is_front(Leg leg) { return leg == Leg::LF || leg == Leg::RF; }
inline Leg diagonal_of(Leg leg) {
  switch (leg) {
    case Leg::LF: return Leg::RH;
    case Leg::RF: return Leg::LH;
    case Leg::LH: return Leg::RF;
    case Leg::RH: return Leg::LF;
  }
  return leg;
}
inline bool are_diagonal(Leg a, Leg b) { return diagonal_of(a) == b; }

/// Nominal foot offsets in the body frame.
struct StanceGeometry {
  double half_length = 0.37;
  double half_width = 0.34;

  Eigen::Vector2d offset(Leg leg) const {
    return {is_front(leg) ? half_length : -half_length, is_left(leg) ? half_width : -half_width};
  }
  Eigen::Vector2d foot(const Eigen::Vector2d& body, double yaw, Leg leg) const;
};

}  // namespace quadloco
