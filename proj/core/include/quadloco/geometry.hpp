#pragma once

#include <Eigen/Core>

#include <optional>
#include <span>
#include <vector>

namespace quadloco::geometry {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// Half-plane p*x + q*y + r >= 0 with (p, q) of unit length.
struct Line {
  double p = 0.0;
  double q = 0.0;
  double r = 0.0;

  double eval(const Vec2& pt) const { return p * pt.x() + q * pt.y() + r; }
};

double cross(const Vec2& a, const Vec2& b);

/// Signed area; positive for counter-clockwise vertex order.
double signed_area(std::span<const Vec2> polygon);

/// Counter-clockwise convex hull (Andrew's monotone chain). Collinear points are dropped.
std::vector<Vec2> convex_hull(std::vector<Vec2> points);

/// Returns the vertices reordered counter-clockwise.
std::vector<Vec2> make_ccw(std::vector<Vec2> polygon);

/// Inward half-planes of a ccw convex polygon, each moved inward by `margin`.
std::vector<Line> edge_lines(std::span<const Vec2> ccw_polygon, double margin);

/// Intersection of half-planes, clipped from a large box. Empty when infeasible.
std::vector<Vec2> intersect_half_planes(std::span<const Line> lines, double tolerance = 1e-12);

/// Sutherland-Hodgman clip of a convex polygon against one half-plane.
std::vector<Vec2> clip(std::span<const Vec2> polygon, const Line& line, double tolerance = 1e-12);

double triangle_inradius(const Vec2& a, const Vec2& b, const Vec2& c);
double triangle_area(const Vec2& a, const Vec2& b, const Vec2& c);

Vec2 centroid(std::span<const Vec2> points);

/// Least-squares plane z = a*x + b*y + c. Returns (a, b, c); minimum-norm for degenerate sets.
Vec3 fit_plane(std::span<const Vec3> points);

/// |roll| + |pitch| of the plane through `points`, measured in a frame rotated by `yaw`.
double roll_pitch_magnitude(std::span<const Vec3> points, double yaw);

/// Roll and pitch (radians) of the plane through `points` in a frame rotated by `yaw`.
Eigen::Vector2d roll_pitch(std::span<const Vec3> points, double yaw);

double wrap_angle(double angle);

Eigen::Matrix2d rot2(double angle);

}  // namespace quadloco::geometry
