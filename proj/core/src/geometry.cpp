#include "quadloco/geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "quadloco/error.hpp"

namespace quadloco {

const char* to_string(Stage stage) {
  switch (stage) {
    case Stage::kConfig: return "config";
    case Stage::kTerrain: return "terrain";
    case Stage::kBodyPlan: return "body_planner";
    case Stage::kFootstep: return "footstep_planner";
    case Stage::kQp: return "qp";
    case Stage::kDynamics: return "wbc_dynamics";
    case Stage::kSimulation: return "sim";
  }
  return "unknown";
}

}  // namespace quadloco

namespace quadloco::geometry {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double signed_area(std::span<const Vec2> polygon) {
  double area = 0.0;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i) {
    area += cross(polygon[i], polygon[(i + 1) % n]);
  }
  return 0.5 * area;
}

std::vector<Vec2> convex_hull(std::vector<Vec2> points) {
  std::sort(points.begin(), points.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  points.erase(std::unique(points.begin(), points.end()), points.end());
  if (points.size() < 3) return points;

  std::vector<Vec2> hull(2 * points.size());
  std::size_t k = 0;
  for (const auto& p : points) {
    while (k >= 2 && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = points.size() - 1, lower = k + 1; i-- > 0;) {
    const auto& p = points[i];
    while (k >= lower && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0.0) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);
  return hull;
}

std::vector<Vec2> make_ccw(std::vector<Vec2> polygon) {
  if (signed_area(polygon) < 0.0) std::reverse(polygon.begin(), polygon.end());
  return polygon;
}

std::vector<Line> edge_lines(std::span<const Vec2> ccw_polygon, double margin) {
  std::vector<Line> lines;
  const std::size_t n = ccw_polygon.size();
  lines.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = ccw_polygon[i];
    const Vec2& b = ccw_polygon[(i + 1) % n];
    const Vec2 edge = b - a;
    const double len = edge.norm();
    // Inward normal of a ccw edge points to the left.
    const Vec2 normal(-edge.y() / len, edge.x() / len);
    lines.push_back({normal.x(), normal.y(), -normal.dot(a) - margin});
  }
  return lines;
}

std::vector<Vec2> clip(std::span<const Vec2> polygon, const Line& line, double tolerance) {
  std::vector<Vec2> out;
  const std::size_t n = polygon.size();
  if (n == 0) return out;
  out.reserve(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& cur = polygon[i];
    const Vec2& nxt = polygon[(i + 1) % n];
    const double sc = line.eval(cur);
    const double sn = line.eval(nxt);
    const bool cur_in = sc >= -tolerance;
    const bool nxt_in = sn >= -tolerance;
    if (cur_in) out.push_back(cur);
    if (cur_in != nxt_in) {
      const double t = sc / (sc - sn);
      out.push_back(cur + t * (nxt - cur));
    }
  }
  return out;
}

std::vector<Vec2> intersect_half_planes(std::span<const Line> lines, double tolerance) {
  constexpr double kBox = 1e6;
  std::vector<Vec2> poly = {{-kBox, -kBox}, {kBox, -kBox}, {kBox, kBox}, {-kBox, kBox}};
  for (const auto& line : lines) {
    poly = clip(poly, line, tolerance);
    if (poly.empty()) break;
  }
  return poly;
}

double triangle_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * std::abs(cross(b - a, c - a));
}

double triangle_inradius(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double perimeter = (b - a).norm() + (c - b).norm() + (a - c).norm();
  if (perimeter <= 0.0) return 0.0;
  return 2.0 * triangle_area(a, b, c) / perimeter;
}

Vec2 centroid(std::span<const Vec2> points) {
  Vec2 sum = Vec2::Zero();
  for (const auto& p : points) sum += p;
  return points.empty() ? sum : Vec2(sum / static_cast<double>(points.size()));
}

Vec3 fit_plane(std::span<const Vec3> points) {
  if (points.empty()) return Vec3::Zero();
  Eigen::MatrixXd a(points.size(), 3);
  Eigen::VectorXd z(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    a.row(i) << points[i].x(), points[i].y(), 1.0;
    z(i) = points[i].z();
  }
  return a.completeOrthogonalDecomposition().solve(z);
}

Eigen::Vector2d roll_pitch(std::span<const Vec3> points, double yaw) {
  std::vector<Vec3> local;
  local.reserve(points.size());
  const Eigen::Matrix2d r = rot2(-yaw);
  Vec2 mean = Vec2::Zero();
  for (const auto& p : points) mean += p.head<2>();
  if (!points.empty()) mean /= static_cast<double>(points.size());
  for (const auto& p : points) {
    const Vec2 xy = r * (p.head<2>() - mean);
    local.emplace_back(xy.x(), xy.y(), p.z());
  }
  const Vec3 plane = fit_plane(local);
  // Body x-axis follows (1, 0, a): pitch = -atan(a); y-axis follows (0, 1, b): roll = atan(b).
  return {std::atan(plane.y()), -std::atan(plane.x())};
}

double roll_pitch_magnitude(std::span<const Vec3> points, double yaw) {
  const Eigen::Vector2d rp = roll_pitch(points, yaw);
  return std::abs(rp.x()) + std::abs(rp.y());
}

double wrap_angle(double angle) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double a = std::fmod(angle + std::numbers::pi, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  return a - std::numbers::pi;
}

Eigen::Matrix2d rot2(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

}  // namespace quadloco::geometry
