#include "quadloco/terrain.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "quadloco/error.hpp"

namespace quadloco::terrain {

namespace {

Error terrain_error(const std::string& what) { return Error(Stage::kTerrain, what); }

}  // namespace

bool CellRect::contains(const CellRect& r) const {
  return r.empty() || (r.x0 >= x0 && r.y0 >= y0 && r.x1 <= x1 && r.y1 <= y1);
}

bool CellRect::intersects(const CellRect& r) const { return !intersected(r).empty(); }

CellRect CellRect::united(const CellRect& r) const {
  if (empty()) return r;
  if (r.empty()) return *this;
  return {std::min(x0, r.x0), std::min(y0, r.y0), std::max(x1, r.x1), std::max(y1, r.y1)};
}

CellRect CellRect::intersected(const CellRect& r) const {
  CellRect out{std::max(x0, r.x0), std::max(y0, r.y0), std::min(x1, r.x1), std::min(y1, r.y1)};
  if (out.empty()) return {};
  return out;
}

void GridGeometry::validate() const {
  if (nx <= 0 || ny <= 0) throw terrain_error("grid dimensions must be positive");
  if (!(resolution_xy > 0.0) || !(resolution_z > 0.0)) throw terrain_error("grid resolutions must be positive");
  if (!origin.allFinite()) throw terrain_error("grid origin must be finite");
}

Eigen::Vector2d GridGeometry::cell_center(const CellIndex& c) const {
  return origin + resolution_xy * Eigen::Vector2d(c.ix + 0.5, c.iy + 0.5);
}

std::optional<CellIndex> GridGeometry::cell_at(const Eigen::Vector2d& world) const {
  const Eigen::Vector2d local = (world - origin) / resolution_xy;
  if (!local.allFinite()) return std::nullopt;
  const CellIndex c{static_cast<int>(std::floor(local.x())), static_cast<int>(std::floor(local.y()))};
  if (!in_bounds(c)) return std::nullopt;
  return c;
}

CellRect GridGeometry::rect_covering_disc(const Eigen::Vector2d& center, double radius) const {
  const Eigen::Vector2d lo = (center - origin).array() / resolution_xy - radius / resolution_xy;
  const Eigen::Vector2d hi = (center - origin).array() / resolution_xy + radius / resolution_xy;
  CellRect r{static_cast<int>(std::floor(lo.x())), static_cast<int>(std::floor(lo.y())),
             static_cast<int>(std::floor(hi.x())) + 1, static_cast<int>(std::floor(hi.y())) + 1};
  return r.intersected(bounds());
}

std::vector<CellIndex> GridGeometry::cells_in_disc(const Eigen::Vector2d& center, double radius) const {
  std::vector<CellIndex> out;
  const CellRect r = rect_covering_disc(center, radius);
  const double r2 = radius * radius;
  for (int iy = r.y0; iy < r.y1; ++iy) {
    for (int ix = r.x0; ix < r.x1; ++ix) {
      const CellIndex c{ix, iy};
      if ((cell_center(c) - center).squaredNorm() <= r2) out.push_back(c);
    }
  }
  return out;
}

double quantize(double z, double resolution) {
  const double ratio = z / resolution;
  const double base = std::trunc(ratio);
  const double frac = std::abs(ratio - base);
  double steps;
  if (std::abs(frac - 0.5) < 1e-9) {
    steps = base + std::copysign(1.0, ratio);
  } else {
    steps = std::round(ratio);
  }
  return steps * resolution;
}

HeightGrid::HeightGrid(const GridGeometry& geometry) : geometry_(geometry) {
  geometry_.validate();
  cells_.assign(static_cast<std::size_t>(geometry_.nx) * geometry_.ny, 0.0);
  dirty_ = geometry_.bounds();
}

std::optional<double> HeightGrid::height_at(const Eigen::Vector2d& world) const {
  const auto c = geometry_.cell_at(world);
  if (!c) return std::nullopt;
  return at(*c);
}

void HeightGrid::set(const CellIndex& c, double elevation) {
  if (!geometry_.in_bounds(c)) throw terrain_error("cell out of bounds");
  if (!std::isfinite(elevation)) throw terrain_error("non-finite elevation");
  cells_[index(c.ix, c.iy)] = quantize(elevation, geometry_.resolution_z);
}

void HeightGrid::mark_dirty(const CellRect& rect) {
  if (!geometry_.bounds().contains(rect)) throw terrain_error("dirty region outside grid");
  if (rect.empty()) return;
  dirty_ = dirty_ ? dirty_->united(rect) : rect;
}

HeightGrid ingest_heightmap(const Eigen::MatrixXd& table, const GridGeometry& geometry) {
  geometry.validate();
  if (table.rows() != geometry.ny || table.cols() != geometry.nx) {
    std::ostringstream msg;
    msg << "elevation table is " << table.cols() << "x" << table.rows() << ", geometry expects " << geometry.nx
        << "x" << geometry.ny;
    throw terrain_error(msg.str());
  }
  if (!table.allFinite()) throw terrain_error("elevation table contains non-finite values");
  HeightGrid grid(geometry);
  for (int iy = 0; iy < geometry.ny; ++iy) {
    for (int ix = 0; ix < geometry.nx; ++ix) grid.set({ix, iy}, table(iy, ix));
  }
  grid.mark_dirty(geometry.bounds());
  return grid;
}

TerrainFeatures compute_features(const HeightGrid& grid, const CellIndex& cell, int window) {
  const auto& geo = grid.geometry();
  const double h = geo.resolution_xy;
  const CellRect win = CellRect{cell.ix - window, cell.iy - window, cell.ix + window + 1, cell.iy + window + 1}
                           .intersected(geo.bounds());

  // Void cells are skipped.
  const double zc = grid.at(cell);
  double count = 0.0, mean = 0.0, mx = 0.0, my = 0.0;
  for (int iy = win.y0; iy < win.y1; ++iy) {
    for (int ix = win.x0; ix < win.x1; ++ix) {
      if (grid.is_void({ix, iy})) continue;
      count += 1.0;
      mean += grid.at(ix, iy) - zc;
      mx += (ix - cell.ix) * h;
      my += (iy - cell.iy) * h;
    }
  }
  if (count == 0.0) return {};
  mean /= count;
  mx /= count;
  my /= count;

  double var = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0, sxz = 0.0, syz = 0.0;
  for (int iy = win.y0; iy < win.y1; ++iy) {
    for (int ix = win.x0; ix < win.x1; ++ix) {
      if (grid.is_void({ix, iy})) continue;
      const double dz = (grid.at(ix, iy) - zc) - mean;
      const double dx = (ix - cell.ix) * h - mx;
      const double dy = (iy - cell.iy) * h - my;
      var += dz * dz;
      sxx += dx * dx;
      sxy += dx * dy;
      syy += dy * dy;
      sxz += dx * dz;
      syz += dy * dz;
    }
  }

  TerrainFeatures f;
  f.height_stddev = std::sqrt(var / count);

  Eigen::Matrix2d normal;
  normal << sxx, sxy, sxy, syy;
  const Eigen::Vector2d rhs(sxz, syz);
  Eigen::Vector2d grad = Eigen::Vector2d::Zero();
  if (rhs.squaredNorm() > 0.0) {
    const double det = sxx * syy - sxy * sxy;
    if (det > 1e-18) {
      grad << (syy * sxz - sxy * syz) / det, (sxx * syz - sxy * sxz) / det;
    } else {
      grad = normal.completeOrthogonalDecomposition().solve(rhs);
    }
  }
  f.slope = std::atan(grad.norm());

  // 5-point Laplacian with replicated borders.
  auto z = [&](int ix, int iy) {
    ix = std::clamp(ix, 0, geo.nx - 1);
    iy = std::clamp(iy, 0, geo.ny - 1);
    return grid.is_void({ix, iy}) ? zc : grid.at(ix, iy);
  };
  const double lap = (z(cell.ix + 1, cell.iy) - zc) + (z(cell.ix - 1, cell.iy) - zc) +
                     (z(cell.ix, cell.iy + 1) - zc) + (z(cell.ix, cell.iy - 1) - zc);
  f.curvature = std::abs(lap) / (h * h);
  return f;
}

CostMap::CostMap(const GridGeometry& geometry, const FeatureWeights& weights)
    : geometry_(geometry), weights_(weights) {
  geometry_.validate();
  if (weights.stddev < 0.0 || weights.slope < 0.0 || weights.curvature < 0.0) {
    throw terrain_error("feature weights must be non-negative");
  }
  const std::size_t n = static_cast<std::size_t>(geometry_.nx) * geometry_.ny;
  costs_.assign(n, 0.0);
  void_.assign(n, 0);
}

CostMap CostMap::from_costs(const GridGeometry& geometry, const Eigen::MatrixXd& costs) {
  if (costs.rows() != geometry.ny || costs.cols() != geometry.nx) throw terrain_error("cost table size mismatch");
  CostMap map(geometry, FeatureWeights{});
  for (int iy = 0; iy < geometry.ny; ++iy) {
    for (int ix = 0; ix < geometry.nx; ++ix) {
      const double c = costs(iy, ix);
      if (std::isinf(c) && c > 0.0) {
        map.set({ix, iy}, 0.0, true);
      } else {
        map.set({ix, iy}, c, false);
      }
    }
  }
  return map;
}

double CostMap::cost(const CellIndex& c) const {
  const std::size_t i = index(c);
  return void_[i] ? std::numeric_limits<double>::infinity() : costs_[i];
}

std::optional<double> CostMap::cost_at(const Eigen::Vector2d& world) const {
  const auto c = geometry_.cell_at(world);
  if (!c) return std::nullopt;
  return cost(*c);
}

double CostMap::min_cost() const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < costs_.size(); ++i) {
    if (!void_[i]) best = std::min(best, costs_[i]);
  }
  return std::isfinite(best) ? best : 0.0;
}

void CostMap::set(const CellIndex& c, double cost, bool is_void) {
  if (!geometry_.in_bounds(c)) throw terrain_error("cost cell out of bounds");
  if (!std::isfinite(cost) || cost < 0.0) throw terrain_error("stored costs must be finite and non-negative");
  costs_[index(c)] = cost;
  void_[index(c)] = is_void ? 1 : 0;
}

bool operator==(const CostMap& a, const CostMap& b) {
  return a.geometry_ == b.geometry_ && a.weights_ == b.weights_ && a.costs_ == b.costs_ && a.void_ == b.void_;
}

CostMap compute_cost_map(const HeightGrid& grid, const FeatureWeights& weights, const CellRect& region,
                         const CostMap* prior, int window) {
  if (region.empty()) throw terrain_error("cost map region is empty");
  if (!grid.geometry().bounds().contains(region)) throw terrain_error("cost map region outside grid");
  if (window < 1) throw terrain_error("feature window must be at least 1");
  if (prior && !(prior->geometry() == grid.geometry())) throw terrain_error("prior cost map geometry mismatch");

  if (prior && !(prior->weights() == weights)) throw terrain_error("prior cost map uses different weights");

  CostMap out = prior ? *prior : CostMap(grid.geometry(), weights);
  for (int iy = region.y0; iy < region.y1; ++iy) {
    for (int ix = region.x0; ix < region.x1; ++ix) {
      const CellIndex c{ix, iy};
      if (grid.is_void(c)) {
        out.set(c, 0.0, true);
      } else {
        out.set(c, weights.apply(compute_features(grid, c, window)), false);
      }
    }
  }
  return out;
}

CellRect affected_region(const CellRect& dirty, int window, const GridGeometry& geometry) {
  return dirty.dilated(window).intersected(geometry.bounds());
}

CellRect region_around(const GridGeometry& geometry, const Eigen::Vector2d& center, double forward,
                       double lateral) {
  const double h = geometry.resolution_xy;
  const Eigen::Vector2d lo = (center - geometry.origin) / h - Eigen::Vector2d(forward, lateral) / (2.0 * h);
  const Eigen::Vector2d hi = (center - geometry.origin) / h + Eigen::Vector2d(forward, lateral) / (2.0 * h);
  const CellRect r{static_cast<int>(std::floor(lo.x())), static_cast<int>(std::floor(lo.y())),
                   static_cast<int>(std::ceil(hi.x())), static_cast<int>(std::ceil(hi.y()))};
  return r.intersected(geometry.bounds());
}

ChangeEvent apply_patch(HeightGrid& grid, const Eigen::MatrixXd& patch, const CellIndex& at) {
  const CellRect rect{at.ix, at.iy, at.ix + static_cast<int>(patch.cols()), at.iy + static_cast<int>(patch.rows())};
  if (rect.empty()) throw terrain_error("empty patch");
  if (!grid.geometry().bounds().contains(rect)) throw terrain_error("patch does not fit inside the grid");
  if (!patch.allFinite()) throw terrain_error("patch contains non-finite elevations");
  for (int r = 0; r < patch.rows(); ++r) {
    for (int c = 0; c < patch.cols(); ++c) grid.set({at.ix + c, at.iy + r}, patch(r, c));
  }
  grid.mark_dirty(rect);
  return {rect};
}

double swing_clearance_violation(const HeightGrid& grid, const Eigen::Vector3d& from, const Eigen::Vector3d& to,
                                 double clearance) {
  const Eigen::Vector2d a = from.head<2>();
  const Eigen::Vector2d b = to.head<2>();
  const double len = (b - a).norm();
  const int samples = std::max(1, static_cast<int>(std::ceil(len / (0.5 * grid.geometry().resolution_xy))));
  double worst = 0.0;
  for (int k = 0; k <= samples; ++k) {
    const double t = static_cast<double>(k) / samples;
    const auto h = grid.height_at(a + t * (b - a));
    if (!h || is_void_elevation(*h)) continue;
    worst = std::max(worst, *h - (from.z() + t * (to.z() - from.z()) + clearance));
  }
  return worst;
}

TerrainServer::TerrainServer(HeightGrid grid, const FeatureWeights& weights, int window)
    : weights_(weights), window_(window) {
  auto costs = compute_cost_map(grid, weights, grid.geometry().bounds(), nullptr, window);
  grid.clear_dirty();
  current_.grid = std::make_shared<const HeightGrid>(std::move(grid));
  current_.costs = std::make_shared<const CostMap>(std::move(costs));
}

TerrainSnapshot TerrainServer::snapshot() const {
  std::lock_guard lock(mutex_);
  return current_;
}

ChangeEvent TerrainServer::apply_patch(const Eigen::MatrixXd& patch, const CellIndex& at) {
  std::lock_guard lock(mutex_);
  HeightGrid grid = *current_.grid;
  const ChangeEvent event = terrain::apply_patch(grid, patch, at);
  const CellRect region = affected_region(*grid.dirty_region(), window_, grid.geometry());
  auto costs = compute_cost_map(grid, weights_, region, current_.costs.get(), window_);
  grid.clear_dirty();
  current_ = {std::make_shared<const HeightGrid>(std::move(grid)), std::make_shared<const CostMap>(std::move(costs))};
  return event;
}

}  // namespace quadloco::terrain
