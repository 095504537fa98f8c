#pragma once

#include <Eigen/Core>

#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

namespace quadloco::terrain {

struct CellIndex {
  int ix = 0;
  int iy = 0;
  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

/// Half-open rectangle of cells [x0, x1) x [y0, y1).
struct CellRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  bool empty() const { return x1 <= x0 || y1 <= y0; }
  int width() const { return empty() ? 0 : x1 - x0; }
  int height() const { return empty() ? 0 : y1 - y0; }
  bool contains(const CellIndex& c) const { return c.ix >= x0 && c.ix < x1 && c.iy >= y0 && c.iy < y1; }
  bool contains(const CellRect& r) const;
  bool intersects(const CellRect& r) const;
  CellRect united(const CellRect& r) const;
  CellRect intersected(const CellRect& r) const;
  CellRect dilated(int cells) const { return {x0 - cells, y0 - cells, x1 + cells, y1 + cells}; }

  friend bool operator==(const CellRect&, const CellRect&) = default;
};

struct GridGeometry {
  int nx = 0;
  int ny = 0;
  double resolution_xy = 0.04;
  double resolution_z = 0.02;
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();

  /// Throws terrain errors for non-positive sizes or resolutions.
  void validate() const;
  CellRect bounds() const { return {0, 0, nx, ny}; }
  bool in_bounds(const CellIndex& c) const { return bounds().contains(c); }
  Eigen::Vector2d cell_center(const CellIndex& c) const;
  /// Cell containing the world point, or nullopt when off the grid.
  std::optional<CellIndex> cell_at(const Eigen::Vector2d& world) const;
  /// Cells whose centers lie within `radius` of `center`, clipped to the grid, row-major order.
  std::vector<CellIndex> cells_in_disc(const Eigen::Vector2d& center, double radius) const;
  /// Bounding rectangle of the world-space disc, clipped to the grid.
  CellRect rect_covering_disc(const Eigen::Vector2d& center, double radius) const;

  friend bool operator==(const GridGeometry&, const GridGeometry&) = default;
};

/// Gap cells carry this elevation; their foothold cost is infinite.
inline constexpr double kVoidDepth = -1.0;
inline bool is_void_elevation(double z) { return z <= kVoidDepth + 1e-6; }

/// Nearest multiple of `resolution`, ties away from zero.
double quantize(double z, double resolution);

/// 2.5D elevation grid. Elevations are always multiples of resolution_z.
class HeightGrid {
 public:
  explicit HeightGrid(const GridGeometry& geometry);

  const GridGeometry& geometry() const { return geometry_; }
  int nx() const { return geometry_.nx; }
  int ny() const { return geometry_.ny; }

  double at(int ix, int iy) const { return cells_[index(ix, iy)]; }
  double at(const CellIndex& c) const { return at(c.ix, c.iy); }
  bool is_void(const CellIndex& c) const { return is_void_elevation(at(c)); }
  std::optional<double> height_at(const Eigen::Vector2d& world) const;

  /// Stores the quantized elevation. Does not touch the dirty region.
  void set(const CellIndex& c, double elevation);

  const std::optional<CellRect>& dirty_region() const { return dirty_; }
  void mark_dirty(const CellRect& rect);
  void clear_dirty() { dirty_.reset(); }

 private:
  std::size_t index(int ix, int iy) const { return static_cast<std::size_t>(iy) * geometry_.nx + ix; }

  GridGeometry geometry_;
  std::vector<double> cells_;
  std::optional<CellRect> dirty_;
};

/// Builds a grid from a table with ny rows of nx elevations (row 0 is iy = 0).
HeightGrid ingest_heightmap(const Eigen::MatrixXd& table, const GridGeometry& geometry);

struct TerrainFeatures {
  double height_stddev = 0.0;
  double slope = 0.0;
  double curvature = 0.0;
};

/// Window statistics around `cell`: population std, plane-fit slope, 5-point Laplacian magnitude.
TerrainFeatures compute_features(const HeightGrid& grid, const CellIndex& cell, int window);

struct FeatureWeights {
  double stddev = 1.0;
  double slope = 1.0;
  double curvature = 0.5;

  double apply(const TerrainFeatures& f) const {
    return stddev * f.height_stddev + slope * f.slope + curvature * f.curvature;
  }
  friend bool operator==(const FeatureWeights&, const FeatureWeights&) = default;
};

/// Per-cell foothold cost. Void cells report +inf from cost() while storing 0.
class CostMap {
 public:
  CostMap(const GridGeometry& geometry, const FeatureWeights& weights);

  /// Wraps an explicit table (ny rows x nx columns) of finite non-negative costs.
  static CostMap from_costs(const GridGeometry& geometry, const Eigen::MatrixXd& costs);

  const GridGeometry& geometry() const { return geometry_; }
  const FeatureWeights& weights() const { return weights_; }

  double cost(const CellIndex& c) const;
  double stored(const CellIndex& c) const { return costs_[index(c)]; }
  bool is_void(const CellIndex& c) const { return void_[index(c)] != 0; }
  /// Cost under a world point, nullopt off the grid.
  std::optional<double> cost_at(const Eigen::Vector2d& world) const;
  /// Smallest finite cost over the grid.
  double min_cost() const;

  void set(const CellIndex& c, double cost, bool is_void);

  friend bool operator==(const CostMap& a, const CostMap& b);

 private:
  std::size_t index(const CellIndex& c) const { return static_cast<std::size_t>(c.iy) * geometry_.nx + c.ix; }

  GridGeometry geometry_;
  FeatureWeights weights_;
  std::vector<double> costs_;
  std::vector<unsigned char> void_;
};

/// Recomputes costs inside `region`; every other cell keeps its value from `prior`
/// (or zero when no prior is given).
CostMap compute_cost_map(const HeightGrid& grid, const FeatureWeights& weights, const CellRect& region,
                         const CostMap* prior = nullptr, int window = 2);

/// Cells whose cost depends on any cell of `dirty` for the given feature window.
CellRect affected_region(const CellRect& dirty, int window, const GridGeometry& geometry);

/// Area recomputed around the robot: `forward` metres along x, `lateral` along y.
CellRect region_around(const GridGeometry& geometry, const Eigen::Vector2d& center, double forward = 5.0,
                       double lateral = 2.5);

struct ChangeEvent {
  CellRect region;
};

/// Writes `patch` (rows along y) with its first cell at `at`. Marks the union dirty region.
ChangeEvent apply_patch(HeightGrid& grid, const Eigen::MatrixXd& patch, const CellIndex& at);

/// Immutable view handed to planners.
struct TerrainSnapshot {
  std::shared_ptr<const HeightGrid> grid;
  std::shared_ptr<const CostMap> costs;

  const GridGeometry& geometry() const { return grid->geometry(); }
  std::optional<double> height_at(const Eigen::Vector2d& world) const { return grid->height_at(world); }
  std::optional<double> cost_at(const Eigen::Vector2d& world) const { return costs->cost_at(world); }
};

/// Holds the current grid and cost map. Writers publish whole new snapshots.
class TerrainServer {
 public:
  TerrainServer(HeightGrid grid, const FeatureWeights& weights, int window = 2);

  TerrainSnapshot snapshot() const;
  int window() const { return window_; }

  /// Applies a patch, locally recomputes affected costs and publishes a new snapshot.
  ChangeEvent apply_patch(const Eigen::MatrixXd& patch, const CellIndex& at);

 private:
  mutable std::mutex mutex_;
  FeatureWeights weights_;
  int window_;
  TerrainSnapshot current_;
};

/// Largest height by which terrain along the straight segment from `from` to `to` rises above
/// the linearly interpolated swing line lifted by `clearance`. Void and off-map samples are ignored.
double swing_clearance_violation(const HeightGrid& grid, const Eigen::Vector3d& from, const Eigen::Vector3d& to,
                                 double clearance);

// Plain-text formats.
void write_heightgrid(std::ostream& os, const HeightGrid& grid);
HeightGrid read_heightgrid(std::istream& is);
void write_costmap(std::ostream& os, const CostMap& costs);
CostMap read_costmap(std::istream& is);

}  // namespace quadloco::terrain
