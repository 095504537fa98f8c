#include "quadloco/scenario.hpp"

#include <cmath>
#include <fstream>

#include "quadloco/error.hpp"

namespace quadloco::sim {

namespace {

Error sim_error(const std::string& what) { return Error(Stage::kSimulation, what); }

terrain::GridGeometry default_geometry(double x_min, double x_max) {
  terrain::GridGeometry g;
  g.resolution_xy = 0.04;
  g.resolution_z = 0.02;
  g.origin = {x_min, -1.2};
  g.nx = static_cast<int>(std::lround((x_max - x_min) / g.resolution_xy));
  g.ny = static_cast<int>(std::lround(2.4 / g.resolution_xy));
  return g;
}

// Sets every cell whose center lies in [x0, x1) x [y0, y1).
void fill(Eigen::MatrixXd& z, const terrain::GridGeometry& g, double x0, double x1, double y0, double y1, double h) {
  for (int iy = 0; iy < g.ny; ++iy) {
    for (int ix = 0; ix < g.nx; ++ix) {
      const Eigen::Vector2d c = g.cell_center({ix, iy});
      if (c.x() >= x0 && c.x() < x1 && c.y() >= y0 && c.y() < y1) z(iy, ix) = h;
    }
  }
}

}  // namespace

const char* to_string(TerrainKind kind) {
  switch (kind) {
    case TerrainKind::kFlat: return "flat";
    case TerrainKind::kPallet: return "pallet";
    case TerrainKind::kTwoPallets: return "two_pallets";
    case TerrainKind::kGap: return "gap";
    case TerrainKind::kSteppingStones: return "stepping_stones";
    case TerrainKind::kFile: return "file";
  }
  return "unknown";
}

void ScenarioParams::validate() const {
  for (double v : {pallet_height, pallet_length, pallet_width, gap_width, stone_drop, pallet_spacing, stone_size}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw sim_error("scenario parameters must be positive");
  }
  if (stone_drop >= pallet_height) throw sim_error("stones must stay above the ground");
}

void Scenario::validate() const {
  params.validate();
  geometry.validate();
  if (kind == TerrainKind::kFile && terrain_file.empty()) throw sim_error("file scenario needs a terrain file");
  const auto on_grid = [&](const body::BodyState& s) {
    return geometry.cell_at(s.xy()).has_value();
  };
  if (kind != TerrainKind::kFile && (!on_grid(start) || !on_grid(goal))) {
    throw sim_error("scenario start and goal must lie on the terrain");
  }
}

std::vector<std::string> builtin_scenario_names() {
  return {"flat", "pallet", "two_pallets", "gap", "stepping_stones"};
}

Scenario builtin_scenario(const std::string& name) {
  Scenario s;
  s.name = name;
  s.start = {0.0, 0.0, 0.0};
  if (name == "flat") {
    s.kind = TerrainKind::kFlat;
    s.geometry = default_geometry(-1.0, 3.0);
    s.goal = {2.0, 0.0, 0.0};
  } else if (name == "pallet") {
    s.kind = TerrainKind::kPallet;
    s.geometry = default_geometry(-1.0, 3.4);
    s.goal = {2.4, 0.0, 0.0};
  } else if (name == "two_pallets") {
    s.kind = TerrainKind::kTwoPallets;
    s.geometry = default_geometry(-1.0, 3.4);
    s.goal = {1.8, 0.0, 0.0};
  } else if (name == "gap") {
    s.kind = TerrainKind::kGap;
    s.geometry = default_geometry(-1.0, 3.0);
    s.goal = {2.0, 0.0, 0.0};
  } else if (name == "stepping_stones") {
    s.kind = TerrainKind::kSteppingStones;
    s.geometry = default_geometry(-1.0, 3.6);
    s.goal = {2.4, 0.0, 0.0};
  } else {
    throw sim_error("unknown scenario '" + name + "'");
  }
  s.validate();
  return s;
}

terrain::HeightGrid generate_scenario(const Scenario& sc) {
  sc.validate();
  if (sc.kind == TerrainKind::kFile) {
    std::ifstream in(sc.terrain_file);
    if (!in) throw Error(Stage::kTerrain, "cannot open terrain file '" + sc.terrain_file + "'");
    return terrain::read_heightgrid(in);
  }
  const auto& g = sc.geometry;
  const auto& p = sc.params;
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(g.ny, g.nx);
  const double half_w = 0.5 * p.pallet_width;
  const double x_far = g.origin.x() + g.nx * g.resolution_xy;
  switch (sc.kind) {
    case TerrainKind::kFlat:
      break;
    case TerrainKind::kPallet:
      fill(z, g, 1.0, 1.0 + p.pallet_length, -half_w, half_w, p.pallet_height);
      break;
    case TerrainKind::kTwoPallets:
      // second pallet stacked on the rear half of the first: a two-step stair
      fill(z, g, 1.0, 1.0 + p.pallet_length, -half_w, half_w, p.pallet_height);
      fill(z, g, 1.0 + 0.5 * p.pallet_length, 1.0 + 1.5 * p.pallet_length, -half_w, half_w, 2.0 * p.pallet_height);
      break;
    case TerrainKind::kGap:
      fill(z, g, 1.0, 1.0 + p.gap_width, -1e9, 1e9, terrain::kVoidDepth);
      break;
    case TerrainKind::kSteppingStones: {
      // start pallet, void with stones, goal pallet
      const double gap0 = 0.6;
      const double gap1 = gap0 + p.pallet_spacing;
      fill(z, g, -1e9, gap0, -1e9, 1e9, p.pallet_height);
      fill(z, g, gap0, gap1, -1e9, 1e9, terrain::kVoidDepth);
      fill(z, g, gap1, x_far + 1.0, -1e9, 1e9, p.pallet_height);
      const double h = p.pallet_height - p.stone_drop;
      const double s = 0.5 * p.stone_size;
      const double left[] = {0.80, 1.12, 1.44};
      const double right[] = {0.70, 1.02, 1.34, 1.64};
      const double yl[] = {0.34, 0.30, 0.37};
      const double yr[] = {-0.33, -0.37, -0.31, -0.35};
      for (int i = 0; i < 3; ++i) {
        fill(z, g, left[i] - s, left[i] + s, yl[i] - s, yl[i] + s, h);
      }
      for (int i = 0; i < 4; ++i) {
        fill(z, g, right[i] - s, right[i] + s, yr[i] - s, yr[i] + s, h);
      }
      break;
    }
    case TerrainKind::kFile:
      break;
  }
  return terrain::ingest_heightmap(z, g);
}

Patch pallet_patch(const Scenario& sc, const Eigen::Vector2d& near_corner, double base_height) {
  const auto& g = sc.geometry;
  const auto cell = g.cell_at(near_corner);
  if (!cell) throw sim_error("pallet corner lies off the terrain");
  const int nx = static_cast<int>(std::lround(sc.params.pallet_length / g.resolution_xy));
  const int ny = static_cast<int>(std::lround(sc.params.pallet_width / g.resolution_xy));
  if (cell->ix + nx > g.nx || cell->iy + ny > g.ny) throw sim_error("pallet does not fit on the terrain");
  return {Eigen::MatrixXd::Constant(ny, nx, base_height + sc.params.pallet_height), *cell};
}

}  // namespace quadloco::sim
