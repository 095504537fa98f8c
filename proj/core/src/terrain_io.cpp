#include <cmath>
#include <iomanip>
#include <limits>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "quadloco/error.hpp"
#include "quadloco/terrain.hpp"

namespace quadloco::terrain {

namespace {

void write_header(std::ostream& os, const char* tag, const GridGeometry& g) {
  os << std::setprecision(17) << tag << ' ' << g.nx << ' ' << g.ny << ' ' << g.resolution_xy << ' '
     << g.resolution_z << ' ' << g.origin.x() << ' ' << g.origin.y() << '\n';
}

GridGeometry read_header(std::istream& is, const std::string& expected) {
  std::string tag;
  GridGeometry g;
  if (!(is >> tag) || tag != expected) throw Error(Stage::kTerrain, "expected '" + expected + "' header");
  if (!(is >> g.nx >> g.ny >> g.resolution_xy >> g.resolution_z >> g.origin.x() >> g.origin.y())) {
    throw Error(Stage::kTerrain, "malformed " + expected + " header");
  }
  g.validate();
  return g;
}

double read_value(std::istream& is, int ix, int iy) {
  std::string token;
  if (!(is >> token)) {
    throw Error(Stage::kTerrain, "missing value at cell (" + std::to_string(ix) + ", " + std::to_string(iy) + ")");
  }
  if (token == "inf") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    throw Error(Stage::kTerrain, "invalid number '" + token + "'");
  }
}

}  // namespace

void write_heightgrid(std::ostream& os, const HeightGrid& grid) {
  write_header(os, "heightgrid", grid.geometry());
  for (int iy = 0; iy < grid.ny(); ++iy) {
    for (int ix = 0; ix < grid.nx(); ++ix) os << (ix ? " " : "") << grid.at(ix, iy);
    os << '\n';
  }
}

HeightGrid read_heightgrid(std::istream& is) {
  const GridGeometry g = read_header(is, "heightgrid");
  Eigen::MatrixXd table(g.ny, g.nx);
  for (int iy = 0; iy < g.ny; ++iy) {
    for (int ix = 0; ix < g.nx; ++ix) table(iy, ix) = read_value(is, ix, iy);
  }
  return ingest_heightmap(table, g);
}

void write_costmap(std::ostream& os, const CostMap& costs) {
  const auto& g = costs.geometry();
  write_header(os, "costmap", g);
  for (int iy = 0; iy < g.ny; ++iy) {
    for (int ix = 0; ix < g.nx; ++ix) {
      os << (ix ? " " : "");
      if (costs.is_void({ix, iy})) {
        os << "inf";
      } else {
        os << costs.stored({ix, iy});
      }
    }
    os << '\n';
  }
}

CostMap read_costmap(std::istream& is) {
  const GridGeometry g = read_header(is, "costmap");
  Eigen::MatrixXd table(g.ny, g.nx);
  for (int iy = 0; iy < g.ny; ++iy) {
    for (int ix = 0; ix < g.nx; ++ix) table(iy, ix) = read_value(is, ix, iy);
  }
  return CostMap::from_costs(g, table);
}

}  // namespace quadloco::terrain
