#pragma once

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

#include "quadloco/body_planner.hpp"
#include "quadloco/terrain.hpp"

namespace quadloco::sim {

enum class TerrainKind { kFlat, kPallet, kTwoPallets, kGap, kSteppingStones, kFile };

const char* to_string(TerrainKind kind);

struct ScenarioParams {
  double pallet_height = 0.15;
  double pallet_length = 0.8;  // along x
  double pallet_width = 1.2;   // along y
  double gap_width = 0.35;
  double stone_drop = 0.08;
  double pallet_spacing = 1.2;
  double stone_size = 0.12;

  void validate() const;
};

struct Scenario {
  std::string name;
  TerrainKind kind = TerrainKind::kFlat;
  ScenarioParams params;
  terrain::GridGeometry geometry;
  body::BodyState start;
  body::BodyState goal;
  /// Heightgrid file for TerrainKind::kFile.
  std::string terrain_file;

  void validate() const;
};

std::vector<std::string> builtin_scenario_names();

/// Throws a simulation error for unknown names.
Scenario builtin_scenario(const std::string& name);

/// Deterministic terrain for the scenario.
terrain::HeightGrid generate_scenario(const Scenario& scenario);

/// A pallet of the scenario's dimensions as a patch and the cell of its first corner.
struct Patch {
  Eigen::MatrixXd heights;
  terrain::CellIndex at;
};
Patch pallet_patch(const Scenario& scenario, const Eigen::Vector2d& near_corner, double base_height = 0.0);

}  // namespace quadloco::sim
