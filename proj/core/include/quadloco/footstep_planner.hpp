#pragma once

#include <Eigen/Core>

#include <array>
#include <iosfwd>
#include <optional>
#include <vector>

#include "quadloco/body_planner.hpp"
#include "quadloco/legs.hpp"
#include "quadloco/terrain.hpp"

namespace quadloco::footstep {

using Stance = std::array<Eigen::Vector3d, 4>;

struct Foothold {
  Leg leg = Leg::LF;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  int step_index = 0;
  /// Index of the body action this step belongs to.
  std::size_t action = 0;
};

struct FootholdWeights {
  double terrain = 1.0;
  double stability = 1.0;
  double clearance = 1.0;
  double orientation = 0.5;
};

struct FootstepConfig {
  StanceGeometry stance;
  double disc_radius = 0.10;
  double d_ref = 0.08;
  double swing_clearance = 0.12;
  double reach = 0.45;
  double min_triangle_area = 1e-4;
  int horizon = 8;
  FootholdWeights weights;

  void validate() const;
};

/// Where incremental planning resumes: next action, legs still to move in it, and the current stance.
struct Cursor {
  std::size_t action = 0;
  std::vector<Leg> remaining;
  Stance stance;
  std::optional<Leg> last_leg;
  int next_step_index = 0;
};

struct FootholdPlan {
  std::vector<Foothold> steps;
  Stance initial_stance;
  int horizon = 0;
  /// cursors[k] is the planning state before step k; cursors.back() follows the last step.
  std::vector<Cursor> cursors;

  bool complete(const body::ActionPlan& plan) const;
  /// Stance after the first `k` steps.
  Stance stance_after(std::size_t k) const;
};

/// Swing order used for an action.
std::array<Leg, 4> swing_sequence_for(body::ActionKind kind);

struct FootholdCost {
  double terrain = 0.0;
  double stability = 0.0;
  double clearance = 0.0;
  double orientation = 0.0;
  double total = 0.0;
};

struct FootholdContext {
  Stance stance;
  /// Leg lifting after this one, if any.
  std::optional<Leg> next_swing;
  double yaw = 0.0;
};

FootholdCost foothold_cost(const Eigen::Vector2d& p, Leg leg, const FootholdContext& context,
                           const terrain::TerrainSnapshot& map, const FootstepConfig& config);

/// Nominal stance of a body pose with terrain heights.
Stance nominal_stance(const body::BodyState& s, const terrain::TerrainSnapshot& map, const FootstepConfig& config);

Cursor initial_cursor(const body::ActionPlan& plan, const terrain::TerrainSnapshot& map, const FootstepConfig& config);

/// Plans at most `horizon` steps starting from `from`.
FootholdPlan plan_footsteps(const body::ActionPlan& plan, const terrain::TerrainSnapshot& map,
                            const FootstepConfig& config, const Cursor& from, int horizon);
FootholdPlan plan_footsteps(const body::ActionPlan& plan, const terrain::TerrainSnapshot& map,
                            const FootstepConfig& config);

/// True when a step from `from` on searched or swung through `changed`.
bool steps_touch(const FootholdPlan& plan, std::size_t from, const terrain::CellRect& changed,
                 const body::ActionPlan& actions, const terrain::GridGeometry& geometry, const FootstepConfig& config);

/// Keeps the first `executed` steps and recomputes the rest against `map` when the change touches them.
FootholdPlan replan_footsteps(const FootholdPlan& prev, const terrain::CellRect& changed, std::size_t executed,
                              const body::ActionPlan& plan, const terrain::TerrainSnapshot& map,
                              const FootstepConfig& config);

void write_footholds(std::ostream& os, const FootholdPlan& plan);
FootholdPlan read_footholds(std::istream& is);

}  // namespace quadloco::footstep
