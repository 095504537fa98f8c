#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "quadloco/legs.hpp"
#include "quadloco/terrain.hpp"

namespace quadloco::body {

enum class ActionKind { kForward, kDiagonalLeft, kDiagonalRight, kLeft, kRight, kBack, kTurnLeft, kTurnRight };

const char* to_string(ActionKind kind);
ActionKind action_kind_from_string(const std::string& name);

struct BodyState {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Eigen::Vector2d xy() const { return {x, y}; }
};

struct LatticeIndex {
  int ix = 0;
  int iy = 0;
  int ih = 0;
  friend bool operator==(const LatticeIndex&, const LatticeIndex&) = default;
  friend auto operator<=>(const LatticeIndex&, const LatticeIndex&) = default;
};

struct LatticeBounds {
  int ix_min = 0;
  int ix_max = 0;
  int iy_min = 0;
  int iy_max = 0;
};

struct Lattice {
  double resolution = 0.04;
  int headings = 32;
  /// Optional inclusive index box restricting the search.
  std::optional<LatticeBounds> bounds;

  double dtheta() const;
  double heading(int ih) const;
  BodyState state(const LatticeIndex& s) const;
  /// Throws a body-plan error when the pose is not on the lattice.
  LatticeIndex index_of(const BodyState& s) const;
  bool allowed(const LatticeIndex& s) const;
  void validate() const;
};

struct PrimitiveSpec {
  ActionKind kind;
  double dx;  // body frame
  double dy;
  int dheading;
  double penalty;
};

std::vector<PrimitiveSpec> default_primitives();

struct Action {
  ActionKind kind = ActionKind::kForward;
  double dx = 0.0;  // world frame, lattice multiple
  double dy = 0.0;
  double dtheta = 0.0;
  int dix = 0;
  int diy = 0;
  int dih = 0;
  double cost = 0.0;
};

struct CostWeights {
  double terrain = 1.0;
  double action = 0.3;
  double collision = 1.0;
  double orientation = 0.5;
};

struct PlannerConfig {
  Lattice lattice;
  std::vector<PrimitiveSpec> primitives = default_primitives();
  CostWeights weights;
  StanceGeometry stance;
  int best_n = 3;
  double disc_radius = 0.10;
  double swing_clearance = 0.12;
  /// Stand-in terrain cost for void cells inside a foothold disc.
  double void_cost = 10.0;
  double eps0 = 3.0;
  double eps_step = 0.5;
  std::size_t budget = 50000;

  void validate() const;
  double max_translation() const;
  double goal_tolerance() const { return lattice.resolution; }
};

struct CostBreakdown {
  double terrain = 0.0;
  double action = 0.0;
  double collision = 0.0;
  double orientation = 0.0;
  double total = 0.0;
};

/// World-frame lattice displacement for a primitive executed at heading `ih`.
Action instantiate(const PrimitiveSpec& spec, int ih, const Lattice& lattice);

/// Applies `a` to `s` on the lattice.
LatticeIndex apply(const LatticeIndex& s, const Action& a, const Lattice& lattice);

/// Cost components of executing `spec` from `s`. Infinite total when a foothold leaves the map.
CostBreakdown action_cost(const LatticeIndex& s, const PrimitiveSpec& spec, const terrain::TerrainSnapshot& map,
                          const PlannerConfig& config);

/// Admissible remaining-cost estimate (zero inside the goal region).
double heuristic(const BodyState& s, const BodyState& goal, const terrain::CostMap& map, const PlannerConfig& config);

bool in_goal_region(const LatticeIndex& s, const LatticeIndex& goal, const Lattice& lattice);

struct ActionPlan {
  std::vector<Action> actions;
  std::vector<BodyState> states;
  std::vector<LatticeIndex> indices;
  double total_cost = 0.0;
  double epsilon = 1.0;
  /// Expansions spent in the search iteration that produced this plan.
  std::size_t expansions = 0;
};

struct SearchResult {
  std::vector<ActionPlan> plans;  // strictly decreasing cost
  std::size_t total_expansions = 0;
  bool budget_exhausted = false;
  /// Set when no plan exists: the expanded state closest to the goal.
  std::optional<BodyState> closest;
  double closest_distance = 0.0;

  bool found() const { return !plans.empty(); }
  /// Throws a body-plan error describing the failure when no plan was found.
  const ActionPlan& best() const;
};

using PlanCallback = std::function<void(const ActionPlan&)>;

/// Anytime Repairing A*. Emits each improved plan through `on_plan` as soon as it is proven.
SearchResult ara_star(const BodyState& start, const BodyState& goal, const terrain::TerrainSnapshot& map,
                      const PlannerConfig& config, const PlanCallback& on_plan = {});

/// Successor edges of `s` with finite cost, in primitive order.
std::vector<std::pair<LatticeIndex, Action>> successors(const LatticeIndex& s, const terrain::TerrainSnapshot& map,
                                                        const PlannerConfig& config);

/// Cells touched by the plan's footholds and swing corridors from step `from` on.
bool plan_touches(const ActionPlan& plan, std::size_t from, const terrain::CellRect& changed,
                  const terrain::GridGeometry& geometry, const PlannerConfig& config);

struct ReplanResult {
  SearchResult search;
  bool replanned = false;
};

/// Keeps `prev` when the change misses it; otherwise searches afresh from `current`.
ReplanResult replan(const ActionPlan& prev, const terrain::CellRect& changed, const BodyState& current,
                    const BodyState& goal, const terrain::TerrainSnapshot& map, const PlannerConfig& config);

void write_plan(std::ostream& os, const ActionPlan& plan);
/// Reads the `start` record and replays the `action` records from it.
ActionPlan read_plan(std::istream& is, const Lattice& lattice);

}  // namespace quadloco::body
