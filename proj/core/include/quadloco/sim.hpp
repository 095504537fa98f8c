#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "quadloco/body_planner.hpp"
#include "quadloco/footstep_planner.hpp"
#include "quadloco/robot_model.hpp"
#include "quadloco/scenario.hpp"
#include "quadloco/terrain.hpp"
#include "quadloco/traj_opt.hpp"
#include "quadloco/wbc_dynamics.hpp"

namespace quadloco::sim {

/// Tracking perturbation: a constant CoG offset of length `bias` in a random horizontal direction plus
/// white position and velocity jitter.
struct NoiseModel {
  double bias = 0.02;
  double jitter = 0.002;
  double velocity_jitter = 0.01;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SimConfig {
  terrain::FeatureWeights feature_weights;
  int feature_window = 2;
  body::PlannerConfig body;
  footstep::FootstepConfig footstep;
  traj::TrajConfig traj;
  dyn::Gains gains;
  double rate = 100.0;
  double goal_tolerance = 0.05;
  double swing_height = 0.10;
  /// When set, every artifact is written here as soon as it exists.
  std::string artifact_dir;

  SimConfig();
  void validate() const;
};

struct StepRecord {
  int index = 0;
  Leg leg = Leg::LF;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  std::size_t action = 0;
  double lift_off = 0.0;
  double touch_down = 0.0;
  double terrain_cost = 0.0;
};

struct RunReport {
  std::string scenario;
  std::string mode = "zmp";
  bool success = false;
  std::string failure;
  std::uint64_t seed = 0;
  bool noise = false;
  double goal_distance = 0.0;
  double duration = 0.0;
  double traversal_speed = 0.0;
  double goal_error = 0.0;
  double min_zmp_slack = 0.0;
  double max_junction_residual = 0.0;
  double max_torque = 0.0;
  double max_vm_wrench = 0.0;
  double max_base_residual = 0.0;
  int quad_phase_count = 0;
  int replans = 0;
  int ticks = 0;
  std::vector<StepRecord> footholds;
};

/// One controller tick of the kinematic replay.
struct Tick {
  double t = 0.0;
  int phase = 0;
  std::vector<Leg> stance;
  dyn::BodyPose desired;
  dyn::BodyPose actual;
  dyn::RobotState state;  // measured robot state used by the controller
  dyn::Vector6d wrench = dyn::Vector6d::Zero();
  dyn::Vector6d planned_acc = dyn::Vector6d::Zero();
  dyn::Vector6d reference_acc = dyn::Vector6d::Zero();
  dyn::Vector12 tau_ff = dyn::Vector12::Zero();
  dyn::Vector12 tau_fb = dyn::Vector12::Zero();
  double base_residual = 0.0;
};

/// Everything the planning stages produced for one scenario.
struct PlanBundle {
  Scenario scenario;
  terrain::TerrainSnapshot map;
  body::ActionPlan actions;
  footstep::FootholdPlan footholds;
  traj::OptimizationResult trajectory;
  int replans = 0;
};

struct RunResult {
  RunReport report;
  PlanBundle plan;
  std::vector<Tick> ticks;
};

/// CoG at rest over the centroid of the initial stance.
traj::BoundaryState initial_rest(const footstep::FootholdPlan& steps);
/// CoG at rest over the final body pose when the shrunk last stance contains it, else over the stance centroid.
traj::BoundaryState final_rest(const body::ActionPlan& actions, const footstep::FootholdPlan& steps,
                               const traj::TrajConfig& config);

/// Terrain, body plan and footholds; the trajectory is left empty.
PlanBundle plan_footholds(const Scenario& scenario, const SimConfig& config);

/// Terrain, body plan, footholds and trajectory for the scenario.
PlanBundle plan_scenario(const Scenario& scenario, const SimConfig& config);

/// Replays a plan at the controller rate and fills the report.
RunResult execute(const PlanBundle& plan, const SimConfig& config, const std::optional<NoiseModel>& noise = std::nullopt);

RunResult run_pipeline(const Scenario& scenario, const SimConfig& config,
                       const std::optional<NoiseModel>& noise = std::nullopt);

/// Plans, executes `at_step` steps, applies `patch`, replans when the change touches the remaining plan and finishes.
RunResult replay_event(const Scenario& scenario, const Patch& patch, std::size_t at_step, const SimConfig& config,
                       const std::optional<NoiseModel>& noise = std::nullopt);

struct ModeComparison {
  footstep::FootholdPlan footholds;
  traj::OptimizationResult zmp;
  traj::OptimizationResult stat;
  double zmp_duration = 0.0;
  double static_duration = 0.0;
};

/// Optimizes the same footholds with ZMP and with CoG-in-polygon constraints.
ModeComparison compare_modes(const Scenario& scenario, const SimConfig& config);

void write_report_json(std::ostream& os, const RunReport& report);
RunReport read_report_json(std::istream& is);

/// Columns t, cog_x, cog_y, cog_z, zmp_x, zmp_y, phase.
void write_paths_csv(std::ostream& os, const traj::OptimizationResult& result, double rate = 100.0);
/// One row per phase vertex: phase, kind, swing, start, duration, vertex, x, y, shrunk.
void write_polygons_csv(std::ostream& os, const traj::PhasePlan& phases);
void write_ticks_csv(std::ostream& os, const std::vector<Tick>& ticks);

/// Writes whatever the bundle holds into `dir`.
void export_plan(const std::filesystem::path& dir, const PlanBundle& plan, const SimConfig& config);
void export_run(const std::filesystem::path& dir, const RunResult& run, const SimConfig& config);

struct Summary {
  std::string scenario;
  int trials = 0;
  int successes = 0;
  double success_rate = 0.0;  // percent
  double mean_speed = 0.0;    // cm/s over successful trials
  double mean_duration = 0.0;
  double worst_slack = 0.0;
  double max_torque = 0.0;
  int quad_phases = 0;
};

/// Groups reports by scenario in first-seen order.
std::vector<Summary> summarize(const std::vector<RunReport>& reports);
void write_summary(std::ostream& os, const std::vector<Summary>& rows);

}  // namespace quadloco::sim
