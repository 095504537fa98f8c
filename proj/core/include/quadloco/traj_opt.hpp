#pragma once

#include <Eigen/Core>

#include <iosfwd>
#include <optional>
#include <vector>

#include "quadloco/footstep_planner.hpp"
#include "quadloco/geometry.hpp"
#include "quadloco/legs.hpp"
#include "quadloco/qp.hpp"

namespace quadloco::traj {

inline constexpr double kGravity = 9.81;

enum class PhaseKind { kTriple, kQuad };
enum class Mode { kZmp, kStatic };
enum class Timing { kFastest, kNominal };

const char* to_string(PhaseKind kind);
const char* to_string(Mode mode);
Mode mode_from_string(const std::string& name);
const char* to_string(Timing timing);
Timing timing_from_string(const std::string& name);

struct SupportPhase {
  PhaseKind kind = PhaseKind::kQuad;
  /// Foot positions at the start of the phase; a swing leg keeps its lift-off position.
  footstep::Stance feet;
  std::optional<Leg> swing;
  /// Step index swung during a triple phase, or the step that follows a quad phase (-1 at the end).
  int step = -1;
  /// Lead-in and lead-out quad phases added around every plan.
  bool boundary = false;
  double duration = 0.0;
  std::vector<Eigen::Vector2d> polygon;  // ccw support vertices
  std::vector<geometry::Line> lines;     // shrunk by the margin

  std::vector<Leg> stance_legs() const;
};

/// Body height, roll, pitch and yaw as smooth (C2) interpolation between phase boundaries.
struct BodyProfile {
  std::vector<double> knots;
  /// Per knot: mean foot height, roll, pitch, yaw.
  std::vector<Eigen::Vector4d> values;
  double height = 0.5;

  struct Sample {
    double support = 0.0;
    double z = 0.0;
    double zd = 0.0;
    double zdd = 0.0;
    Eigen::Vector3d rpy = Eigen::Vector3d::Zero();
    Eigen::Vector3d rpy_d = Eigen::Vector3d::Zero();
    Eigen::Vector3d rpy_dd = Eigen::Vector3d::Zero();
  };
  Sample at(double t) const;
};

struct PhasePlan {
  std::vector<SupportPhase> phases;
  BodyProfile profile;

  double total_duration() const;
  std::vector<double> start_times() const;
  int quad_phase_count() const;  // excludes boundary phases
  /// Copy with every four-leg support duration multiplied by `s`; swing phases keep their length.
  PhasePlan scaled(double s) const;
  /// Phases [first, last) with the profile re-timed to start at zero.
  PhasePlan slice(std::size_t first, std::size_t last) const;
};

struct TrajConfig {
  double margin = 0.06;
  double swing_T = 0.8;
  double quad_T = 0.3;
  double boundary_T = 0.5;
  double dt = 0.05;
  double w_x = 1.0;
  double w_y = 1.5;
  double body_height = 0.5;
  Mode mode = Mode::kZmp;
  Timing timing = Timing::kFastest;
  double scale_min = 0.3;
  double scale_max = 6.0;
  double scale_tolerance = 1e-3;
  /// Swing phases per receding window; each window commits its first half. Zero optimizes the whole plan at once.
  int window = 0;

  void validate() const;
};

/// Inward half-planes of a ccw convex polygon moved in by `d`; throws when nothing remains.
std::vector<geometry::Line> shrink_polygon(const std::vector<Eigen::Vector2d>& ccw, double d);

/// True when the two line systems share no point.
bool disjoint(const std::vector<geometry::Line>& a, const std::vector<geometry::Line>& b);

PhasePlan build_phases(const footstep::FootholdPlan& plan, const TrajConfig& config);

struct BoundaryState {
  Eigen::Vector2d pos = Eigen::Vector2d::Zero();
  Eigen::Vector2d vel = Eigen::Vector2d::Zero();
  Eigen::Vector2d acc = Eigen::Vector2d::Zero();
};

struct RowInfo {
  int phase = 0;
  double tau = 0.0;
  int line = 0;
  bool cog = false;
};

struct AssembledQp {
  qp::Problem problem;
  std::vector<RowInfo> rows;
};

AssembledQp assemble_qp(const PhasePlan& phases, const BoundaryState& start, const BoundaryState& goal, double dt,
                        double w_x, double w_y, Mode mode = Mode::kZmp, bool pin_goal = true);

/// Quintic basis rows for position, velocity and acceleration at local time tau.
Eigen::Matrix<double, 6, 1> basis(double tau, int derivative);

struct CoGTrajectory {
  using Coeffs = Eigen::Matrix<double, 12, 1>;
  std::vector<Coeffs> segments;
  std::vector<double> starts;
  std::vector<double> durations;

  double duration() const;
  int segment_at(double t) const;
  Eigen::Vector2d position(double t) const;
  Eigen::Vector2d velocity(double t) const;
  Eigen::Vector2d acceleration(double t) const;
  Eigen::Vector2d eval(double t, int derivative) const;
  double max_junction_residual() const;
};

/// Solves and re-packs the QP; throws when post-validation fails.
CoGTrajectory solve_cog_trajectory(const AssembledQp& problem, const PhasePlan& phases, Mode mode = Mode::kZmp,
                                   qp::Solution* solution = nullptr);

Eigen::Vector2d zmp_of(const CoGTrajectory& traj, const BodyProfile& profile, double t);

/// Smallest constraint value over every sample time and polygon line.
double min_slack(const CoGTrajectory& traj, const PhasePlan& phases, double dt, Mode mode = Mode::kZmp);

struct OptimizationResult {
  PhasePlan phases;
  CoGTrajectory trajectory;
  double scale = 1.0;
  double objective = 0.0;
  double min_slack = 0.0;
  double max_junction_residual = 0.0;
  int qp_solves = 0;
};

/// Builds phases, picks the duration scale and optimizes the CoG path, windowed when `config.window` > 0.
OptimizationResult optimize(const footstep::FootholdPlan& plan, const TrajConfig& config, const BoundaryState& start,
                            const std::optional<BoundaryState>& goal = std::nullopt);

/// Keeps the part of `previous` before step `kept_steps` and optimizes the rest of `plan` from there.
/// The first `kept_steps` steps of `plan` must match the ones `previous` was built from.
OptimizationResult reoptimize(const OptimizationResult& previous, const footstep::FootholdPlan& plan,
                              std::size_t kept_steps, const TrajConfig& config,
                              const std::optional<BoundaryState>& goal = std::nullopt);

/// Optimizes with fixed phases (durations used as given); without a goal the final state is free.
OptimizationResult optimize_phases(const PhasePlan& phases, const TrajConfig& config, const BoundaryState& start,
                                   const std::optional<BoundaryState>& goal);

void write_trajectory_table(std::ostream& os, const CoGTrajectory& traj, const PhasePlan& phases, double rate = 100.0);
void write_coefficients(std::ostream& os, const CoGTrajectory& traj);
CoGTrajectory read_coefficients(std::istream& is);

}  // namespace quadloco::traj
