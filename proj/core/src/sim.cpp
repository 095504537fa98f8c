#include "quadloco/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "quadloco/error.hpp"
#include "quadloco/leg_kinematics.hpp"
#include "quadloco/spatial.hpp"

namespace quadloco::sim {

namespace {

using nlohmann::json;

Error sim_error(const std::string& what) { return Error(Stage::kSimulation, what); }

constexpr double kFdStep = 1e-3;

template <class Writer>
void write_file(const std::filesystem::path& path, Writer&& writer) {
  std::ofstream out(path);
  if (!out) throw sim_error("cannot write '" + path.string() + "'");
  writer(out);
}

footstep::FootholdPlan plan_all_footsteps(const body::ActionPlan& actions, const terrain::TerrainSnapshot& map,
                                          const footstep::FootstepConfig& cfg, const footstep::Cursor& from) {
  return footstep::plan_footsteps(actions, map, cfg, from, std::numeric_limits<int>::max());
}

void dump(const PlanBundle& b, const SimConfig& cfg) {
  if (!cfg.artifact_dir.empty()) export_plan(cfg.artifact_dir, b, cfg);
}

PlanBundle footholds_on_map(const Scenario& sc, const terrain::TerrainSnapshot& map, const SimConfig& cfg) {
  PlanBundle b;
  b.scenario = sc;
  b.map = map;
  dump(b, cfg);

  const body::SearchResult search = body::ara_star(sc.start, sc.goal, map, cfg.body);
  if (!search.found()) {
    std::ostringstream msg;
    msg << "no body plan from (" << sc.start.x << ", " << sc.start.y << ") to (" << sc.goal.x << ", " << sc.goal.y
        << ") after " << search.total_expansions << " expansions; closest approach " << search.closest_distance
        << " m";
    throw Error(Stage::kBodyPlan, msg.str());
  }
  b.actions = search.best();
  dump(b, cfg);

  b.footholds = plan_all_footsteps(b.actions, map, cfg.footstep, footstep::initial_cursor(b.actions, map, cfg.footstep));
  dump(b, cfg);
  return b;
}

PlanBundle plan_on_map(const Scenario& sc, const terrain::TerrainSnapshot& map, const SimConfig& cfg) {
  PlanBundle b = footholds_on_map(sc, map, cfg);
  b.trajectory = traj::optimize(b.footholds, cfg.traj, initial_rest(b.footholds),
                                final_rest(b.actions, b.footholds, cfg.traj));
  dump(b, cfg);
  return b;
}

Eigen::Vector3d swing_point(const Eigen::Vector3d& from, const Eigen::Vector3d& to, double u, double height) {
  u = std::clamp(u, 0.0, 1.0);
  const double u2 = u * u;
  const double s = u2 * u * (10.0 - 15.0 * u + 6.0 * u2);
  Eigen::Vector3d p = from + s * (to - from);
  p.z() += 16.0 * height * u2 * (1.0 - u) * (1.0 - u);
  return p;
}

// Kinematic reference along the optimized plan.
class Reference {
 public:
  Reference(const PlanBundle& plan, const SimConfig& cfg)
      : plan_(plan), phases_(plan.trajectory.phases), traj_(plan.trajectory.trajectory), cfg_(cfg),
        starts_(phases_.start_times()) {
    if (traj_.segments.size() != phases_.phases.size()) throw sim_error("trajectory does not match its phases");
  }

  int phase_at(double t) const { return traj_.segment_at(t); }

  std::vector<Leg> stance(double t) const { return phases_.phases[phase_at(t)].stance_legs(); }

  footstep::Stance feet(double t) const {
    const int i = phase_at(t);
    const traj::SupportPhase& ph = phases_.phases[i];
    footstep::Stance f = ph.feet;
    if (ph.kind == traj::PhaseKind::kTriple) {
      const Leg leg = *ph.swing;
      const Eigen::Vector3d& to = plan_.footholds.steps.at(static_cast<std::size_t>(ph.step)).position;
      f[index(leg)] = swing_point(ph.feet[index(leg)], to, (t - starts_[i]) / ph.duration, cfg_.swing_height);
    }
    return f;
  }

  dyn::BodyPose pose(double t) const {
    const auto s = phases_.profile.at(t);
    dyn::BodyPose p;
    p.x_cog << traj_.position(t), s.z;
    p.R = spatial::rpy_to_matrix(s.rpy);
    p.v << traj_.velocity(t), s.zd;
    p.omega = spatial::rpy_rates_to_omega(s.rpy, s.rpy_d);
    return p;
  }

  dyn::Vector6d acceleration(double t) const {
    const auto s = phases_.profile.at(t);
    dyn::Vector6d a;
    a << traj_.acceleration(t), s.zdd, spatial::rpy_accel_to_omega_dot(s.rpy, s.rpy_d, s.rpy_dd);
    return a;
  }

  double duration() const { return traj_.duration(); }

 private:
  const PlanBundle& plan_;
  const traj::PhasePlan& phases_;
  const traj::CoGTrajectory& traj_;
  const SimConfig& cfg_;
  std::vector<double> starts_;
};

struct Configuration {
  Eigen::Vector3d base = Eigen::Vector3d::Zero();
  dyn::Vector12 q = dyn::Vector12::Zero();
};

// Base position and joint angles that put the CoG at `cog` with the feet at `feet`.
Configuration solve_configuration(const dyn::RobotModel& model, const Eigen::Vector3d& cog, const Eigen::Matrix3d& R,
                                  const footstep::Stance& feet, const Configuration& guess) {
  Configuration c = guess;
  for (int it = 0; it < 50; ++it) {
    for (Leg leg : kAllLegs) {
      const int k = 3 * index(leg);
      c.q.segment<3>(k) = dyn::leg_ik(model, c.base, R, leg, feet[index(leg)], c.q.segment<3>(k));
    }
    const dyn::Kinematics kin = dyn::forward_kinematics(model, c.base, R, c.q);
    const Eigen::Vector3d e = cog - dyn::center_of_mass(model, kin);
    c.base += e;
    if (e.norm() < 1e-12) return c;
  }
  return c;
}

// Positions at t - h, t, t + h for central differences.
struct Stencil {
  Configuration minus, mid, plus;
};

json step_to_json(const StepRecord& s) {
  return json{{"index", s.index},
              {"leg", to_string(s.leg)},
              {"position", {s.position.x(), s.position.y(), s.position.z()}},
              {"action", s.action},
              {"lift_off", s.lift_off},
              {"touch_down", s.touch_down},
              {"terrain_cost", s.terrain_cost}};
}

}  // namespace

traj::BoundaryState initial_rest(const footstep::FootholdPlan& steps) {
  traj::BoundaryState b;
  for (const auto& p : steps.initial_stance) b.pos += p.head<2>() / 4.0;
  return b;
}

traj::BoundaryState final_rest(const body::ActionPlan& actions, const footstep::FootholdPlan& steps,
                               const traj::TrajConfig& cfg) {
  const footstep::Stance last = steps.stance_after(steps.steps.size());
  traj::BoundaryState b;
  for (const auto& p : last) b.pos += p.head<2>() / 4.0;
  if (actions.states.empty()) return b;
  std::vector<Eigen::Vector2d> pts;
  for (const auto& p : last) pts.push_back(p.head<2>());
  const Eigen::Vector2d goal = actions.states.back().xy();
  try {
    const auto lines = traj::shrink_polygon(geometry::convex_hull(pts), cfg.margin);
    if (std::all_of(lines.begin(), lines.end(), [&](const geometry::Line& l) { return l.eval(goal) >= 0.0; })) {
      b.pos = goal;
    }
  } catch (const Error&) {
  }
  return b;
}

void NoiseModel::validate() const {
  if (!(bias >= 0.0) || bias > 0.02 + 1e-12) throw sim_error("noise bias must lie in [0, 0.02] m");
  if (!(jitter >= 0.0) || !(velocity_jitter >= 0.0)) throw sim_error("noise jitter must be non-negative");
}

SimConfig::SimConfig() { traj.window = 8; }

void SimConfig::validate() const {
  if (!(feature_weights.stddev >= 0.0) || !(feature_weights.slope >= 0.0) || !(feature_weights.curvature >= 0.0)) {
    throw Error(Stage::kConfig, "feature weights must be non-negative");
  }
  if (feature_window < 1) throw Error(Stage::kConfig, "feature window must be at least one cell");
  body.validate();
  footstep.validate();
  traj.validate();
  gains.validate();
  if (!(rate > 0.0)) throw Error(Stage::kConfig, "controller rate must be positive");
  if (!(goal_tolerance > 0.0)) throw Error(Stage::kConfig, "goal tolerance must be positive");
  if (!(swing_height >= 0.0)) throw Error(Stage::kConfig, "swing height must be non-negative");
}

PlanBundle plan_footholds(const Scenario& scenario, const SimConfig& cfg) {
  scenario.validate();
  cfg.validate();
  terrain::TerrainServer server(generate_scenario(scenario), cfg.feature_weights, cfg.feature_window);
  return footholds_on_map(scenario, server.snapshot(), cfg);
}

PlanBundle plan_scenario(const Scenario& scenario, const SimConfig& cfg) {
  scenario.validate();
  cfg.validate();
  terrain::TerrainServer server(generate_scenario(scenario), cfg.feature_weights, cfg.feature_window);
  return plan_on_map(scenario, server.snapshot(), cfg);
}

RunResult execute(const PlanBundle& plan, const SimConfig& cfg, const std::optional<NoiseModel>& noise) {
  cfg.validate();
  if (noise) noise->validate();
  const dyn::RobotModel& model = dyn::default_model();
  const Reference ref(plan, cfg);

  RunResult out;
  out.plan = plan;
  RunReport& rep = out.report;
  rep.scenario = plan.scenario.name;
  rep.mode = traj::to_string(cfg.traj.mode);
  rep.noise = noise.has_value();
  rep.seed = noise ? noise->seed : 0;
  rep.replans = plan.replans;
  rep.min_zmp_slack = plan.trajectory.min_slack;
  rep.max_junction_residual = plan.trajectory.max_junction_residual;
  rep.quad_phase_count = plan.trajectory.phases.quad_phase_count();
  rep.duration = ref.duration();
  rep.goal_distance = (plan.scenario.goal.xy() - plan.scenario.start.xy()).norm();
  rep.traversal_speed = rep.duration > 0.0 ? rep.goal_distance / rep.duration : 0.0;

  const auto starts = plan.trajectory.phases.start_times();
  for (std::size_t i = 0; i < plan.trajectory.phases.phases.size(); ++i) {
    const auto& ph = plan.trajectory.phases.phases[i];
    if (ph.kind != traj::PhaseKind::kTriple) continue;
    const auto& f = plan.footholds.steps.at(static_cast<std::size_t>(ph.step));
    StepRecord s;
    s.index = ph.step;
    s.leg = f.leg;
    s.position = f.position;
    s.action = f.action;
    s.lift_off = starts[i];
    s.touch_down = starts[i] + ph.duration;
    const auto cell = plan.map.geometry().cell_at(f.position.head<2>());
    s.terrain_cost = cell ? plan.map.costs->cost(*cell) : std::numeric_limits<double>::infinity();
    rep.footholds.push_back(s);
  }

  std::mt19937_64 rng(noise ? noise->seed : 0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::Vector3d bias = Eigen::Vector3d::Zero();
  if (noise) {
    const double a = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
    bias << noise->bias * std::cos(a), noise->bias * std::sin(a), 0.0;
  }

  const double T = ref.duration();
  const int n = static_cast<int>(std::floor(T * cfg.rate + 1e-9));
  const double h = kFdStep;
  Configuration warm;
  {
    const dyn::BodyPose p0 = ref.pose(0.0);
    const dyn::Kinematics kin = dyn::forward_kinematics(model, Eigen::Vector3d::Zero(), p0.R, dyn::nominal_joint_angles());
    warm.base = p0.x_cog - dyn::center_of_mass(model, kin);
    warm.q = dyn::nominal_joint_angles();
  }
  const auto config_at = [&](double t, const Configuration& guess) {
    const dyn::BodyPose p = ref.pose(t);
    return solve_configuration(model, p.x_cog, p.R, ref.feet(t), guess);
  };

  out.ticks.reserve(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) {
    const double t = std::min(T, k / cfg.rate);
    Stencil st;
    st.mid = config_at(t, warm);
    st.minus = config_at(t - h, st.mid);
    st.plus = config_at(t + h, st.mid);
    warm = st.mid;

    Tick tick;
    tick.t = t;
    tick.phase = ref.phase_at(t);
    tick.stance = ref.stance(t);
    tick.desired = ref.pose(t);
    tick.planned_acc = ref.acceleration(t);

    dyn::RobotState des;
    des.base.position = st.mid.base;
    des.base.rotation = tick.desired.R;
    des.base.velocity = (st.plus.base - st.minus.base) / (2.0 * h);
    des.base.omega = tick.desired.omega;
    des.q = st.mid.q;
    des.qd = (st.plus.q - st.minus.q) / (2.0 * h);
    const dyn::Vector12 qdd = (st.plus.q - 2.0 * st.mid.q + st.minus.q) / (h * h);

    tick.actual = tick.desired;
    tick.state = des;
    if (noise) {
      const Eigen::Vector3d dp =
          bias + noise->jitter * Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng));
      const Eigen::Vector3d dv = noise->velocity_jitter * Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng));
      tick.actual.x_cog += dp;
      tick.actual.v += dv;
      const Configuration meas =
          solve_configuration(model, tick.actual.x_cog, tick.desired.R, ref.feet(t), st.mid);
      tick.state.base.position = meas.base;
      tick.state.base.velocity += dv;
      tick.state.q = meas.q;
    }

    tick.wrench = dyn::virtual_model_wrench(tick.desired, tick.actual, cfg.gains);
    const dyn::Kinematics kin =
        dyn::forward_kinematics(model, tick.state.base.position, tick.state.base.rotation, tick.state.q);
    tick.reference_acc = dyn::reference_acceleration(tick.planned_acc, tick.wrench, model, kin);
    const dyn::Vector6d base_acc = dyn::base_acceleration_for_cog(model, tick.state, tick.reference_acc, qdd);
    const dyn::WholeBodyCommand cmd = dyn::whole_body_torques(model, tick.state, base_acc, qdd, tick.stance);
    tick.tau_ff = cmd.tau;
    tick.tau_fb = dyn::joint_feedback(des.q, tick.state.q, des.qd, tick.state.qd, cfg.gains);
    tick.base_residual = cmd.base_residual;

    rep.max_torque = std::max(rep.max_torque, (tick.tau_ff + tick.tau_fb).cwiseAbs().maxCoeff());
    rep.max_vm_wrench = std::max(rep.max_vm_wrench, tick.wrench.cwiseAbs().maxCoeff());
    rep.max_base_residual = std::max(rep.max_base_residual, tick.base_residual);
    out.ticks.push_back(std::move(tick));
  }
  rep.ticks = static_cast<int>(out.ticks.size());

  const Eigen::Vector2d final_cog = plan.trajectory.trajectory.position(T);
  rep.goal_error = (final_cog - plan.scenario.goal.xy()).norm();
  std::vector<std::string> problems;
  if (rep.min_zmp_slack < -1e-8) problems.push_back("ZMP leaves the support polygon");
  if (!(rep.max_junction_residual < 1e-9)) problems.push_back("trajectory is not continuous at a junction");
  if (rep.goal_error > cfg.goal_tolerance) {
    std::ostringstream msg;
    msg << "goal missed by " << rep.goal_error << " m";
    problems.push_back(msg.str());
  }
  for (const auto& s : rep.footholds) {
    if (!std::isfinite(s.terrain_cost)) {
      problems.push_back("step " + std::to_string(s.index) + " lands on a void cell");
      break;
    }
  }
  rep.success = problems.empty();
  for (std::size_t i = 0; i < problems.size(); ++i) rep.failure += (i ? "; " : "") + problems[i];
  return out;
}

RunResult run_pipeline(const Scenario& scenario, const SimConfig& cfg, const std::optional<NoiseModel>& noise) {
  const PlanBundle plan = plan_scenario(scenario, cfg);
  RunResult r = execute(plan, cfg, noise);
  if (!cfg.artifact_dir.empty()) export_run(cfg.artifact_dir, r, cfg);
  return r;
}

RunResult replay_event(const Scenario& scenario, const Patch& patch, std::size_t at_step, const SimConfig& cfg,
                       const std::optional<NoiseModel>& noise) {
  scenario.validate();
  cfg.validate();
  terrain::TerrainServer server(generate_scenario(scenario), cfg.feature_weights, cfg.feature_window);
  PlanBundle b = plan_on_map(scenario, server.snapshot(), cfg);

  const std::size_t executed = std::min(at_step, b.footholds.steps.size());
  const terrain::ChangeEvent ev = server.apply_patch(patch.heights, patch.at);
  const terrain::TerrainSnapshot map = server.snapshot();
  const auto& geo = map.geometry();
  const terrain::CellRect changed = terrain::affected_region(ev.region, cfg.feature_window, geo);

  const footstep::Cursor& cur = b.footholds.cursors.at(executed);
  const bool touched =
      cur.action < b.actions.actions.size() &&
      (body::plan_touches(b.actions, cur.action, changed, geo, cfg.body) ||
       footstep::steps_touch(b.footholds, executed, changed, b.actions, geo, cfg.footstep));
  b.map = map;
  if (touched) {
    const body::BodyState current = b.actions.states.at(cur.action);
    const body::SearchResult search = body::ara_star(current, scenario.goal, map, cfg.body);
    if (!search.found()) throw Error(Stage::kBodyPlan, "replanning after the terrain change found no body plan");
    const body::ActionPlan& fresh = search.best();

    footstep::Cursor from;
    from.stance = b.footholds.stance_after(executed);
    if (executed > 0) from.last_leg = b.footholds.steps[executed - 1].leg;
    from.next_step_index = static_cast<int>(executed);
    footstep::FootholdPlan tail = plan_all_footsteps(fresh, map, cfg.footstep, from);

    body::ActionPlan merged;
    const auto head = static_cast<std::ptrdiff_t>(cur.action);
    merged.actions.assign(b.actions.actions.begin(), b.actions.actions.begin() + head);
    merged.actions.insert(merged.actions.end(), fresh.actions.begin(), fresh.actions.end());
    merged.states.assign(b.actions.states.begin(), b.actions.states.begin() + head);
    merged.states.insert(merged.states.end(), fresh.states.begin(), fresh.states.end());
    merged.indices.assign(b.actions.indices.begin(), b.actions.indices.begin() + head);
    merged.indices.insert(merged.indices.end(), fresh.indices.begin(), fresh.indices.end());
    merged.total_cost = fresh.total_cost;
    for (std::size_t i = 0; i < cur.action; ++i) merged.total_cost += b.actions.actions[i].cost;
    merged.epsilon = fresh.epsilon;
    merged.expansions = fresh.expansions;

    footstep::FootholdPlan steps;
    steps.initial_stance = b.footholds.initial_stance;
    steps.horizon = b.footholds.horizon;
    const auto kept = static_cast<std::ptrdiff_t>(executed);
    steps.steps.assign(b.footholds.steps.begin(), b.footholds.steps.begin() + kept);
    steps.cursors.assign(b.footholds.cursors.begin(), b.footholds.cursors.begin() + kept);
    for (auto f : tail.steps) {
      f.action += cur.action;
      steps.steps.push_back(f);
    }
    for (auto c : tail.cursors) {
      c.action += cur.action;
      steps.cursors.push_back(c);
    }

    b.trajectory = traj::reoptimize(b.trajectory, steps, executed, cfg.traj, final_rest(merged, steps, cfg.traj));
    b.actions = std::move(merged);
    b.footholds = std::move(steps);
    b.replans = 1;
    dump(b, cfg);
  }

  RunResult r = execute(b, cfg, noise);
  if (!cfg.artifact_dir.empty()) export_run(cfg.artifact_dir, r, cfg);
  return r;
}

ModeComparison compare_modes(const Scenario& scenario, const SimConfig& cfg) {
  SimConfig zcfg = cfg;
  zcfg.traj.mode = traj::Mode::kZmp;
  const PlanBundle plan = plan_scenario(scenario, zcfg);
  ModeComparison out;
  out.footholds = plan.footholds;
  out.zmp = plan.trajectory;
  traj::TrajConfig scfg = cfg.traj;
  scfg.mode = traj::Mode::kStatic;
  out.stat = traj::optimize(plan.footholds, scfg, initial_rest(plan.footholds),
                            final_rest(plan.actions, plan.footholds, scfg));
  out.zmp_duration = out.zmp.phases.total_duration();
  out.static_duration = out.stat.phases.total_duration();
  return out;
}

void write_report_json(std::ostream& os, const RunReport& r) {
  json steps = json::array();
  for (const auto& s : r.footholds) steps.push_back(step_to_json(s));
  const json j{{"scenario", r.scenario},
               {"mode", r.mode},
               {"success", r.success},
               {"failure", r.failure},
               {"seed", r.seed},
               {"noise", r.noise},
               {"goal_distance", r.goal_distance},
               {"duration", r.duration},
               {"traversal_speed", r.traversal_speed},
               {"goal_error", r.goal_error},
               {"min_zmp_slack", r.min_zmp_slack},
               {"max_junction_residual", r.max_junction_residual},
               {"max_torque", r.max_torque},
               {"max_vm_wrench", r.max_vm_wrench},
               {"max_base_residual", r.max_base_residual},
               {"quad_phase_count", r.quad_phase_count},
               {"replans", r.replans},
               {"ticks", r.ticks},
               {"footholds", steps}};
  os << j.dump(2) << '\n';
}

RunReport read_report_json(std::istream& is) {
  RunReport r;
  try {
    const json j = json::parse(is);
    r.scenario = j.at("scenario").get<std::string>();
    r.mode = j.at("mode").get<std::string>();
    r.success = j.at("success").get<bool>();
    r.failure = j.at("failure").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.noise = j.at("noise").get<bool>();
    r.goal_distance = j.at("goal_distance").get<double>();
    r.duration = j.at("duration").get<double>();
    r.traversal_speed = j.at("traversal_speed").get<double>();
    r.goal_error = j.at("goal_error").get<double>();
    r.min_zmp_slack = j.at("min_zmp_slack").get<double>();
    r.max_junction_residual = j.at("max_junction_residual").get<double>();
    r.max_torque = j.at("max_torque").get<double>();
    r.max_vm_wrench = j.at("max_vm_wrench").get<double>();
    r.max_base_residual = j.at("max_base_residual").get<double>();
    r.quad_phase_count = j.at("quad_phase_count").get<int>();
    r.replans = j.at("replans").get<int>();
    r.ticks = j.at("ticks").get<int>();
    for (const auto& s : j.at("footholds")) {
      StepRecord st;
      st.index = s.at("index").get<int>();
      st.leg = leg_from_string(s.at("leg").get<std::string>());
      const auto& p = s.at("position");
      st.position << p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>();
      st.action = s.at("action").get<std::size_t>();
      st.lift_off = s.at("lift_off").get<double>();
      st.touch_down = s.at("touch_down").get<double>();
      st.terrain_cost = s.at("terrain_cost").is_null() ? std::numeric_limits<double>::infinity()
                                                       : s.at("terrain_cost").get<double>();
      r.footholds.push_back(st);
    }
  } catch (const json::exception& e) {
    throw sim_error(std::string("malformed report: ") + e.what());
  }
  return r;
}

void write_paths_csv(std::ostream& os, const traj::OptimizationResult& result, double rate) {
  const auto& tr = result.trajectory;
  const double T = tr.duration();
  const int n = static_cast<int>(std::floor(T * rate + 1e-9));
  os << "t,cog_x,cog_y,cog_z,zmp_x,zmp_y,phase\n";
  char buf[256];
  for (int k = 0; k <= n; ++k) {
    const double t = std::min(T, k / rate);
    const Eigen::Vector2d p = tr.position(t);
    const Eigen::Vector2d z = traj::zmp_of(tr, result.phases.profile, t);
    std::snprintf(buf, sizeof buf, "%.6f,%.9f,%.9f,%.9f,%.9f,%.9f,%d\n", t, p.x(), p.y(),
                  result.phases.profile.at(t).z, z.x(), z.y(), tr.segment_at(t));
    os << buf;
  }
}

void write_polygons_csv(std::ostream& os, const traj::PhasePlan& phases) {
  os << "phase,kind,swing,start,duration,vertex,x,y,shrunk\n";
  const auto starts = phases.start_times();
  char buf[256];
  for (std::size_t i = 0; i < phases.phases.size(); ++i) {
    const auto& ph = phases.phases[i];
    const auto emit = [&](const std::vector<Eigen::Vector2d>& pts, int shrunk) {
      for (std::size_t v = 0; v < pts.size(); ++v) {
        std::snprintf(buf, sizeof buf, "%zu,%s,%s,%.6f,%.6f,%zu,%.9f,%.9f,%d\n", i, traj::to_string(ph.kind),
                      ph.swing ? to_string(*ph.swing) : "-", starts[i], ph.duration, v, pts[v].x(), pts[v].y(),
                      shrunk);
        os << buf;
      }
    };
    emit(ph.polygon, 0);
    emit(geometry::intersect_half_planes(ph.lines), 1);
  }
}

void write_ticks_csv(std::ostream& os, const std::vector<Tick>& ticks) {
  os << "t,phase,stance,cog_x,cog_y,cog_z,act_x,act_y,act_z,fx,fy,fz,tx,ty,tz,max_tau,base_residual\n";
  char buf[512];
  for (const auto& k : ticks) {
    std::snprintf(buf, sizeof buf,
                  "%.6f,%d,%zu,%.9f,%.9f,%.9f,%.9f,%.9f,%.9f,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.3g\n", k.t,
                  k.phase, k.stance.size(), k.desired.x_cog.x(), k.desired.x_cog.y(), k.desired.x_cog.z(),
                  k.actual.x_cog.x(), k.actual.x_cog.y(), k.actual.x_cog.z(), k.wrench(0), k.wrench(1),
                  k.wrench(2), k.wrench(3), k.wrench(4), k.wrench(5), (k.tau_ff + k.tau_fb).cwiseAbs().maxCoeff(),
                  k.base_residual);
    os << buf;
  }
}

void export_plan(const std::filesystem::path& dir, const PlanBundle& plan, const SimConfig& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw sim_error("cannot create '" + dir.string() + "': " + ec.message());
  if (plan.map.grid) {
    write_file(dir / "terrain.txt", [&](std::ostream& os) { terrain::write_heightgrid(os, *plan.map.grid); });
    write_file(dir / "costmap.txt", [&](std::ostream& os) { terrain::write_costmap(os, *plan.map.costs); });
  }
  if (!plan.actions.states.empty()) {
    write_file(dir / "plan.txt", [&](std::ostream& os) { body::write_plan(os, plan.actions); });
  }
  if (!plan.footholds.cursors.empty()) {
    write_file(dir / "footholds.txt", [&](std::ostream& os) { footstep::write_footholds(os, plan.footholds); });
  }
  const auto& tr = plan.trajectory;
  if (!tr.trajectory.segments.empty()) {
    write_file(dir / "coefficients.txt", [&](std::ostream& os) { traj::write_coefficients(os, tr.trajectory); });
    write_file(dir / "trajectory.txt",
               [&](std::ostream& os) { traj::write_trajectory_table(os, tr.trajectory, tr.phases, cfg.rate); });
    write_file(dir / "paths.csv", [&](std::ostream& os) { write_paths_csv(os, tr, cfg.rate); });
    write_file(dir / "polygons.csv", [&](std::ostream& os) { write_polygons_csv(os, tr.phases); });
  }
}

void export_run(const std::filesystem::path& dir, const RunResult& run, const SimConfig& cfg) {
  export_plan(dir, run.plan, cfg);
  write_file(dir / "report.json", [&](std::ostream& os) { write_report_json(os, run.report); });
  write_file(dir / "ticks.csv", [&](std::ostream& os) { write_ticks_csv(os, run.ticks); });
}

std::vector<Summary> summarize(const std::vector<RunReport>& reports) {
  std::vector<Summary> rows;
  std::vector<double> speed_sum;
  std::vector<double> duration_sum;
  for (const auto& r : reports) {
    auto it = std::find_if(rows.begin(), rows.end(), [&](const Summary& s) { return s.scenario == r.scenario; });
    if (it == rows.end()) {
      Summary s;
      s.scenario = r.scenario;
      s.worst_slack = std::numeric_limits<double>::infinity();
      rows.push_back(s);
      speed_sum.push_back(0.0);
      duration_sum.push_back(0.0);
      it = rows.end() - 1;
    }
    const auto i = static_cast<std::size_t>(it - rows.begin());
    ++it->trials;
    if (r.success) {
      ++it->successes;
      speed_sum[i] += 100.0 * r.traversal_speed;
      duration_sum[i] += r.duration;
    }
    it->worst_slack = std::min(it->worst_slack, r.min_zmp_slack);
    it->max_torque = std::max(it->max_torque, r.max_torque);
    it->quad_phases = std::max(it->quad_phases, r.quad_phase_count);
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto& s = rows[i];
    s.success_rate = 100.0 * s.successes / s.trials;
    if (s.successes > 0) {
      s.mean_speed = speed_sum[i] / s.successes;
      s.mean_duration = duration_sum[i] / s.successes;
    }
  }
  return rows;
}

void write_summary(std::ostream& os, const std::vector<Summary>& rows) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-18s %6s %8s %12s %10s %12s %10s %6s\n", "scenario", "trials", "success%",
                "speed[cm/s]", "duration", "min_slack", "max_tau", "quads");
  os << buf;
  for (const auto& s : rows) {
    std::snprintf(buf, sizeof buf, "%-18s %6d %8.1f %12.2f %10.2f %12.3g %10.1f %6d\n", s.scenario.c_str(), s.trials,
                  s.success_rate, s.mean_speed, s.mean_duration, s.worst_slack, s.max_torque, s.quad_phases);
    os << buf;
  }
}

}  // namespace quadloco::sim
