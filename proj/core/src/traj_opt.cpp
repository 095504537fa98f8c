#include "quadloco/traj_opt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "quadloco/error.hpp"

namespace quadloco::traj {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Error traj_error(const std::string& what) { return Error(Stage::kQp, what); }

Eigen::Matrix<double, 6, 6> acceleration_gram(double T) {
  const double c[4] = {20.0, 12.0, 6.0, 2.0};
  const int pw[4] = {3, 2, 1, 0};
  Eigen::Matrix<double, 6, 6> G = Eigen::Matrix<double, 6, 6>::Zero();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const int e = pw[i] + pw[j] + 1;
      G(i, j) = c[i] * c[j] * std::pow(T, e) / e;
    }
  }
  return G;
}

std::vector<double> sample_times(double T, double dt) {
  std::vector<double> out;
  for (int k = 0;; ++k) {
    const double tau = k * dt;
    if (tau >= T - 1e-9) break;
    out.push_back(tau);
  }
  out.push_back(T);
  return out;
}

Eigen::Vector2d segment_eval(const CoGTrajectory::Coeffs& q, double tau, int d) {
  const auto b = basis(tau, d);
  return {b.dot(q.head<6>()), b.dot(q.tail<6>())};
}

double zmp_factor(const BodyProfile& profile, double t) {
  const auto s = profile.at(t);
  const double den = s.zdd + kGravity;
  if (den <= 1e-3) throw traj_error("vertical acceleration reaches free fall; ZMP undefined");
  return (s.z - s.support) / den;
}

Eigen::Vector2d segment_zmp(const CoGTrajectory& traj, int i, double tau, const BodyProfile& profile) {
  const double c = zmp_factor(profile, traj.starts[i] + tau);
  return segment_eval(traj.segments[i], tau, 0) - c * segment_eval(traj.segments[i], tau, 2);
}

Eigen::Vector4d stance_pose(const footstep::Stance& feet) {
  double support = 0.0;
  for (const auto& p : feet) support += p.z() / 4.0;
  const Eigen::Vector2d front = 0.5 * (feet[index(Leg::LF)] + feet[index(Leg::RF)]).head<2>();
  const Eigen::Vector2d hind = 0.5 * (feet[index(Leg::LH)] + feet[index(Leg::RH)]).head<2>();
  const double yaw = std::atan2(front.y() - hind.y(), front.x() - hind.x());
  const Eigen::Vector2d rp = geometry::roll_pitch(std::vector<Eigen::Vector3d>(feet.begin(), feet.end()), yaw);
  return {support, rp.x(), rp.y(), yaw};
}

BodyProfile build_profile(const std::vector<SupportPhase>& phases, const footstep::Stance& final_feet,
                          double height) {
  BodyProfile prof;
  prof.height = height;
  double t = 0.0;
  for (const auto& ph : phases) {
    prof.knots.push_back(t);
    prof.values.push_back(stance_pose(ph.feet));
    t += ph.duration;
  }
  prof.knots.push_back(t);
  prof.values.push_back(stance_pose(final_feet));
  for (std::size_t j = 1; j < prof.values.size(); ++j) {
    prof.values[j](3) = prof.values[j - 1](3) + geometry::wrap_angle(prof.values[j](3) - prof.values[j - 1](3));
  }
  return prof;
}

std::string phase_label(const PhasePlan& plan, int i) {
  std::ostringstream os;
  const SupportPhase& ph = plan.phases[i];
  os << "phase " << i << " (" << to_string(ph.kind);
  if (ph.boundary) os << ", boundary";
  if (ph.swing) os << ", swing " << to_string(*ph.swing);
  if (ph.step >= 0) os << ", step " << ph.step;
  os << ")";
  return os.str();
}

}  // namespace

const char* to_string(PhaseKind kind) { return kind == PhaseKind::kTriple ? "triple" : "quad"; }
const char* to_string(Mode mode) { return mode == Mode::kZmp ? "zmp" : "static"; }
Mode mode_from_string(const std::string& name) {
  if (name == "zmp") return Mode::kZmp;
  if (name == "static") return Mode::kStatic;
  throw Error(Stage::kConfig, "unknown mode '" + name + "' (expected zmp or static)");
}
const char* to_string(Timing timing) { return timing == Timing::kFastest ? "fastest" : "nominal"; }
Timing timing_from_string(const std::string& name) {
  if (name == "fastest") return Timing::kFastest;
  if (name == "nominal") return Timing::kNominal;
  throw Error(Stage::kConfig, "unknown timing '" + name + "' (expected fastest or nominal)");
}

std::vector<Leg> SupportPhase::stance_legs() const {
  std::vector<Leg> out;
  for (Leg l : kAllLegs) {
    if (!swing || *swing != l) out.push_back(l);
  }
  return out;
}

BodyProfile::Sample BodyProfile::at(double t) const {
  Sample s;
  if (knots.empty()) {
    s.z = height;
    return s;
  }
  Eigen::Vector4d v = values.front();
  Eigen::Vector4d vd = Eigen::Vector4d::Zero();
  Eigen::Vector4d vdd = Eigen::Vector4d::Zero();
  if (t >= knots.back()) {
    v = values.back();
  } else if (t > knots.front()) {
    const auto it = std::upper_bound(knots.begin(), knots.end(), t);
    const std::size_t j = static_cast<std::size_t>(it - knots.begin()) - 1;
    const double T = knots[j + 1] - knots[j];
    const double u = (t - knots[j]) / T;
    const double u2 = u * u;
    const double u3 = u2 * u;
    const double sm = u3 * (10.0 - 15.0 * u + 6.0 * u2);
    const double smd = 30.0 * u2 * (1.0 - 2.0 * u + u2);
    const double smdd = 60.0 * u * (1.0 - 3.0 * u + 2.0 * u2);
    const Eigen::Vector4d delta = values[j + 1] - values[j];
    v = values[j] + sm * delta;
    vd = delta * smd / T;
    vdd = delta * smdd / (T * T);
  }
  s.support = v(0);
  s.z = v(0) + height;
  s.zd = vd(0);
  s.zdd = vdd(0);
  s.rpy = v.tail<3>();
  s.rpy_d = vd.tail<3>();
  s.rpy_dd = vdd.tail<3>();
  return s;
}

double PhasePlan::total_duration() const {
  double t = 0.0;
  for (const auto& p : phases) t += p.duration;
  return t;
}

std::vector<double> PhasePlan::start_times() const {
  std::vector<double> out;
  double t = 0.0;
  for (const auto& p : phases) {
    out.push_back(t);
    t += p.duration;
  }
  return out;
}

int PhasePlan::quad_phase_count() const {
  return static_cast<int>(std::count_if(phases.begin(), phases.end(), [](const SupportPhase& p) {
    return p.kind == PhaseKind::kQuad && !p.boundary;
  }));
}

PhasePlan PhasePlan::scaled(double s) const {
  PhasePlan out = *this;
  double t = 0.0;
  for (std::size_t i = 0; i < out.phases.size(); ++i) {
    auto& p = out.phases[i];
    if (p.kind == PhaseKind::kQuad) p.duration *= s;
    out.profile.knots[i] = t;
    t += p.duration;
  }
  out.profile.knots.back() = t;
  return out;
}

void TrajConfig::validate() const {
  if (!(margin >= 0.0)) throw traj_error("stability margin must be non-negative");
  if (!(swing_T > 0.0) || !(quad_T > 0.0) || !(boundary_T > 0.0)) throw traj_error("phase durations must be positive");
  if (!(dt > 0.0)) throw traj_error("constraint sampling step must be positive");
  if (!(w_x > 0.0) || !(w_y > 0.0)) throw traj_error("cost weights must be positive");
  if (!(body_height > 0.0)) throw traj_error("body height must be positive");
  if (!(scale_min > 0.0) || !(scale_max >= scale_min)) throw traj_error("invalid duration scale range");
  if (!(scale_tolerance > 0.0)) throw traj_error("scale tolerance must be positive");
  if (window < 0) throw traj_error("receding window must be non-negative");
}

std::vector<geometry::Line> shrink_polygon(const std::vector<Eigen::Vector2d>& ccw, double d) {
  if (ccw.size() < 3) throw traj_error("support polygon needs at least three vertices");
  if (geometry::signed_area(ccw) <= 1e-12) throw traj_error("support polygon is degenerate or not counter-clockwise");
  if (d < 0.0) throw traj_error("shrink margin must be non-negative");
  auto lines = geometry::edge_lines(ccw, d);
  const auto region = geometry::intersect_half_planes(lines);
  if (region.size() < 3 || geometry::signed_area(region) <= 1e-12) {
    throw traj_error("support polygon is empty after shrinking");
  }
  return lines;
}

bool disjoint(const std::vector<geometry::Line>& a, const std::vector<geometry::Line>& b) {
  std::vector<geometry::Line> all = a;
  all.insert(all.end(), b.begin(), b.end());
  for (auto& l : all) l.r += 1e-9;
  return geometry::intersect_half_planes(all).empty();
}

PhasePlan build_phases(const footstep::FootholdPlan& plan, const TrajConfig& cfg) {
  cfg.validate();
  PhasePlan out;
  footstep::Stance s = plan.initial_stance;

  const auto make_quad = [&](int step, bool boundary, double duration) {
    SupportPhase ph;
    ph.kind = PhaseKind::kQuad;
    ph.feet = s;
    ph.step = step;
    ph.boundary = boundary;
    ph.duration = duration;
    std::vector<Eigen::Vector2d> pts;
    for (const auto& p : s) pts.push_back(p.head<2>());
    ph.polygon = geometry::convex_hull(pts);
    try {
      ph.lines = shrink_polygon(ph.polygon, cfg.margin);
    } catch (const Error& e) {
      throw traj_error(std::string("four-leg support before step ") + std::to_string(step) + ": " + e.what());
    }
    return ph;
  };
  const auto make_triple = [&](int step, Leg swing) {
    SupportPhase ph;
    ph.kind = PhaseKind::kTriple;
    ph.feet = s;
    ph.swing = swing;
    ph.step = step;
    ph.duration = cfg.swing_T;
    std::vector<Eigen::Vector2d> pts;
    for (Leg l : kAllLegs) {
      if (l != swing) pts.push_back(s[index(l)].head<2>());
    }
    ph.polygon = geometry::make_ccw(pts);
    try {
      ph.lines = shrink_polygon(ph.polygon, cfg.margin);
    } catch (const Error& e) {
      throw traj_error("support triangle of step " + std::to_string(step) + " (" + to_string(swing) +
                       " swinging): " + e.what());
    }
    return ph;
  };

  out.phases.push_back(make_quad(plan.steps.empty() ? -1 : 0, true, cfg.boundary_T));
  std::optional<SupportPhase> previous;
  for (std::size_t k = 0; k < plan.steps.size(); ++k) {
    const auto& f = plan.steps[k];
    SupportPhase tri = make_triple(static_cast<int>(k), f.leg);
    if (previous && are_diagonal(*previous->swing, f.leg) && disjoint(previous->lines, tri.lines)) {
      out.phases.push_back(make_quad(static_cast<int>(k), false, cfg.quad_T));
    }
    out.phases.push_back(tri);
    previous = tri;
    s[index(f.leg)] = f.position;
  }
  out.phases.push_back(make_quad(-1, true, cfg.boundary_T));
  out.profile = build_profile(out.phases, s, cfg.body_height);
  return out;
}

Eigen::Matrix<double, 6, 1> basis(double tau, int d) {
  const double t2 = tau * tau;
  const double t3 = t2 * tau;
  Eigen::Matrix<double, 6, 1> b;
  switch (d) {
    case 0: b << t3 * t2, t2 * t2, t3, t2, tau, 1.0; break;
    case 1: b << 5.0 * t2 * t2, 4.0 * t3, 3.0 * t2, 2.0 * tau, 1.0, 0.0; break;
    case 2: b << 20.0 * t3, 12.0 * t2, 6.0 * tau, 2.0, 0.0, 0.0; break;
    default: b << 60.0 * t2, 24.0 * tau, 6.0, 0.0, 0.0, 0.0; break;
  }
  return b;
}

AssembledQp assemble_qp(const PhasePlan& plan, const BoundaryState& start, const BoundaryState& goal, double dt,
                        double w_x, double w_y, Mode mode, bool pin_goal) {
  if (!(dt > 0.0)) throw traj_error("constraint sampling step must be positive");
  if (!(w_x > 0.0) || !(w_y > 0.0)) throw traj_error("cost weights must be positive");
  const int P = static_cast<int>(plan.phases.size());
  if (P == 0) throw traj_error("phase plan is empty");
  const int n = 12 * P;
  const auto starts = plan.start_times();

  AssembledQp out;
  qp::Problem& Q = out.problem;
  Q.G = Eigen::MatrixXd::Zero(n, n);
  Q.g0 = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < P; ++i) {
    const auto gram = acceleration_gram(plan.phases[i].duration);
    Q.G.block<6, 6>(12 * i, 12 * i) = 2.0 * w_x * gram;
    Q.G.block<6, 6>(12 * i + 6, 12 * i + 6) = 2.0 * w_y * gram;
  }

  const int rest_rows = mode == Mode::kStatic ? 4 * (P - 1) : 0;
  const int p = 6 * (pin_goal ? P + 1 : P) + rest_rows;
  Q.CE = Eigen::MatrixXd::Zero(n, p);
  Q.ce0 = Eigen::VectorXd::Zero(p);
  int col = 0;
  const BoundaryState* pins[2] = {&start, &goal};
  for (int end = 0; end < (pin_goal ? 2 : 1); ++end) {
    const int seg = end == 0 ? 0 : P - 1;
    const double tau = end == 0 ? 0.0 : plan.phases[seg].duration;
    for (int d = 0; d < 3; ++d) {
      const Eigen::Vector2d& v = d == 0 ? pins[end]->pos : (d == 1 ? pins[end]->vel : pins[end]->acc);
      for (int ax = 0; ax < 2; ++ax) {
        Q.CE.block<6, 1>(12 * seg + 6 * ax, col) = basis(tau, d);
        Q.ce0(col) = -v(ax);
        ++col;
      }
    }
  }
  for (int i = 0; i + 1 < P; ++i) {
    for (int d = 0; d < 3; ++d) {
      for (int ax = 0; ax < 2; ++ax) {
        Q.CE.block<6, 1>(12 * i + 6 * ax, col) = basis(plan.phases[i].duration, d);
        Q.CE.block<6, 1>(12 * (i + 1) + 6 * ax, col) = -basis(0.0, d);
        ++col;
      }
    }
  }

  if (mode == Mode::kStatic) {
    for (int i = 0; i + 1 < P; ++i) {
      for (int d = 1; d < 3; ++d) {
        for (int ax = 0; ax < 2; ++ax) {
          Q.CE.block<6, 1>(12 * i + 6 * ax, col) = basis(plan.phases[i].duration, d);
          ++col;
        }
      }
    }
  }

  std::vector<Eigen::Matrix<double, 12, 1>> rows;
  std::vector<double> offsets;
  for (int i = 0; i < P; ++i) {
    const SupportPhase& ph = plan.phases[i];
    for (double tau : sample_times(ph.duration, dt)) {
      const double c = zmp_factor(plan.profile, starts[i] + tau);
      const Eigen::Matrix<double, 6, 1> zb = basis(tau, 0) - c * basis(tau, 2);
      const Eigen::Matrix<double, 6, 1> pb = basis(tau, 0);
      for (int l = 0; l < static_cast<int>(ph.lines.size()); ++l) {
        const auto& line = ph.lines[l];
        Eigen::Matrix<double, 12, 1> r;
        r << line.p * zb, line.q * zb;
        rows.push_back(r);
        offsets.push_back(line.r);
        out.rows.push_back({i, tau, l, false});
        if (mode == Mode::kStatic) {
          r << line.p * pb, line.q * pb;
          rows.push_back(r);
          offsets.push_back(line.r);
          out.rows.push_back({i, tau, l, true});
        }
      }
    }
  }
  const int m = static_cast<int>(rows.size());
  Q.CI = Eigen::MatrixXd::Zero(n, m);
  Q.ci0.resize(m);
  for (int k = 0; k < m; ++k) {
    Q.CI.block<12, 1>(12 * out.rows[k].phase, k) = rows[k];
    Q.ci0(k) = offsets[k];
  }
  return out;
}

double CoGTrajectory::duration() const {
  return segments.empty() ? 0.0 : starts.back() + durations.back();
}

int CoGTrajectory::segment_at(double t) const {
  if (segments.empty()) throw traj_error("empty trajectory");
  const auto it = std::upper_bound(starts.begin(), starts.end(), t);
  const int i = static_cast<int>(it - starts.begin()) - 1;
  return std::clamp(i, 0, static_cast<int>(segments.size()) - 1);
}

Eigen::Vector2d CoGTrajectory::eval(double t, int d) const {
  const int i = segment_at(t);
  const double tau = std::clamp(t - starts[i], 0.0, durations[i]);
  return segment_eval(segments[i], tau, d);
}

Eigen::Vector2d CoGTrajectory::position(double t) const { return eval(t, 0); }
Eigen::Vector2d CoGTrajectory::velocity(double t) const { return eval(t, 1); }
Eigen::Vector2d CoGTrajectory::acceleration(double t) const { return eval(t, 2); }

double CoGTrajectory::max_junction_residual() const {
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < segments.size(); ++i) {
    for (int d = 0; d < 3; ++d) {
      const Eigen::Vector2d a = segment_eval(segments[i], durations[i], d);
      const Eigen::Vector2d b = segment_eval(segments[i + 1], 0.0, d);
      worst = std::max(worst, (a - b).lpNorm<Eigen::Infinity>());
    }
  }
  return worst;
}

Eigen::Vector2d zmp_of(const CoGTrajectory& traj, const BodyProfile& profile, double t) {
  if (t < -1e-12 || t > traj.duration() + 1e-12) throw traj_error("ZMP query outside the trajectory");
  const double c = zmp_factor(profile, t);
  return traj.position(t) - c * traj.acceleration(t);
}

double min_slack(const CoGTrajectory& traj, const PhasePlan& plan, double dt, Mode mode) {
  double worst = kInf;
  for (int i = 0; i < static_cast<int>(plan.phases.size()); ++i) {
    const SupportPhase& ph = plan.phases[i];
    for (double tau : sample_times(ph.duration, dt)) {
      const Eigen::Vector2d z = segment_zmp(traj, i, tau, plan.profile);
      const Eigen::Vector2d c = segment_eval(traj.segments[i], tau, 0);
      for (const auto& line : ph.lines) {
        worst = std::min(worst, line.eval(z));
        if (mode == Mode::kStatic) worst = std::min(worst, line.eval(c));
      }
    }
  }
  return worst;
}

CoGTrajectory solve_cog_trajectory(const AssembledQp& problem, const PhasePlan& plan, Mode mode,
                                   qp::Solution* solution) {
  const int P = static_cast<int>(plan.phases.size());
  if (problem.problem.n() != 12 * P) throw traj_error("assembled problem does not match the phase plan");
  qp::Solution sol;
  try {
    sol = qp::solve(problem.problem);
  } catch (const qp::QpError& e) {
    if (e.failure() != qp::Failure::kInfeasible) throw;
    std::ostringstream msg;
    msg << "trajectory QP infeasible: " << e.what();
    std::vector<int> phases_hit;
    for (int row : e.certificate_inequalities()) {
      const int ph = problem.rows[row].phase;
      if (std::find(phases_hit.begin(), phases_hit.end(), ph) == phases_hit.end()) phases_hit.push_back(ph);
    }
    std::sort(phases_hit.begin(), phases_hit.end());
    if (!phases_hit.empty()) {
      msg << "; conflicting constraints in";
      for (int ph : phases_hit) msg << ' ' << phase_label(plan, ph);
    }
    throw qp::QpError(qp::Failure::kInfeasible, msg.str(), e.certificate_equalities(), e.certificate_inequalities());
  }

  CoGTrajectory traj;
  const auto starts = plan.start_times();
  for (int i = 0; i < P; ++i) {
    traj.segments.push_back(sol.x.segment<12>(12 * i));
    traj.starts.push_back(starts[i]);
    traj.durations.push_back(plan.phases[i].duration);
  }
  const double residual = traj.max_junction_residual();
  if (!(residual < 1e-9)) {
    throw traj_error("trajectory junction residual " + std::to_string(residual) + " exceeds 1e-9");
  }
  double slack = kInf;
  for (const RowInfo& row : problem.rows) {
    if (row.cog && mode != Mode::kStatic) continue;
    const Eigen::Vector2d pt = row.cog ? segment_eval(traj.segments[row.phase], row.tau, 0)
                                       : segment_zmp(traj, row.phase, row.tau, plan.profile);
    slack = std::min(slack, plan.phases[row.phase].lines[row.line].eval(pt));
  }
  if (slack < -1e-8) throw traj_error("solved trajectory violates a support constraint by " + std::to_string(-slack));
  if (solution) *solution = sol;
  return traj;
}

OptimizationResult optimize_phases(const PhasePlan& phases, const TrajConfig& cfg, const BoundaryState& start,
                                   const std::optional<BoundaryState>& goal) {
  cfg.validate();
  OptimizationResult r;
  r.phases = phases;
  const AssembledQp qp =
      assemble_qp(phases, start, goal.value_or(BoundaryState{}), cfg.dt, cfg.w_x, cfg.w_y, cfg.mode, goal.has_value());
  qp::Solution sol;
  r.trajectory = solve_cog_trajectory(qp, phases, cfg.mode, &sol);
  r.objective = sol.objective;
  r.min_slack = min_slack(r.trajectory, phases, cfg.dt, cfg.mode);
  if (r.min_slack < -1e-8) {
    std::ostringstream msg;
    msg << "sampled ZMP slack " << r.min_slack << " violates the support polygons";
    throw traj_error(msg.str());
  }
  r.max_junction_residual = r.trajectory.max_junction_residual();
  r.qp_solves = 1;
  return r;
}

namespace {

OptimizationResult fastest(const PhasePlan& base, const TrajConfig& cfg, const BoundaryState& start,
                           const std::optional<BoundaryState>& goal) {
  if (cfg.timing == Timing::kNominal) return optimize_phases(base, cfg, start, goal);

  int solves = 0;
  std::optional<qp::QpError> last_error;
  const auto attempt = [&](double s) -> std::optional<OptimizationResult> {
    ++solves;
    try {
      auto r = optimize_phases(base.scaled(s), cfg, start, goal);
      r.scale = s;
      return r;
    } catch (const qp::QpError& e) {
      if (e.failure() != qp::Failure::kInfeasible && e.failure() != qp::Failure::kIterationLimit) throw;
      last_error = e;
      return std::nullopt;
    }
  };

  double lo = 0.0;
  std::optional<OptimizationResult> best;
  double s = cfg.scale_min;
  for (;;) {
    best = attempt(s);
    if (best) break;
    lo = s;
    if (s >= cfg.scale_max) break;
    s = std::min(cfg.scale_max, s * 1.25);
  }
  if (!best) throw *last_error;
  double hi = s;
  if (lo > 0.0) {
    while (hi - lo > cfg.scale_tolerance * hi) {
      const double mid = 0.5 * (lo + hi);
      if (auto r = attempt(mid)) {
        best = std::move(r);
        hi = mid;
      } else {
        lo = mid;
      }
    }
  }
  best->qp_solves = solves;
  return *best;
}

// Index just past the `count`-th triple phase at or after `from`, or the plan end.
std::size_t after_triples(const PhasePlan& plan, std::size_t from, int count) {
  std::size_t i = from;
  while (i < plan.phases.size() && count > 0) {
    if (plan.phases[i].kind == PhaseKind::kTriple) --count;
    ++i;
  }
  return count > 0 ? plan.phases.size() : i;
}

}  // namespace

PhasePlan PhasePlan::slice(std::size_t first, std::size_t last) const {
  if (first >= last || last > phases.size()) throw traj_error("invalid phase slice");
  PhasePlan out;
  out.phases.assign(phases.begin() + static_cast<std::ptrdiff_t>(first), phases.begin() + static_cast<std::ptrdiff_t>(last));
  out.profile.height = profile.height;
  out.profile.values.assign(profile.values.begin() + static_cast<std::ptrdiff_t>(first),
                            profile.values.begin() + static_cast<std::ptrdiff_t>(last) + 1);
  double t = 0.0;
  for (const auto& p : out.phases) {
    out.profile.knots.push_back(t);
    t += p.duration;
  }
  out.profile.knots.push_back(t);
  return out;
}

namespace {

BoundaryState end_state(const CoGTrajectory& traj, std::size_t k) {
  BoundaryState b;
  b.pos = segment_eval(traj.segments[k], traj.durations[k], 0);
  b.vel = segment_eval(traj.segments[k], traj.durations[k], 1);
  b.acc = segment_eval(traj.segments[k], traj.durations[k], 2);
  return b;
}

BoundaryState centroid_goal(const PhasePlan& base, const std::optional<BoundaryState>& goal) {
  if (goal) return *goal;
  BoundaryState target;
  for (const auto& p : base.phases.back().feet) target.pos += p.head<2>() / 4.0;
  return target;
}

// Optimizes phases [a, end) of `base` from `cur`, appending to the committed prefix in `out`.
OptimizationResult windowed(const PhasePlan& base, std::size_t a, const TrajConfig& cfg, BoundaryState cur,
                            const BoundaryState& target, OptimizationResult out) {
  const std::size_t P = base.phases.size();
  CoGTrajectory& traj = out.trajectory;
  double t0 = traj.duration();
  while (a < P) {
    std::size_t b = cfg.window > 0 ? after_triples(base, a, cfg.window) : P;
    if (after_triples(base, b, 1) >= P) b = P;
    const bool last = b >= P;
    const std::size_t c = last ? P : after_triples(base, a, std::max(1, cfg.window / 2));
    OptimizationResult r;
    try {
      r = fastest(base.slice(a, b), cfg, cur, last ? std::optional<BoundaryState>(target) : std::nullopt);
    } catch (const qp::QpError& e) {
      if (a == 0 && last) throw;
      throw qp::QpError(e.failure(), "window starting at phase " + std::to_string(a) + ": " + e.what(),
                        e.certificate_equalities(), e.certificate_inequalities());
    }
    const std::size_t keep = c - a;
    for (std::size_t i = 0; i < keep; ++i) {
      out.phases.phases.push_back(r.phases.phases[i]);
      traj.segments.push_back(r.trajectory.segments[i]);
      traj.starts.push_back(t0);
      traj.durations.push_back(r.trajectory.durations[i]);
      t0 += r.trajectory.durations[i];
    }
    cur = end_state(r.trajectory, keep - 1);
    out.objective += r.objective;
    out.qp_solves += r.qp_solves;
    out.scale = std::max(out.scale, r.scale);
    a = c;
  }

  out.phases.profile = base.profile;
  double t = 0.0;
  for (std::size_t i = 0; i < P; ++i) {
    out.phases.profile.knots[i] = t;
    t += out.phases.phases[i].duration;
  }
  out.phases.profile.knots.back() = t;
  out.max_junction_residual = traj.max_junction_residual();
  if (!(out.max_junction_residual < 1e-9)) {
    throw traj_error("trajectory junction residual " + std::to_string(out.max_junction_residual) + " exceeds 1e-9");
  }
  out.min_slack = min_slack(traj, out.phases, cfg.dt, cfg.mode);
  if (out.min_slack < -1e-8) {
    std::ostringstream msg;
    msg << "sampled ZMP slack " << out.min_slack << " violates the support polygons";
    throw traj_error(msg.str());
  }
  return out;
}

bool same_support(const SupportPhase& a, const SupportPhase& b) {
  return a.kind == b.kind && a.swing == b.swing && a.step == b.step && a.boundary == b.boundary && a.feet == b.feet;
}

}  // namespace

OptimizationResult optimize(const footstep::FootholdPlan& plan, const TrajConfig& cfg, const BoundaryState& start,
                            const std::optional<BoundaryState>& goal) {
  cfg.validate();
  const PhasePlan base = build_phases(plan, cfg);
  OptimizationResult empty;
  empty.scale = 0.0;
  return windowed(base, 0, cfg, start, centroid_goal(base, goal), std::move(empty));
}

OptimizationResult reoptimize(const OptimizationResult& previous, const footstep::FootholdPlan& plan,
                              std::size_t kept_steps, const TrajConfig& cfg, const std::optional<BoundaryState>& goal) {
  cfg.validate();
  const PhasePlan base = build_phases(plan, cfg);
  const auto& old = previous.phases.phases;
  std::size_t cut = 1;
  while (cut < old.size() && old[cut].step >= 0 && old[cut].step < static_cast<int>(kept_steps)) ++cut;
  if (cut >= old.size() || cut >= base.phases.size()) throw traj_error("no phases left after the kept steps");
  for (std::size_t i = 0; i < cut; ++i) {
    if (!same_support(old[i], base.phases[i])) {
      throw traj_error("kept steps differ from the previous plan at phase " + std::to_string(i));
    }
  }
  OptimizationResult prefix;
  prefix.scale = previous.scale;
  prefix.phases.phases.assign(old.begin(), old.begin() + static_cast<std::ptrdiff_t>(cut));
  const auto& tr = previous.trajectory;
  prefix.trajectory.segments.assign(tr.segments.begin(), tr.segments.begin() + static_cast<std::ptrdiff_t>(cut));
  prefix.trajectory.starts.assign(tr.starts.begin(), tr.starts.begin() + static_cast<std::ptrdiff_t>(cut));
  prefix.trajectory.durations.assign(tr.durations.begin(), tr.durations.begin() + static_cast<std::ptrdiff_t>(cut));
  const BoundaryState cur = end_state(tr, cut - 1);
  return windowed(base, cut, cfg, cur, centroid_goal(base, goal), std::move(prefix));
}

void write_trajectory_table(std::ostream& os, const CoGTrajectory& traj, const PhasePlan& plan, double rate) {
  os << "# t x y z xd yd xdd ydd zmp_x zmp_y phase_index\n";
  const double T = traj.duration();
  const int n = static_cast<int>(std::floor(T * rate + 1e-9));
  char buf[512];
  for (int k = 0; k <= n; ++k) {
    const double t = std::min(T, k / rate);
    const Eigen::Vector2d p = traj.position(t);
    const Eigen::Vector2d v = traj.velocity(t);
    const Eigen::Vector2d a = traj.acceleration(t);
    const Eigen::Vector2d z = zmp_of(traj, plan.profile, t);
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %d\n", t, p.x(), p.y(),
                  plan.profile.at(t).z, v.x(), v.y(), a.x(), a.y(), z.x(), z.y(), traj.segment_at(t));
    os << buf;
  }
}

void write_coefficients(std::ostream& os, const CoGTrajectory& traj) {
  char buf[64];
  for (std::size_t i = 0; i < traj.segments.size(); ++i) {
    os << "segment " << i;
    std::snprintf(buf, sizeof buf, " %.17g %.17g", traj.starts[i], traj.durations[i]);
    os << buf;
    for (int k = 0; k < 12; ++k) {
      std::snprintf(buf, sizeof buf, " %.17g", traj.segments[i](k));
      os << buf;
    }
    os << '\n';
  }
}

CoGTrajectory read_coefficients(std::istream& is) {
  CoGTrajectory traj;
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag != "segment") throw traj_error("unknown coefficient record '" + tag + "'");
    std::size_t i = 0;
    double t0 = 0.0, T = 0.0;
    CoGTrajectory::Coeffs q;
    if (!(ls >> i >> t0 >> T)) throw traj_error("malformed segment record");
    for (int k = 0; k < 12; ++k) {
      if (!(ls >> q(k))) throw traj_error("malformed segment record");
    }
    if (i != traj.segments.size()) throw traj_error("segment records out of order");
    traj.segments.push_back(q);
    traj.starts.push_back(t0);
    traj.durations.push_back(T);
  }
  return traj;
}

}  // namespace quadloco::traj
