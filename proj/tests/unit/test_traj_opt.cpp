#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "quadloco/error.hpp"
#include "polygon_oracle.hpp"
#include "quadloco/traj_opt.hpp"

using namespace quadloco;
using namespace quadloco::traj;
using footstep::Foothold;
using footstep::FootholdPlan;
using footstep::Stance;

namespace {

Stance nominal(double x = 0.0, double y = 0.0) {
  StanceGeometry g;
  Stance s;
  for (Leg l : kAllLegs) s[index(l)] << Eigen::Vector2d(x, y) + g.offset(l), 0.0;
  return s;
}

FootholdPlan walk(const std::vector<Leg>& legs, double stride = 0.12) {
  FootholdPlan plan;
  plan.initial_stance = nominal();
  Stance s = plan.initial_stance;
  for (std::size_t k = 0; k < legs.size(); ++k) {
    s[index(legs[k])].x() += stride;
    plan.steps.push_back({legs[k], s[index(legs[k])], static_cast<int>(k), k / 4});
  }
  plan.horizon = static_cast<int>(legs.size());
  return plan;
}

std::vector<Leg> lateral(int n) {
  const Leg seq[4] = {Leg::LH, Leg::LF, Leg::RH, Leg::RF};
  std::vector<Leg> out;
  for (int i = 0; i < n; ++i) out.push_back(seq[i % 4]);
  return out;
}

double quadrature_gram(double T, int i, int j) {
  const int n = 2000;
  const double h = T / n;
  double sum = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double w = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    sum += w * basis(k * h, 2)(i) * basis(k * h, 2)(j);
  }
  return sum * h / 3.0;
}

double objective_of(const qp::Problem& p, const Eigen::VectorXd& x) { return 0.5 * x.dot(p.G * x) + p.g0.dot(x); }

}  // namespace

TEST_CASE("traj: shrink unit right triangle") {
  const std::vector<Eigen::Vector2d> tri{{0, 0}, {1, 0}, {0, 1}};
  const auto lines = shrink_polygon(tri, 0.0);
  REQUIRE(lines.size() == 3);
  for (const auto& l : lines) CHECK(std::abs(l.p * l.p + l.q * l.q - 1.0) < 1e-12);
  CHECK(lines[0].eval({0.5, 0.0}) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(lines[0].eval({0.5, 0.3}) == doctest::Approx(0.3));
  CHECK(lines[1].eval({0.0, 0.0}) == doctest::Approx(1.0 / std::sqrt(2.0)));
  const auto shrunk = shrink_polygon(tri, 0.1);
  for (std::size_t i = 0; i < 3; ++i) CHECK(shrunk[i].r == doctest::Approx(lines[i].r - 0.1));
  const Eigen::Vector2d c(1.0 / 3.0, 1.0 / 3.0);
  for (const auto& l : shrunk) CHECK(l.eval(c) > 0.0);
  const double inradius = (2.0 - std::sqrt(2.0)) / 2.0;
  CHECK_THROWS_AS(shrink_polygon(tri, inradius + 1e-6), Error);
  CHECK_NOTHROW(shrink_polygon(tri, inradius - 1e-3));
}

TEST_CASE("traj: quad phase inserted only at diagonal disjoint transitions") {
  TrajConfig cfg;
  const auto phases = build_phases(walk({Leg::LH, Leg::LF, Leg::RH, Leg::RF}), cfg);
  // boundary, LH, LF, quad, RH, RF, boundary
  REQUIRE(phases.phases.size() == 7);
  CHECK(phases.phases[1].swing == Leg::LH);
  CHECK(phases.phases[2].swing == Leg::LF);
  CHECK(phases.phases[3].kind == PhaseKind::kQuad);
  CHECK(!phases.phases[3].boundary);
  CHECK(phases.phases[3].step == 2);
  CHECK(phases.quad_phase_count() == 1);

  cfg.margin = 0.0;
  CHECK(build_phases(walk({Leg::LH, Leg::LF, Leg::RH, Leg::RF}), cfg).quad_phase_count() == 0);
}

TEST_CASE("traj: quad phase law over random sequences") {
  std::mt19937 rng(20240611);
  int inserted = 0, tested = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto [margin, plan] = testsupport::random_sequence(rng);
    TrajConfig cfg;
    cfg.margin = margin;
    PhasePlan phases;
    try {
      phases = build_phases(plan, cfg);
    } catch (const Error&) {
      continue;
    }
    ++tested;
    std::vector<int> got;
    for (const auto& ph : phases.phases) {
      if (ph.kind == PhaseKind::kQuad && !ph.boundary) got.push_back(ph.step);
    }
    CHECK(got == testsupport::expected_quads(plan, margin));
    inserted += static_cast<int>(got.size());
  }
  CHECK(tested >= 90);
  CHECK(inserted > 0);
}

TEST_CASE("traj: Hessian is the exact acceleration Gram with weight ratio") {
  TrajConfig cfg;
  const auto phases = build_phases(walk({Leg::LH}), cfg);
  const auto asm_ = assemble_qp(phases, {}, {}, cfg.dt, 1.0, 1.5);
  const double T = phases.phases[1].duration;
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      const double gx = asm_.problem.G(12 + i, 12 + j);
      const double gy = asm_.problem.G(18 + i, 18 + j);
      CHECK(gx == doctest::Approx(2.0 * quadrature_gram(T, i, j)).epsilon(1e-9));
      CHECK(gy == doctest::Approx(1.5 * gx).epsilon(1e-12));
    }
  }
  CHECK(asm_.problem.G.block(0, 12, 12, 12).norm() == 0.0);
}

TEST_CASE("traj: ZMP row is the support line applied to x - z/g xdd") {
  TrajConfig cfg;
  const auto phases = build_phases(walk({Leg::LH}), cfg);
  const auto asm_ = assemble_qp(phases, {}, {}, cfg.dt, 1.0, 1.5);
  REQUIRE(!asm_.rows.empty());
  int checked = 0;
  for (std::size_t k = 0; k < asm_.rows.size(); ++k) {
    const auto& row = asm_.rows[k];
    const auto& line = phases.phases[row.phase].lines[row.line];
    Eigen::Matrix<double, 6, 1> expect;
    const double t = row.tau;
    const double c = 0.5 / 9.81;
    expect << std::pow(t, 5) - c * 20 * std::pow(t, 3), std::pow(t, 4) - c * 12 * t * t, std::pow(t, 3) - c * 6 * t,
        t * t - c * 2, t, 1.0;
    const Eigen::VectorXd col = asm_.problem.CI.col(static_cast<Eigen::Index>(k));
    CHECK((col.segment<6>(12 * row.phase) - line.p * expect).norm() < 1e-12);
    CHECK((col.segment<6>(12 * row.phase + 6) - line.q * expect).norm() < 1e-12);
    CHECK(asm_.problem.ci0(static_cast<Eigen::Index>(k)) == line.r);
    ++checked;
  }
  CHECK(checked > 10);
}

TEST_CASE("traj: stationary quad support gives a constant trajectory") {
  TrajConfig cfg;
  cfg.timing = Timing::kNominal;
  const auto plan = walk({});
  BoundaryState c;
  const auto r = optimize(plan, cfg, c);
  REQUIRE(r.phases.phases.size() == 2);
  CHECK(std::abs(r.objective) < 1e-12);
  for (double t = 0.0; t <= r.trajectory.duration(); t += 0.01) {
    CHECK(r.trajectory.position(t).norm() < 1e-9);
  }
}

TEST_CASE("traj: ZMP evaluation") {
  CoGTrajectory traj;
  CoGTrajectory::Coeffs q = CoGTrajectory::Coeffs::Zero();
  q(3) = 0.5;  // x = 0.5 t^2, xdd = 1
  traj.segments.push_back(q);
  traj.starts.push_back(0.0);
  traj.durations.push_back(1.0);
  BodyProfile flat;
  flat.knots = {0.0, 1.0};
  flat.values = {Eigen::Vector4d::Zero(), Eigen::Vector4d::Zero()};
  const Eigen::Vector2d z = zmp_of(traj, flat, 0.4);
  CHECK(z.x() == doctest::Approx(0.5 * 0.16 - 0.5 / 9.81).epsilon(1e-14));
  CHECK(0.5 / 9.81 == doctest::Approx(0.0510).epsilon(1e-3));
  CHECK(z.y() == 0.0);
  CHECK_THROWS_AS(zmp_of(traj, flat, 1.5), Error);

  q.setZero();
  traj.segments[0] = q;
  CHECK(zmp_of(traj, flat, 0.3).norm() == 0.0);
}

TEST_CASE("traj: flat walk satisfies continuity, stability and optimality") {
  TrajConfig cfg;
  const auto plan = walk(lateral(8));
  const auto r = optimize(plan, cfg, {{0.0, 0.0}, {0, 0}, {0, 0}});
  CHECK(r.max_junction_residual < 1e-9);
  CHECK(r.min_slack >= -1e-8);
  CHECK(r.phases.quad_phase_count() >= 1);
  CHECK(r.scale < 6.0);

  // five-point second difference is exact for quintics up to rounding
  const double h = 1e-3;
  const auto& tr = r.trajectory;
  int sampled = 0;
  for (double t = 0.05; t < tr.duration() - 0.05; t += 0.0173) {
    const int seg = tr.segment_at(t);
    if (t - 2 * h < tr.starts[seg] || t + 2 * h > tr.starts[seg] + tr.durations[seg]) continue;
    const Eigen::Vector2d fd = (-tr.position(t + 2 * h) + 16.0 * tr.position(t + h) - 30.0 * tr.position(t) +
                                16.0 * tr.position(t - h) - tr.position(t - 2 * h)) /
                               (12.0 * h * h);
    CHECK((fd - tr.acceleration(t)).norm() < 1e-6);
    const auto s = r.phases.profile.at(t);
    const Eigen::Vector2d zfd = tr.position(t) - (s.z - s.support) * fd / (s.zdd + kGravity);
    CHECK((zfd - zmp_of(tr, r.phases.profile, t)).norm() < 1e-6);
    ++sampled;
  }
  CHECK(sampled > 100);

  // random feasible perturbations never improve the objective
  Eigen::Vector2d goal = Eigen::Vector2d::Zero();
  for (const auto& p : plan.stance_after(plan.steps.size())) goal += p.head<2>() / 4.0;
  const auto asm_ = assemble_qp(r.phases, {}, {goal, {0, 0}, {0, 0}}, cfg.dt, cfg.w_x, cfg.w_y);
  Eigen::VectorXd x(asm_.problem.n());
  for (std::size_t i = 0; i < tr.segments.size(); ++i) x.segment<12>(12 * i) = tr.segments[i];
  const double J0 = objective_of(asm_.problem, x);
  CHECK(J0 == doctest::Approx(r.objective).epsilon(1e-8));
  const Eigen::VectorXd slack0 = asm_.problem.CI.transpose() * x + asm_.problem.ci0;
  std::vector<int> active;
  for (int k = 0; k < slack0.size(); ++k) {
    if (slack0(k) < 1e-7) active.push_back(k);
  }
  Eigen::MatrixXd bind(asm_.problem.n(), asm_.problem.p() + static_cast<Eigen::Index>(active.size()));
  bind.leftCols(asm_.problem.p()) = asm_.problem.CE;
  for (std::size_t k = 0; k < active.size(); ++k) bind.col(asm_.problem.p() + k) = asm_.problem.CI.col(active[k]);
  const Eigen::MatrixXd N_eq = Eigen::FullPivLU<Eigen::MatrixXd>(asm_.problem.CE.transpose()).kernel();
  const Eigen::MatrixXd N_act = Eigen::FullPivLU<Eigen::MatrixXd>(bind.transpose()).kernel();
  std::mt19937 rng(7);
  std::normal_distribution<double> nd;
  int used = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const Eigen::MatrixXd& N = trial % 2 ? N_eq : N_act;
    Eigen::VectorXd w(N.cols());
    for (int i = 0; i < w.size(); ++i) w(i) = nd(rng);
    Eigen::VectorXd d = N * w;
    d *= 1e-3 / d.norm();
    const Eigen::VectorXd slack = asm_.problem.CI.transpose() * (x + d) + asm_.problem.ci0;
    if ((slack.array() < slack0.array().min(0.0) - 1e-12).any()) continue;
    ++used;
    CHECK(objective_of(asm_.problem, x + d) >= J0 - 1e-9);
  }
  CHECK(used > 0);
}

TEST_CASE("traj: scaling both weights leaves the trajectory unchanged") {
  TrajConfig cfg;
  cfg.timing = Timing::kNominal;
  cfg.swing_T = 1.2;
  const auto plan = walk(lateral(4));
  const auto a = optimize(plan, cfg, {});
  cfg.w_x *= 7.5;
  cfg.w_y *= 7.5;
  const auto b = optimize(plan, cfg, {});
  REQUIRE(a.trajectory.segments.size() == b.trajectory.segments.size());
  for (std::size_t i = 0; i < a.trajectory.segments.size(); ++i) {
    CHECK((a.trajectory.segments[i] - b.trajectory.segments[i]).lpNorm<Eigen::Infinity>() < 1e-8);
  }
  CHECK(b.objective == doctest::Approx(7.5 * a.objective).epsilon(1e-8));
}

TEST_CASE("traj: static mode needs longer phases than ZMP mode") {
  TrajConfig cfg;
  const auto plan = walk(lateral(8));
  const auto dyn = optimize(plan, cfg, {});
  cfg.mode = Mode::kStatic;
  const auto stat = optimize(plan, cfg, {});
  CHECK(stat.min_slack >= -1e-8);
  CHECK(dyn.phases.total_duration() < stat.phases.total_duration());
}

TEST_CASE("traj: infeasible start reports the phase") {
  TrajConfig cfg;
  cfg.timing = Timing::kNominal;
  const auto plan = walk(lateral(2));
  try {
    optimize(plan, cfg, {{1.5, 0.0}, {0, 0}, {0, 0}});
    FAIL("expected infeasible");
  } catch (const qp::QpError& e) {
    CHECK(e.failure() == qp::Failure::kInfeasible);
    CHECK(std::string(e.what()).find("phase 0") != std::string::npos);
  }
}

TEST_CASE("traj: coefficient and table export") {
  TrajConfig cfg;
  const auto r = optimize(walk(lateral(4)), cfg, {});
  std::stringstream ss;
  write_coefficients(ss, r.trajectory);
  const auto back = read_coefficients(ss);
  REQUIRE(back.segments.size() == r.trajectory.segments.size());
  for (std::size_t i = 0; i < back.segments.size(); ++i) {
    CHECK(back.segments[i] == r.trajectory.segments[i]);
    CHECK(back.starts[i] == r.trajectory.starts[i]);
  }
  CHECK(min_slack(back, r.phases, cfg.dt) == r.min_slack);
  std::stringstream table;
  write_trajectory_table(table, r.trajectory, r.phases);
  std::string header;
  std::getline(table, header);
  CHECK(header == "# t x y z xd yd xdd ydd zmp_x zmp_y phase_index");
  int rows = 0;
  for (std::string line; std::getline(table, line);) ++rows;
  CHECK(rows == static_cast<int>(std::floor(r.trajectory.duration() * 100 + 1e-9)) + 1);
}
