#include <Eigen/Dense>

#include <algorithm>
#include <random>
#include <sstream>

#include "doctest.h"
#include "quadloco/qp.hpp"
#include "qp_oracle.hpp"

using quadloco::qp::Failure;
using quadloco::qp::Problem;
using quadloco::qp::QpError;

namespace {

Problem identity_problem(int n) { return Problem(Eigen::MatrixXd::Identity(n, n), Eigen::VectorXd::Zero(n)); }

}  // namespace

TEST_CASE("qp: equality pins one coordinate") {
  Problem P = identity_problem(2);
  P.G *= 2.0;
  P.CE = Eigen::Vector2d(1, 0);
  P.ce0 = Eigen::VectorXd::Constant(1, -1.0);
  const auto s = quadloco::qp::solve(P);
  CHECK(s.x(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(s.x(1)) < 1e-12);
  CHECK(s.objective == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("qp: projection onto a half-plane") {
  // (x1-1)^2 + (x2-2)^2 = 1/2 x' (2I) x - (2, 4) x + 5
  Problem P(2.0 * Eigen::Matrix2d::Identity(), Eigen::Vector2d(-2, -4));
  P.CI = Eigen::Vector2d(-1, -1);
  P.ci0 = Eigen::VectorXd::Constant(1, 1.0);
  const auto s = quadloco::qp::solve(P);
  // Projection of (1, 2) onto x1 + x2 <= 1 moves along (1, 1)/sqrt2 by 2/sqrt2.
  CHECK(s.x(0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s.x(1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.active_set == std::vector<int>{0});
  CHECK(s.lambda_ineq(0) == doctest::Approx(2.0));
}

TEST_CASE("qp: solve_equality closed forms") {
  const Eigen::Matrix3d G = (Eigen::Matrix3d() << 4, 1, 0, 1, 3, 1, 0, 1, 2).finished();
  const Eigen::Vector3d g0(1, -2, 0.5);
  const auto free = quadloco::qp::solve_equality(G, g0, Eigen::MatrixXd(3, 0), Eigen::VectorXd(0));
  CHECK((free.x - (-G.inverse() * g0)).norm() < 1e-12);

  const auto s = quadloco::qp::solve_equality(Eigen::Matrix2d::Identity(), Eigen::Vector2d::Zero(),
                                              Eigen::Vector2d(1, 1), Eigen::VectorXd::Constant(1, -1.0));
  CHECK(s.x(0) == doctest::Approx(0.5));
  CHECK(s.x(1) == doctest::Approx(0.5));

  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(2, 2);
  CHECK_THROWS_AS(quadloco::qp::solve_equality(K, Eigen::Vector2d::Zero(), Eigen::MatrixXd(2, 0), Eigen::VectorXd(0)),
                  QpError);
}

TEST_CASE("qp: solve_equality agrees with solve without inequalities") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Problem P = testsupport::random_feasible_problem(rng, 6, 2, 0);
    const auto a = quadloco::qp::solve(P);
    const auto b = quadloco::qp::solve_equality(P.G, P.g0, P.CE, P.ce0);
    CHECK((a.x - b.x).lpNorm<Eigen::Infinity>() < 1e-9);
  }
}

TEST_CASE("qp: matches active-set enumeration on random problems") {
  std::mt19937 rng(20240611);
  std::uniform_int_distribution<int> dn(1, 8);
  for (int trial = 0; trial < 150; ++trial) {
    const int n = dn(rng);
    const int p = std::uniform_int_distribution<int>(0, std::min(3, n - 1))(rng);
    const int m = std::uniform_int_distribution<int>(0, 10)(rng);
    const Problem P = testsupport::random_feasible_problem(rng, n, p, m);
    const auto oracle = testsupport::enumerate_active_sets(P);
    REQUIRE(oracle);
    const auto s = quadloco::qp::solve(P);
    CHECK((s.x - oracle->x).lpNorm<Eigen::Infinity>() < 1e-7);
    CHECK(std::abs(s.objective - oracle->objective) < 1e-9 * (1.0 + std::abs(oracle->objective)));
    const auto r = quadloco::qp::kkt_residuals(P, s);
    CHECK(r.stationarity <= 1e-9 * (1.0 + P.g0.lpNorm<Eigen::Infinity>()));
    CHECK(r.equality <= 1e-9);
    CHECK(r.min_slack >= -1e-9);
    CHECK(r.min_multiplier >= -1e-10);
    CHECK(r.complementarity <= 1e-9);
    CHECK(quadloco::qp::dual_objective(P, s) <= s.objective + 1e-9 * (1.0 + std::abs(s.objective)));
  }
}

TEST_CASE("qp: permutation invariance of inequality rows") {
  std::mt19937 rng(99);
  for (int trial = 0; trial < 40; ++trial) {
    const Problem P = testsupport::random_feasible_problem(rng, 5, 1, 8);
    std::vector<int> perm(P.m());
    for (int i = 0; i < P.m(); ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    Problem Q = P;
    for (int i = 0; i < P.m(); ++i) {
      Q.CI.col(i) = P.CI.col(perm[i]);
      Q.ci0(i) = P.ci0(perm[i]);
    }
    const auto a = quadloco::qp::solve(P);
    const auto b = quadloco::qp::solve(Q);
    CHECK((a.x - b.x).lpNorm<Eigen::Infinity>() < 1e-9);
    CHECK(std::abs(a.objective - b.objective) < 1e-9 * (1.0 + std::abs(a.objective)));
  }
}

TEST_CASE("qp: scale robustness") {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const Problem P = testsupport::random_feasible_problem(rng, 6, 2, 6);
    Problem Q = P;
    Q.G *= 1e3;
    Q.g0 *= 1e3;
    Q.CE *= 1e3;
    Q.ce0 *= 1e3;
    Q.CI *= 1e3;
    Q.ci0 *= 1e3;
    const auto a = quadloco::qp::solve(P);
    const auto b = quadloco::qp::solve(Q);
    CHECK((a.x - b.x).norm() <= 1e-6 * std::max(1.0, a.x.norm()));
  }
}

TEST_CASE("qp: infeasible problem carries a certificate") {
  Problem P = identity_problem(1);
  P.CI = Eigen::RowVector2d(1, -1);
  P.ci0 = Eigen::Vector2d(-2, 1);  // x >= 2 and x <= 1
  try {
    quadloco::qp::solve(P);
    FAIL("expected infeasibility");
  } catch (const QpError& e) {
    CHECK(e.failure() == Failure::kInfeasible);
    CHECK(e.certificate_inequalities() == std::vector<int>{0, 1});
  }
}

TEST_CASE("qp: error kinds") {
  Problem P = identity_problem(2);
  P.CE = (Eigen::Matrix2d() << 1, 2, 1, 2).finished();
  P.ce0 = Eigen::Vector2d(0, 1);
  try {
    quadloco::qp::solve(P);
    FAIL("expected rank deficiency");
  } catch (const QpError& e) {
    CHECK(e.failure() == Failure::kRankDeficient);
  }

  Problem N(Eigen::Matrix2d(Eigen::Vector2d(1, -1).asDiagonal()), Eigen::Vector2d::Zero());
  try {
    quadloco::qp::solve(N);
    FAIL("expected non-PD");
  } catch (const QpError& e) {
    CHECK(e.failure() == Failure::kNotPositiveDefinite);
  }

  Problem A = identity_problem(2);
  A.G(0, 1) = 0.5;
  CHECK_THROWS_AS(quadloco::qp::solve(A), QpError);
}

TEST_CASE("qp: semidefinite Hessian is lifted") {
  Problem P(Eigen::Matrix2d(Eigen::Vector2d(2, 0).asDiagonal()), Eigen::Vector2d(-2, 0));
  P.CE = Eigen::Vector2d(0, 1);
  P.ce0 = Eigen::VectorXd::Constant(1, -3.0);
  const auto s = quadloco::qp::solve(P);
  CHECK(s.regularized);
  CHECK(s.x(0) == doctest::Approx(1.0));
  CHECK(s.x(1) == doctest::Approx(3.0));
}

TEST_CASE("qp: debug dump round trip") {
  std::mt19937 rng(3);
  const Problem P = testsupport::random_feasible_problem(rng, 4, 1, 3);
  std::stringstream ss;
  quadloco::qp::write_debug_dump(ss, P);
  const Problem Q = quadloco::qp::read_debug_dump(ss);
  CHECK(Q.G == P.G);
  CHECK(Q.g0 == P.g0);
  CHECK(Q.CE == P.CE);
  CHECK(Q.ce0 == P.ce0);
  CHECK(Q.CI == P.CI);
  CHECK(Q.ci0 == P.ci0);
}
