#pragma once

#include <Eigen/Dense>

#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "quadloco/qp.hpp"

namespace testsupport {

struct EnumeratedOptimum {
  Eigen::VectorXd x;
  double objective = std::numeric_limits<double>::infinity();
  std::vector<int> active;
};

// Brute force: solve the equality-constrained subproblem for every subset of
// inequalities held active and keep the best primal-feasible stationary point.
inline std::optional<EnumeratedOptimum> enumerate_active_sets(const quadloco::qp::Problem& P, double feas_tol = 1e-9) {
  const int n = P.n();
  const int p = P.p();
  const int m = P.m();
  std::optional<EnumeratedOptimum> best;
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    std::vector<int> act;
    for (int i = 0; i < m; ++i) {
      if (mask & (1u << i)) act.push_back(i);
    }
    const int k = p + static_cast<int>(act.size());
    if (k > n) continue;
    Eigen::MatrixXd N(n, k);
    Eigen::VectorXd b(k);
    for (int i = 0; i < p; ++i) {
      N.col(i) = P.CE.col(i);
      b(i) = P.ce0(i);
    }
    for (std::size_t i = 0; i < act.size(); ++i) {
      N.col(p + i) = P.CI.col(act[i]);
      b(p + i) = P.ci0(act[i]);
    }
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + k, n + k);
    K.topLeftCorner(n, n) = P.G;
    K.topRightCorner(n, k) = N;
    K.bottomLeftCorner(k, n) = N.transpose();
    Eigen::VectorXd rhs(n + k);
    rhs << -P.g0, -b;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(K);
    if (qr.rank() < n + k) continue;
    const Eigen::VectorXd x = qr.solve(rhs).head(n);
    bool feasible = true;
    for (int i = 0; i < p && feasible; ++i) feasible = std::abs(P.CE.col(i).dot(x) + P.ce0(i)) <= 1e-7;
    for (int i = 0; i < m && feasible; ++i) feasible = P.CI.col(i).dot(x) + P.ci0(i) >= -feas_tol;
    if (!feasible) continue;
    const double f = 0.5 * x.dot(P.G * x) + P.g0.dot(x);
    if (!best || f < best->objective) best = EnumeratedOptimum{x, f, act};
  }
  return best;
}

// Random strictly convex problem with a known strictly feasible point.
inline quadloco::qp::Problem random_feasible_problem(std::mt19937& rng, int n, int p, int m) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> margin(0.05, 1.0);
  auto randn = [&](int r, int c) {
    Eigen::MatrixXd M(r, c);
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < c; ++j) M(i, j) = normal(rng);
    }
    return M;
  };
  const Eigen::MatrixXd A = randn(n, n);
  quadloco::qp::Problem P(A * A.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n), randn(n, 1).col(0) * 3.0);
  P.G = 0.5 * (P.G + P.G.transpose()).eval();
  const Eigen::VectorXd x0 = randn(n, 1).col(0);
  P.CE = randn(n, p);
  P.ce0 = -P.CE.transpose() * x0;
  P.CI = randn(n, m);
  P.ci0.resize(m);
  for (int i = 0; i < m; ++i) P.ci0(i) = -P.CI.col(i).dot(x0) + margin(rng);
  return P;
}

}  // namespace testsupport
