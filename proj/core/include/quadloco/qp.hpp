#pragma once

#include <Eigen/Core>

#include <iosfwd>
#include <string>
#include <vector>

#include "quadloco/error.hpp"

namespace quadloco::qp {

/// min 1/2 x'Gx + g0'x  s.t.  CE'x + ce0 = 0,  CI'x + ci0 >= 0.
struct Problem {
  Eigen::MatrixXd G;
  Eigen::VectorXd g0;
  Eigen::MatrixXd CE;
  Eigen::VectorXd ce0;
  Eigen::MatrixXd CI;
  Eigen::VectorXd ci0;

  Problem() = default;
  Problem(Eigen::MatrixXd G_, Eigen::VectorXd g0_);

  int n() const { return static_cast<int>(g0.size()); }
  int p() const { return static_cast<int>(ce0.size()); }
  int m() const { return static_cast<int>(ci0.size()); }

  void validate() const;
  double objective(const Eigen::VectorXd& x) const;
};

struct Solution {
  Eigen::VectorXd x;
  double objective = 0.0;
  std::vector<int> active_set;
  Eigen::VectorXd lambda_eq;
  /// One entry per inequality; zero for inactive ones.
  Eigen::VectorXd lambda_ineq;
  int iterations = 0;
  bool regularized = false;
};

enum class Failure { kInvalid, kInfeasible, kRankDeficient, kNotPositiveDefinite, kIterationLimit, kSingularKkt };

const char* to_string(Failure f);

class QpError : public Error {
 public:
  QpError(Failure failure, const std::string& what, std::vector<int> equalities = {},
          std::vector<int> inequalities = {})
      : Error(Stage::kQp, what),
        failure_(failure),
        equalities_(std::move(equalities)),
        inequalities_(std::move(inequalities)) {}

  Failure failure() const { return failure_; }
  /// Constraints that together admit no feasible point (infeasible failures only).
  const std::vector<int>& certificate_equalities() const { return equalities_; }
  const std::vector<int>& certificate_inequalities() const { return inequalities_; }

 private:
  Failure failure_;
  std::vector<int> equalities_;
  std::vector<int> inequalities_;
};

/// Goldfarb-Idnani dual active-set method.
Solution solve(const Problem& problem, double tol = 1e-9);

/// Stationary point of the equality-constrained problem from a direct KKT solve.
Solution solve_equality(const Eigen::MatrixXd& G, const Eigen::VectorXd& g0, const Eigen::MatrixXd& CE,
                        const Eigen::VectorXd& ce0);

struct KktResiduals {
  double stationarity = 0.0;
  double equality = 0.0;
  double min_slack = 0.0;
  double min_multiplier = 0.0;
  double complementarity = 0.0;
};

KktResiduals kkt_residuals(const Problem& problem, const Solution& solution);

/// Lagrangian dual value at the solution's multipliers.
double dual_objective(const Problem& problem, const Solution& solution);

void write_debug_dump(std::ostream& os, const Problem& problem);
Problem read_debug_dump(std::istream& is);

}  // namespace quadloco::qp
