#include <iomanip>
#include <istream>
#include <ostream>
#include <string>

#include "quadloco/qp.hpp"

namespace quadloco::qp {

namespace {

void write_block(std::ostream& os, const char* name, const Eigen::MatrixXd& M) {
  os << name << ' ' << M.rows() << ' ' << M.cols() << '\n';
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) os << (j ? " " : "") << M(i, j);
    os << '\n';
  }
}

Eigen::MatrixXd read_block(std::istream& is, const std::string& name) {
  std::string tag;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  if (!(is >> tag >> rows >> cols) || tag != name || rows < 0 || cols < 0) {
    throw QpError(Failure::kInvalid, "expected block '" + name + "' in QP dump");
  }
  Eigen::MatrixXd M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (!(is >> M(i, j))) throw QpError(Failure::kInvalid, "truncated block '" + name + "' in QP dump");
    }
  }
  return M;
}

Eigen::VectorXd read_vector(std::istream& is, const std::string& name) {
  const Eigen::MatrixXd M = read_block(is, name);
  if (M.cols() != 1) throw QpError(Failure::kInvalid, "block '" + name + "' must have one column");
  return M.col(0);
}

}  // namespace

void write_debug_dump(std::ostream& os, const Problem& P) {
  const auto flags = os.flags();
  const auto precision = os.precision();
  os << std::setprecision(17);
  write_block(os, "G", P.G);
  write_block(os, "g0", P.g0);
  write_block(os, "CE", P.CE);
  write_block(os, "ce0", P.ce0);
  write_block(os, "CI", P.CI);
  write_block(os, "ci0", P.ci0);
  os.flags(flags);
  os.precision(precision);
}

Problem read_debug_dump(std::istream& is) {
  Problem P;
  P.G = read_block(is, "G");
  P.g0 = read_vector(is, "g0");
  P.CE = read_block(is, "CE");
  P.ce0 = read_vector(is, "ce0");
  P.CI = read_block(is, "CI");
  P.ci0 = read_vector(is, "ci0");
  P.validate();
  return P;
}

}  // namespace quadloco::qp
