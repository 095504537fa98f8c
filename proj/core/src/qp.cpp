#include "quadloco/qp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace quadloco::qp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Factorization state of the dual method: J = L^-T Q and the upper-triangular R
// of the active normals, with column k of R describing constraint A[k].
struct Factorization {
  MatrixXd J;
  MatrixXd R;
  int iq = 0;
  double r_norm = 1.0;

  bool add(VectorXd& d) {
    const int n = static_cast<int>(d.size());
    for (int j = n - 1; j > iq; --j) {
      double cc = d(j - 1);
      double ss = d(j);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      d(j) = 0.0;
      ss /= h;
      cc /= h;
      if (cc < 0.0) {
        cc = -cc;
        ss = -ss;
        d(j - 1) = -h;
      } else {
        d(j - 1) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (int k = 0; k < n; ++k) {
        const double t1 = J(k, j - 1);
        const double t2 = J(k, j);
        J(k, j - 1) = t1 * cc + t2 * ss;
        J(k, j) = xny * (t1 + J(k, j - 1)) - t2;
      }
    }
    ++iq;
    R.col(iq - 1).head(iq) = d.head(iq);
    if (std::abs(d(iq - 1)) <= kEps * r_norm) return false;
    r_norm = std::max(r_norm, std::abs(d(iq - 1)));
    return true;
  }

  // Removes the active entry at position qq, shifting the later ones down.
  void remove(int qq, std::vector<int>& A, VectorXd& u) {
    const int n = static_cast<int>(J.rows());
    for (int i = qq; i < iq - 1; ++i) {
      A[i] = A[i + 1];
      u(i) = u(i + 1);
      R.col(i) = R.col(i + 1);
    }
    A[iq - 1] = A[iq];
    u(iq - 1) = u(iq);
    A[iq] = 0;
    u(iq) = 0.0;
    R.col(iq - 1).head(iq).setZero();
    --iq;
    if (iq == 0) return;
    for (int j = qq; j < iq; ++j) {
      double cc = R(j, j);
      double ss = R(j + 1, j);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      cc /= h;
      ss /= h;
      R(j + 1, j) = 0.0;
      if (cc < 0.0) {
        R(j, j) = -h;
        cc = -cc;
        ss = -ss;
      } else {
        R(j, j) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (int k = j + 1; k < iq; ++k) {
        const double t1 = R(j, k);
        const double t2 = R(j + 1, k);
        R(j, k) = t1 * cc + t2 * ss;
        R(j + 1, k) = xny * (t1 + R(j, k)) - t2;
      }
      for (int k = 0; k < n; ++k) {
        const double t1 = J(k, j);
        const double t2 = J(k, j + 1);
        J(k, j) = t1 * cc + t2 * ss;
        J(k, j + 1) = xny * (J(k, j) + t1) - t2;
      }
    }
  }

  VectorXd z(const VectorXd& d) const {
    const int n = static_cast<int>(d.size());
    return J.rightCols(n - iq) * d.tail(n - iq);
  }

  VectorXd r(const VectorXd& d) const {
    return R.topLeftCorner(iq, iq).triangularView<Eigen::Upper>().solve(d.head(iq));
  }
};

double inf_norm(const VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// Exact solve of the KKT system for the given active inequalities. Returns false when singular.
bool kkt_solve(const Problem& P, const MatrixXd& G, const std::vector<int>& active, VectorXd& x, VectorXd& lam) {
  const int n = P.n();
  const int p = P.p();
  const int k = p + static_cast<int>(active.size());
  MatrixXd N(n, k);
  VectorXd b(k);
  if (p) {
    N.leftCols(p) = P.CE;
    b.head(p) = P.ce0;
  }
  for (std::size_t i = 0; i < active.size(); ++i) {
    N.col(p + i) = P.CI.col(active[i]);
    b(p + i) = P.ci0(active[i]);
  }
  MatrixXd K = MatrixXd::Zero(n + k, n + k);
  K.topLeftCorner(n, n) = G;
  K.topRightCorner(n, k) = -N;
  K.bottomLeftCorner(k, n) = -N.transpose();
  VectorXd rhs(n + k);
  rhs << -P.g0, b;
  Eigen::FullPivLU<MatrixXd> lu(K);
  if (!lu.isInvertible()) return false;
  const VectorXd sol = lu.solve(rhs);
  if (!sol.allFinite()) return false;
  x = sol.head(n);
  lam = sol.tail(k);
  return true;
}

}  // namespace

const char* to_string(Failure f) {
  switch (f) {
    case Failure::kInvalid: return "invalid problem";
    case Failure::kInfeasible: return "infeasible";
    case Failure::kRankDeficient: return "rank-deficient equality constraints";
    case Failure::kNotPositiveDefinite: return "Hessian not positive definite";
    case Failure::kIterationLimit: return "iteration limit reached";
    case Failure::kSingularKkt: return "singular KKT system";
  }
  return "unknown";
}

Problem::Problem(Eigen::MatrixXd G_, Eigen::VectorXd g0_) : G(std::move(G_)), g0(std::move(g0_)) {
  CE.resize(g0.size(), 0);
  ce0.resize(0);
  CI.resize(g0.size(), 0);
  ci0.resize(0);
}

void Problem::validate() const {
  const auto bad = [](const std::string& what) { return QpError(Failure::kInvalid, what); };
  const Eigen::Index n = g0.size();
  if (n == 0) throw bad("problem has no variables");
  if (G.rows() != n || G.cols() != n) throw bad("G must be n x n");
  if (CE.rows() != n || CE.cols() != ce0.size()) throw bad("CE must be n x p with p = size(ce0)");
  if (CI.rows() != n || CI.cols() != ci0.size()) throw bad("CI must be n x m with m = size(ci0)");
  if (ce0.size() > n) throw bad("more equality constraints than variables");
  if (!G.allFinite() || !g0.allFinite() || !CE.allFinite() || !ce0.allFinite() || !CI.allFinite() ||
      !ci0.allFinite()) {
    throw bad("problem data must be finite");
  }
  const double asym = (G - G.transpose()).cwiseAbs().rowwise().sum().maxCoeff();
  if (asym >= 1e-12 * std::max(1.0, G.cwiseAbs().maxCoeff())) throw bad("G is not symmetric");
}

double Problem::objective(const Eigen::VectorXd& x) const { return 0.5 * x.dot(G * x) + g0.dot(x); }

Solution solve(const Problem& P, double tol) {
  P.validate();
  const int n = P.n();
  const int p = P.p();
  const int m = P.m();

  if (p > 0) {
    Eigen::ColPivHouseholderQR<MatrixXd> qr(P.CE);
    qr.setThreshold(1e-10);
    if (qr.rank() < p) throw QpError(Failure::kRankDeficient, "equality constraints are linearly dependent");
  }

  Solution out;
  MatrixXd G = P.G;
  Eigen::LLT<MatrixXd> llt(G);
  if (llt.info() != Eigen::Success) {
    const double lift = 1e-10 * std::max(G.trace(), 0.0) / n;
    if (lift > 0.0) {
      G.diagonal().array() += lift;
      llt.compute(G);
    }
    if (lift <= 0.0 || llt.info() != Eigen::Success) {
      throw QpError(Failure::kNotPositiveDefinite, "G is not positive definite after regularization");
    }
    out.regularized = true;
  }

  const MatrixXd L = llt.matrixL();
  const MatrixXd Linv = L.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(n, n));
  const double c1 = G.trace();

  Factorization F;
  F.R = MatrixXd::Zero(n, n);
  F.J = Linv.transpose();
  const double c2 = F.J.trace();

  const auto rebuild = [&](const std::vector<int>& A, int count) {
    F.J = Linv.transpose();
    F.R.setZero();
    F.iq = 0;
    F.r_norm = 1.0;
    for (int i = 0; i < count; ++i) {
      const VectorXd np = A[i] < 0 ? VectorXd(P.CE.col(-A[i] - 1)) : VectorXd(P.CI.col(A[i]));
      VectorXd d = F.J.transpose() * np;
      F.add(d);
    }
  };

  VectorXd x = -llt.solve(P.g0);
  VectorXd u = VectorXd::Zero(n + m + 1);
  std::vector<int> A(n + m + 1, 0);
  int iterations = 0;
  const int max_iterations = 50 * (n + m);

  for (int i = 0; i < p; ++i) {
    const VectorXd np = P.CE.col(i);
    VectorXd d = F.J.transpose() * np;
    const VectorXd z = F.z(d);
    const VectorXd r = F.r(d);
    double t2 = 0.0;
    if (std::abs(z.dot(z)) > kEps) t2 = (-np.dot(x) - P.ce0(i)) / z.dot(np);
    x += t2 * z;
    u(F.iq) = t2;
    u.head(F.iq) -= t2 * r;
    A[i] = -i - 1;
    if (!F.add(d)) throw QpError(Failure::kRankDeficient, "equality constraints are linearly dependent");
  }

  std::vector<int> iai(m);
  std::vector<char> iaexcl(m, 1);
  for (int i = 0; i < m; ++i) iai[i] = i;
  VectorXd s(m);
  VectorXd x_old;
  VectorXd u_old;
  std::vector<int> A_old;
  int iq_old = 0;

  const auto count = [&]() {
    if (++iterations > max_iterations) {
      throw QpError(Failure::kIterationLimit, "dual active-set method exceeded " + std::to_string(max_iterations) +
                                                  " iterations");
    }
  };

  const double violation = 1e-2 * tol;
  bool done = false;
  while (!done) {
    count();
    for (int i = p; i < F.iq; ++i) iai[A[i]] = -1;
    double psi = 0.0;
    for (int i = 0; i < m; ++i) {
      iaexcl[i] = 1;
      s(i) = P.CI.col(i).dot(x) + P.ci0(i);
      psi += std::min(0.0, s(i));
    }
    if (std::abs(psi) <= std::min(m * kEps * c1 * c2 * 100.0, violation)) break;
    x_old = x;
    u_old = u;
    A_old = A;
    iq_old = F.iq;

    bool choose = true;
    while (choose) {
      choose = false;
      int ip = -1;
      double ss = -violation;
      for (int i = 0; i < m; ++i) {
        if (s(i) < ss && iai[i] != -1 && iaexcl[i]) {
          ss = s(i);
          ip = i;
        }
      }
      if (ip < 0) {
        done = true;
        break;
      }
      const VectorXd np = P.CI.col(ip);
      u(F.iq) = 0.0;
      A[F.iq] = ip;

      for (;;) {
        count();
        VectorXd d = F.J.transpose() * np;
        const VectorXd z = F.z(d);
        const VectorXd r = F.r(d);

        double t1 = kInf;
        int l = -1;
        for (int k = p; k < F.iq; ++k) {
          if (r(k) > 0.0 && u(k) / r(k) < t1) {
            t1 = u(k) / r(k);
            l = A[k];
          }
        }
        double t2 = kInf;
        if (std::abs(z.dot(z)) > kEps) t2 = -s(ip) / z.dot(np);
        const double t = std::min(t1, t2);

        if (t >= kInf) {
          std::vector<int> eq(p);
          for (int i = 0; i < p; ++i) eq[i] = i;
          std::vector<int> ineq;
          for (int k = p; k < F.iq; ++k) ineq.push_back(A[k]);
          ineq.push_back(ip);
          std::sort(ineq.begin(), ineq.end());
          std::ostringstream msg;
          msg << "no point satisfies inequality " << ip << " together with the active set";
          throw QpError(Failure::kInfeasible, msg.str(), std::move(eq), std::move(ineq));
        }

        const auto position_of = [&](int constraint) {
          for (int k = p; k < F.iq; ++k) {
            if (A[k] == constraint) return k;
          }
          return -1;
        };

        if (t2 >= kInf) {
          u.head(F.iq) -= t * r;
          u(F.iq) += t;
          iai[l] = l;
          F.remove(position_of(l), A, u);
          continue;
        }

        x += t * z;
        u.head(F.iq) -= t * r;
        u(F.iq) += t;

        if (std::abs(t - t2) < kEps) {
          if (!F.add(d)) {
            iaexcl[ip] = 0;
            A = A_old;
            u = u_old;
            x = x_old;
            for (int i = 0; i < m; ++i) iai[i] = i;
            for (int i = p; i < iq_old; ++i) iai[A[i]] = -1;
            rebuild(A, iq_old);
            choose = true;
            break;
          }
          iai[ip] = -1;
          break;
        }

        iai[l] = l;
        F.remove(position_of(l), A, u);
        s(ip) = np.dot(x) + P.ci0(ip);
      }
    }
  }

  std::vector<int> active;
  for (int k = p; k < F.iq; ++k) active.push_back(A[k]);
  std::sort(active.begin(), active.end());

  VectorXd lam_eq = VectorXd::Zero(p);
  VectorXd lam_in = VectorXd::Zero(m);
  for (int k = 0; k < F.iq; ++k) {
    if (A[k] < 0) {
      lam_eq(-A[k] - 1) = u(k);
    } else {
      lam_in(A[k]) = u(k);
    }
  }

  // Polish on the final active set with the unmodified Hessian.
  VectorXd xp;
  VectorXd lam;
  for (const MatrixXd* H : {&P.G, static_cast<const MatrixXd*>(&G)}) {
    if (!kkt_solve(P, *H, active, xp, lam)) continue;
    bool ok = true;
    for (int i = 0; i < m && ok; ++i) ok = P.CI.col(i).dot(xp) + P.ci0(i) >= -tol;
    for (Eigen::Index i = p; i < lam.size() && ok; ++i) ok = lam(i) >= -tol;
    if (p) ok = ok && inf_norm(P.CE.transpose() * xp + P.ce0) <= tol;
    if (!ok) continue;
    x = xp;
    lam_eq = lam.head(p);
    lam_in.setZero();
    for (std::size_t i = 0; i < active.size(); ++i) lam_in(active[i]) = std::max(0.0, lam(p + i));
    break;
  }

  out.x = x;
  out.objective = P.objective(x);
  out.active_set = std::move(active);
  out.lambda_eq = lam_eq;
  out.lambda_ineq = lam_in;
  out.iterations = iterations;
  return out;
}

Solution solve_equality(const Eigen::MatrixXd& G, const Eigen::VectorXd& g0, const Eigen::MatrixXd& CE,
                        const Eigen::VectorXd& ce0) {
  Problem P(G, g0);
  P.CE = CE;
  P.ce0 = ce0;
  P.validate();
  VectorXd x;
  VectorXd lam;
  if (!kkt_solve(P, G, {}, x, lam)) throw QpError(Failure::kSingularKkt, "KKT matrix is singular");
  Solution out;
  out.x = x;
  out.objective = P.objective(x);
  out.lambda_eq = lam;
  out.lambda_ineq.resize(0);
  return out;
}

KktResiduals kkt_residuals(const Problem& P, const Solution& S) {
  KktResiduals r;
  VectorXd grad = P.G * S.x + P.g0;
  if (P.p()) grad -= P.CE * S.lambda_eq;
  if (P.m()) grad -= P.CI * S.lambda_ineq;
  r.stationarity = inf_norm(grad);
  if (P.p()) r.equality = inf_norm(P.CE.transpose() * S.x + P.ce0);
  if (P.m()) {
    const VectorXd slack = P.CI.transpose() * S.x + P.ci0;
    r.min_slack = slack.minCoeff();
    r.min_multiplier = S.lambda_ineq.minCoeff();
    r.complementarity = inf_norm(slack.cwiseProduct(S.lambda_ineq));
  }
  return r;
}

double dual_objective(const Problem& P, const Solution& S) {
  VectorXd w = -P.g0;
  double lin = 0.0;
  if (P.p()) {
    w += P.CE * S.lambda_eq;
    lin += S.lambda_eq.dot(P.ce0);
  }
  if (P.m()) {
    w += P.CI * S.lambda_ineq;
    lin += S.lambda_ineq.dot(P.ci0);
  }
  const VectorXd xs = P.G.ldlt().solve(w);
  return -0.5 * xs.dot(w) - lin;
}

}  // namespace quadloco::qp
