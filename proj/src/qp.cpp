#include "ssqp/qp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ssqp {

namespace {

double scale_of(const ConvexQp& qp) {
  double s = 1.0;
  s = std::max(s, inf_norm(qp.q));
  if (qp.r() > 0) s = std::max(s, inf_norm(qp.b_eq));
  if (qp.s() > 0) s = std::max(s, inf_norm(qp.b_in));
  return s;
}

double objective(const ConvexQp& qp, const Vector& z) {
  return 0.5 * z.dot(qp.Q * z) + qp.q.dot(z);
}

// Equality-constrained subproblem for the working set `ws`:
//   min 1/2 z'Qz + q'z  s.t.  [A_eq; A_in(ws)] z = [b_eq; b_in(ws)]
// Null-space method: QR of A' supplies the null basis, a complete orthogonal
// decomposition the particular solution, and a triangular solve the
// multipliers. Rank-deficient row sets are tolerated as long as the
// right-hand side stays consistent.
struct EqpResult {
  Vector z;
  Vector lambda;  // one per stacked row; sign: Qz + q + A'lambda = 0
  bool ok = false;
  bool dependent_rows = false;
};

EqpResult solve_eqp(const ConvexQp& qp, const std::vector<int>& ws) {
  const int p = qp.p();
  const int r = qp.r();
  const int k = r + static_cast<int>(ws.size());
  EqpResult out;
  if (k == 0) {
    Eigen::LDLT<Matrix> ldlt(qp.Q);
    out.z = ldlt.solve(-qp.q);
    out.lambda.resize(0);
    out.ok = ldlt.info() == Eigen::Success;
    return out;
  }

  Matrix A(k, p);
  Vector b(k);
  if (r > 0) {
    A.topRows(r) = qp.A_eq;
    b.head(r) = qp.b_eq;
  }
  for (int i = 0; i < static_cast<int>(ws.size()); ++i) {
    A.row(r + i) = qp.A_in.row(ws[i]);
    b(r + i) = qp.b_in(ws[i]);
  }

  Eigen::ColPivHouseholderQR<Matrix> qr(A.transpose());
  const int rank = static_cast<int>(qr.rank());
  out.dependent_rows = rank < k;

  Vector zp;
  if (out.dependent_rows) {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(A);
    zp = cod.solve(b);
    if ((A * zp - b).cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, inf_norm(b))) {
      out.ok = false;  // inconsistent working set
      return out;
    }
  } else {
    // A' P = Q~ [R; 0]  =>  min-norm solution of A z = b from R' w = P' b
    Matrix R = qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
    Vector pb = qr.colsPermutation().transpose() * b;
    Vector w = R.transpose().triangularView<Eigen::Lower>().solve(pb);
    Vector wfull = Vector::Zero(p);
    wfull.head(k) = w;
    zp = qr.householderQ() * wfull;
  }

  Matrix Qfull = qr.householderQ();
  Matrix Z = Qfull.rightCols(p - rank);
  if (Z.cols() > 0) {
    Matrix Hr = Z.transpose() * qp.Q * Z;
    Vector rhs = -Z.transpose() * (qp.Q * zp + qp.q);
    Eigen::LDLT<Matrix> ldlt(Hr);
    Vector y = ldlt.solve(rhs);
    if (ldlt.info() != Eigen::Success) {
      out.ok = false;
      return out;
    }
    out.z = zp + Z * y;
  } else {
    out.z = zp;
  }

  // multipliers: A' lambda = -(Q z + q), least squares on dependent sets
  Vector g = -(qp.Q * out.z + qp.q);
  out.lambda = qr.solve(g);
  out.ok = true;
  return out;
}

struct LoopConfig {
  double tol = 1e-9;
  int max_iter = 0;
  double ratio_tol = 1e-12;
};

QpSolution assemble(const ConvexQp& qp, const Vector& z, const Vector& lambda,
                    const std::vector<int>& ws, QpStatus status, int iters, int exchanges) {
  QpSolution sol;
  sol.z = z;
  sol.y_eq = qp.r() > 0 ? Vector(lambda.head(qp.r())) : Vector(0);
  sol.z_in = Vector::Zero(qp.s());
  for (int i = 0; i < static_cast<int>(ws.size()); ++i) sol.z_in(ws[i]) = -lambda(qp.r() + i);
  sol.active_set = ws;
  std::sort(sol.active_set.begin(), sol.active_set.end());
  sol.status = status;
  sol.iterations = iters;
  sol.exchanges = exchanges;
  sol.kkt_residual = verify_kkt(qp, sol).max();
  return sol;
}

QpSolution active_set_loop(const ConvexQp& qp, Vector z, std::vector<int> ws, const LoopConfig& cfg) {
  const int p = qp.p();
  const int r = qp.r();
  const int s = qp.s();
  int exchanges = 0;
  int degenerate_run = 0;
  bool bland = false;

  std::vector<bool> in_ws(s, false);
  for (int i : ws) in_ws[i] = true;

  EqpResult eqp;
  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    eqp = solve_eqp(qp, ws);
    if (!eqp.ok) {
      if (ws.empty()) {
        return assemble(qp, z, Vector::Zero(r), ws, QpStatus::IterationLimit, iter, exchanges);
      }
      in_ws[ws.back()] = false;
      ws.pop_back();
      ++exchanges;
      continue;
    }

    Vector dir = eqp.z - z;
    if (inf_norm(dir) <= 1e-13 * std::max(1.0, inf_norm(z))) {
      // stationary on the working set: check inequality multipliers
      int drop = -1;
      double most_negative = -cfg.tol;
      for (int i = 0; i < static_cast<int>(ws.size()); ++i) {
        const double zin = -eqp.lambda(r + i);
        if (bland) {
          if (zin < -cfg.tol && (drop < 0 || ws[i] < ws[drop])) drop = i;
        } else if (zin < most_negative || (drop >= 0 && zin == most_negative && ws[i] < ws[drop])) {
          most_negative = zin;
          drop = i;
        }
      }
      if (drop < 0) {
        return assemble(qp, eqp.z, eqp.lambda, ws, QpStatus::Optimal, iter, exchanges);
      }
      in_ws[ws[drop]] = false;
      ws.erase(ws.begin() + drop);
      ++exchanges;
      if (++degenerate_run >= p) bland = true;
      continue;
    }

    // ratio test against rows outside the working set
    double alpha = 1.0;
    for (int i = 0; i < s; ++i) {
      if (in_ws[i]) continue;
      const double ad = qp.A_in.row(i).dot(dir);
      if (ad >= -cfg.ratio_tol) continue;
      const double slack = std::max(qp.A_in.row(i).dot(z) - qp.b_in(i), 0.0);
      alpha = std::min(alpha, slack / (-ad));
    }

    if (alpha >= 1.0) {
      z = eqp.z;
      degenerate_run = 0;
      continue;  // next pass checks multipliers
    }

    // entering row: min-ratio ties resolved by the largest violation at the
    // unblocked target, then lowest index; Bland mode takes the lowest index
    int enter = -1;
    double worst_violation = -kInf;
    for (int i = 0; i < s; ++i) {
      if (in_ws[i]) continue;
      const double ad = qp.A_in.row(i).dot(dir);
      if (ad >= -cfg.ratio_tol) continue;
      const double slack = std::max(qp.A_in.row(i).dot(z) - qp.b_in(i), 0.0);
      if (slack / (-ad) > alpha + cfg.ratio_tol) continue;
      if (bland) {
        if (enter < 0 || i < enter) enter = i;
      } else {
        const double violation = qp.b_in(i) - qp.A_in.row(i).dot(eqp.z);
        if (violation > worst_violation) {
          worst_violation = violation;
          enter = i;
        }
      }
    }

    z += alpha * dir;
    if (enter >= 0) {
      ws.push_back(enter);
      in_ws[enter] = true;
      ++exchanges;
    }
    if (alpha <= cfg.ratio_tol) {
      if (++degenerate_run >= p) bland = true;
    } else {
      degenerate_run = 0;
    }
  }

  Vector lambda = Vector::Zero(r + static_cast<int>(ws.size()));
  if (eqp.ok && eqp.lambda.size() == lambda.size()) lambda = eqp.lambda;
  return assemble(qp, z, lambda, ws, QpStatus::IterationLimit, cfg.max_iter, exchanges);
}

double worst_in_violation(const ConvexQp& qp, const Vector& z) {
  if (qp.s() == 0) return 0.0;
  return std::max(0.0, (qp.b_in - qp.A_in * z).maxCoeff());
}

// Phase 1: least squares onto the equalities, then an l1-penalty QP that
// drives the inequality violations to zero. The penalty subproblem has a
// feasible start by construction, so it never recurses.
std::optional<Vector> find_feasible(const ConvexQp& qp, double tol, int max_iter) {
  const int p = qp.p();
  const int r = qp.r();
  const int s = qp.s();
  const double scale = scale_of(qp);

  Vector z0 = Vector::Zero(p);
  if (r > 0) {
    z0 = qp.A_eq.completeOrthogonalDecomposition().solve(qp.b_eq);
    if ((qp.A_eq * z0 - qp.b_eq).cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, inf_norm(qp.b_eq))) {
      return std::nullopt;  // inconsistent equalities
    }
  }
  if (worst_in_violation(qp, z0) <= tol * scale) return z0;

  for (double kappa : {1e-6, 1e-10}) {
    ConvexQp aux;
    aux.Q = Matrix::Identity(p + s, p + s) * kappa;
    aux.q = Vector::Zero(p + s);
    aux.q.head(p) = -kappa * z0;
    aux.q.tail(s).setOnes();
    aux.A_eq = Matrix::Zero(r, p + s);
    if (r > 0) aux.A_eq.leftCols(p) = qp.A_eq;
    aux.b_eq = qp.b_eq;
    aux.A_in = Matrix::Zero(2 * s, p + s);
    aux.A_in.topLeftCorner(s, p) = qp.A_in;
    aux.A_in.topRightCorner(s, s) = Matrix::Identity(s, s);
    aux.A_in.bottomRightCorner(s, s) = Matrix::Identity(s, s);
    aux.b_in = Vector::Zero(2 * s);
    aux.b_in.head(s) = qp.b_in;

    Vector start(p + s);
    start.head(p) = z0;
    start.tail(s) = (qp.b_in - qp.A_in * z0).cwiseMax(0.0);

    LoopConfig cfg;
    cfg.tol = tol;
    cfg.max_iter = max_iter;
    QpSolution aux_sol = active_set_loop(aux, start, {}, cfg);
    z0 = aux_sol.z.head(p);
    if (worst_in_violation(qp, z0) <= std::max(10 * tol, 1e-9) * scale) return z0;
  }
  return std::nullopt;
}

void check_dimensions(const ConvexQp& qp) {
  const int p = qp.p();
  if (qp.Q.cols() != p || qp.q.size() != p) throw ConfigError("qp: Q/q dimension mismatch");
  if (qp.A_eq.rows() != qp.b_eq.size() || (qp.r() > 0 && qp.A_eq.cols() != p))
    throw ConfigError("qp: equality block dimension mismatch");
  if (qp.A_in.rows() != qp.b_in.size() || (qp.s() > 0 && qp.A_in.cols() != p))
    throw ConfigError("qp: inequality block dimension mismatch");
}

}  // namespace

const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::Optimal: return "optimal";
    case QpStatus::Infeasible: return "infeasible";
    case QpStatus::IterationLimit: return "iteration_limit";
  }
  return "unknown";
}

bool ConvexQp::validate(double spd_floor, std::string* why) const {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (Q.rows() != Q.cols()) return fail("Q not square");
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12) return fail("Q not symmetric within 1e-12");
  if (r() > p()) return fail("more equality rows than variables");
  Eigen::SelfAdjointEigenSolver<Matrix> es(Q, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < spd_floor) {
    std::ostringstream os;
    os << "min eigenvalue " << es.eigenvalues().minCoeff() << " below floor " << spd_floor;
    return fail(os.str());
  }
  return true;
}

double KktResiduals::max() const {
  return std::max(std::max(stationarity, primal), std::max(dual, complementarity));
}

QpSolution solve_qp(const ConvexQp& qp, double tol, int max_iter, const QpWarmStart* warm) {
  check_dimensions(qp);
  const int p = qp.p();
  const int s = qp.s();
  if (max_iter < 0) max_iter = 50 * (p + s);

  LoopConfig cfg;
  cfg.tol = tol;
  cfg.max_iter = std::max(max_iter, 1);

  Vector z0;
  std::vector<int> ws;
  bool have_start = false;
  if (warm && warm->z.size() == p) {
    const bool eq_ok = qp.r() == 0 ||
        (qp.A_eq * warm->z - qp.b_eq).cwiseAbs().maxCoeff() <= 1e-9 * std::max(1.0, inf_norm(qp.b_eq));
    if (eq_ok && worst_in_violation(qp, warm->z) <= 1e-9 * scale_of(qp)) {
      z0 = warm->z;
      for (int i : warm->active_set)
        if (i >= 0 && i < s && std::find(ws.begin(), ws.end(), i) == ws.end()) ws.push_back(i);
      have_start = true;
    }
  }
  if (!have_start) {
    auto z = find_feasible(qp, tol, cfg.max_iter);
    if (!z) {
      QpSolution sol;
      sol.status = QpStatus::Infeasible;
      sol.z = Vector::Zero(p);
      sol.y_eq = Vector::Zero(qp.r());
      sol.z_in = Vector::Zero(s);
      return sol;
    }
    z0 = *z;
  }
  return active_set_loop(qp, z0, ws, cfg);
}

QpSolution brute_force_qp(const ConvexQp& qp) {
  check_dimensions(qp);
  const int p = qp.p();
  const int r = qp.r();
  const int s = qp.s();
  if (s > 12) throw DimensionTooLarge("brute_force_qp: more than 12 inequality rows");

  QpSolution best;
  best.status = QpStatus::Infeasible;
  best.z = Vector::Zero(p);
  best.y_eq = Vector::Zero(r);
  best.z_in = Vector::Zero(s);
  double best_obj = kInf;

  if (r > 0) {
    Vector ls = qp.A_eq.completeOrthogonalDecomposition().solve(qp.b_eq);
    if ((qp.A_eq * ls - qp.b_eq).cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, inf_norm(qp.b_eq)))
      return best;
  }

  for (unsigned mask = 0; mask < (1u << s); ++mask) {
    std::vector<int> act;
    for (int i = 0; i < s; ++i)
      if (mask & (1u << i)) act.push_back(i);
    const int k = r + static_cast<int>(act.size());

    Matrix kkt = Matrix::Zero(p + k, p + k);
    kkt.topLeftCorner(p, p) = qp.Q;
    Vector rhs(p + k);
    rhs.head(p) = -qp.q;
    if (r > 0) {
      kkt.block(p, 0, r, p) = qp.A_eq;
      kkt.block(0, p, p, r) = qp.A_eq.transpose();
      rhs.segment(p, r) = qp.b_eq;
    }
    for (int i = 0; i < static_cast<int>(act.size()); ++i) {
      kkt.row(p + r + i).head(p) = qp.A_in.row(act[i]);
      kkt.col(p + r + i).head(p) = qp.A_in.row(act[i]).transpose();
      rhs(p + r + i) = qp.b_in(act[i]);
    }

    Eigen::FullPivLU<Matrix> lu(kkt);
    Vector sol = lu.solve(rhs);
    if ((kkt * sol - rhs).cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, inf_norm(rhs))) continue;

    Vector z = sol.head(p);
    if (qp.s() > 0) {
      bool feas = true;
      for (int i = 0; i < s; ++i) {
        if (qp.A_in.row(i).dot(z) < qp.b_in(i) - 1e-9) {
          feas = false;
          break;
        }
      }
      if (!feas) continue;
    }
    bool dual_ok = true;
    for (int i = 0; i < static_cast<int>(act.size()); ++i) {
      if (-sol(p + r + i) < -1e-9) {
        dual_ok = false;
        break;
      }
    }
    if (!dual_ok) continue;

    const double obj = objective(qp, z);
    if (obj < best_obj) {  // strict: exact ties keep the first subset found
      best_obj = obj;
      best.z = z;
      best.y_eq = r > 0 ? Vector(sol.segment(p, r)) : Vector(0);
      best.z_in = Vector::Zero(s);
      for (int i = 0; i < static_cast<int>(act.size()); ++i) best.z_in(act[i]) = -sol(p + r + i);
      best.active_set = act;
      best.status = QpStatus::Optimal;
    }
  }
  if (best.status == QpStatus::Optimal) best.kkt_residual = verify_kkt(qp, best).max();
  return best;
}

KktResiduals verify_kkt(const ConvexQp& qp, const QpSolution& sol) {
  KktResiduals res;
  Vector stat = qp.Q * sol.z + qp.q;
  if (qp.r() > 0) stat += qp.A_eq.transpose() * sol.y_eq;
  if (qp.s() > 0) stat -= qp.A_in.transpose() * sol.z_in;
  res.stationarity = inf_norm(stat);
  double primal = 0.0;
  if (qp.r() > 0) primal = (qp.A_eq * sol.z - qp.b_eq).cwiseAbs().maxCoeff();
  if (qp.s() > 0) {
    primal = std::max(primal, (qp.b_in - qp.A_in * sol.z).maxCoeff());
    primal = std::max(primal, 0.0);
    res.dual = std::max(0.0, -sol.z_in.minCoeff());
    res.complementarity = (sol.z_in.array() * (qp.A_in * sol.z - qp.b_in).array()).abs().maxCoeff();
  }
  res.primal = primal;
  return res;
}

}  // namespace ssqp
