#include "fovcbf/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace fovcbf {

const char* to_string(QpStatus status) {
  switch (status) {
    case QpStatus::Optimal: return "Optimal";
    case QpStatus::Infeasible: return "Infeasible";
    case QpStatus::MaxIter: return "MaxIter";
    case QpStatus::Unbounded: return "Unbounded";
  }
  return "Unknown";
}

double QpProblem::primal_residual(const VecX& z) const {
  double worst = 0.0;
  if (A_ineq.rows() > 0) {
    worst = std::max(worst, (b_ineq - A_ineq * z).maxCoeff());
  }
  if (A_eq.rows() > 0) {
    worst = std::max(worst, (A_eq * z - b_eq).cwiseAbs().maxCoeff());
  }
  for (Eigen::Index j = 0; j < lower.size(); ++j) worst = std::max(worst, lower[j] - z[j]);
  for (Eigen::Index j = 0; j < upper.size(); ++j) worst = std::max(worst, z[j] - upper[j]);
  return worst;
}

void QpProblem::validate() const {
  const Eigen::Index n = g.size();
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidRange, msg); };
  if (H.rows() != n || H.cols() != n) fail("H must be n x n");
  if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, H.cwiseAbs().maxCoeff())) {
    fail("H must be symmetric");
  }
  if (A_ineq.rows() != b_ineq.size() || (A_ineq.rows() > 0 && A_ineq.cols() != n)) {
    fail("inequality block has inconsistent dimensions");
  }
  if (A_eq.rows() != b_eq.size() || (A_eq.rows() > 0 && A_eq.cols() != n)) {
    fail("equality block has inconsistent dimensions");
  }
  if ((lower.size() != 0 && lower.size() != n) || (upper.size() != 0 && upper.size() != n)) {
    fail("bounds must be empty or have n entries");
  }
  if (!H.allFinite() || !g.allFinite() || !A_ineq.allFinite() || !b_ineq.allFinite() ||
      !A_eq.allFinite() || !b_eq.allFinite()) {
    fail("problem data must be finite");
  }
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct ActiveSetResult {
  VecX x;
  QpStatus status = QpStatus::MaxIter;
  std::vector<int> working;
  VecX lambda;  // per inequality row
  VecX mu;      // per equality row
  int iterations = 0;
};

// Primal active-set loop on normalized data. Rows of E stay in the working
// set. x must satisfy E x = e and G x >= h up to rounding. When stop_var is
// set the loop returns as soon as x[stop_var] drops to stop_level.
ActiveSetResult active_set(const MatX& H, const VecX& g, const MatX& E, const MatX& G,
                           const VecX& h, VecX x, const QpSolverOptions& opt, int max_iter,
                           int stop_var = -1, double stop_level = 0.0) {
  const Eigen::Index n = x.size();
  const Eigen::Index ne = E.rows();
  const Eigen::Index m = G.rows();
  std::vector<char> in_working(static_cast<size_t>(m), 0);
  std::vector<int> working;

  ActiveSetResult res;
  res.lambda = VecX::Zero(m);
  res.mu = VecX::Zero(ne);

  for (int iter = 0; iter < max_iter; ++iter) {
    res.iterations = iter + 1;
    if (stop_var >= 0 && x[stop_var] <= stop_level) {
      res.status = QpStatus::Optimal;
      break;
    }
    const Eigen::Index k = ne + static_cast<Eigen::Index>(working.size());
    MatX aw(k, n);
    if (ne > 0) aw.topRows(ne) = E;
    for (size_t j = 0; j < working.size(); ++j) aw.row(ne + static_cast<Eigen::Index>(j)) = G.row(working[j]);

    Eigen::HouseholderQR<MatX> qr;
    MatX z_basis;
    if (k > 0) {
      qr.compute(aw.transpose());
      const MatX q = qr.householderQ();
      z_basis = q.rightCols(n - k);
      // put x back on the working constraints; phase one and rounding leave
      // residuals of the order of the feasibility tolerance
      VecX r(k);
      if (ne > 0) r.head(ne) = VecX::Zero(ne);
      for (size_t j = 0; j < working.size(); ++j) {
        const auto row = ne + static_cast<Eigen::Index>(j);
        r[row] = h[working[j]] - G.row(working[j]).dot(x);
      }
      if (r.cwiseAbs().maxCoeff() > 0.0) {
        const MatX rt = qr.matrixQR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
        x += q.leftCols(k) * rt.transpose().triangularView<Eigen::Lower>().solve(r);
      }
    } else {
      z_basis = MatX::Identity(n, n);
    }

    const VecX grad = H * x + g;
    const double grad_scale = std::max(1.0, grad.cwiseAbs().maxCoeff());

    VecX step = VecX::Zero(n);
    bool unbounded_ray = false;
    const VecX g_red = n - k > 0 ? VecX(z_basis.transpose() * grad) : VecX();
    const bool stationary = n - k == 0 || g_red.cwiseAbs().maxCoeff() <= 1e-11 * grad_scale;
    if (!stationary) {
      const MatX h_red = z_basis.transpose() * H * z_basis;
      Eigen::SelfAdjointEigenSolver<MatX> eig(h_red);
      const VecX& evals = eig.eigenvalues();
      const MatX& evecs = eig.eigenvectors();
      const double curv_tol = 1e-11 * std::max(1.0, evals.cwiseAbs().maxCoeff());
      VecX ray = VecX::Zero(n - k);
      VecX newton = VecX::Zero(n - k);
      for (Eigen::Index j = 0; j < evals.size(); ++j) {
        const double comp = evecs.col(j).dot(g_red);
        if (evals[j] <= curv_tol) {
          if (std::abs(comp) > 1e-12 * grad_scale) ray -= comp * evecs.col(j);
        } else {
          newton -= (comp / evals[j]) * evecs.col(j);
        }
      }
      if (ray.squaredNorm() > 0.0) {
        step = z_basis * ray;
        unbounded_ray = true;
      } else {
        step = z_basis * newton;
      }
    }

    const double x_scale = 1.0 + x.cwiseAbs().maxCoeff();
    if (stationary || step.cwiseAbs().maxCoeff() <= 1e-14 * x_scale) {
      // Stationary on the current face: check multipliers.
      VecX mult = VecX::Zero(k);
      if (k > 0) mult = qr.solve(grad);
      int drop = -1;
      double most_negative = -opt.multiplier_tol * grad_scale;
      for (size_t j = 0; j < working.size(); ++j) {
        const double lam = mult[ne + static_cast<Eigen::Index>(j)];
        if (lam < most_negative ||
            (drop >= 0 && lam == most_negative && working[j] < working[static_cast<size_t>(drop)])) {
          most_negative = lam;
          drop = static_cast<int>(j);
        }
      }
      if (drop < 0) {
        res.status = QpStatus::Optimal;
        if (ne > 0) res.mu = mult.head(ne);
        for (size_t j = 0; j < working.size(); ++j) {
          res.lambda[working[j]] = mult[ne + static_cast<Eigen::Index>(j)];
        }
        break;
      }
      in_working[static_cast<size_t>(working[static_cast<size_t>(drop)])] = 0;
      working.erase(working.begin() + drop);
      continue;
    }

    // Ratio test over constraints outside the working set.
    double alpha = unbounded_ray ? kInf : 1.0;
    int blocking = -1;
    const double step_norm = step.norm();
    for (Eigen::Index i = 0; i < m; ++i) {
      if (in_working[static_cast<size_t>(i)]) continue;
      const double rate = G.row(i).dot(step);
      if (rate >= -1e-12 * step_norm) continue;
      const double slack = std::max(0.0, G.row(i).dot(x) - h[i]);
      const double a_i = slack / -rate;
      if (a_i < alpha) {
        alpha = a_i;
        blocking = static_cast<int>(i);
      }
    }
    if (stop_var >= 0 && step[stop_var] < 0.0) {
      // never step the phase-one variable past its target
      const double a_stop = (x[stop_var] - stop_level) / -step[stop_var];
      if (a_stop < alpha) {
        alpha = a_stop;
        blocking = -1;
      }
    }
    if (!std::isfinite(alpha)) {
      res.status = QpStatus::Unbounded;
      break;
    }
    x += alpha * step;
    if (blocking >= 0) {
      in_working[static_cast<size_t>(blocking)] = 1;
      working.push_back(blocking);
    }
  }
  res.x = std::move(x);
  res.working = std::move(working);
  return res;
}

}  // namespace

QpSolution QpSolver::solve(const QpProblem& problem, const VecX* warm_start) {
  problem.validate();
  const Eigen::Index n = problem.num_vars();

  // Combined inequality list, each row normalized to unit length.
  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> rhs;
  std::vector<double> scales;
  std::vector<int> origin;  // index in the combined list
  std::vector<Eigen::RowVectorXd> all_rows;  // unnormalized, combined order
  std::vector<double> all_rhs;
  for (Eigen::Index i = 0; i < problem.A_ineq.rows(); ++i) {
    all_rows.emplace_back(problem.A_ineq.row(i));
    all_rhs.push_back(problem.b_ineq[i]);
  }
  for (Eigen::Index j = 0; j < problem.lower.size(); ++j) {
    if (!std::isfinite(problem.lower[j])) continue;
    Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(n);
    r[j] = 1.0;
    all_rows.push_back(r);
    all_rhs.push_back(problem.lower[j]);
  }
  for (Eigen::Index j = 0; j < problem.upper.size(); ++j) {
    if (!std::isfinite(problem.upper[j])) continue;
    Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(n);
    r[j] = -1.0;
    all_rows.push_back(r);
    all_rhs.push_back(-problem.upper[j]);
  }
  const int m_all = static_cast<int>(all_rows.size());

  QpSolution sol;
  sol.multipliers_ineq = VecX::Zero(m_all);
  sol.multipliers_eq = VecX::Zero(problem.A_eq.rows());

  for (int i = 0; i < m_all; ++i) {
    const double s = all_rows[static_cast<size_t>(i)].norm();
    if (s < 1e-14) {
      if (all_rhs[static_cast<size_t>(i)] > options_.infeasible_tol) {
        sol.z = VecX::Zero(n);
        sol.status = QpStatus::Infeasible;
        sol.primal_residual = all_rhs[static_cast<size_t>(i)];
        return sol;
      }
      continue;
    }
    rows.push_back(all_rows[static_cast<size_t>(i)] / s);
    rhs.push_back(all_rhs[static_cast<size_t>(i)] / s);
    scales.push_back(s);
    origin.push_back(i);
  }
  const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
  MatX G(m, n);
  VecX h(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    G.row(i) = rows[static_cast<size_t>(i)];
    h[i] = rhs[static_cast<size_t>(i)];
  }

  // Equalities: normalize and keep a linearly independent subset.
  MatX E;
  VecX e;
  std::vector<Eigen::Index> eq_origin;
  std::vector<double> eq_scales;
  if (problem.A_eq.rows() > 0) {
    Eigen::ColPivHouseholderQR<MatX> piv(problem.A_eq.transpose());
    piv.setThreshold(1e-10);
    const Eigen::Index rank = piv.rank();
    E.resize(rank, n);
    e.resize(rank);
    for (Eigen::Index r = 0; r < rank; ++r) {
      const Eigen::Index row = piv.colsPermutation().indices()[r];
      const double s = problem.A_eq.row(row).norm();
      E.row(r) = problem.A_eq.row(row) / s;
      e[r] = problem.b_eq[row] / s;
      eq_origin.push_back(row);
      eq_scales.push_back(s);
    }
  } else {
    E.resize(0, n);
    e.resize(0);
  }

  VecX x = (warm_start != nullptr && warm_start->size() == n) ? *warm_start : VecX::Zero(n);
  if (E.rows() > 0) {
    const MatX eet = E * E.transpose();
    x += E.transpose() * eet.ldlt().solve(e - E * x);
  }
  if (problem.A_eq.rows() > 0 &&
      (problem.A_eq * x - problem.b_eq).cwiseAbs().maxCoeff() > options_.infeasible_tol) {
    sol.z = x;
    sol.status = QpStatus::Infeasible;
    sol.primal_residual = problem.primal_residual(x);
    return sol;
  }

  int iterations = 0;
  const double violation = m > 0 ? std::max(0.0, (h - G * x).maxCoeff()) : 0.0;
  if (violation > options_.feasibility_tol) {
    // Phase one: minimize s subject to G x + s >= h, s >= 0.
    MatX g1(m + 1, n + 1);
    g1.setZero();
    g1.topLeftCorner(m, n) = G;
    g1.col(n).setOnes();
    VecX h1 = VecX::Zero(m + 1);
    h1.head(m) = h;
    MatX e1 = MatX::Zero(E.rows(), n + 1);
    e1.leftCols(n) = E;
    VecX x1(n + 1);
    x1 << x, violation;
    VecX c1 = VecX::Zero(n + 1);
    c1[n] = 1.0;
    const ActiveSetResult p1 =
        active_set(MatX::Zero(n + 1, n + 1), c1, e1, g1, h1, x1, options_,
                   options_.max_iterations, static_cast<int>(n), 0.0);
    iterations += p1.iterations;
    x = p1.x.head(n);
    if (p1.x[n] > options_.infeasible_tol) {
      sol.z = x;
      sol.status = p1.status == QpStatus::MaxIter ? QpStatus::MaxIter : QpStatus::Infeasible;
      sol.primal_residual = problem.primal_residual(x);
      sol.iterations = iterations;
      return sol;
    }
  }

  const ActiveSetResult p2 =
      active_set(problem.H, problem.g, E, G, h, x, options_, options_.max_iterations);
  iterations += p2.iterations;
  sol.z = p2.x;
  sol.iterations = iterations;
  sol.status = p2.status;

  // Multipliers in the caller's scaling.
  for (Eigen::Index i = 0; i < m; ++i) {
    sol.multipliers_ineq[origin[static_cast<size_t>(i)]] = p2.lambda[i] / scales[static_cast<size_t>(i)];
  }
  for (size_t r = 0; r < eq_origin.size(); ++r) {
    sol.multipliers_eq[eq_origin[r]] = p2.mu[static_cast<Eigen::Index>(r)] / eq_scales[r];
  }
  for (int w : p2.working) sol.active_set.push_back(origin[static_cast<size_t>(w)]);
  std::sort(sol.active_set.begin(), sol.active_set.end());

  // KKT residual: stationarity, complementarity, dual feasibility.
  VecX stationarity = problem.H * sol.z + problem.g;
  if (problem.A_eq.rows() > 0) stationarity -= problem.A_eq.transpose() * sol.multipliers_eq;
  double comp = 0.0;
  double dual = 0.0;
  for (int i = 0; i < m_all; ++i) {
    const auto& row = all_rows[static_cast<size_t>(i)];
    const double lam = sol.multipliers_ineq[i];
    stationarity -= lam * row.transpose();
    comp = std::max(comp, std::abs(lam * (row.dot(sol.z) - all_rhs[static_cast<size_t>(i)])));
    dual = std::max(dual, -lam);
  }
  sol.kkt_residual = std::max({stationarity.cwiseAbs().maxCoeff(), comp, dual});
  sol.primal_residual = problem.primal_residual(sol.z);
  if (sol.status == QpStatus::Optimal && sol.primal_residual > options_.infeasible_tol) {
    sol.status = QpStatus::Infeasible;
  }
  return sol;
}

QpSolution solve(const QpProblem& problem) { return QpSolver().solve(problem); }

QpProblem build_filter_qp(const Input6& u_star, std::span<const FeatureRows> features,
                          double slack_weight) {
  if (!(slack_weight >= 0.0)) {
    throw Error(ErrorCode::InvalidRange, "slack weight must be nonnegative");
  }
  FilterLayout layout{static_cast<int>(features.size()), slack_weight > 0.0};
  const int n = layout.num_vars();
  const int nf = layout.features;

  QpProblem qp;
  qp.H = MatX::Zero(n, n);
  qp.g = VecX::Zero(n);
  qp.H.topLeftCorner<6, 6>().diagonal().setConstant(2.0);
  qp.g.head<6>() = -2.0 * u_star;

  qp.A_ineq = MatX::Zero(2 * nf, n);
  qp.b_ineq = VecX::Zero(2 * nf);
  qp.A_eq = MatX::Zero(nf, n);
  qp.b_eq = VecX::Zero(nf);
  qp.lower = VecX::Constant(n, -kInf);
  qp.upper = VecX::Constant(n, kInf);

  for (int i = 0; i < nf; ++i) {
    const FeatureRows& f = features[static_cast<size_t>(i)];
    for (int r = 0; r < 2; ++r) {
      const ConstraintRow& row = f.rows[static_cast<size_t>(r)];
      const int k = 2 * i + r;
      qp.A_ineq.row(k).head<6>() = row.coeff_u.transpose();
      qp.A_ineq(k, layout.c1(i)) = row.coeff_c1;
      qp.A_ineq(k, layout.c2(i)) = row.coeff_c2;
      if (layout.slack) qp.A_ineq(k, layout.delta(i, r)) = 1.0;
      qp.b_ineq[k] = row.rhs;
    }
    qp.A_eq(i, layout.c1(i)) = 1.0;
    qp.A_eq(i, layout.c2(i)) = 1.0;
    qp.b_eq[i] = f.gamma0;

    const double shrink = f.c2_range.closed ? 0.0 : kOpenIntervalMargin;
    qp.lower[layout.c2(i)] = f.c2_range.lo + shrink;
    qp.upper[layout.c2(i)] = f.c2_range.hi - shrink;
    if (layout.slack) {
      for (int r = 0; r < 2; ++r) {
        qp.lower[layout.delta(i, r)] = 0.0;
        qp.H(layout.delta(i, r), layout.delta(i, r)) = 2.0 * slack_weight;
      }
    }
  }
  return qp;
}

}  // namespace fovcbf
