#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fovcbf/cbf_core.hpp"

namespace fovcbf {

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

/// min 0.5 z^T H z + g^T z
///  s.t. A_ineq z >= b_ineq, A_eq z = b_eq, lower <= z <= upper.
/// `lower` / `upper` may be empty (no bounds) or hold +-infinity entries.
struct QpProblem {
  MatX H;
  VecX g;
  MatX A_ineq;
  VecX b_ineq;
  MatX A_eq;
  VecX b_eq;
  VecX lower;
  VecX upper;

  Eigen::Index num_vars() const { return g.size(); }
  double objective(const VecX& z) const { return 0.5 * z.dot(H * z) + g.dot(z); }
  /// Largest violation over every constraint (0 when feasible).
  double primal_residual(const VecX& z) const;
  /// Throws InvalidRange on inconsistent dimensions or an asymmetric H.
  void validate() const;
};

enum class QpStatus { Optimal, Infeasible, MaxIter, Unbounded };

const char* to_string(QpStatus status);

struct QpSolution {
  VecX z;
  QpStatus status = QpStatus::MaxIter;
  double kkt_residual = 0.0;
  double primal_residual = 0.0;
  /// Active inequalities at return, indexed into the combined list
  /// [A_ineq rows | finite lower bounds | finite upper bounds] in that order.
  std::vector<int> active_set;
  VecX multipliers_ineq;  // same indexing as active_set, length of the combined list
  VecX multipliers_eq;
  int iterations = 0;
};

struct QpSolverOptions {
  int max_iterations = 500;
  double feasibility_tol = 1e-9;
  double infeasible_tol = 1e-8;
  double multiplier_tol = 1e-10;
};

/// Primal active-set solver for small dense convex QPs with a positive
/// semidefinite Hessian. Phase one is an LP on the maximum violation started
/// from the warm start (or the minimum-norm equality solution). Ties in both
/// the ratio test and the multiplier test go to the lowest constraint index.
class QpSolver {
 public:
  explicit QpSolver(QpSolverOptions options = {}) : options_(options) {}

  QpSolution solve(const QpProblem& problem, const VecX* warm_start = nullptr);

  const QpSolverOptions& options() const { return options_; }

 private:
  QpSolverOptions options_;
};

/// Convenience wrapper around a default-constructed solver.
QpSolution solve(const QpProblem& problem);

/// Index map of the filter decision vector
/// [u (6) | (c1, c2) per feature | (delta1, delta2) per feature if slack].
struct FilterLayout {
  int features = 0;
  bool slack = false;

  int num_vars() const { return 6 + 2 * features + (slack ? 2 * features : 0); }
  int c1(int i) const { return 6 + 2 * i; }
  int c2(int i) const { return 6 + 2 * i + 1; }
  int delta(int i, int row) const { return 6 + 2 * features + 2 * i + row; }

  Input6 input(const VecX& z) const { return z.head<6>(); }
};

inline constexpr double kOpenIntervalMargin = 1e-9;

/// Safety-filter program: min ||u - u*||^2 + slack_weight ||delta||^2 subject
/// to both split rows of every feature (each relaxed by its own delta when
/// slack_weight > 0), c1 + c2 = gamma0 and c2 in its admissible interval.
/// Open intervals are shrunk by kOpenIntervalMargin.
QpProblem build_filter_qp(const Input6& u_star, std::span<const FeatureRows> features,
                          double slack_weight);

}  // namespace fovcbf
