#pragma once

#include <array>

#include "fovcbf/geom3d.hpp"
#include "fovcbf/state.hpp"

namespace fovcbf {

/// Linear class-K function gamma(h) = kappa * h.
struct ClassK {
  double kappa = 1.0;

  static ClassK linear(double kappa);

  double operator()(double h) const { return kappa * h; }
  double derivative(double /*h*/) const { return kappa; }
  double slope0() const { return kappa; }
};

/// Conic field of view: optical axis `axis` (body frame) and half aperture.
struct FovSensor {
  Vec3 axis = Vec3::UnitX();
  double half_aperture = 0.0;
  double cos_half_aperture = 1.0;

  static FovSensor make(const Vec3& axis, double half_aperture);
};

/// What the filter knows about one feature. `q` is simulator ground truth
/// and is never read by the constraint assembly.
struct FeatureObs {
  Vec3 beta = Vec3::UnitX();
  Vec3 beta_dot = Vec3::Zero();
  double d_hat = 1.0;
  Vec3 q = Vec3::Zero();
};

struct RobustnessParams {
  double gamma0 = 3.0;
  double d_min = 0.5;  // lower bound on d / d_hat
  double d_max = 15.0; // upper bound on d / d_hat
  double margin = 0.0; // M in the second-order angular row

  void validate() const;
};

struct Interval {
  double lo;
  double hi;
  bool closed;

  bool contains(double x, double tol = 0.0) const {
    return closed ? (x >= lo - tol && x <= hi + tol) : (x > lo - tol && x < hi + tol);
  }
};

/// coeff_u . u + coeff_c1 * c1 + coeff_c2 * c2 >= rhs
struct ConstraintRow {
  Input6 coeff_u = Input6::Zero();
  double coeff_c1 = 0.0;
  double coeff_c2 = 0.0;
  double rhs = 0.0;

  /// Left side minus right side; nonnegative when satisfied.
  double residual(const Input6& u, double c1, double c2) const {
    return coeff_u.dot(u) + coeff_c1 * c1 + coeff_c2 * c2 - rhs;
  }
};

/// The split pair for one feature plus its coupling c1 + c2 = gamma0 and the
/// admissible interval for c2. rows[0] carries the distance-dependent part.
struct FeatureRows {
  std::array<ConstraintRow, 2> rows;
  double gamma0 = 0.0;
  Interval c2_range{0.0, 0.0, true};
  double barrier = 0.0;
};

double barrier(const Vec3& beta, const Rotation& R, const FovSensor& sensor);

/// Position gradient -P(beta) R e_c / d.
Vec3 grad_p(const Vec3& beta, const Rotation& R, const FovSensor& sensor, double d);

/// Body-frame attitude gradient; <grad_R, omega> is dh/dt under dR/dt = R hat(omega).
Vec3 grad_R(const Vec3& beta, const Rotation& R, const FovSensor& sensor);

/// Second-order terms of h along the flow, expressed with the observed
/// bearing rate so that no 1/d^2 factor remains.
///
/// All values use obs.d_hat where a 1/d factor is left. With d_hat equal to
/// the true distance and the exact bearing rate -P(beta) v / d:
///   h'' = <grad_p, a> + <grad_R, alpha> + rot_rot + 2 rot_vel
///         + vperp_vperp + 2 vperp_vpar
/// The parallel-parallel Hessian term vanishes identically and is not part
/// of the result.
struct HessianTerms {
  double rot_rot = 0.0;      // <hess_R[w], w>
  double rot_vel = 0.0;      // <hess_R[w], v>, from the bearing rate
  Mat3 cross_matrix = Mat3::Zero();  // P(beta) R hat(e_c) / d_hat; v^T M w = rot_vel
  double vperp_vperp = 0.0;  // <hess_p[v_perp], v_perp>
  double vperp_vpar = 0.0;   // <hess_p[v_perp], v_par>
};

HessianTerms hess_terms(const BodyState& state, const FeatureObs& obs, const FovSensor& sensor);

/// Lie derivative of h along the drift, computed from the bearing rate.
double lie_derivative(const BodyState& state, const FeatureObs& obs, const FovSensor& sensor);

/// 4 g1'(0) g2'(0) / (g1'(0) + g2'(0))^2, symmetric in its arguments.
double k_constant(const ClassK& g1, const ClassK& g2);

/// Open interval of admissible c2 for the velocity-level split.
Interval c2_bounds_first(const RobustnessParams& rp);

/// Closed interval of admissible c2 for the acceleration-level split.
Interval c2_bounds_second(double k, const RobustnessParams& rp);

/// Split rows for the velocity-controlled body; decision (v, omega, c1, c2).
FeatureRows first_order_rows(const BodyState& state, const FeatureObs& obs,
                             const FovSensor& sensor, const ClassK& gamma,
                             const RobustnessParams& rp);

/// Split rows for the acceleration-controlled body; decision (a, alpha, c1, c2).
FeatureRows second_order_rows(const BodyState& state, const FeatureObs& obs,
                              const FovSensor& sensor, const ClassK& g1, const ClassK& g2,
                              const RobustnessParams& rp);

}  // namespace fovcbf
