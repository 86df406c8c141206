#include "fovcbf/cbf_core.hpp"

#include <cmath>
#include <sstream>

namespace fovcbf {

ClassK ClassK::linear(double kappa) {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) {
    throw Error(ErrorCode::InvalidRange, "class-K slope must be positive");
  }
  return ClassK{kappa};
}

FovSensor FovSensor::make(const Vec3& axis, double half_aperture) {
  if (!axis.allFinite() || std::abs(axis.norm() - 1.0) > kUnitTolerance) {
    throw Error(ErrorCode::NonUnitVector, "optical axis must be a unit vector");
  }
  if (!(half_aperture > 0.0 && half_aperture < M_PI / 2.0)) {
    throw Error(ErrorCode::InvalidRange, "half aperture must lie in (0, pi/2)");
  }
  return FovSensor{axis, half_aperture, std::cos(half_aperture)};
}

void RobustnessParams::validate() const {
  if (!(gamma0 > 0.0)) throw Error(ErrorCode::InvalidRange, "gamma0 > 0 required");
  if (!(d_min > 0.0)) throw Error(ErrorCode::InvalidRange, "d_m > 0 required");
  if (!(d_min < 1.0)) throw Error(ErrorCode::InvalidRange, "d_m < 1 required");
  if (!(d_max > 1.0)) throw Error(ErrorCode::InvalidRange, "d_M > 1 required");
  if (!(margin >= 0.0)) throw Error(ErrorCode::InvalidRange, "M >= 0 required");
}

double barrier(const Vec3& beta, const Rotation& R, const FovSensor& sensor) {
  return beta.dot(R * sensor.axis) - sensor.cos_half_aperture;
}

Vec3 grad_p(const Vec3& beta, const Rotation& R, const FovSensor& sensor, double d) {
  const Vec3 z = R * sensor.axis;
  return -(z - beta.dot(z) * beta) / d;
}

Vec3 grad_R(const Vec3& beta, const Rotation& R, const FovSensor& sensor) {
  // -(beta^T R hat(e_c))^T = hat(e_c) R^T beta
  return sensor.axis.cross(R.matrix().transpose() * beta);
}

HessianTerms hess_terms(const BodyState& state, const FeatureObs& obs, const FovSensor& sensor) {
  const Mat3& R = state.R.matrix();
  const Vec3& beta = obs.beta;
  const Vec3& beta_dot = obs.beta_dot;
  const Vec3& w = state.omega;
  const Vec3 z = R * sensor.axis;
  const Mat3 hat_ec = hat(sensor.axis);

  HessianTerms t;
  t.rot_rot = w.dot(hat(R.transpose() * beta) * hat_ec * w);
  // v^T P R hat(e_c) w / d with P v = -d beta_dot
  t.rot_vel = -beta_dot.dot(R * (hat_ec * w));
  t.cross_matrix = projector(beta) * R * hat_ec / obs.d_hat;
  t.vperp_vperp = -beta.dot(z) * beta_dot.squaredNorm();
  t.vperp_vpar = state.v.dot(beta) * beta_dot.dot(z - beta.dot(z) * beta) / obs.d_hat;
  return t;
}

double lie_derivative(const BodyState& state, const FeatureObs& obs, const FovSensor& sensor) {
  const Vec3 z = state.R * sensor.axis;
  return obs.beta_dot.dot(z) + grad_R(obs.beta, state.R, sensor).dot(state.omega);
}

double k_constant(const ClassK& g1, const ClassK& g2) {
  double s1 = g1.slope0();
  double s2 = g2.slope0();
  if (s1 < s2) std::swap(s1, s2);
  const double sum = s1 + s2;
  return 4.0 * s1 * s2 / (sum * sum);
}

Interval c2_bounds_first(const RobustnessParams& rp) {
  rp.validate();
  return {rp.gamma0 / (1.0 - rp.d_max), rp.gamma0 / (1.0 - rp.d_min), false};
}

Interval c2_bounds_second(double k, const RobustnessParams& rp) {
  rp.validate();
  if (!(rp.gamma0 > k)) {
    std::ostringstream os;
    os << "gamma0 = " << rp.gamma0 << " must exceed K = " << k;
    throw Error(ErrorCode::GammaTooSmall, os.str());
  }
  return {(k * rp.d_max - rp.gamma0) / (rp.d_max - 1.0),
          (k * rp.d_min - rp.gamma0) / (rp.d_min - 1.0), true};
}

FeatureRows first_order_rows(const BodyState& state, const FeatureObs& obs,
                             const FovSensor& sensor, const ClassK& gamma,
                             const RobustnessParams& rp) {
  FeatureRows out;
  out.gamma0 = rp.gamma0;
  out.c2_range = c2_bounds_first(rp);
  out.barrier = barrier(obs.beta, state.R, sensor);
  const double relax = gamma(out.barrier);

  ConstraintRow& lin = out.rows[0];
  lin.coeff_u.head<3>() = grad_p(obs.beta, state.R, sensor, obs.d_hat);
  lin.coeff_c1 = relax;

  ConstraintRow& ang = out.rows[1];
  ang.coeff_u.tail<3>() = grad_R(obs.beta, state.R, sensor);
  ang.coeff_c2 = relax;
  return out;
}

FeatureRows second_order_rows(const BodyState& state, const FeatureObs& obs,
                              const FovSensor& sensor, const ClassK& g1, const ClassK& g2,
                              const RobustnessParams& rp) {
  FeatureRows out;
  out.gamma0 = rp.gamma0;
  out.c2_range = c2_bounds_second(k_constant(g1, g2), rp);
  out.barrier = barrier(obs.beta, state.R, sensor);

  const double h = out.barrier;
  const double lf = lie_derivative(state, obs, sensor);
  const double relax = g1.derivative(h) * lf + g2(lf + g1(h));
  const HessianTerms t = hess_terms(state, obs, sensor);

  ConstraintRow& lin = out.rows[0];
  lin.coeff_u.head<3>() = grad_p(obs.beta, state.R, sensor, obs.d_hat);
  lin.coeff_c1 = relax;
  lin.rhs = -2.0 * t.vperp_vpar;

  ConstraintRow& ang = out.rows[1];
  ang.coeff_u.tail<3>() = grad_R(obs.beta, state.R, sensor);
  ang.coeff_c2 = relax;
  ang.rhs = rp.margin - (t.rot_rot + 2.0 * t.rot_vel + t.vperp_vperp);
  return out;
}

}  // namespace fovcbf
