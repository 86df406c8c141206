#include "fovcbf/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace fovcbf {

void QuadrotorParams::validate() const {
  if (!(mass > 0.0)) throw Error(ErrorCode::ValidationError, "mass > 0 required");
  if (!(gravity >= 0.0)) throw Error(ErrorCode::ValidationError, "gravity >= 0 required");
  if ((inertia - inertia.transpose()).cwiseAbs().maxCoeff() > 1e-12 ||
      inertia.selfadjointView<Eigen::Lower>().eigenvalues().minCoeff() <= 0.0) {
    throw Error(ErrorCode::ValidationError, "inertia must be symmetric positive definite");
  }
}

void TrackingGains::validate() const {
  if (!(k_p > 0.0 && k_v > 0.0 && k_R > 0.0 && k_omega > 0.0)) {
    throw Error(ErrorCode::ValidationError, "tracking gains must be positive");
  }
}

BodyState step_first_order(const BodyState& s, const Input6& velocity, double dt) {
  BodyState out = s;
  out.p = s.p + velocity.head<3>() * dt;
  out.R = Rotation::orthonormalized((s.R * so3_exp(velocity.tail<3>() * dt)).matrix());
  out.v = velocity.head<3>();
  out.omega = velocity.tail<3>();
  return out;
}

namespace {

// theta' for R = R0 exp(theta) under the body rate omega, series truncated
// after the terms order four needs.
Vec3 dexp_inv(const Vec3& theta, const Vec3& omega) {
  const Vec3 c = theta.cross(omega);
  return omega + 0.5 * c + theta.cross(c) / 12.0;
}

struct Stage {
  Vec3 p, v, w, theta;
};

struct Deriv {
  Vec3 dp, dv, dw, dtheta;
};

}  // namespace

BodyState integrate_rkmk4(const BodyState& s, double t, double dt, const AccelField& field) {
  auto eval = [&](double ts, const Stage& y) {
    BodyState st;
    st.p = y.p;
    st.v = y.v;
    st.omega = y.w;
    st.R = s.R * so3_exp(y.theta);
    const Input6 acc = field(ts, st);
    return Deriv{y.v, acc.head<3>(), acc.tail<3>(), dexp_inv(y.theta, y.w)};
  };
  auto advance = [](const Stage& y, const Deriv& k, double h) {
    return Stage{y.p + h * k.dp, y.v + h * k.dv, y.w + h * k.dw, y.theta + h * k.dtheta};
  };

  const Stage y0{s.p, s.v, s.omega, Vec3::Zero()};
  const Deriv k1 = eval(t, y0);
  const Deriv k2 = eval(t + 0.5 * dt, advance(y0, k1, 0.5 * dt));
  const Deriv k3 = eval(t + 0.5 * dt, advance(y0, k2, 0.5 * dt));
  const Deriv k4 = eval(t + dt, advance(y0, k3, dt));

  const double w = dt / 6.0;
  BodyState out;
  out.p = s.p + w * (k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp);
  out.v = s.v + w * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv);
  out.omega = s.omega + w * (k1.dw + 2.0 * k2.dw + 2.0 * k3.dw + k4.dw);
  const Vec3 theta = w * (k1.dtheta + 2.0 * k2.dtheta + 2.0 * k3.dtheta + k4.dtheta);
  out.R = Rotation::orthonormalized((s.R * so3_exp(theta)).matrix());
  return out;
}

BodyState step_second_order(const BodyState& s, const Input6& accel, double dt) {
  return integrate_rkmk4(s, 0.0, dt, [&accel](double, const BodyState&) { return accel; });
}

Vec3 saturate_tilt(const Vec3& accel, double max_tilt, double gravity) {
  Vec3 f = accel + gravity * Vec3::UnitZ();
  f.z() = std::max(f.z(), kMinThrustFraction * gravity);
  const double horizontal = f.head<2>().norm();
  const double limit = std::tan(max_tilt) * f.z();
  if (horizontal > limit) f.head<2>() *= limit / horizontal;
  return f - gravity * Vec3::UnitZ();
}

AttitudeCommand attitude_command(const BodyState& s, const Vec3& accel, const Vec3& heading,
                                 const TrackingGains& gains, const QuadrotorParams& params) {
  const Vec3 thrust_dir = accel + params.gravity * Vec3::UnitZ();
  const double thrust_norm = thrust_dir.norm();
  if (!(thrust_norm >= 1e-6)) {
    throw Error(ErrorCode::DegenerateThrust, "commanded acceleration cancels gravity");
  }
  const Vec3 b3 = thrust_dir / thrust_norm;
  Vec3 b2 = b3.cross(heading);
  if (!(b2.norm() >= 1e-9)) {
    throw Error(ErrorCode::DegenerateThrust, "heading is parallel to the thrust axis");
  }
  b2.normalize();
  Mat3 rd;
  rd.col(0) = b2.cross(b3);
  rd.col(1) = b2;
  rd.col(2) = b3;

  AttitudeCommand cmd;
  cmd.attitude_ref = Rotation::orthonormalized(rd);
  const Mat3& R = s.R.matrix();
  const Vec3 e_R = 0.5 * vee(rd.transpose() * R - R.transpose() * rd);
  // desired body rate taken as zero; gains are torque gains, so
  // J alpha + omega x J omega = -k_R e_R - k_omega omega + omega x J omega
  cmd.alpha = params.inertia.ldlt().solve(-gains.k_R * e_R - gains.k_omega * s.omega);
  return cmd;
}

GeometricCommand lee_controller(const BodyState& s, const Reference& ref, const Vec3& heading,
                                const TrackingGains& gains, const QuadrotorParams& params) {
  GeometricCommand cmd;
  cmd.accel = gains.k_p * (ref.p - s.p) + gains.k_v * (ref.v - s.v) + ref.a;
  const AttitudeCommand att = attitude_command(s, cmd.accel, heading, gains, params);
  cmd.alpha = att.alpha;
  cmd.attitude_ref = att.attitude_ref;
  cmd.wrench = map_accel_to_quadrotor(stack_input(cmd.accel, cmd.alpha), s, params);
  return cmd;
}

Wrench map_accel_to_quadrotor(const Input6& accel, const BodyState& s,
                              const QuadrotorParams& params) {
  const Vec3 a = accel.head<3>();
  const Vec3 alpha = accel.tail<3>();
  Wrench w;
  w.thrust = params.mass * (a + params.gravity * Vec3::UnitZ()).dot(s.R.matrix().col(2));
  w.torque = params.inertia * alpha + s.omega.cross(params.inertia * s.omega);
  return w;
}

Input6 quadrotor_accel(const BodyState& s, const Wrench& w, const QuadrotorParams& params) {
  const Vec3 lin = -params.gravity * Vec3::UnitZ() + (w.thrust / params.mass) * s.R.matrix().col(2);
  const Vec3 ang =
      params.inertia.ldlt().solve(w.torque - s.omega.cross(params.inertia * s.omega));
  return stack_input(lin, ang);
}

BodyState quadrotor_step(const BodyState& s, const Wrench& w, double dt,
                         const QuadrotorParams& params) {
  return integrate_rkmk4(s, 0.0, dt, [&](double, const BodyState& st) {
    return quadrotor_accel(st, w, params);
  });
}

}  // namespace fovcbf
