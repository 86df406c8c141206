#pragma once

#include <functional>

#include "fovcbf/geom3d.hpp"
#include "fovcbf/state.hpp"

namespace fovcbf {

struct QuadrotorParams {
  double mass = 1.0;
  Mat3 inertia = Eigen::Vector3d(0.01, 0.01, 0.02).asDiagonal();
  double gravity = 9.81;

  void validate() const;
};

/// Position gains act per unit mass. The attitude gains are torque gains for
/// the quadrotor and act per unit inertia on the fully actuated bodies.
struct TrackingGains {
  double k_p = 20.8;
  double k_v = 13.3;
  double k_R = 54.81;
  double k_omega = 10.54;

  void validate() const;
};

struct Reference {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 a = Vec3::Zero();
};

struct Wrench {
  double thrust = 0.0;
  Vec3 torque = Vec3::Zero();
};

/// Output of the geometric tracking controller. `accel` excludes gravity;
/// `alpha` is the body angular acceleration the torque produces.
struct GeometricCommand {
  Vec3 accel = Vec3::Zero();
  Vec3 alpha = Vec3::Zero();
  Rotation attitude_ref;
  Wrench wrench;
};

/// (linear, angular) acceleration as a function of time and state.
using AccelField = std::function<Input6(double t, const BodyState& s)>;

/// p += v dt, R <- R exp(omega dt); exact for constant inputs.
BodyState step_first_order(const BodyState& s, const Input6& velocity, double dt);

/// Double integrator on R^3 x SO(3) with inputs held over the step.
BodyState step_second_order(const BodyState& s, const Input6& accel, double dt);

/// One Runge-Kutta-Munthe-Kaas step of order four for
///   p' = v, v' = a, R' = R hat(omega), omega' = alpha
/// with (a, alpha) = field(t, state). The attitude increment is integrated
/// in the Lie algebra and mapped back with so3_exp, then re-orthonormalized.
BodyState integrate_rkmk4(const BodyState& s, double t, double dt, const AccelField& field);

inline constexpr double kMinThrustFraction = 0.3;

/// Clips a commanded acceleration so that accel + g e3 keeps at least
/// kMinThrustFraction * g upwards and tilts at most max_tilt from vertical.
Vec3 saturate_tilt(const Vec3& accel, double max_tilt, double gravity);

struct AttitudeCommand {
  Rotation attitude_ref;
  Vec3 alpha = Vec3::Zero();
};

/// Attitude loop of the geometric controller: body z along accel + g e3,
/// body x as close to `heading` as that allows, PD on the attitude error.
AttitudeCommand attitude_command(const BodyState& s, const Vec3& accel, const Vec3& heading,
                                 const TrackingGains& gains, const QuadrotorParams& params);

/// Lee-style SE(3) tracking controller. `heading` is the desired body x
/// direction before projection onto the thrust-normal plane.
GeometricCommand lee_controller(const BodyState& s, const Reference& ref, const Vec3& heading,
                                const TrackingGains& gains, const QuadrotorParams& params);

/// Thrust along the current body z axis and the torque that realizes alpha.
Wrench map_accel_to_quadrotor(const Input6& accel, const BodyState& s,
                              const QuadrotorParams& params);

/// Rigid-body accelerations (v', omega') of the quadrotor under a wrench.
Input6 quadrotor_accel(const BodyState& s, const Wrench& w, const QuadrotorParams& params);

BodyState quadrotor_step(const BodyState& s, const Wrench& w, double dt,
                         const QuadrotorParams& params);

}  // namespace fovcbf
