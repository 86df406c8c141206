#pragma once

#include <Eigen/Dense>

#include "fovcbf/geom3d.hpp"

namespace fovcbf {

/// Rigid-body state. `v` is expressed in the inertial frame, `omega` in the
/// body frame. First-order models ignore `v` and `omega`.
struct BodyState {
  Vec3 p = Vec3::Zero();
  Rotation R;
  Vec3 v = Vec3::Zero();
  Vec3 omega = Vec3::Zero();
};

/// Stacked 6-D input: (linear, angular) velocity or acceleration.
using Input6 = Eigen::Matrix<double, 6, 1>;

inline Input6 stack_input(const Vec3& linear, const Vec3& angular) {
  Input6 u;
  u << linear, angular;
  return u;
}

}  // namespace fovcbf
