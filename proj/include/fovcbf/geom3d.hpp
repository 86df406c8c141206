#pragma once

#include <Eigen/Dense>

#include "fovcbf/error.hpp"

namespace fovcbf {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kUnitTolerance = 1e-9;
inline constexpr double kCoincidentDistance = 1e-9;

class Rotation;
Rotation so3_exp(const Vec3& omega);

/// Element of SO(3). Construction from an arbitrary matrix validates
/// orthonormality and det = +1 within kUnitTolerance.
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}

  static Rotation identity() { return Rotation(); }
  static Rotation from_matrix(const Mat3& m);
  /// Projects an almost-orthonormal matrix back onto SO(3) (SVD polar factor).
  static Rotation orthonormalized(const Mat3& m);
  /// Builds a rotation whose first column is `forward` and whose second
  /// column lies in the plane orthogonal to `up`.
  static Rotation look_at(const Vec3& forward, const Vec3& up = Vec3::UnitZ());

  const Mat3& matrix() const { return m_; }
  Vec3 operator*(const Vec3& v) const { return m_ * v; }
  Rotation operator*(const Rotation& other) const;
  Rotation transpose() const;

  /// Unit quaternion (w, x, y, z) with w >= 0.
  Eigen::Vector4d quaternion_wxyz() const;

  /// Frobenius norm of R^T R - I.
  double orthonormality_error() const;

 private:
  friend Rotation so3_exp(const Vec3& omega);
  explicit Rotation(const Mat3& m) : m_(m) {}
  Mat3 m_;
};

/// Skew matrix with hat(v) * w == v.cross(w).
Mat3 hat(const Vec3& v);
Vec3 vee(const Mat3& m);

/// Orthogonal projector onto the plane perpendicular to a unit vector.
Mat3 projector(const Vec3& unit);

struct BearingDistance {
  Vec3 beta;
  double distance;
};

/// Unit bearing from p towards q and their distance.
BearingDistance bearing_distance(const Vec3& p, const Vec3& q);

/// Rodrigues exponential of a rotation vector.
Rotation so3_exp(const Vec3& omega);
/// Inverse of so3_exp for rotation angles below pi.
Vec3 so3_log(const Rotation& r);

}  // namespace fovcbf
