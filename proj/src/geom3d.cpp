#include "fovcbf/geom3d.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fovcbf {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonUnitVector: return "NonUnitVector";
    case ErrorCode::CoincidentPoints: return "CoincidentPoints";
    case ErrorCode::InvalidRange: return "InvalidRange";
    case ErrorCode::GammaTooSmall: return "GammaTooSmall";
    case ErrorCode::DegenerateThrust: return "DegenerateThrust";
    case ErrorCode::ScenarioError: return "ScenarioError";
    case ErrorCode::EmptyLog: return "EmptyLog";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Rotation Rotation::from_matrix(const Mat3& m) {
  Rotation r(m);
  if (!m.allFinite() || r.orthonormality_error() > kUnitTolerance ||
      std::abs(m.determinant() - 1.0) > kUnitTolerance) {
    std::ostringstream os;
    os << "matrix is not a rotation (orthonormality error " << r.orthonormality_error()
       << ", det " << m.determinant() << ")";
    throw Error(ErrorCode::InvalidRange, os.str());
  }
  return r;
}

Rotation Rotation::orthonormalized(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
  return Rotation(u * v.transpose());
}

Rotation Rotation::look_at(const Vec3& forward, const Vec3& up) {
  const Vec3 x = forward.normalized();
  Vec3 y = up.cross(x);
  if (y.norm() < 1e-9) y = Vec3::UnitX().cross(x);
  y.normalize();
  Mat3 m;
  m.col(0) = x;
  m.col(1) = y;
  m.col(2) = x.cross(y);
  return Rotation(m);
}

Rotation Rotation::operator*(const Rotation& other) const { return Rotation(m_ * other.m_); }

Rotation Rotation::transpose() const { return Rotation(m_.transpose()); }

Eigen::Vector4d Rotation::quaternion_wxyz() const {
  Eigen::Quaterniond q(m_);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() *= -1.0;
  return {q.w(), q.x(), q.y(), q.z()};
}

double Rotation::orthonormality_error() const {
  return (m_.transpose() * m_ - Mat3::Identity()).norm();
}

Mat3 hat(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Vec3 vee(const Mat3& m) { return {m(2, 1), m(0, 2), m(1, 0)}; }

Mat3 projector(const Vec3& unit) {
  if (!unit.allFinite() || std::abs(unit.norm() - 1.0) > kUnitTolerance) {
    std::ostringstream os;
    os << "projector needs a unit vector, got norm " << unit.norm();
    throw Error(ErrorCode::NonUnitVector, os.str());
  }
  return Mat3::Identity() - unit * unit.transpose();
}

BearingDistance bearing_distance(const Vec3& p, const Vec3& q) {
  const Vec3 diff = q - p;
  const double d = diff.norm();
  if (!(d >= kCoincidentDistance)) {
    throw Error(ErrorCode::CoincidentPoints, "agent position coincides with feature");
  }
  return {diff / d, d};
}

Rotation so3_exp(const Vec3& omega) {
  const double theta = omega.norm();
  const Mat3 k = hat(omega);
  double a, b;
  if (theta < 1e-4) {
    // Taylor terms of sin(t)/t and (1-cos t)/t^2
    const double t2 = theta * theta;
    a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
    b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / (theta * theta);
  }
  return Rotation(Mat3::Identity() + a * k + b * k * k);
}

Vec3 so3_log(const Rotation& r) {
  const Mat3& m = r.matrix();
  const double c = std::clamp((m.trace() - 1.0) / 2.0, -1.0, 1.0);
  const double theta = std::acos(c);
  const Vec3 axis_sin = vee(m - m.transpose()) / 2.0;  // sin(theta) * axis
  if (theta < 1e-6) return axis_sin;
  if (M_PI - theta < 1e-6) {
    // near pi: axis from the symmetric part
    const Mat3 s = (m + Mat3::Identity()) / 2.0;
    Eigen::Index col;
    s.diagonal().maxCoeff(&col);
    Vec3 axis = s.col(col).normalized();
    return theta * axis;
  }
  return theta / std::sin(theta) * axis_sin;
}

}  // namespace fovcbf
