#include <doctest.h>

#include <random>

#include "fovcbf/geom3d.hpp"
#include "oracles.hpp"

using namespace fovcbf;

TEST_SUITE("geom3d") {

TEST_CASE("hat matches the cross product") {
  Mat3 expected;
  expected << 0, -3, 2, 3, 0, -1, -2, 1, 0;
  CHECK(hat(Vec3(1, 2, 3)) == expected);
  CHECK(hat(Vec3::Zero()) == Mat3::Zero());
  CHECK(hat(Vec3::UnitX()) * Vec3::UnitY() == Vec3::UnitZ());

  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const Vec3 a = oracle::random_vec(rng, 3), b = oracle::random_vec(rng, 3);
    const double s = std::uniform_real_distribution<double>(-2, 2)(rng);
    CHECK((hat(a) * b - a.cross(b)).norm() < 1e-14);
    CHECK((hat(a).transpose() + hat(a)).norm() == 0.0);
    CHECK((hat(s * a + b) - (s * hat(a) + hat(b))).norm() < 1e-14);
    CHECK((vee(hat(a)) - a).norm() == 0.0);
  }
}

TEST_CASE("projector") {
  CHECK(projector(Vec3::UnitX()) == Vec3(0, 1, 1).asDiagonal().toDenseMatrix());
  std::mt19937_64 rng(12);
  for (int i = 0; i < 200; ++i) {
    const Vec3 v = oracle::random_unit(rng);
    const Mat3 P = projector(v);
    CHECK((P * v).norm() < 1e-15);
    CHECK((P - P.transpose()).norm() == 0.0);
    CHECK((P * P - P).norm() < 1e-12);
    CHECK(P.trace() == doctest::Approx(2.0).epsilon(1e-14));
    const Vec3 w = oracle::random_vec(rng, 5);
    CHECK(std::abs((P * w).dot(v)) < 1e-12);
  }
  try {
    projector(Vec3(1.0, 1e-4, 0.0));
    FAIL("expected NonUnitVector");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonUnitVector);
  }
}

TEST_CASE("bearing_distance") {
  const auto bd = bearing_distance(Vec3::Zero(), Vec3(5, 0, 0));
  CHECK(bd.beta == Vec3::UnitX());
  CHECK(bd.distance == 5.0);

  const Vec3 q1(7.0, -1.5, 1.5);
  const auto b1 = bearing_distance(Vec3::Zero(), q1);
  CHECK(b1.distance == doctest::Approx(std::sqrt(49.0 + 2.25 + 2.25)).epsilon(1e-15));

  std::mt19937_64 rng(13);
  for (int i = 0; i < 200; ++i) {
    const Vec3 p = oracle::random_vec(rng, 10), q = oracle::random_vec(rng, 10);
    const auto r = bearing_distance(p, q);
    CHECK(std::abs(r.beta.norm() - 1.0) < 1e-15);
    CHECK(r.distance > 0.0);
    CHECK((p + r.distance * r.beta - q).norm() < 1e-13);
  }

  try {
    bearing_distance(q1, q1);
    FAIL("expected CoincidentPoints");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CoincidentPoints);
  }
}

TEST_CASE("so3_exp") {
  CHECK(so3_exp(Vec3::Zero()).matrix() == Mat3::Identity());
  const Rotation quarter = so3_exp(Vec3(0, 0, M_PI / 2));
  CHECK((quarter * Vec3::UnitX() - Vec3::UnitY()).norm() < 1e-15);

  std::mt19937_64 rng(14);
  for (int i = 0; i < 500; ++i) {
    const Vec3 w = oracle::random_vec(rng, 3);
    const Rotation R = so3_exp(w);
    CHECK(R.orthonormality_error() < 1e-9);
    CHECK(R.matrix().determinant() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(((R * so3_exp(-w)).matrix() - Mat3::Identity()).norm() < 1e-9);
    CHECK((R.matrix() - oracle::rodrigues(w)).norm() < 1e-13);
    if (w.norm() < M_PI - 0.05) CHECK((so3_log(R) - w).norm() < 1e-10);
  }
}

TEST_CASE("rotation construction") {
  Mat3 bad = Mat3::Identity();
  bad(0, 1) = 1e-3;
  CHECK_THROWS_AS(Rotation::from_matrix(bad), Error);
  CHECK(Rotation::orthonormalized(bad).orthonormality_error() < 1e-12);
  CHECK_THROWS_AS(Rotation::from_matrix(-Mat3::Identity()), Error);

  const Rotation L = Rotation::look_at(Vec3(1, 1, 0).normalized());
  CHECK((L * Vec3::UnitX() - Vec3(1, 1, 0).normalized()).norm() < 1e-14);
  CHECK(L.orthonormality_error() < 1e-12);

  std::mt19937_64 rng(15);
  const Rotation R = oracle::random_rotation(rng);
  const Eigen::Vector4d q = R.quaternion_wxyz();
  CHECK(q[0] >= 0.0);
  CHECK(q.norm() == doctest::Approx(1.0).epsilon(1e-14));
  const Eigen::Quaterniond eq(q[0], q[1], q[2], q[3]);
  CHECK((eq.toRotationMatrix() - R.matrix()).norm() < 1e-14);
}

}
