#pragma once

// Independent reference computations used by the tests. Nothing here calls
// the code under test except the primitive geometry needed to evaluate h.

#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "fovcbf/cbf_core.hpp"
#include "fovcbf/dynamics.hpp"
#include "fovcbf/qp.hpp"

namespace oracle {

using fovcbf::BodyState;
using fovcbf::FovSensor;
using fovcbf::Mat3;
using fovcbf::Rotation;
using fovcbf::Vec3;

// h computed from scratch: bearing, optical axis, cosine.
inline double h_direct(const Vec3& p, const Mat3& R, const Vec3& q, const FovSensor& s) {
  const Vec3 beta = (q - p) / (q - p).norm();
  return beta.dot(R * s.axis) - std::cos(s.half_aperture);
}

inline Mat3 rodrigues(const Vec3& w) {
  const double th = w.norm();
  Mat3 K;
  K << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  if (th < 1e-12) return Mat3::Identity() + K;
  return Mat3::Identity() + std::sin(th) / th * K + (1 - std::cos(th)) / (th * th) * K * K;
}

inline Vec3 fd_grad_p(const Vec3& p, const Mat3& R, const Vec3& q, const FovSensor& s,
                      double eps = 1e-6) {
  Vec3 g;
  for (int i = 0; i < 3; ++i) {
    const Vec3 e = Vec3::Unit(i) * eps;
    g[i] = (h_direct(p + e, R, q, s) - h_direct(p - e, R, q, s)) / (2 * eps);
  }
  return g;
}

// Geodesic central difference along R exp(+-eps e_i).
inline Vec3 fd_grad_R(const Vec3& p, const Mat3& R, const Vec3& q, const FovSensor& s,
                      double eps = 1e-6) {
  Vec3 g;
  for (int i = 0; i < 3; ++i) {
    const Vec3 w = Vec3::Unit(i) * eps;
    g[i] = (h_direct(p, R * rodrigues(w), q, s) - h_direct(p, R * rodrigues(-w), q, s)) / (2 * eps);
  }
  return g;
}

// Flow of p'' = a, omega' = alpha, R' = R hat(omega) for time t (either sign)
// by many small classical RK4 steps on (p, v, R as 9 numbers, omega).
inline BodyState flow(const BodyState& s, const Vec3& a, const Vec3& alpha, double t, int n = 64) {
  Vec3 p = s.p, v = s.v, w = s.omega;
  Mat3 R = s.R.matrix();
  const double h = t / n;
  auto hat = [](const Vec3& x) {
    Mat3 K;
    K << 0, -x.z(), x.y(), x.z(), 0, -x.x(), -x.y(), x.x(), 0;
    return K;
  };
  for (int k = 0; k < n; ++k) {
    const Mat3 k1 = R * hat(w);
    const Mat3 k2 = (R + 0.5 * h * k1) * hat(w + 0.5 * h * alpha);
    const Mat3 k3 = (R + 0.5 * h * k2) * hat(w + 0.5 * h * alpha);
    const Mat3 k4 = (R + h * k3) * hat(w + h * alpha);
    R += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    p += h * v + 0.5 * h * h * a;
    v += h * a;
    w += h * alpha;
  }
  BodyState out = s;
  out.p = p;
  out.v = v;
  out.omega = w;
  out.R = Rotation::orthonormalized(R);
  return out;
}

// Second central difference of h along the second-order flow.
inline double fd_hddot(const BodyState& s, const Vec3& a, const Vec3& alpha, const Vec3& q,
                       const FovSensor& sen, double eps = 1e-4) {
  const BodyState fwd = flow(s, a, alpha, eps);
  const BodyState bwd = flow(s, a, alpha, -eps);
  const double h0 = h_direct(s.p, s.R.matrix(), q, sen);
  return (h_direct(fwd.p, fwd.R.matrix(), q, sen) - 2 * h0 +
          h_direct(bwd.p, bwd.R.matrix(), q, sen)) /
         (eps * eps);
}

// First central difference of h along the velocity-level flow.
inline double fd_hdot(const BodyState& s, const Vec3& v, const Vec3& w, const Vec3& q,
                      const FovSensor& sen, double eps = 1e-6) {
  const double hp = h_direct(s.p + eps * v, s.R.matrix() * rodrigues(eps * w), q, sen);
  const double hm = h_direct(s.p - eps * v, s.R.matrix() * rodrigues(-eps * w), q, sen);
  return (hp - hm) / (2 * eps);
}

// Exact rational with 64-bit parts, normalized with a positive denominator.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rational(std::int64_t n = 0, std::int64_t d = 1) : num(n), den(d) { normalize(); }

  void normalize() {
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }
  friend Rational operator+(Rational a, Rational b) { return {a.num * b.den + b.num * a.den, a.den * b.den}; }
  friend Rational operator-(Rational a, Rational b) { return {a.num * b.den - b.num * a.den, a.den * b.den}; }
  friend Rational operator*(Rational a, Rational b) { return {a.num * b.num, a.den * b.den}; }
  friend Rational operator/(Rational a, Rational b) { return {a.num * b.den, a.den * b.num}; }
  friend bool operator==(Rational a, Rational b) { return a.num == b.num && a.den == b.den; }
  friend bool operator<(Rational a, Rational b) { return a.num * b.den < b.num * a.den; }
  // correctly rounded, since both parts are exact doubles here
  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
};

// Brute-force QP oracle for strictly convex problems: enumerate every subset
// of inequality constraints as active, solve the equality KKT system, keep
// the feasible point with nonnegative multipliers and the lowest objective.
struct BruteQp {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::MatrixXd A;  // A z >= b (bounds already folded in)
  Eigen::VectorXd b;
  Eigen::MatrixXd E;  // E z = f
  Eigen::VectorXd f;
};

inline BruteQp fold_bounds(const fovcbf::QpProblem& p) {
  BruteQp q{p.H, p.g, p.A_ineq, p.b_ineq, p.A_eq, p.b_eq};
  const int n = static_cast<int>(p.num_vars());
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> rhs;
  for (int i = 0; i < p.lower.size(); ++i) {
    if (std::isfinite(p.lower[i])) {
      rows.push_back(Eigen::VectorXd::Unit(n, i));
      rhs.push_back(p.lower[i]);
    }
  }
  for (int i = 0; i < p.upper.size(); ++i) {
    if (std::isfinite(p.upper[i])) {
      rows.push_back(-Eigen::VectorXd::Unit(n, i));
      rhs.push_back(-p.upper[i]);
    }
  }
  const Eigen::Index m0 = q.A.rows();
  q.A.conservativeResize(m0 + static_cast<Eigen::Index>(rows.size()), n);
  q.b.conservativeResize(m0 + static_cast<Eigen::Index>(rows.size()));
  for (size_t k = 0; k < rows.size(); ++k) {
    q.A.row(m0 + static_cast<Eigen::Index>(k)) = rows[k].transpose();
    q.b[m0 + static_cast<Eigen::Index>(k)] = rhs[k];
  }
  if (q.E.cols() != n) q.E.resize(0, n);
  if (q.f.size() != q.E.rows()) q.f.resize(0);
  return q;
}

inline std::optional<Eigen::VectorXd> brute_force(const BruteQp& q, double tol = 1e-9) {
  const int n = static_cast<int>(q.g.size());
  const int m = static_cast<int>(q.A.rows());
  const int me = static_cast<int>(q.E.rows());
  std::optional<Eigen::VectorXd> best;
  double best_obj = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    std::vector<int> act;
    for (int i = 0; i < m; ++i) {
      if (mask & (1u << i)) act.push_back(i);
    }
    const int k = me + static_cast<int>(act.size());
    if (k > n) continue;
    Eigen::MatrixXd C(k, n);
    Eigen::VectorXd d(k);
    if (me) {
      C.topRows(me) = q.E;
      d.head(me) = q.f;
    }
    for (int j = 0; j < static_cast<int>(act.size()); ++j) {
      C.row(me + j) = q.A.row(act[static_cast<size_t>(j)]);
      d[me + j] = q.b[act[static_cast<size_t>(j)]];
    }
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + k, n + k);
    K.topLeftCorner(n, n) = q.H;
    K.topRightCorner(n, k) = -C.transpose();
    K.bottomLeftCorner(k, n) = C;
    Eigen::VectorXd r(n + k);
    r << -q.g, d;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
    if (lu.rank() < n + k) continue;
    const Eigen::VectorXd sol = lu.solve(r);
    const Eigen::VectorXd z = sol.head(n);
    const Eigen::VectorXd lam = sol.tail(k);
    bool ok = true;
    for (int j = 0; j < static_cast<int>(act.size()) && ok; ++j) ok = lam[me + j] >= -tol;
    if (m) ok = ok && ((q.A * z - q.b).minCoeff() >= -tol);
    if (!ok) continue;
    const double obj = 0.5 * z.dot(q.H * z) + q.g.dot(z);
    if (obj < best_obj) {
      best_obj = obj;
      best = z;
    }
  }
  return best;
}

inline Rotation random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Vector4d q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  const Eigen::Quaterniond quat(q[0], q[1], q[2], q[3]);
  return Rotation::from_matrix(quat.toRotationMatrix());
}

inline Vec3 random_vec(std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return Vec3(u(rng), u(rng), u(rng));
}

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Vec3(n(rng), n(rng), n(rng)).normalized();
}

// Random rigid-body state with a feature at distance in [1, 4] and the exact
// observation (bearing rate from ground truth, d_hat = d unless overridden).
struct Scene {
  BodyState state;
  Vec3 q;
  fovcbf::FeatureObs obs;
  double d = 1.0;
};

inline Scene random_scene(std::mt19937_64& rng, const FovSensor& sen) {
  std::uniform_real_distribution<double> ud(1.0, 4.0);
  Scene sc;
  sc.state.p = random_vec(rng, 5);
  sc.state.R = random_rotation(rng);
  sc.state.v = random_vec(rng, 2);
  sc.state.omega = random_vec(rng, 2);
  // bias the feature towards the optical axis so both signs of h show up
  const Vec3 dir = (sc.state.R * sen.axis + 0.8 * random_unit(rng)).normalized();
  sc.d = ud(rng);
  sc.q = sc.state.p + sc.d * dir;
  sc.obs.beta = dir;
  sc.obs.beta_dot = -(Mat3::Identity() - dir * dir.transpose()) * sc.state.v / sc.d;
  sc.obs.d_hat = sc.d;
  sc.obs.q = sc.q;
  return sc;
}

// Closed-form first and second time derivatives of h = beta^T R e_c along
// p'' = a, omega' = alpha, written without any of the library's helpers.
inline double hdot_exact(const Scene& sc, const FovSensor& sen) {
  const Mat3 R = sc.state.R.matrix();
  const Vec3 beta = (sc.q - sc.state.p) / sc.d;
  const Vec3 bdot = -(sc.state.v - beta * beta.dot(sc.state.v)) / sc.d;
  const Vec3 zdot = R * sc.state.omega.cross(sen.axis);
  return bdot.dot(R * sen.axis) + beta.dot(zdot);
}

inline double hddot_exact(const Scene& sc, const Vec3& a, const Vec3& alpha, const FovSensor& sen) {
  const Mat3 R = sc.state.R.matrix();
  const Vec3& v = sc.state.v;
  const Vec3& w = sc.state.omega;
  const double d = sc.d;
  const Vec3 beta = (sc.q - sc.state.p) / d;
  const double ddot = -beta.dot(v);
  const Vec3 bdot = -(v - beta * beta.dot(v)) / d;
  // beta = (q - p) / d, so beta' = (-v - ddot beta) / d and
  // beta'' = (-a - dddot beta - 2 ddot beta') / d with dddot = -(beta'.v + beta.a)
  const double dddot = -(bdot.dot(v) + beta.dot(a));
  const Vec3 bddot = (-a - dddot * beta - 2.0 * ddot * bdot) / d;
  const Vec3 z = R * sen.axis;
  const Vec3 zdot = R * w.cross(sen.axis);
  const Vec3 zddot = R * (w.cross(w.cross(sen.axis)) + alpha.cross(sen.axis));
  return bddot.dot(z) + 2.0 * bdot.dot(zdot) + beta.dot(zddot);
}

}  // namespace oracle
