#include <doctest.h>

#include <random>

#include "fovcbf/scenarios.hpp"
#include "oracles.hpp"

using namespace fovcbf;

namespace {

ScenarioConfig short_config(ScenarioKind kind, double duration) {
  ScenarioConfig c = ScenarioConfig::defaults(kind);
  c.duration = duration;
  return c;
}

}  // namespace

TEST_SUITE("scenarios") {

TEST_CASE("reference trajectory") {
  const Reference r = reference(0.0);
  CHECK(r.p == Vec3(1, 10, 2));
  CHECK(r.v.norm() == 0.0);
  CHECK((r.a - Vec3(-0.09, -0.4, -0.08)).norm() < 1e-15);

  for (double t : {0.3, 4.0, 17.5, 52.1}) {
    // fourth-order stencil, the plain central difference hits rounding near 1e-9
    const double e = 1e-3;
    const Reference p1 = reference(t + e), m1 = reference(t - e), p2 = reference(t + 2 * e),
                    m2 = reference(t - 2 * e), rt = reference(t);
    CHECK(((8 * (p1.p - m1.p) - (p2.p - m2.p)) / (12 * e) - rt.v).norm() < 1e-9);
    CHECK(((8 * (p1.v - m1.v) - (p2.v - m2.v)) / (12 * e) - rt.a).norm() < 1e-9);
    const Reference later = reference(t + 10 * M_PI);
    CHECK(std::abs(later.p.y() - rt.p.y()) < 1e-12);
    CHECK(std::abs(later.p.z() - rt.p.z()) < 1e-12);
  }
}

TEST_CASE("gate features") {
  const auto g = gate_features();
  CHECK(g[0] == Vec3(7.0, -1.5, 1.5));
  CHECK(g[1].z() == 1.5);
  CHECK(g[2].z() == -1.5);
  CHECK(g[3].z() == -1.5);
  CHECK((g[0] + g[1] + g[2] + g[3]) / 4 == Vec3(6.5, 0, 0));
}

TEST_CASE("nominal PD") {
  const TrackingGains g;
  const Reference r = reference(1.0);
  BodyState s;
  s.p = r.p;
  s.v = r.v;
  const Input6 on = nominal_pd(s, r, s.R, g);
  CHECK((on.head<3>() - r.a).norm() < 1e-15);
  CHECK(on.tail<3>().norm() == 0.0);

  s.p = r.p - Vec3::UnitX();
  const Input6 off = nominal_pd(s, r, s.R, g);
  CHECK((off.head<3>() - r.a - Vec3(20.8, 0, 0)).norm() < 1e-12);
  TrackingGains g2 = g;
  g2.k_p *= 2;
  CHECK(((nominal_pd(s, r, s.R, g2) - on).head<3>() - 2 * (off - on).head<3>()).norm() < 1e-12);

  const Rotation Rd = so3_exp(Vec3(0, 0, 0.2));
  const Input6 turn = nominal_pd(s, r, Rd, g);
  CHECK(turn.tail<3>().z() > 0.0);
  CHECK((attitude_error(Rd, Rd)).norm() < 1e-15);
}

TEST_CASE("initial attitude sees every feature") {
  for (auto kind : {ScenarioKind::FirstOrder, ScenarioKind::DoubleIntegrator, ScenarioKind::Quadrotor}) {
    const ScenarioConfig c = ScenarioConfig::defaults(kind);
    const Rotation R = initial_attitude(c);
    for (const Vec3& q : c.features) {
      CHECK(barrier(bearing_distance(reference(0).p, q).beta, R, c.sensor) > 0.0);
    }
  }
}

TEST_CASE("double integrator keeps the gate in view") {
  const SimLog log = run(short_config(ScenarioKind::DoubleIntegrator, 20.0));
  const Summary s = metrics(log);
  CHECK(s.min_h >= -1e-6);
  CHECK(s.infeasible_steps == 0);
  CHECK(s.steps == static_cast<int>(log.records.size()));
  CHECK(log.records.size() == 20001);
  for (size_t i = 1; i < log.records.size(); ++i) {
    REQUIRE(log.records[i].t > log.records[i - 1].t);
  }
  CHECK(s.min_c2_used >= 6.0 / 7.0 - 1e-9);
  CHECK(s.max_c2_used <= 5.0 + 1e-9);
}

TEST_CASE("without the filter the gate leaves the view") {
  ScenarioConfig c = short_config(ScenarioKind::DoubleIntegrator, 60.0);
  c.filter_enabled = false;
  const Summary s = metrics(run(c));
  CHECK(s.min_h < 0.0);
}

TEST_CASE("filtered input satisfies the logged rows") {
  for (auto kind : {ScenarioKind::FirstOrder, ScenarioKind::DoubleIntegrator, ScenarioKind::Quadrotor}) {
    ScenarioConfig c = short_config(kind, 8.0);
    c.log_rows = true;
    const SimLog log = run(c);
    int optimal = 0;
    for (const SimRecord& r : log.records) {
      if (r.status != FilterStatus::Optimal) continue;
      ++optimal;
      for (size_t i = 0; i < r.rows.size(); ++i) {
        for (const auto& row : r.rows[i].rows) {
          CHECK(row.residual(r.u_filtered, r.c1[i], r.c2[i]) >= -1e-8);
        }
        CHECK(r.c1[i] + r.c2[i] == doctest::Approx(3.0).epsilon(1e-12));
        CHECK(r.rows[i].c2_range.contains(r.c2[i], 1e-9));
      }
    }
    CHECK(optimal + 1 >= static_cast<int>(log.records.size()));
  }
}

TEST_CASE("runs are deterministic") {
  ScenarioConfig c = short_config(ScenarioKind::Quadrotor, 3.0);
  c.d_hat_mode = DistanceMode::RandomRatio;
  c.seed = 7;
  const SimLog a = run(c), b = run(c);
  REQUIRE(a.records.size() == b.records.size());
  for (size_t i = 0; i < a.records.size(); ++i) {
    REQUIRE(a.records[i].state.p == b.records[i].state.p);
    REQUIRE(a.records[i].u_filtered == b.records[i].u_filtered);
    REQUIRE(a.records[i].d_tilde == b.records[i].d_tilde);
  }
  c.seed = 8;
  const SimLog other = run(c);
  CHECK(other.records.back().d_tilde != a.records.back().d_tilde);
}

TEST_CASE("random distance ratio stays inside its bounds") {
  ScenarioConfig c = short_config(ScenarioKind::DoubleIntegrator, 10.0);
  c.d_hat_mode = DistanceMode::RandomRatio;
  const SimLog log = run(c);
  for (const SimRecord& r : log.records) {
    for (double d : r.d_tilde) {
      REQUIRE(d >= c.rp.d_min);
      REQUIRE(d <= c.rp.d_max);
    }
  }
  CHECK(metrics(log).min_h >= -1e-6);
}

TEST_CASE("quadrotor keeps the gate in view on a short run") {
  const Summary s = metrics(run(short_config(ScenarioKind::Quadrotor, 10.0)));
  CHECK(s.min_h >= -1e-6);
  CHECK(s.infeasible_steps == 0);
  CHECK(std::isfinite(s.max_tracking_error));
}

TEST_CASE("metrics") {
  CHECK_THROWS_AS(metrics(SimLog{}), Error);
  SimLog log;
  log.dt = 0.5;
  log.features = 1;
  for (int i = 0; i < 30; ++i) {
    SimRecord r;
    r.t = 0.5 * i;
    r.h = {0.042};
    r.min_h = 0.042;
    r.tracking_error = i < 10 ? 1.0 : 0.5;
    r.c1 = {1.0};
    r.c2 = {2.0};
    r.status = FilterStatus::Optimal;
    log.records.push_back(r);
  }
  log.records[3].status = FilterStatus::Infeasible;
  const Summary s = metrics(log);
  CHECK(s.min_h == 0.042);
  CHECK(s.max_tracking_error == 1.0);
  CHECK(s.infeasible_steps == 1);
  CHECK(s.max_c2_used == 2.0);
  CHECK(s.tracking_error_at_5s == 0.5);
  CHECK(s.max_tracking_error_after_5s == 0.5);
}

TEST_CASE("config validation") {
  auto code_of = [](const ScenarioConfig& c) {
    try {
      c.validate();
    } catch (const Error& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  ScenarioConfig c = ScenarioConfig::defaults();
  CHECK(code_of(c).empty());
  c.duration = 0;
  CHECK(!code_of(c).empty());
  c = ScenarioConfig::defaults();
  c.features.clear();
  CHECK(!code_of(c).empty());
  c = ScenarioConfig::defaults();
  c.d_hat_mode = DistanceMode::TrueTimesRatio;
  c.d_hat_ratio = 20.0;
  CHECK(!code_of(c).empty());
  c = ScenarioConfig::defaults();
  c.rp.d_min = 2.0;
  CHECK(code_of(c).find("d_m < 1 required") != std::string::npos);

  c = ScenarioConfig::defaults();
  c.features = {reference(0).p};
  try {
    run(c);
    FAIL("expected ScenarioError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ScenarioError);
  }
}

}
