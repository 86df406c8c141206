#include "fovcbf/scenarios.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace fovcbf {

const char* to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::FirstOrder: return "first-order";
    case ScenarioKind::DoubleIntegrator: return "double-integrator";
    case ScenarioKind::Quadrotor: return "quadrotor";
  }
  return "unknown";
}

const char* to_string(DistanceMode mode) {
  switch (mode) {
    case DistanceMode::ConstantOne: return "constant-one";
    case DistanceMode::TrueDistance: return "true";
    case DistanceMode::TrueTimesRatio: return "ratio";
    case DistanceMode::RandomRatio: return "random-ratio";
  }
  return "unknown";
}

std::optional<ScenarioKind> parse_scenario_kind(const std::string& s) {
  if (s == "first-order" || s == "first_order") return ScenarioKind::FirstOrder;
  if (s == "double-integrator" || s == "double_integrator") return ScenarioKind::DoubleIntegrator;
  if (s == "quadrotor") return ScenarioKind::Quadrotor;
  return std::nullopt;
}

std::optional<DistanceMode> parse_distance_mode(const std::string& s) {
  if (s == "constant-one" || s == "one") return DistanceMode::ConstantOne;
  if (s == "true") return DistanceMode::TrueDistance;
  if (s == "ratio") return DistanceMode::TrueTimesRatio;
  if (s == "random-ratio") return DistanceMode::RandomRatio;
  return std::nullopt;
}

const char* to_string(FilterStatus status) {
  switch (status) {
    case FilterStatus::Optimal: return "optimal";
    case FilterStatus::Infeasible: return "infeasible";
    case FilterStatus::MaxIter: return "maxiter";
    case FilterStatus::Unbounded: return "unbounded";
    case FilterStatus::Disabled: return "disabled";
  }
  return "unknown";
}

std::array<Vec3, 4> gate_features() {
  return {Vec3(7.0, -1.5, 1.5), Vec3(7.0, 1.5, 1.5), Vec3(6.0, 1.5, -1.5),
          Vec3(6.0, -1.5, -1.5)};
}

Reference reference(double t) {
  Reference r;
  r.p = Vec3(std::cos(0.3 * t), 10.0 * std::cos(0.2 * t), 2.0 * std::cos(0.2 * t));
  r.v = Vec3(-0.3 * std::sin(0.3 * t), -2.0 * std::sin(0.2 * t), -0.4 * std::sin(0.2 * t));
  r.a = Vec3(-0.09 * std::cos(0.3 * t), -0.4 * std::cos(0.2 * t), -0.08 * std::cos(0.2 * t));
  return r;
}

ScenarioConfig ScenarioConfig::defaults(ScenarioKind kind) {
  ScenarioConfig c;
  c.kind = kind;
  const auto gate = gate_features();
  c.features.assign(gate.begin(), gate.end());
  return c;
}

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::ValidationError, msg); };
  if (!(duration > 0.0)) fail("duration > 0 required");
  if (!(dt > 0.0)) fail("dt > 0 required");
  if (dt > duration) fail("dt <= duration required");
  if (features.empty()) fail("at least one feature required");
  for (const Vec3& q : features) {
    if (!q.allFinite()) fail("feature coordinates must be finite");
  }
  if (std::abs(sensor.axis.norm() - 1.0) > kUnitTolerance) fail("optical axis must be unit");
  if (!(sensor.half_aperture > 0.0 && sensor.half_aperture < M_PI / 2.0)) {
    fail("half aperture must lie in (0, pi/2)");
  }
  if (!(rp.gamma0 > 0.0)) fail("gamma0 > 0 required");
  if (!(rp.d_min > 0.0)) fail("d_m > 0 required");
  if (!(rp.d_min < 1.0)) fail("d_m < 1 required");
  if (!(rp.d_max > 1.0)) fail("d_M > 1 required");
  if (!(rp.margin >= 0.0)) fail("M >= 0 required");
  if (!(kappa > 0.0 && kappa1 > 0.0 && kappa2 > 0.0)) fail("class-K slopes must be positive");
  if (kind != ScenarioKind::FirstOrder &&
      !(rp.gamma0 > k_constant(ClassK{kappa1}, ClassK{kappa2}))) {
    fail("gamma0 > K required");
  }
  if (d_hat_mode == DistanceMode::TrueTimesRatio &&
      !(d_hat_ratio >= rp.d_min && d_hat_ratio <= rp.d_max)) {
    fail("d_hat_ratio must lie in [d_m, d_M]");
  }
  if (!(dtilde_time_constant > 0.0) || !(dtilde_hold > 0.0)) {
    fail("d-tilde filter constants must be positive");
  }
  if (!(slack_weight >= 0.0)) fail("slack_weight >= 0 required");
  if (!(thrust_ref_time_constant >= 0.0)) fail("thrust_ref_time_constant >= 0 required");
  if (!(max_tilt > 0.0 && max_tilt < M_PI / 2.0)) fail("max_tilt must lie in (0, pi/2)");
  try {
    gains.validate();
    quad.validate();
  } catch (const Error& e) {
    fail(e.what());
  }
}

bool ScenarioConfig::operator==(const ScenarioConfig& o) const {
  return kind == o.kind && duration == o.duration && dt == o.dt &&
         sensor.axis == o.sensor.axis && sensor.half_aperture == o.sensor.half_aperture &&
         features == o.features && rp.gamma0 == o.rp.gamma0 && rp.d_min == o.rp.d_min &&
         rp.d_max == o.rp.d_max && rp.margin == o.rp.margin && gains.k_p == o.gains.k_p &&
         gains.k_v == o.gains.k_v && gains.k_R == o.gains.k_R &&
         gains.k_omega == o.gains.k_omega && quad.mass == o.quad.mass &&
         quad.inertia == o.quad.inertia && quad.gravity == o.quad.gravity && kappa == o.kappa &&
         kappa1 == o.kappa1 && kappa2 == o.kappa2 && d_hat_mode == o.d_hat_mode &&
         d_hat_ratio == o.d_hat_ratio && dtilde_time_constant == o.dtilde_time_constant &&
         dtilde_hold == o.dtilde_hold && slack_weight == o.slack_weight &&
         thrust_ref_time_constant == o.thrust_ref_time_constant && max_tilt == o.max_tilt &&
         seed == o.seed &&
         filter_enabled == o.filter_enabled && log_rows == o.log_rows;
}

Vec3 attitude_error(const Rotation& R, const Rotation& Rd) {
  const Mat3& r = R.matrix();
  const Mat3& rd = Rd.matrix();
  return 0.5 * vee(rd.transpose() * r - r.transpose() * rd);
}

Input6 nominal_pd(const BodyState& s, const Reference& ref, const Rotation& attitude_ref,
                  const TrackingGains& gains) {
  const Vec3 a = gains.k_p * (ref.p - s.p) + gains.k_v * (ref.v - s.v) + ref.a;
  const Vec3 alpha = -gains.k_R * attitude_error(s.R, attitude_ref) - gains.k_omega * s.omega;
  return stack_input(a, alpha);
}

Input6 nominal_first_order(const BodyState& s, const Reference& ref,
                           const Rotation& attitude_ref, const TrackingGains& gains) {
  const Vec3 v = ref.v + (gains.k_p / gains.k_v) * (ref.p - s.p);
  const Vec3 w = -(gains.k_R / gains.k_omega) * attitude_error(s.R, attitude_ref);
  return stack_input(v, w);
}

namespace {

Vec3 centroid(const std::vector<Vec3>& pts) {
  Vec3 c = Vec3::Zero();
  for (const Vec3& q : pts) c += q;
  return c / static_cast<double>(pts.size());
}

[[noreturn]] void scenario_error(double t, const std::string& what) {
  std::ostringstream os;
  os << "t = " << t << " s: " << what;
  throw Error(ErrorCode::ScenarioError, os.str());
}

bool finite_state(const BodyState& s) {
  return s.p.allFinite() && s.v.allFinite() && s.omega.allFinite() && s.R.matrix().allFinite();
}

// Relative distance errors d / d_hat for the RandomRatio mode.
class DtildeProcess {
 public:
  DtildeProcess(const ScenarioConfig& c)
      : rng_(c.seed), log_lo_(std::log(c.rp.d_min)), log_hi_(std::log(c.rp.d_max)),
        gain_(c.dt / c.dtilde_time_constant), hold_steps_(std::max<long>(1, std::lround(c.dtilde_hold / c.dt))) {
    value_.resize(c.features.size());
    target_.resize(c.features.size());
    for (size_t i = 0; i < value_.size(); ++i) {
      target_[i] = sample();
      value_[i] = target_[i];
    }
  }

  const std::vector<double>& values() const { return value_; }

  void advance(long step) {
    if (step % hold_steps_ == 0) {
      for (double& t : target_) t = sample();
    }
    // first-order low-pass keeps d(d_tilde)/dt bounded
    for (size_t i = 0; i < value_.size(); ++i) {
      value_[i] += std::min(1.0, gain_) * (target_[i] - value_[i]);
    }
  }

 private:
  double sample() {
    std::uniform_real_distribution<double> u(log_lo_, log_hi_);
    return std::exp(u(rng_));
  }

  std::mt19937_64 rng_;
  double log_lo_;
  double log_hi_;
  double gain_;
  long hold_steps_;
  std::vector<double> value_;
  std::vector<double> target_;
};

}  // namespace

Rotation initial_attitude(const ScenarioConfig& config) {
  const Reference r0 = reference(0.0);
  const Vec3 dir = centroid(config.features) - r0.p;
  if (config.kind == ScenarioKind::Quadrotor) {
    // level the thrust axis with the initial reference acceleration, yaw to the centroid
    const Vec3 b3 = (r0.a + config.quad.gravity * Vec3::UnitZ()).normalized();
    Vec3 b2 = b3.cross(dir).normalized();
    Mat3 m;
    m.col(0) = b2.cross(b3);
    m.col(1) = b2;
    m.col(2) = b3;
    return Rotation::from_matrix(m);
  }
  // R e_c = dir / |dir|
  const Rotation to_dir = Rotation::look_at(dir);
  const Rotation to_axis = Rotation::look_at(config.sensor.axis);
  return to_dir * to_axis.transpose();
}

SimLog run(const ScenarioConfig& config) {
  config.validate();
  const bool first_order = config.kind == ScenarioKind::FirstOrder;
  const int nf = static_cast<int>(config.features.size());
  const long steps = std::lround(config.duration / config.dt);
  const ClassK gamma = ClassK::linear(config.kappa);
  const ClassK g1 = ClassK::linear(config.kappa1);
  const ClassK g2 = ClassK::linear(config.kappa2);
  const FilterLayout layout{nf, config.slack_weight > 0.0};

  SimLog log;
  log.kind = config.kind;
  log.dt = config.dt;
  log.features = nf;
  log.slack = layout.slack;
  log.records.reserve(static_cast<size_t>(steps + 1));

  const Reference r0 = reference(0.0);
  BodyState s;
  s.p = r0.p;
  s.v = first_order ? Vec3::Zero() : r0.v;
  s.R = initial_attitude(config);
  const Rotation attitude_hold = s.R;
  Vec3 heading = s.R.matrix().col(0);
  Vec3 thrust_accel = Vec3::Zero();

  DtildeProcess dtilde(config);
  QpSolver solver;
  VecX warm;
  Input6 last_feasible = Input6::Zero();
  bool have_feasible = false;
  int consecutive_infeasible = 0;
  std::vector<FeatureObs> obs(static_cast<size_t>(nf));
  std::vector<FeatureRows> rows(static_cast<size_t>(nf));

  for (long k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * config.dt;
    const Reference ref = reference(t);
    SimRecord rec;
    rec.t = t;
    rec.state = s;
    rec.h.resize(static_cast<size_t>(nf));
    rec.d_tilde.resize(static_cast<size_t>(nf));
    rec.min_h = std::numeric_limits<double>::infinity();
    rec.tracking_error = (s.p - ref.p).norm();

    for (int i = 0; i < nf; ++i) {
      const Vec3& q = config.features[static_cast<size_t>(i)];
      BearingDistance bd;
      try {
        bd = bearing_distance(s.p, q);
      } catch (const Error& e) {
        scenario_error(t, e.what());
      }
      FeatureObs& o = obs[static_cast<size_t>(i)];
      o.q = q;
      o.beta = bd.beta;
      o.beta_dot = first_order ? Vec3::Zero() : Vec3(-(s.v - bd.beta.dot(s.v) * bd.beta) / bd.distance);
      double ratio = 1.0;
      switch (config.d_hat_mode) {
        case DistanceMode::ConstantOne: ratio = bd.distance; break;
        case DistanceMode::TrueDistance: ratio = 1.0; break;
        case DistanceMode::TrueTimesRatio: ratio = config.d_hat_ratio; break;
        case DistanceMode::RandomRatio: ratio = dtilde.values()[static_cast<size_t>(i)]; break;
      }
      o.d_hat = bd.distance / ratio;
      rec.d_tilde[static_cast<size_t>(i)] = ratio;
      rec.h[static_cast<size_t>(i)] = barrier(bd.beta, s.R, config.sensor);
      rec.min_h = std::min(rec.min_h, rec.h[static_cast<size_t>(i)]);
    }
    if (k == 0 && rec.min_h <= 0.0) {
      scenario_error(t, "initial pose does not see every feature");
    }

    switch (config.kind) {
      case ScenarioKind::FirstOrder:
        rec.u_nominal = nominal_first_order(s, ref, attitude_hold, config.gains);
        break;
      case ScenarioKind::DoubleIntegrator:
        rec.u_nominal = nominal_pd(s, ref, attitude_hold, config.gains);
        break;
      case ScenarioKind::Quadrotor: {
        const Vec3 a_des =
            config.gains.k_p * (ref.p - s.p) + config.gains.k_v * (ref.v - s.v) + ref.a;
        if (k == 0) thrust_accel = a_des;
        // the attitude loop tilts towards the recent filtered acceleration and
        // keeps the current body x axis as heading, so it follows the filter
        thrust_accel = saturate_tilt(thrust_accel, config.max_tilt, config.quad.gravity);
        const Vec3 b3 = (thrust_accel + config.quad.gravity * Vec3::UnitZ()).normalized();
        if (b3.cross(s.R.matrix().col(0)).norm() > 1e-3) heading = s.R.matrix().col(0);
        try {
          const AttitudeCommand att =
              attitude_command(s, thrust_accel, heading, config.gains, config.quad);
          rec.u_nominal = stack_input(a_des, att.alpha);
        } catch (const Error& e) {
          scenario_error(t, e.what());
        }
        break;
      }
    }

    Input6 u = rec.u_nominal;
    rec.c1.assign(static_cast<size_t>(nf), std::numeric_limits<double>::quiet_NaN());
    rec.c2.assign(static_cast<size_t>(nf), std::numeric_limits<double>::quiet_NaN());
    if (layout.slack) rec.delta.assign(static_cast<size_t>(2 * nf), std::numeric_limits<double>::quiet_NaN());

    if (config.filter_enabled) {
      for (int i = 0; i < nf; ++i) {
        rows[static_cast<size_t>(i)] =
            first_order ? first_order_rows(s, obs[static_cast<size_t>(i)], config.sensor, gamma, config.rp)
                        : second_order_rows(s, obs[static_cast<size_t>(i)], config.sensor, g1, g2, config.rp);
      }
      const QpProblem qp = build_filter_qp(rec.u_nominal, rows, config.slack_weight);
      const QpSolution sol = solver.solve(qp, warm.size() == qp.num_vars() ? &warm : nullptr);
      rec.qp_iterations = sol.iterations;
      rec.kkt_residual = sol.kkt_residual;
      switch (sol.status) {
        case QpStatus::Optimal: rec.status = FilterStatus::Optimal; break;
        case QpStatus::Infeasible: rec.status = FilterStatus::Infeasible; break;
        case QpStatus::MaxIter: rec.status = FilterStatus::MaxIter; break;
        case QpStatus::Unbounded: rec.status = FilterStatus::Unbounded; break;
      }
      if (sol.status == QpStatus::Optimal) {
        u = layout.input(sol.z);
        warm = sol.z;
        last_feasible = u;
        have_feasible = true;
        consecutive_infeasible = 0;
        for (int i = 0; i < nf; ++i) {
          rec.c1[static_cast<size_t>(i)] = sol.z[layout.c1(i)];
          rec.c2[static_cast<size_t>(i)] = sol.z[layout.c2(i)];
          if (layout.slack) {
            rec.delta[static_cast<size_t>(2 * i)] = sol.z[layout.delta(i, 0)];
            rec.delta[static_cast<size_t>(2 * i + 1)] = sol.z[layout.delta(i, 1)];
          }
        }
      } else {
        if (++consecutive_infeasible > 10) {
          scenario_error(t, std::string("safety filter ") + to_string(sol.status) +
                                " for more than 10 consecutive steps");
        }
        u = have_feasible ? last_feasible : rec.u_nominal;
      }
      if (config.log_rows) rec.rows = rows;
    }
    rec.u_filtered = u;
    if (config.kind == ScenarioKind::Quadrotor) {
      const double w = config.dt / (config.thrust_ref_time_constant + config.dt);
      thrust_accel += w * (Vec3(u.head<3>()) - thrust_accel);
    }
    log.records.push_back(std::move(rec));

    if (k == steps) break;
    switch (config.kind) {
      case ScenarioKind::FirstOrder: s = step_first_order(s, u, config.dt); break;
      case ScenarioKind::DoubleIntegrator: s = step_second_order(s, u, config.dt); break;
      case ScenarioKind::Quadrotor:
        s = quadrotor_step(s, map_accel_to_quadrotor(u, s, config.quad), config.dt, config.quad);
        break;
    }
    if (!finite_state(s)) scenario_error(t, "state became non-finite");
    if (config.d_hat_mode == DistanceMode::RandomRatio) dtilde.advance(k + 1);
  }
  return log;
}

Summary metrics(const SimLog& log) {
  if (log.records.empty()) throw Error(ErrorCode::EmptyLog, "no records to summarize");
  Summary s;
  s.steps = static_cast<int>(log.records.size());
  s.min_h = std::numeric_limits<double>::infinity();
  s.max_c2_used = -std::numeric_limits<double>::infinity();
  s.min_c2_used = std::numeric_limits<double>::infinity();
  double sq = 0.0;
  double best_dt5 = std::numeric_limits<double>::infinity();
  for (const SimRecord& r : log.records) {
    s.min_h = std::min(s.min_h, r.min_h);
    s.max_tracking_error = std::max(s.max_tracking_error, r.tracking_error);
    sq += r.tracking_error * r.tracking_error;
    if (r.status == FilterStatus::Infeasible || r.status == FilterStatus::MaxIter ||
        r.status == FilterStatus::Unbounded) {
      ++s.infeasible_steps;
    }
    if (r.status == FilterStatus::Optimal) {
      for (double c : r.c2) {
        s.max_c2_used = std::max(s.max_c2_used, c);
        s.min_c2_used = std::min(s.min_c2_used, c);
      }
    }
    if (std::abs(r.t - 5.0) < best_dt5) {
      best_dt5 = std::abs(r.t - 5.0);
      s.tracking_error_at_5s = r.tracking_error;
    }
    if (r.t >= 5.0) s.max_tracking_error_after_5s = std::max(s.max_tracking_error_after_5s, r.tracking_error);
  }
  s.rms_tracking_error = std::sqrt(sq / static_cast<double>(log.records.size()));
  if (!std::isfinite(s.max_c2_used)) {
    s.max_c2_used = std::numeric_limits<double>::quiet_NaN();
    s.min_c2_used = std::numeric_limits<double>::quiet_NaN();
  }
  return s;
}

}  // namespace fovcbf
