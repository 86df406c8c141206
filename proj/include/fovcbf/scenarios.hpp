#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fovcbf/cbf_core.hpp"
#include "fovcbf/dynamics.hpp"
#include "fovcbf/qp.hpp"

namespace fovcbf {

enum class ScenarioKind { FirstOrder, DoubleIntegrator, Quadrotor };

/// How the filter's distance estimate is produced from the true distance d.
///  ConstantOne:    d_hat = 1
///  TrueDistance:   d_hat = d
///  TrueTimesRatio: d_hat = d / ratio, so the relative error d / d_hat is `ratio`
///  RandomRatio:    d / d_hat follows a seeded, low-pass filtered random walk
///                  inside [d_m, d_M], independently per feature
enum class DistanceMode { ConstantOne, TrueDistance, TrueTimesRatio, RandomRatio };

const char* to_string(ScenarioKind kind);
const char* to_string(DistanceMode mode);
std::optional<ScenarioKind> parse_scenario_kind(const std::string& s);
std::optional<DistanceMode> parse_distance_mode(const std::string& s);

/// Corners of the rectangular gate used by both reference experiments.
std::array<Vec3, 4> gate_features();

/// p_ref(t) = [cos 0.3t, 10 cos 0.2t, 2 cos 0.2t] with analytic derivatives.
Reference reference(double t);

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::DoubleIntegrator;
  double duration = 60.0;
  double dt = 1e-3;
  FovSensor sensor = FovSensor::make(Vec3::UnitX(), M_PI / 6.0);
  std::vector<Vec3> features;
  RobustnessParams rp;
  TrackingGains gains;
  QuadrotorParams quad;
  double kappa = 3.0;   // velocity-level class-K slope
  double kappa1 = 2.0;  // acceleration-level class-K slopes
  double kappa2 = 2.0;
  DistanceMode d_hat_mode = DistanceMode::ConstantOne;
  double d_hat_ratio = 1.0;
  double dtilde_time_constant = 0.5;  // s, low-pass of RandomRatio samples
  double dtilde_hold = 1.0;           // s between RandomRatio samples
  double slack_weight = 0.0;
  // quadrotor attitude loop: low-pass on the filtered acceleration it tilts
  // towards, and the tilt limit of that thrust direction
  double thrust_ref_time_constant = 0.1;   // s
  double max_tilt = 10.0 * M_PI / 180.0;   // rad
  std::uint64_t seed = 1;
  bool filter_enabled = true;
  bool log_rows = false;  // keep the assembled rows in every record

  /// Defaults for the given kind with the gate features.
  static ScenarioConfig defaults(ScenarioKind kind = ScenarioKind::DoubleIntegrator);

  /// Throws ValidationError naming the violated invariant.
  void validate() const;

  bool operator==(const ScenarioConfig& other) const;
};

/// Nominal inputs for the fully actuated bodies: PD position tracking plus an
/// attitude-hold PD towards `attitude_ref`. Returns (a_des, alpha_des).
Input6 nominal_pd(const BodyState& s, const Reference& ref, const Rotation& attitude_ref,
                  const TrackingGains& gains);

/// Velocity-level nominal: v = v_ref + (k_p / k_v)(p_ref - p),
/// omega = -(k_R / k_omega) e_R.
Input6 nominal_first_order(const BodyState& s, const Reference& ref,
                           const Rotation& attitude_ref, const TrackingGains& gains);

/// Attitude error 0.5 vee(Rd^T R - R^T Rd).
Vec3 attitude_error(const Rotation& R, const Rotation& Rd);

/// Initial attitude that points the optical axis at the feature centroid.
/// The quadrotor version keeps the body z axis along the initial thrust.
Rotation initial_attitude(const ScenarioConfig& config);

enum class FilterStatus { Optimal, Infeasible, MaxIter, Unbounded, Disabled };
const char* to_string(FilterStatus status);

struct SimRecord {
  double t = 0.0;
  BodyState state;
  std::vector<double> h;
  double min_h = 0.0;
  double tracking_error = 0.0;
  Input6 u_nominal = Input6::Zero();
  Input6 u_filtered = Input6::Zero();
  std::vector<double> c1;
  std::vector<double> c2;
  std::vector<double> delta;  // two per feature, empty without slack
  std::vector<double> d_tilde;
  FilterStatus status = FilterStatus::Disabled;
  int qp_iterations = 0;
  double kkt_residual = 0.0;
  std::vector<FeatureRows> rows;  // only with ScenarioConfig::log_rows
};

struct SimLog {
  ScenarioKind kind = ScenarioKind::DoubleIntegrator;
  double dt = 0.0;
  int features = 0;
  bool slack = false;
  std::vector<SimRecord> records;
};

struct Summary {
  double min_h = 0.0;
  double max_tracking_error = 0.0;
  double rms_tracking_error = 0.0;
  int infeasible_steps = 0;
  double max_c2_used = 0.0;
  double min_c2_used = 0.0;
  double tracking_error_at_5s = 0.0;
  double max_tracking_error_after_5s = 0.0;
  int steps = 0;
};

/// Closed-loop simulation. Throws ScenarioError on a coincident feature, more
/// than ten consecutive infeasible programs, or a non-finite state.
SimLog run(const ScenarioConfig& config);

/// Throws EmptyLog on an empty log.
Summary metrics(const SimLog& log);

}  // namespace fovcbf
