#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "fovcbf/scenarios.hpp"

namespace fovcbf {

/// Flat `key = value` configuration with `#` comments. Missing keys take the
/// defaults of the selected kind. Recognized keys:
///
///   kind, duration, dt, sensor_axis, half_aperture, features,
///   gamma0, d_m, d_M, margin, k_p, k_v, k_R, k_omega,
///   mass, inertia, gravity, kappa, kappa1, kappa2,
///   d_hat_mode, d_hat_ratio, dtilde_time_constant, dtilde_hold,
///   slack_weight, thrust_ref_time_constant, max_tilt, seed, filter
///
/// Vectors are comma separated; `features` separates points with `;` and
/// `inertia` takes three diagonal entries or nine row-major entries.
///
/// Throws ParseError naming the line and key, or ValidationError naming the
/// violated invariant.
ScenarioConfig parse_config(const std::filesystem::path& path);
ScenarioConfig parse_config_string(std::string_view text, const std::string& origin = "<input>");

/// Every key, 17 significant digits, so parsing the result gives back an
/// equal config.
std::string serialize_config(const ScenarioConfig& config);

}  // namespace fovcbf
