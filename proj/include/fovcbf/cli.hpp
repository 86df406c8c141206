#pragma once

#include <array>
#include <string>
#include <vector>

#include "fovcbf/scenarios.hpp"

namespace fovcbf {

/// min_h below -kSafetyTolerance counts as a violation.
inline constexpr double kSafetyTolerance = 1e-6;

inline constexpr std::array<double, 6> kSweepRatios = {0.5, 0.75, 1.0, 2.0, 5.0, 15.0};

struct SweepRun {
  std::string label;  // subdirectory name
  ScenarioConfig config;
};

/// One run per fixed ratio d / d_hat in kSweepRatios plus one random-ratio run.
std::vector<SweepRun> dtilde_sweep(const ScenarioConfig& base);

/// Exit codes: 0 success, 1 usage or runtime error, 2 safety violation.
int run_cli(int argc, char** argv);

}  // namespace fovcbf
