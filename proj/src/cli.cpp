#include "fovcbf/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <thread>

#include "fovcbf/config.hpp"
#include "fovcbf/output.hpp"

namespace fovcbf {

std::vector<SweepRun> dtilde_sweep(const ScenarioConfig& base) {
  std::vector<SweepRun> runs;
  for (double r : kSweepRatios) {
    ScenarioConfig c = base;
    c.d_hat_mode = DistanceMode::TrueTimesRatio;
    c.d_hat_ratio = r;
    char label[32];
    std::snprintf(label, sizeof label, "ratio_%g", r);
    runs.push_back({label, c});
  }
  ScenarioConfig c = base;
  c.d_hat_mode = DistanceMode::RandomRatio;
  runs.push_back({"random_ratio", c});
  return runs;
}

namespace {

struct RunOutcome {
  std::string label;
  std::optional<Summary> summary;
  std::string error;
};

RunOutcome execute(const std::string& label, const ScenarioConfig& config,
                   const std::filesystem::path& dir, const std::string& config_path,
                   bool summary_only) {
  RunOutcome outcome{label, std::nullopt, {}};
  try {
    const auto t0 = std::chrono::steady_clock::now();
    const SimLog log = run(config);
    const Summary summary = metrics(log);
    RunManifest manifest;
    manifest.config_path = config_path;
    manifest.output_dir = dir.string();
    manifest.run_id = make_run_id();
    manifest.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_run(dir, config, log, summary, manifest, summary_only);
    outcome.summary = summary;
  } catch (const std::exception& e) {
    outcome.error = e.what();
  }
  return outcome;
}

void report(const RunOutcome& o) {
  if (!o.summary) {
    std::cerr << o.label << ": error: " << o.error << "\n";
    return;
  }
  const Summary& s = *o.summary;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s: min_h=%.9g max_err=%.9g rms_err=%.9g infeasible=%d %s",
                o.label.c_str(), s.min_h, s.max_tracking_error, s.rms_tracking_error,
                s.infeasible_steps, s.min_h >= -kSafetyTolerance ? "safe" : "VIOLATION");
  std::cout << buf << "\n";
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Field-of-view safety filter simulator", "fovcbf_sim"};
  std::string config_path;
  std::string scenario;
  std::optional<double> duration;
  std::optional<double> dt;
  std::string out_dir = "runs/latest";
  bool sweep = false;
  bool no_filter = false;
  bool summary_only = false;
  unsigned jobs = 1;

  app.add_option("--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--scenario", scenario, "overrides the configured kind")
      ->check(CLI::IsMember({"first-order", "double-integrator", "quadrotor"}));
  app.add_option("--duration", duration, "simulated seconds")->check(CLI::PositiveNumber);
  app.add_option("--dt", dt, "integration step in seconds")->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_flag("--sweep-dtilde", sweep, "run every fixed ratio d/d_hat plus a random-ratio run");
  app.add_option("--jobs", jobs, "parallel runs for --sweep-dtilde")
      ->check(CLI::Range(1u, 256u))
      ->capture_default_str();
  app.add_flag("--no-filter", no_filter, "pass the nominal input through unchanged");
  app.add_flag("--summary-only", summary_only, "skip trajectory.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  ScenarioConfig config;
  try {
    config = config_path.empty() ? ScenarioConfig::defaults() : parse_config(config_path);
    if (!scenario.empty()) config.kind = *parse_scenario_kind(scenario);
    if (duration) config.duration = *duration;
    if (dt) config.dt = *dt;
    if (no_filter) config.filter_enabled = false;
    config.validate();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  const std::filesystem::path root(out_dir);
  std::vector<RunOutcome> outcomes;
  if (!sweep) {
    outcomes.push_back(execute(to_string(config.kind), config, root, config_path, summary_only));
  } else {
    const std::vector<SweepRun> runs = dtilde_sweep(config);
    outcomes.resize(runs.size());
    std::atomic<size_t> next{0};
    auto worker = [&] {
      for (size_t i = next++; i < runs.size(); i = next++) {
        outcomes[i] = execute(runs[i].label, runs[i].config, root / runs[i].label, config_path,
                              summary_only);
      }
    };
    std::vector<std::thread> pool;
    const unsigned n = std::min<unsigned>(jobs, static_cast<unsigned>(runs.size()));
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  bool failed = false;
  bool violated = false;
  for (const RunOutcome& o : outcomes) {
    report(o);
    if (!o.summary) {
      failed = true;
    } else if (o.summary->min_h < -kSafetyTolerance) {
      violated = true;
    }
  }
  if (failed) return 1;
  return violated ? 2 : 0;
}

}  // namespace fovcbf
