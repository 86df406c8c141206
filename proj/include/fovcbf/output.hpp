#pragma once

#include <filesystem>
#include <ostream>
#include <string>

#include "fovcbf/scenarios.hpp"

namespace fovcbf {

struct RunManifest {
  std::string config_path;  // empty when the run used built-in defaults
  std::string output_dir;
  std::string run_id;       // 40 hex digits
  double wall_seconds = 0.0;
};

/// Fresh 40-digit hex identifier, unique per call.
std::string make_run_id();

/// Column names: t,px,py,pz,qw,qx,qy,qz,h1..hN,min_h,err,ux,uy,uz,urx,ury,urz,
/// c1_1,c2_1,..,c1_N,c2_N[,d1_1,d2_1,..],qp_status
std::string csv_header(const SimLog& log);
void write_csv(const SimLog& log, std::ostream& out);

/// One `key = value` line per Summary field, 9 significant digits.
void write_summary(const Summary& summary, std::ostream& out);

/// Writes trajectory.csv (unless summary_only), summary.txt, config.txt,
/// plot_data/min_h.dat, plot_data/err.dat and manifest.txt into `dir`.
void write_run(const std::filesystem::path& dir, const ScenarioConfig& config, const SimLog& log,
               const Summary& summary, const RunManifest& manifest, bool summary_only);

void write_manifest(const RunManifest& manifest, std::ostream& out);

}  // namespace fovcbf
