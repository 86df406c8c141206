#include "fovcbf/output.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <random>

#include "fovcbf/config.hpp"

namespace fovcbf {

namespace {

// %.9g keeps files compact and reruns byte-identical.
void put(std::string& line, double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  line += buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  return out;
}

}  // namespace

std::string make_run_id() {
  static std::atomic<std::uint64_t> counter{0};
  std::random_device rd;
  const auto now = static_cast<std::uint64_t>(
      std::chrono::high_resolution_clock::now().time_since_epoch().count());
  std::seed_seq seq{rd(), rd(), rd(), static_cast<unsigned>(now), static_cast<unsigned>(now >> 32),
                    static_cast<unsigned>(counter.fetch_add(1))};
  std::mt19937_64 gen(seq);
  std::string id;
  char buf[17];
  for (int i = 0; i < 3; ++i) {
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(gen()));
    id += buf;
  }
  return id.substr(0, 40);
}

std::string csv_header(const SimLog& log) {
  std::string h = "t,px,py,pz,qw,qx,qy,qz";
  for (int i = 1; i <= log.features; ++i) h += ",h" + std::to_string(i);
  h += ",min_h,err,ux,uy,uz,urx,ury,urz";
  for (int i = 1; i <= log.features; ++i) {
    h += ",c1_" + std::to_string(i) + ",c2_" + std::to_string(i);
  }
  if (log.slack) {
    for (int i = 1; i <= log.features; ++i) {
      h += ",d1_" + std::to_string(i) + ",d2_" + std::to_string(i);
    }
  }
  h += ",qp_status";
  return h;
}

void write_csv(const SimLog& log, std::ostream& out) {
  out << csv_header(log) << "\n";
  std::string line;
  for (const SimRecord& r : log.records) {
    line.clear();
    put(line, r.t);
    for (int k = 0; k < 3; ++k) {
      line += ',';
      put(line, r.state.p[k]);
    }
    const Eigen::Vector4d q = r.state.R.quaternion_wxyz();
    for (int k = 0; k < 4; ++k) {
      line += ',';
      put(line, q[k]);
    }
    for (double h : r.h) {
      line += ',';
      put(line, h);
    }
    line += ',';
    put(line, r.min_h);
    line += ',';
    put(line, r.tracking_error);
    for (int k = 0; k < 6; ++k) {
      line += ',';
      put(line, r.u_filtered[k]);
    }
    for (int i = 0; i < log.features; ++i) {
      line += ',';
      put(line, r.c1[static_cast<size_t>(i)]);
      line += ',';
      put(line, r.c2[static_cast<size_t>(i)]);
    }
    if (log.slack) {
      for (double d : r.delta) {
        line += ',';
        put(line, d);
      }
    }
    line += ',';
    line += to_string(r.status);
    line += '\n';
    out << line;
  }
}

void write_summary(const Summary& s, std::ostream& out) {
  std::string text;
  auto field = [&text](const char* name, double x) {
    text += name;
    text += " = ";
    put(text, x);
    text += '\n';
  };
  field("min_h", s.min_h);
  field("max_tracking_error", s.max_tracking_error);
  field("rms_tracking_error", s.rms_tracking_error);
  text += "infeasible_steps = " + std::to_string(s.infeasible_steps) + "\n";
  field("max_c2_used", s.max_c2_used);
  field("min_c2_used", s.min_c2_used);
  field("tracking_error_at_5s", s.tracking_error_at_5s);
  field("max_tracking_error_after_5s", s.max_tracking_error_after_5s);
  text += "steps = " + std::to_string(s.steps) + "\n";
  out << text;
}

void write_manifest(const RunManifest& m, std::ostream& out) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", m.wall_seconds);
  out << "run_id = " << m.run_id << "\n"
      << "config = " << (m.config_path.empty() ? "<defaults>" : m.config_path) << "\n"
      << "output_dir = " << m.output_dir << "\n"
      << "wall_seconds = " << buf << "\n";
}

void write_run(const std::filesystem::path& dir, const ScenarioConfig& config, const SimLog& log,
               const Summary& summary, const RunManifest& manifest, bool summary_only) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "plot_data", ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());

  if (!summary_only) {
    auto csv = open_out(dir / "trajectory.csv");
    write_csv(log, csv);
  }
  {
    auto out = open_out(dir / "summary.txt");
    write_summary(summary, out);
  }
  {
    auto out = open_out(dir / "config.txt");
    out << serialize_config(config);
  }
  {
    auto min_h = open_out(dir / "plot_data" / "min_h.dat");
    auto err = open_out(dir / "plot_data" / "err.dat");
    std::string a;
    std::string b;
    for (const SimRecord& r : log.records) {
      a.clear();
      put(a, r.t);
      b = a;
      a += ' ';
      put(a, r.min_h);
      a += '\n';
      b += ' ';
      put(b, r.tracking_error);
      b += '\n';
      min_h << a;
      err << b;
    }
  }
  {
    auto out = open_out(dir / "manifest.txt");
    write_manifest(manifest, out);
  }
}

}  // namespace fovcbf
