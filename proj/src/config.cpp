#include "fovcbf/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace fovcbf {

namespace {

struct Entry {
  std::string value;
  int line = 0;
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const size_t pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

class Reader {
 public:
  Reader(std::string origin, std::map<std::string, Entry> entries)
      : origin_(std::move(origin)), entries_(std::move(entries)) {}

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    const auto it = entries_.find(key);
    const int line = it == entries_.end() ? 0 : it->second.line;
    throw Error(ErrorCode::ParseError,
                origin_ + ":" + std::to_string(line) + ": field '" + key + "': " + msg);
  }

  const Entry* find(const std::string& key) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
  }

  double parse_double(const std::string& key, std::string_view text) const {
    double x = 0.0;
    const char* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, x);
    if (text.empty() || res.ec != std::errc() || res.ptr != end) {
      fail(key, "expected a number, got '" + std::string(text) + "'");
    }
    return x;
  }

  std::vector<double> parse_list(const std::string& key, std::string_view text) const {
    std::vector<double> out;
    for (std::string_view item : split(text, ',')) out.push_back(parse_double(key, item));
    return out;
  }

  Vec3 parse_vec3(const std::string& key, std::string_view text) const {
    const std::vector<double> xs = parse_list(key, text);
    if (xs.size() != 3) fail(key, "expected three comma separated numbers");
    return Vec3(xs[0], xs[1], xs[2]);
  }

  void get(const std::string& key, double& out) const {
    if (const Entry* e = find(key)) out = parse_double(key, e->value);
  }

  void get(const std::string& key, Vec3& out) const {
    if (const Entry* e = find(key)) out = parse_vec3(key, e->value);
  }

  void get(const std::string& key, bool& out) const {
    const Entry* e = find(key);
    if (!e) return;
    if (e->value == "true" || e->value == "1") {
      out = true;
    } else if (e->value == "false" || e->value == "0") {
      out = false;
    } else {
      fail(key, "expected true or false");
    }
  }

  void get(const std::string& key, std::uint64_t& out) const {
    const Entry* e = find(key);
    if (!e) return;
    const std::string& v = e->value;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size()) {
      fail(key, "expected a non-negative integer");
    }
  }

 private:
  std::string origin_;
  std::map<std::string, Entry> entries_;
};

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "kind", "duration", "dt", "sensor_axis", "half_aperture", "features", "gamma0", "d_m",
      "d_M", "margin", "k_p", "k_v", "k_R", "k_omega", "mass", "inertia", "gravity", "kappa",
      "kappa1", "kappa2", "d_hat_mode", "d_hat_ratio", "dtilde_time_constant", "dtilde_hold",
      "slack_weight", "thrust_ref_time_constant", "max_tilt", "seed", "filter"};
  return keys;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt(const Vec3& v) { return fmt(v.x()) + ", " + fmt(v.y()) + ", " + fmt(v.z()); }

}  // namespace

ScenarioConfig parse_config_string(std::string_view text, const std::string& origin) {
  std::map<std::string, Entry> entries;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::ParseError, origin + ":" + std::to_string(line_no) +
                                             ": expected 'key = value', got '" + std::string(line) + "'");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    const auto& keys = known_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw Error(ErrorCode::ParseError,
                  origin + ":" + std::to_string(line_no) + ": unknown field '" + key + "'");
    }
    if (entries.count(key)) {
      throw Error(ErrorCode::ParseError,
                  origin + ":" + std::to_string(line_no) + ": field '" + key + "' given twice");
    }
    entries[key] = Entry{value, line_no};
  }

  const Reader r(origin, std::move(entries));
  ScenarioKind kind = ScenarioKind::DoubleIntegrator;
  if (const Entry* e = r.find("kind")) {
    const auto k = parse_scenario_kind(e->value);
    if (!k) r.fail("kind", "expected first-order, double-integrator or quadrotor");
    kind = *k;
  }
  ScenarioConfig c = ScenarioConfig::defaults(kind);

  r.get("duration", c.duration);
  r.get("dt", c.dt);
  Vec3 axis = c.sensor.axis;
  double half_aperture = c.sensor.half_aperture;
  r.get("sensor_axis", axis);
  r.get("half_aperture", half_aperture);
  if (r.find("features")) {
    c.features.clear();
    for (std::string_view point : split(r.find("features")->value, ';')) {
      if (point.empty()) continue;
      c.features.push_back(r.parse_vec3("features", point));
    }
  }
  r.get("gamma0", c.rp.gamma0);
  r.get("d_m", c.rp.d_min);
  r.get("d_M", c.rp.d_max);
  r.get("margin", c.rp.margin);
  r.get("k_p", c.gains.k_p);
  r.get("k_v", c.gains.k_v);
  r.get("k_R", c.gains.k_R);
  r.get("k_omega", c.gains.k_omega);
  r.get("mass", c.quad.mass);
  if (const Entry* e = r.find("inertia")) {
    const std::vector<double> xs = r.parse_list("inertia", e->value);
    if (xs.size() == 3) {
      c.quad.inertia = Vec3(xs[0], xs[1], xs[2]).asDiagonal();
    } else if (xs.size() == 9) {
      for (int i = 0; i < 9; ++i) c.quad.inertia(i / 3, i % 3) = xs[static_cast<size_t>(i)];
    } else {
      r.fail("inertia", "expected three diagonal or nine row-major entries");
    }
  }
  r.get("gravity", c.quad.gravity);
  r.get("kappa", c.kappa);
  r.get("kappa1", c.kappa1);
  r.get("kappa2", c.kappa2);
  if (const Entry* e = r.find("d_hat_mode")) {
    const auto m = parse_distance_mode(e->value);
    if (!m) r.fail("d_hat_mode", "expected constant-one, true, ratio or random-ratio");
    c.d_hat_mode = *m;
  }
  r.get("d_hat_ratio", c.d_hat_ratio);
  r.get("dtilde_time_constant", c.dtilde_time_constant);
  r.get("dtilde_hold", c.dtilde_hold);
  r.get("slack_weight", c.slack_weight);
  r.get("thrust_ref_time_constant", c.thrust_ref_time_constant);
  r.get("max_tilt", c.max_tilt);
  r.get("seed", c.seed);
  r.get("filter", c.filter_enabled);

  try {
    c.sensor = FovSensor::make(axis, half_aperture);
  } catch (const Error& e) {
    throw Error(ErrorCode::ValidationError, e.what());
  }
  c.quad.validate();
  c.gains.validate();
  c.validate();
  return c;
}

ScenarioConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_string(ss.str(), path.string());
}

std::string serialize_config(const ScenarioConfig& c) {
  std::ostringstream out;
  out << "kind = " << to_string(c.kind) << "\n";
  out << "duration = " << fmt(c.duration) << "\n";
  out << "dt = " << fmt(c.dt) << "\n";
  out << "sensor_axis = " << fmt(c.sensor.axis) << "\n";
  out << "half_aperture = " << fmt(c.sensor.half_aperture) << "\n";
  out << "features = ";
  for (size_t i = 0; i < c.features.size(); ++i) {
    out << (i ? "; " : "") << fmt(c.features[i]);
  }
  out << "\n";
  out << "gamma0 = " << fmt(c.rp.gamma0) << "\n";
  out << "d_m = " << fmt(c.rp.d_min) << "\n";
  out << "d_M = " << fmt(c.rp.d_max) << "\n";
  out << "margin = " << fmt(c.rp.margin) << "\n";
  out << "k_p = " << fmt(c.gains.k_p) << "\n";
  out << "k_v = " << fmt(c.gains.k_v) << "\n";
  out << "k_R = " << fmt(c.gains.k_R) << "\n";
  out << "k_omega = " << fmt(c.gains.k_omega) << "\n";
  out << "mass = " << fmt(c.quad.mass) << "\n";
  out << "inertia = ";
  for (int i = 0; i < 9; ++i) out << (i ? ", " : "") << fmt(c.quad.inertia(i / 3, i % 3));
  out << "\n";
  out << "gravity = " << fmt(c.quad.gravity) << "\n";
  out << "kappa = " << fmt(c.kappa) << "\n";
  out << "kappa1 = " << fmt(c.kappa1) << "\n";
  out << "kappa2 = " << fmt(c.kappa2) << "\n";
  out << "d_hat_mode = " << to_string(c.d_hat_mode) << "\n";
  out << "d_hat_ratio = " << fmt(c.d_hat_ratio) << "\n";
  out << "dtilde_time_constant = " << fmt(c.dtilde_time_constant) << "\n";
  out << "dtilde_hold = " << fmt(c.dtilde_hold) << "\n";
  out << "slack_weight = " << fmt(c.slack_weight) << "\n";
  out << "thrust_ref_time_constant = " << fmt(c.thrust_ref_time_constant) << "\n";
  out << "max_tilt = " << fmt(c.max_tilt) << "\n";
  out << "seed = " << c.seed << "\n";
  out << "filter = " << (c.filter_enabled ? "true" : "false") << "\n";
  return out.str();
}

}  // namespace fovcbf
