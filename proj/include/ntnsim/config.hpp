#pragma once
/**
 * config.hpp — JSON run configuration.
 *
 * Every key is optional and falls back to the compiled defaults, but keys
 * that are present must be known and well-typed: a typo'd or misplaced key
 * fails loudly with the file name, line, and JSON path instead of being
 * silently ignored.  Line numbers for schema errors come from a small
 * key-path indexer that re-walks the raw text alongside the parsed
 * document.
 */

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ntnsim/benchmarks.hpp"
#include "ntnsim/blaster.hpp"
#include "ntnsim/channel.hpp"
#include "ntnsim/heuristic.hpp"
#include "ntnsim/linklayer.hpp"
#include "ntnsim/scenario.hpp"

namespace ntnsim {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// What to run: the cartesian product of hours, seeds, satellite positions,
/// and policies; results average over seeds x positions per (hour, policy).
struct RunSpec {
  std::vector<int> hours = {0,  1,  2,  3,  4,  5,  6,  7,  8,  9,  10, 11,
                            12, 13, 14, 15, 16, 17, 18, 19, 20, 21, 22, 23};
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::vector<int> positions = {0, 1, 2};  // indices into satellite_positions
  std::vector<std::string> policies = {"blaster", "heuristic", "3gpp-tn",
                                       "3gpp-ntn", "3gpp-energy-saving"};
  std::vector<double> lambda_sweep;  // empty: single run at blaster.lambda_max
  int workers = 0;                   // 0 = one per hardware thread
  bool dump_traces = false;          // write optimizer traces under traces/
};

struct SimConfig {
  ScenarioParams scenario;
  ChannelParams channel;
  SysParams sys;
  BlasterConfig blaster;
  HeuristicConfig heuristic;
  BenchmarkConfig benchmark;
  RunSpec run;
};

/// Every policy id `run.policies` accepts.
inline const std::set<std::string>& known_policies() {
  static const std::set<std::string> k = {
      "blaster", "heuristic", "3gpp-tn", "3gpp-ntn", "3gpp-energy-saving"};
  return k;
}

namespace cfgdetail {

/// 1-based line and column of a byte offset in `text`.
inline std::pair<int, int> line_col(const std::string& text,
                                    std::size_t offset) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline std::vector<std::string> split_pointer(const std::string& p) {
  std::vector<std::string> out;
  if (p.empty()) return out;
  std::size_t i = 1;  // skip the leading '/'
  while (i <= p.size()) {
    const std::size_t next = p.find('/', i);
    const std::size_t end = next == std::string::npos ? p.size() : next;
    std::string tok = p.substr(i, end - i);
    std::string un;  // JSON pointer escapes: ~1 -> '/', ~0 -> '~'
    for (std::size_t k = 0; k < tok.size(); ++k) {
      if (tok[k] == '~' && k + 1 < tok.size()) {
        un += tok[k + 1] == '1' ? '/' : '~';
        ++k;
      } else {
        un += tok[k];
      }
    }
    out.push_back(un);
    i = end + 1;
  }
  return out;
}

/**
 * Byte offset where the value addressed by a JSON pointer begins, found by
 * re-walking the raw text with a minimal tokenizer that tracks the current
 * container path.  Returns npos when the path is absent (a missing-key
 * error has no own location).  Escape handling in keys is lookup-grade:
 * configuration keys are plain identifiers.
 */
inline std::size_t offset_of_pointer(const std::string& text,
                                     const std::string& pointer) {
  const std::vector<std::string> want = split_pointer(pointer);
  struct Frame {
    bool is_array = false;
    int next = 0;        // next array slot
    bool on_path = false;  // whether this container pushed a path element
  };
  std::vector<Frame> frames;
  std::vector<std::string> path;
  std::string pending_key;
  bool have_key = false;
  const std::size_t n = text.size();
  std::size_t i = 0;

  // Pushes the path element for a value starting now; root pushes nothing.
  auto begin_value = [&]() -> bool {
    if (frames.empty()) return false;
    if (frames.back().is_array) {
      path.push_back(std::to_string(frames.back().next++));
    } else {
      path.push_back(pending_key);
      have_key = false;
    }
    return true;
  };

  while (i < n) {
    const char c = text[i];
    if (c == '"') {
      const std::size_t start = i++;
      std::string raw;
      while (i < n && text[i] != '"') {
        if (text[i] == '\\' && i + 1 < n) ++i;
        raw += text[i++];
      }
      ++i;  // closing quote
      if (!frames.empty() && !frames.back().is_array && !have_key) {
        pending_key = raw;
        have_key = true;
      } else {
        const bool pushed = begin_value();
        if (pushed ? path == want : want.empty()) return start;
        if (pushed) path.pop_back();
      }
    } else if (c == '{' || c == '[') {
      const bool pushed = begin_value();
      if (pushed ? path == want : want.empty()) return i;
      frames.push_back({c == '[', 0, pushed});
      ++i;
    } else if (c == '}' || c == ']') {
      if (!frames.empty()) {
        if (frames.back().on_path) path.pop_back();
        frames.pop_back();
      }
      ++i;
    } else if (c == ':' || c == ',' ||
               std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else {  // number / true / false / null
      const std::size_t start = i;
      while (i < n && text[i] != ',' && text[i] != '}' && text[i] != ']' &&
             !std::isspace(static_cast<unsigned char>(text[i]))) {
        ++i;
      }
      const bool pushed = begin_value();
      if (pushed ? path == want : want.empty()) return start;
      if (pushed) path.pop_back();
    }
  }
  return std::string::npos;
}

[[noreturn]] inline void fail_at(const std::string& origin,
                                 const std::string& text,
                                 const std::string& pointer,
                                 const std::string& what) {
  std::ostringstream msg;
  msg << origin;
  const std::size_t off = offset_of_pointer(text, pointer);
  if (off != std::string::npos) {
    const auto [line, col] = line_col(text, off);
    msg << ":" << line << ":" << col;
  }
  msg << ": " << what;
  if (!pointer.empty()) msg << " (at " << pointer << ")";
  throw ConfigError(msg.str());
}

/// Typed view of one JSON object that records which keys were consumed and
/// rejects the rest, with located error messages.
class Reader {
 public:
  Reader(const nlohmann::json& j, std::string pointer, const std::string& text,
         const std::string& origin)
      : j_(&j), ptr_(std::move(pointer)), text_(&text), origin_(&origin) {
    if (!j.is_object()) fail("", "expected an object");
  }

  bool has(const char* key) const { return j_->contains(key); }

  Reader section(const char* key) {
    seen_.insert(key);
    return Reader(j_->at(key), ptr_ + "/" + key, *text_, *origin_);
  }

  double num(const char* key, double def) {
    if (!has(key)) return def;
    seen_.insert(key);
    const auto& v = j_->at(key);
    if (!v.is_number()) fail(key, "expected a number");
    return v.get<double>();
  }

  int integer(const char* key, int def) {
    if (!has(key)) return def;
    seen_.insert(key);
    const auto& v = j_->at(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    return v.get<int>();
  }

  bool boolean(const char* key, bool def) {
    if (!has(key)) return def;
    seen_.insert(key);
    const auto& v = j_->at(key);
    if (!v.is_boolean()) fail(key, "expected true or false");
    return v.get<bool>();
  }

  template <typename T>
  std::vector<T> list(const char* key, std::vector<T> def,
                      const char* kind_msg) {
    if (!has(key)) return def;
    seen_.insert(key);
    const auto& v = j_->at(key);
    if (!v.is_array()) fail(key, "expected an array");
    std::vector<T> out;
    for (std::size_t idx = 0; idx < v.size(); ++idx) {
      const auto& e = v[idx];
      if constexpr (std::is_same_v<T, std::string>) {
        if (!e.is_string()) fail_elem(key, idx, kind_msg);
      } else {
        if (!e.is_number()) fail_elem(key, idx, kind_msg);
        if constexpr (!std::is_floating_point_v<T>) {
          if (!e.is_number_integer() ||
              (std::is_unsigned_v<T> && e.is_number_integer() &&
               e.get<long long>() < 0)) {
            fail_elem(key, idx, kind_msg);
          }
        }
      }
      out.push_back(e.get<T>());
    }
    return out;
  }

  /// Rejects keys that were present but never consumed.
  void finish() const {
    for (const auto& item : j_->items()) {
      if (seen_.count(item.key()) == 0) {
        fail(item.key().c_str(), "unknown key \"" + item.key() + "\"");
      }
    }
  }

  [[noreturn]] void fail(const std::string& key,
                         const std::string& what) const {
    fail_at(*origin_, *text_, key.empty() ? ptr_ : ptr_ + "/" + key, what);
  }

 private:
  [[noreturn]] void fail_elem(const char* key, std::size_t idx,
                              const char* what) const {
    fail_at(*origin_, *text_,
            ptr_ + "/" + key + "/" + std::to_string(idx), what);
  }

  const nlohmann::json* j_;
  std::string ptr_;
  const std::string* text_;
  const std::string* origin_;
  std::set<std::string> seen_;
};

}  // namespace cfgdetail

inline SimConfig parse_config(const std::string& text,
                              const std::string& origin) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t off = e.byte > 0 ? e.byte - 1 : 0;
    const auto [line, col] = cfgdetail::line_col(text, off);
    std::ostringstream msg;
    msg << origin << ":" << line << ":" << col << ": " << e.what();
    throw ConfigError(msg.str());
  }

  SimConfig c;
  cfgdetail::Reader root(j, "", text, origin);

  if (root.has("area")) {
    auto r = root.section("area");
    auto& a = c.scenario.area;
    a.side_km = r.num("side_km", a.side_km);
    a.urban_side_km = r.num("urban_side_km", a.urban_side_km);
    a.urban_isd_m = r.num("urban_isd_m", a.urban_isd_m);
    a.rural_isd_m = r.num("rural_isd_m", a.rural_isd_m);
    a.grid_clip_radius_km = r.num("grid_clip_radius_km", a.grid_clip_radius_km);
    if (a.side_km <= 0) r.fail("side_km", "must be positive");
    if (a.urban_side_km < 0 || a.urban_side_km > a.side_km) {
      r.fail("urban_side_km", "must lie within [0, side_km]");
    }
    if (a.urban_isd_m <= 0) r.fail("urban_isd_m", "must be positive");
    if (a.rural_isd_m <= 0) r.fail("rural_isd_m", "must be positive");
    r.finish();
  }
  if (root.has("terrestrial")) {
    auto r = root.section("terrestrial");
    auto& t = c.scenario.terrestrial;
    t.p_max_dbm = r.num("p_max_dbm", t.p_max_dbm);
    t.gain_dbi = r.num("gain_dbi", t.gain_dbi);
    t.tower_height_m = r.num("tower_height_m", t.tower_height_m);
    t.p0_w = r.num("p0_w", t.p0_w);
    t.psi_w = r.num("psi_w", t.psi_w);
    if (t.p0_w < 0 || t.psi_w < 0) r.fail("p0_w", "draws must be nonnegative");
    r.finish();
  }
  if (root.has("satellite")) {
    auto r = root.section("satellite");
    auto& v = c.scenario.satellite;
    v.altitude_km = r.num("altitude_km", v.altitude_km);
    v.offset_km = r.num("offset_km", v.offset_km);
    v.p_max_dbm = r.num("p_max_dbm", v.p_max_dbm);
    v.gain_dbi = r.num("gain_dbi", v.gain_dbi);
    v.p0_w = r.num("p0_w", v.p0_w);
    v.psi_w = r.num("psi_w", v.psi_w);
    v.baseline_energy_j = r.num("baseline_energy_j", v.baseline_energy_j);
    if (v.altitude_km <= 0) r.fail("altitude_km", "must be positive");
    r.finish();
  }
  if (root.has("ue")) {
    auto r = root.section("ue");
    c.scenario.ue_height_m = r.num("height_m", c.scenario.ue_height_m);
    c.scenario.ue_gain_dbi = r.num("gain_dbi", c.scenario.ue_gain_dbi);
    c.scenario.urban_ue_fraction =
        r.num("urban_fraction", c.scenario.urban_ue_fraction);
    c.scenario.indoor_fraction =
        r.num("indoor_fraction", c.scenario.indoor_fraction);
    if (c.scenario.urban_ue_fraction < 0 || c.scenario.urban_ue_fraction > 1) {
      r.fail("urban_fraction", "must lie in [0, 1]");
    }
    if (c.scenario.indoor_fraction < 0 || c.scenario.indoor_fraction > 1) {
      r.fail("indoor_fraction", "must lie in [0, 1]");
    }
    r.finish();
  }
  bool k_min_given = false;
  double traffic_min = 400.0, traffic_max = 10000.0;
  if (root.has("traffic")) {
    auto r = root.section("traffic");
    traffic_min = r.num("min_count", traffic_min);
    traffic_max = r.num("max_count", traffic_max);
    c.scenario.traffic_scale = r.num("scale", c.scenario.traffic_scale);
    if (traffic_min < 1) r.fail("min_count", "must be at least 1");
    if (traffic_max < traffic_min) {
      r.fail("max_count", "must be at least min_count");
    }
    if (c.scenario.traffic_scale <= 0) r.fail("scale", "must be positive");
    r.finish();
  }
  c.scenario.profile = TrafficProfile::cosine_day(traffic_min, traffic_max);
  if (root.has("channel")) {
    auto r = root.section("channel");
    auto& ch = c.channel;
    ch.fc_ghz = r.num("fc_ghz", ch.fc_ghz);
    ch.sf_clamp_nsigma = r.num("sf_clamp_nsigma", ch.sf_clamp_nsigma);
    ch.t_los_intercept_db = r.num("t_los_intercept_db", ch.t_los_intercept_db);
    ch.t_los_exponent = r.num("t_los_exponent", ch.t_los_exponent);
    ch.t_nlos_intercept_db =
        r.num("t_nlos_intercept_db", ch.t_nlos_intercept_db);
    ch.t_nlos_exponent = r.num("t_nlos_exponent", ch.t_nlos_exponent);
    ch.t_sf_sigma_los_db = r.num("t_sf_sigma_los_db", ch.t_sf_sigma_los_db);
    ch.t_sf_sigma_nlos_db = r.num("t_sf_sigma_nlos_db", ch.t_sf_sigma_nlos_db);
    ch.t_los_d1_m = r.num("t_los_d1_m", ch.t_los_d1_m);
    ch.t_los_decay_m = r.num("t_los_decay_m", ch.t_los_decay_m);
    ch.o2i_wall_db = r.num("o2i_wall_db", ch.o2i_wall_db);
    ch.o2i_depth_max_m = r.num("o2i_depth_max_m", ch.o2i_depth_max_m);
    ch.o2i_per_m_db = r.num("o2i_per_m_db", ch.o2i_per_m_db);
    ch.o2i_sigma_db = r.num("o2i_sigma_db", ch.o2i_sigma_db);
    ch.sat_scint_db = r.num("sat_scint_db", ch.sat_scint_db);
    ch.sat_entry_loss_db = r.num("sat_entry_loss_db", ch.sat_entry_loss_db);
    if (ch.fc_ghz <= 0) r.fail("fc_ghz", "must be positive");
    r.finish();
  }
  if (root.has("system")) {
    auto r = root.section("system");
    auto& y = c.sys;
    y.bandwidth_hz = r.num("bandwidth_hz", y.bandwidth_hz);
    y.re_bandwidth_hz = r.num("re_bandwidth_hz", y.re_bandwidth_hz);
    y.noise_dbm_per_hz = r.num("noise_dbm_per_hz", y.noise_dbm_per_hz);
    y.rsrp_min_dbm = r.num("rsrp_min_dbm", y.rsrp_min_dbm);
    y.energy_p_scale_w_per_mw =
        r.num("energy_p_scale_w_per_mw", y.energy_p_scale_w_per_mw);
    y.slot_seconds = r.num("slot_seconds", y.slot_seconds);
    y.orphan_rate_floor_bps =
        r.num("orphan_rate_floor_bps", y.orphan_rate_floor_bps);
    if (y.bandwidth_hz <= 0) r.fail("bandwidth_hz", "must be positive");
    if (y.re_bandwidth_hz <= 0) r.fail("re_bandwidth_hz", "must be positive");
    r.finish();
  }
  if (root.has("blaster")) {
    auto r = root.section("blaster");
    auto& b = c.blaster;
    k_min_given = r.has("k_min");
    b.lambda_max = r.num("lambda_max", b.lambda_max);
    b.k_min = r.num("k_min", b.k_min);
    b.alpha = r.num("alpha", b.alpha);
    b.eta = r.num("eta", b.eta);
    b.backtracks = r.integer("backtracks", b.backtracks);
    b.dual_step_scale = r.num("dual_step_scale", b.dual_step_scale);
    b.outer_cap = r.integer("outer_cap", b.outer_cap);
    b.dual_cap = r.integer("dual_cap", b.dual_cap);
    b.tol = r.num("tol", b.tol);
    b.dual_tol = r.num("dual_tol", b.dual_tol);
    b.eps_floor = r.num("eps_floor", b.eps_floor);
    b.load_floor = r.num("load_floor", b.load_floor);
    b.delta_frac = r.num("delta_frac", b.delta_frac);
    b.rate_floor_bps = r.num("rate_floor_bps", b.rate_floor_bps);
    if (b.lambda_max < 0) r.fail("lambda_max", "must be nonnegative");
    if (b.rate_floor_bps < 0) r.fail("rate_floor_bps", "must be nonnegative");
    if (b.outer_cap < 1) r.fail("outer_cap", "must be at least 1");
    if (b.dual_cap < 1) r.fail("dual_cap", "must be at least 1");
    r.finish();
  }
  if (!k_min_given) {
    // The shutdown schedule tracks the scaled daily traffic minimum.
    c.blaster.k_min = std::max(1.0, traffic_min * c.scenario.traffic_scale);
  }
  if (root.has("heuristic")) {
    auto r = root.section("heuristic");
    auto& h = c.heuristic;
    h.t_ue = r.num("t_ue", h.t_ue);
    h.low_start = r.integer("low_start", h.low_start);
    h.low_end = r.integer("low_end", h.low_end);
    h.eps_init = r.num("eps_init", h.eps_init);
    h.eps_floor = r.num("eps_floor", h.eps_floor);
    h.tol = r.num("tol", h.tol);
    h.outer_cap = r.integer("outer_cap", h.outer_cap);
    if (h.low_start < 0 || h.low_start > 23) {
      r.fail("low_start", "must lie in [0, 23]");
    }
    if (h.low_end < 0 || h.low_end > 23) r.fail("low_end", "must lie in [0, 23]");
    if (h.t_ue < 1) r.fail("t_ue", "must be at least 1");
    r.finish();
  }
  if (root.has("benchmark")) {
    auto r = root.section("benchmark");
    c.benchmark.tn_bandwidth_hz =
        r.num("tn_bandwidth_hz", c.benchmark.tn_bandwidth_hz);
    c.benchmark.ntn_eps = r.num("ntn_eps", c.benchmark.ntn_eps);
    if (c.benchmark.tn_bandwidth_hz <= 0) {
      r.fail("tn_bandwidth_hz", "must be positive");
    }
    if (c.benchmark.ntn_eps < 0 || c.benchmark.ntn_eps > 1) {
      r.fail("ntn_eps", "must lie in [0, 1]");
    }
    r.finish();
  }
  if (root.has("run")) {
    auto r = root.section("run");
    auto& u = c.run;
    u.hours = r.list<int>("hours", u.hours, "expected an integer hour");
    u.seeds = r.list<std::uint64_t>("seeds", u.seeds,
                                    "expected a nonnegative integer seed");
    u.positions =
        r.list<int>("positions", u.positions, "expected a position index");
    u.policies =
        r.list<std::string>("policies", u.policies, "expected a policy name");
    u.lambda_sweep = r.list<double>("lambda_sweep", u.lambda_sweep,
                                    "expected a number");
    u.workers = r.integer("workers", u.workers);
    u.dump_traces = r.boolean("dump_traces", u.dump_traces);
    for (std::size_t idx = 0; idx < u.hours.size(); ++idx) {
      if (u.hours[idx] < 0 || u.hours[idx] > 23) {
        r.fail("hours", "hour " + std::to_string(u.hours[idx]) +
                            " outside [0, 23]");
      }
    }
    for (std::size_t idx = 0; idx < u.positions.size(); ++idx) {
      if (u.positions[idx] < 0 || u.positions[idx] > 2) {
        r.fail("positions", "position index outside [0, 2]");
      }
    }
    for (const auto& p : u.policies) {
      if (known_policies().count(p) == 0) {
        r.fail("policies", "unknown policy \"" + p + "\"");
      }
    }
    for (double lv : u.lambda_sweep) {
      if (lv < 0) r.fail("lambda_sweep", "values must be nonnegative");
    }
    if (u.workers < 0) r.fail("workers", "must be nonnegative");
    if (u.hours.empty()) r.fail("hours", "must not be empty");
    if (u.seeds.empty()) r.fail("seeds", "must not be empty");
    if (u.positions.empty()) r.fail("positions", "must not be empty");
    if (u.policies.empty()) r.fail("policies", "must not be empty");
    r.finish();
  }
  root.finish();
  return c;
}

inline SimConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

}  // namespace ntnsim
