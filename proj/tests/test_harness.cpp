#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ntnsim/config.hpp"
#include "ntnsim/harness.hpp"
#include "ntnsim/metrics.hpp"

using namespace ntnsim;
using Catch::Matchers::ContainsSubstring;

namespace {

/// Small area, short grid, tiny population: fast end-to-end runs.
const char* kMicroConfig = R"JSON({
  "area": {"side_km": 2.0, "urban_side_km": 1.0, "urban_isd_m": 500,
           "rural_isd_m": 700},
  "traffic": {"min_count": 6, "max_count": 24, "scale": 1.0},
  "blaster": {"outer_cap": 40},
  "run": {"hours": [4, 20], "seeds": [1], "positions": [0], "workers": 1}
})JSON";

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config values land in the right places") {
  const std::string text = R"JSON({
    "area": {"side_km": 3.4, "urban_side_km": 1.8, "urban_isd_m": 600,
             "rural_isd_m": 1100},
    "terrestrial": {"p0_w": 0.07, "psi_w": 0.2},
    "satellite": {"altitude_km": 550, "baseline_energy_j": 400},
    "ue": {"urban_fraction": 0.5, "indoor_fraction": 0.6},
    "traffic": {"min_count": 40, "max_count": 1000, "scale": 0.5},
    "channel": {"sat_entry_loss_db": 9.5},
    "system": {"rsrp_min_dbm": -118},
    "blaster": {"lambda_max": 123.0, "eta": 12.5},
    "heuristic": {"t_ue": 4},
    "benchmark": {"ntn_eps": 0.6},
    "run": {"hours": [5], "seeds": [7, 8], "positions": [2],
            "policies": ["blaster", "3gpp-tn"], "workers": 3}
  })JSON";
  const SimConfig c = parse_config(text, "inline");
  REQUIRE(c.scenario.area.side_km == 3.4);
  REQUIRE(c.scenario.area.rural_isd_m == 1100);
  REQUIRE(c.scenario.terrestrial.p0_w == 0.07);
  REQUIRE(c.scenario.satellite.altitude_km == 550);
  REQUIRE(c.scenario.satellite.baseline_energy_j == 400);
  REQUIRE(c.scenario.urban_ue_fraction == 0.5);
  REQUIRE(c.scenario.indoor_fraction == 0.6);
  REQUIRE(c.scenario.traffic_scale == 0.5);
  REQUIRE(c.scenario.profile.counts[20] ==
          Catch::Approx(1000.0).epsilon(1e-12));
  REQUIRE(c.scenario.profile.counts[5] == Catch::Approx(40.0).epsilon(1e-12));
  REQUIRE(c.channel.sat_entry_loss_db == 9.5);
  REQUIRE(c.sys.rsrp_min_dbm == -118);
  REQUIRE(c.blaster.lambda_max == 123.0);
  REQUIRE(c.blaster.eta == 12.5);
  // k_min was not given: derived from the scaled traffic minimum.
  REQUIRE(c.blaster.k_min == 20.0);
  REQUIRE(c.heuristic.t_ue == 4.0);
  REQUIRE(c.benchmark.ntn_eps == 0.6);
  REQUIRE(c.run.seeds == std::vector<std::uint64_t>{7, 8});
  REQUIRE(c.run.policies.size() == 2);
  REQUIRE(c.run.workers == 3);

  const SimConfig d = parse_config(R"({"blaster": {"k_min": 5}})", "inline");
  REQUIRE(d.blaster.k_min == 5.0);  // explicit value wins over derivation
}

TEST_CASE("syntax errors carry file, line, and column") {
  const std::string bad = "{\n  \"area\": {\n    \"side_km\": oops\n  }\n}\n";
  try {
    parse_config(bad, "broken.json");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    REQUIRE_THAT(e.what(), ContainsSubstring("broken.json:3:"));
  }
}

TEST_CASE("unknown keys are rejected with their location") {
  const std::string bad = R"JSON({
  "blaster": {
    "lambda_maxx": 10
  }
})JSON";
  try {
    parse_config(bad, "typo.json");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    REQUIRE_THAT(e.what(), ContainsSubstring("unknown key"));
    REQUIRE_THAT(e.what(), ContainsSubstring("/blaster/lambda_maxx"));
    REQUIRE_THAT(e.what(), ContainsSubstring("typo.json:3:"));
  }
}

TEST_CASE("type and range errors name the offending key") {
  try {
    parse_config(R"({"area": {"side_km": "wide"}})", "t.json");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    REQUIRE_THAT(e.what(), ContainsSubstring("expected a number"));
    REQUIRE_THAT(e.what(), ContainsSubstring("/area/side_km"));
  }
  try {
    parse_config(R"({"run": {"hours": [25]}})", "t.json");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    REQUIRE_THAT(e.what(), ContainsSubstring("outside [0, 23]"));
  }
  try {
    parse_config(R"({"run": {"policies": ["blastr"]}})", "t.json");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    REQUIRE_THAT(e.what(), ContainsSubstring("unknown policy"));
  }
}

TEST_CASE("the key-path indexer locates nested values") {
  const std::string doc = "{\n"
                          "  \"a\": {\"b\": 1,\n"
                          "          \"c\": [10, 20, {\"d\": true}]},\n"
                          "  \"e\": \"text\"\n"
                          "}\n";
  auto line_of = [&](const std::string& ptr) {
    const std::size_t off = cfgdetail::offset_of_pointer(doc, ptr);
    REQUIRE(off != std::string::npos);
    return cfgdetail::line_col(doc, off).first;
  };
  REQUIRE(line_of("/a") == 2);
  REQUIRE(line_of("/a/b") == 2);
  REQUIRE(line_of("/a/c") == 3);
  REQUIRE(line_of("/a/c/1") == 3);
  REQUIRE(line_of("/a/c/2/d") == 3);
  REQUIRE(line_of("/e") == 4);
  REQUIRE(cfgdetail::offset_of_pointer(doc, "/missing") ==
          std::string::npos);
}

TEST_CASE("csv fields follow RFC 4180") {
  REQUIRE(csv_field("plain") == "plain");
  REQUIRE(csv_field("a,b") == "\"a,b\"");
  REQUIRE(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  REQUIRE(format_g9(1000.0) == "1000");
  REQUIRE(format_g9(1e7) == "10000000");
  REQUIRE(format_g9(1e12) == "1e+12");
  REQUIRE(format_g9(0.1) == "0.1");
}

TEST_CASE("policy expansion labels a sweep but not a single value") {
  SimConfig cfg = parse_config("{}", "inline");
  cfg.run.policies = {"blaster", "3gpp-tn"};
  auto single = expand_policies(cfg);
  REQUIRE(single.size() == 2);
  REQUIRE(single[0].label == "blaster");
  REQUIRE(single[0].lambda_max == cfg.blaster.lambda_max);

  cfg.run.lambda_sweep = {1000.0, 1e7};
  auto swept = expand_policies(cfg);
  REQUIRE(swept.size() == 3);
  REQUIRE(swept[0].label == "blaster@1000");
  REQUIRE(swept[1].label == "blaster@10000000");
  REQUIRE(swept[2].label == "3gpp-tn");
}

TEST_CASE("channel seeds are deterministic and distinct per group") {
  REQUIRE(channel_seed(1, 5, 0) == channel_seed(1, 5, 0));
  REQUIRE(channel_seed(1, 5, 0) != channel_seed(1, 5, 1));
  REQUIRE(channel_seed(1, 5, 0) != channel_seed(1, 6, 0));
  REQUIRE(channel_seed(1, 5, 0) != channel_seed(2, 5, 0));
}

TEST_CASE("an end-to-end run writes deterministic, consistent outputs") {
  const SimConfig cfg = parse_config(kMicroConfig, "micro");
  namespace fs = std::filesystem;
  const std::string base = fs::temp_directory_path().string() + "/ntnsim_test";
  fs::remove_all(base);

  const RunOutputs a = execute_run(cfg, base + "/a");
  REQUIRE(fs::exists(a.hourly_path));
  REQUIRE(fs::exists(a.daily_path));
  REQUIRE(fs::exists(a.manifest_path));

  // 2 hours x 5 policies.
  REQUIRE(a.hourly.size() == 10);
  REQUIRE(a.daily.size() == 5);

  // The baseline's gain against itself is identically zero, others finite.
  for (const auto& row : a.hourly) {
    if (row.policy == "3gpp-tn") REQUIRE(row.slt_gain_vs_tn_pct == 0.0);
    REQUIRE(std::isfinite(row.slt));
    REQUIRE(row.k > 0);
    REQUIRE(row.tn_energy_j > 0);
  }

  // Byte-identical across a repeat and across worker counts.
  const RunOutputs b = execute_run(cfg, base + "/b");
  REQUIRE(slurp(a.hourly_path) == slurp(b.hourly_path));
  SimConfig par = cfg;
  par.run.workers = 4;
  const RunOutputs c = execute_run(par, base + "/c");
  REQUIRE(slurp(a.hourly_path) == slurp(c.hourly_path));
  REQUIRE(slurp(a.daily_path) == slurp(c.daily_path));

  // The daily summary is an exact aggregation of the hourly rows.
  for (const auto& d : a.daily) {
    double mean_slt = 0, sum_tn = 0, sum_outage = 0;
    int n = 0;
    for (const auto& r : a.hourly) {
      if (r.policy != d.policy) continue;
      mean_slt += r.slt;
      sum_tn += r.tn_energy_j;
      sum_outage += r.outage_count;
      ++n;
    }
    REQUIRE(n == d.hours);
    REQUIRE(d.mean_slt == Catch::Approx(mean_slt / n).epsilon(1e-12));
    REQUIRE(d.daily_tn_energy_j == Catch::Approx(sum_tn).epsilon(1e-12));
    REQUIRE(d.total_outage_count == Catch::Approx(sum_outage).margin(1e-12));
  }

  // Trace dumping produces one file per optimizer unit.
  SimConfig tr = cfg;
  tr.run.dump_traces = true;
  tr.run.policies = {"blaster"};
  execute_run(tr, base + "/t");
  REQUIRE(fs::exists(base + "/t/traces/blaster_h4_s1_p0.csv"));
  REQUIRE(fs::exists(base + "/t/traces/blaster_h20_s1_p0.csv"));
  const std::string trace = slurp(base + "/t/traces/blaster_h20_s1_p0.csv");
  REQUIRE_THAT(trace, ContainsSubstring("iteration,f_total"));
  fs::remove_all(base);
}
