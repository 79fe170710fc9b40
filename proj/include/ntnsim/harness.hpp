#pragma once
/**
 * harness.hpp — experiment orchestration.
 *
 * A run expands to the cartesian product of hours x seeds x satellite
 * positions ("groups"), evaluates every requested policy on each group's
 * shared scenario + channel snapshot, and averages per (hour, policy) over
 * the seeds and positions.  The terrestrial-only baseline is always
 * evaluated internally so each snapshot's utility gain is measured against
 * its own baseline before averaging.
 *
 * Groups run on a worker pool; results land in preallocated slots and are
 * aggregated in a fixed order afterwards, so the output files are
 * byte-identical regardless of thread scheduling.
 */

#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ntnsim/benchmarks.hpp"
#include "ntnsim/blaster.hpp"
#include "ntnsim/channel.hpp"
#include "ntnsim/config.hpp"
#include "ntnsim/heuristic.hpp"
#include "ntnsim/linklayer.hpp"
#include "ntnsim/metrics.hpp"
#include "ntnsim/rng.hpp"
#include "ntnsim/scenario.hpp"

namespace ntnsim {

/// Channel randomness is keyed by (seed, hour, position), independent of
/// the UE-position stream inside make_scenario.
inline std::uint64_t channel_seed(std::uint64_t seed, int hour,
                                  int position) {
  return Rng(seed)
      .fork(0xc4a2u, static_cast<std::uint64_t>(hour) * 8 +
                         static_cast<std::uint64_t>(position))
      .state();
}

/// One policy evaluated on one snapshot.
struct UnitMetrics {
  double k = 0.0;
  double sat_fraction = 0.0;
  double epsilon = 0.0;
  double slt = 0.0;
  double gain_pct = 0.0;
  double tn_energy_j = 0.0;
  double sat_energy_j = 0.0;
  double active_tn = 0.0;
  double outages = 0.0;
  double op_estimate = 0.0;
};

struct PolicyEval {
  Allocation alloc;
  int outages = 0;
  double op_estimate = 0.0;
  OptimizerTrace trace;  // filled for the optimizer only
  bool has_trace = false;
};

inline PolicyEval evaluate_policy(const std::string& policy,
                                  double lambda_max, const ChannelState& cs,
                                  const Scenario& s, const SimConfig& cfg) {
  const double kl = static_cast<double>(cs.beta.rows()) *
                    static_cast<double>(cs.beta.cols());
  PolicyEval e;
  if (policy == "blaster") {
    BlasterConfig bc = cfg.blaster;
    bc.lambda_max = lambda_max;
    BlasterResult r = run_blaster(cs, s, cfg.sys, bc);
    e.alloc = std::move(r.alloc);
    e.trace = std::move(r.trace);
    e.has_trace = true;
    const double i_mu =
        std::max(1.0, static_cast<double>(e.trace.dual_iterations_total) /
                          std::max(1, e.trace.iterations));
    e.op_estimate = static_cast<double>(e.trace.iterations) * i_mu * kl;
  } else if (policy == "heuristic") {
    HeuristicResult r = run_heuristic(cs, s, cfg.sys, cfg.heuristic);
    e.alloc = std::move(r.alloc);
    e.op_estimate = static_cast<double>(r.iterations) * kl;
  } else if (policy == "3gpp-tn") {
    BenchmarkOutcome r = run_benchmark(Benchmark::kTn, cs, s, cfg.sys,
                                       cfg.benchmark);
    e.alloc = std::move(r.alloc);
    e.outages = r.outage_count;
    e.op_estimate = kl;
  } else if (policy == "3gpp-ntn") {
    BenchmarkOutcome r = run_benchmark(Benchmark::kNtn, cs, s, cfg.sys,
                                       cfg.benchmark);
    e.alloc = std::move(r.alloc);
    e.outages = r.outage_count;
    e.op_estimate = kl;
  } else if (policy == "3gpp-energy-saving") {
    BenchmarkOutcome r = run_benchmark(Benchmark::kEnergySaving, cs, s,
                                       cfg.sys, cfg.benchmark);
    e.alloc = std::move(r.alloc);
    e.outages = r.outage_count;
    e.op_estimate = kl;
  } else {
    throw std::invalid_argument("evaluate_policy: unknown policy " + policy);
  }
  return e;
}

inline UnitMetrics summarize_unit(const PolicyEval& e, const ChannelState& cs,
                                  const Scenario& s, const SysParams& sys,
                                  double slt_tn) {
  const int K = static_cast<int>(cs.beta.rows());
  UnitMetrics m;
  m.k = K;
  m.sat_fraction = e.alloc.X.col(s.sat_index).sum() / K;
  m.epsilon = e.alloc.eps;
  m.slt = sum_log_throughput(ue_throughput(e.alloc, cs, s, sys, true));
  m.gain_pct = 100.0 * (m.slt - slt_tn) /
               std::max(std::abs(slt_tn), 1e-300);
  const EnergyReport er = energy(e.alloc, s, sys);
  m.tn_energy_j = er.tn_energy_j;
  m.sat_energy_j = er.sat_energy_j;
  for (int j = 0; j < s.n_terrestrial; ++j) {
    m.active_tn += e.alloc.p_mw(j) > 0.0 ? 1.0 : 0.0;
  }
  m.outages = e.outages;
  m.op_estimate = e.op_estimate;
  return m;
}

/// A policy column in the output: the policy id plus the shutdown weight it
/// runs at (labels get a suffix only when sweeping several values).
struct PolicyTask {
  std::string policy;
  std::string label;
  double lambda_max = 0.0;
};

inline std::vector<PolicyTask> expand_policies(const SimConfig& cfg) {
  std::vector<double> lambdas = cfg.run.lambda_sweep;
  if (lambdas.empty()) lambdas = {cfg.blaster.lambda_max};
  std::vector<PolicyTask> out;
  for (const auto& p : cfg.run.policies) {
    if (p == "blaster") {
      for (double lv : lambdas) {
        PolicyTask t;
        t.policy = p;
        t.label = lambdas.size() > 1 ? p + "@" + format_g9(lv) : p;
        t.lambda_max = lv;
        out.push_back(std::move(t));
      }
    } else {
      out.push_back(PolicyTask{p, p, cfg.blaster.lambda_max});
    }
  }
  return out;
}

struct GroupSpec {
  int hour = 0;
  std::uint64_t seed = 0;
  int position = 0;
};

struct GroupResult {
  std::vector<UnitMetrics> units;  // one per PolicyTask, in task order
  // (task index, trace) pairs for optimizer runs, when trace dumping is on
  std::vector<std::pair<std::size_t, OptimizerTrace>> traces;
};

inline GroupResult run_group(const SimConfig& cfg, const GroupSpec& g,
                             const std::vector<PolicyTask>& tasks,
                             bool keep_traces) {
  const auto positions = satellite_positions(cfg.scenario.satellite);
  const Scenario s = make_scenario(cfg.scenario, g.hour,
                                   positions[static_cast<std::size_t>(
                                       g.position)],
                                   g.seed);
  const ChannelState cs = build_channel_state(
      s, cfg.channel, channel_seed(g.seed, g.hour, g.position));

  // Per-snapshot baseline for relative utility gains.
  const PolicyEval tn = evaluate_policy("3gpp-tn", cfg.blaster.lambda_max,
                                        cs, s, cfg);
  const double slt_tn =
      sum_log_throughput(ue_throughput(tn.alloc, cs, s, cfg.sys, true));

  GroupResult out;
  out.units.reserve(tasks.size());
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const PolicyTask& task = tasks[t];
    if (task.policy == "3gpp-tn") {
      out.units.push_back(summarize_unit(tn, cs, s, cfg.sys, slt_tn));
      continue;
    }
    PolicyEval e = evaluate_policy(task.policy, task.lambda_max, cs, s, cfg);
    out.units.push_back(summarize_unit(e, cs, s, cfg.sys, slt_tn));
    if (keep_traces && e.has_trace) {
      out.traces.emplace_back(t, std::move(e.trace));
    }
  }
  return out;
}

struct RunOutputs {
  std::vector<HourlyMetrics> hourly;
  std::vector<DailySummary> daily;
  std::string hourly_path;
  std::string daily_path;
  std::string manifest_path;
};

namespace harness_detail {

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

inline std::string trace_csv(const OptimizerTrace& tr) {
  std::string s =
      "iteration,f_total,slt,l1,group,eps,active_tn_mbs,relative_gain,"
      "dual_iterations\n";
  for (const auto& r : tr.rows) {
    s += std::to_string(r.iteration);
    for (double v : {r.f_total, r.slt, r.l1, r.group, r.eps,
                     static_cast<double>(r.active_tn_mbs), r.relative_gain,
                     static_cast<double>(r.dual_iterations)}) {
      s += ',';
      s += format_g9(v);
    }
    s += '\n';
  }
  return s;
}

}  // namespace harness_detail

inline RunOutputs execute_run(const SimConfig& cfg,
                              const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  if (cfg.run.dump_traces) fs::create_directories(out_dir + "/traces");

  const std::vector<PolicyTask> tasks = expand_policies(cfg);
  std::vector<GroupSpec> groups;
  for (int hour : cfg.run.hours) {
    for (std::uint64_t seed : cfg.run.seeds) {
      for (int position : cfg.run.positions) {
        groups.push_back(GroupSpec{hour, seed, position});
      }
    }
  }

  std::vector<GroupResult> results(groups.size());
  {
    unsigned n_workers = cfg.run.workers > 0
                             ? static_cast<unsigned>(cfg.run.workers)
                             : std::max(1u, std::thread::hardware_concurrency());
    n_workers = std::min<unsigned>(
        n_workers, static_cast<unsigned>(std::max<std::size_t>(
                       1, groups.size())));
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    auto worker = [&]() {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= groups.size()) return;
        try {
          results[i] = run_group(cfg, groups[i], tasks, cfg.run.dump_traces);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  // Deterministic aggregation: hours in listed order, tasks in listed order,
  // averaging each metric over the seeds x positions of that hour.
  RunOutputs out;
  for (std::size_t hi = 0; hi < cfg.run.hours.size(); ++hi) {
    const int hour = cfg.run.hours[hi];
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      HourlyMetrics m;
      m.hour = hour;
      m.policy = tasks[t].label;
      int n = 0;
      for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        if (groups[gi].hour != hour) continue;
        const UnitMetrics& u = results[gi].units[t];
        m.k += u.k;
        m.sat_fraction += u.sat_fraction;
        m.epsilon += u.epsilon;
        m.slt += u.slt;
        m.slt_gain_vs_tn_pct += u.gain_pct;
        m.tn_energy_j += u.tn_energy_j;
        m.sat_energy_j += u.sat_energy_j;
        m.active_tn_mbs += u.active_tn;
        m.outage_count += u.outages;
        m.op_estimate += u.op_estimate;
        ++n;
      }
      const double dn = n > 0 ? n : 1;
      m.k /= dn;
      m.sat_fraction /= dn;
      m.epsilon /= dn;
      m.slt /= dn;
      m.slt_gain_vs_tn_pct /= dn;
      m.tn_energy_j /= dn;
      m.sat_energy_j /= dn;
      m.active_tn_mbs /= dn;
      m.outage_count /= dn;
      m.op_estimate /= dn;
      out.hourly.push_back(std::move(m));
    }
  }
  out.daily = compute_daily(out.hourly);

  std::string hourly_csv = hourly_csv_header();
  hourly_csv += '\n';
  for (const auto& m : out.hourly) {
    hourly_csv += hourly_csv_row(m);
    hourly_csv += '\n';
  }
  std::string daily_csv = daily_csv_header();
  daily_csv += '\n';
  for (const auto& d : out.daily) {
    daily_csv += daily_csv_row(d);
    daily_csv += '\n';
  }

  nlohmann::json manifest;
  manifest["hours"] = cfg.run.hours;
  manifest["seeds"] = cfg.run.seeds;
  manifest["positions"] = cfg.run.positions;
  {
    std::vector<std::string> labels;
    std::vector<double> lambdas;
    for (const auto& t : tasks) {
      labels.push_back(t.label);
      if (t.policy == "blaster") lambdas.push_back(t.lambda_max);
    }
    manifest["policies"] = labels;
    manifest["lambda_values"] = lambdas;
  }
  manifest["groups"] = groups.size();
  manifest["hourly_rows"] = out.hourly.size();
  manifest["area_side_km"] = cfg.scenario.area.side_km;
  manifest["traffic_scale"] = cfg.scenario.traffic_scale;
  manifest["bandwidth_hz"] = cfg.sys.bandwidth_hz;
  manifest["rsrp_min_dbm"] = cfg.sys.rsrp_min_dbm;

  out.hourly_path = out_dir + "/hourly_metrics.csv";
  out.daily_path = out_dir + "/daily_summary.csv";
  out.manifest_path = out_dir + "/run_manifest.json";
  harness_detail::write_file(out.hourly_path, hourly_csv);
  harness_detail::write_file(out.daily_path, daily_csv);
  harness_detail::write_file(out.manifest_path, manifest.dump(2) + "\n");

  if (cfg.run.dump_traces) {
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
      for (const auto& [t, tr] : results[gi].traces) {
        std::string name = out_dir + "/traces/" + tasks[t].label + "_h" +
                           std::to_string(groups[gi].hour) + "_s" +
                           std::to_string(groups[gi].seed) + "_p" +
                           std::to_string(groups[gi].position) + ".csv";
        harness_detail::write_file(name, harness_detail::trace_csv(tr));
      }
    }
  }
  return out;
}

}  // namespace ntnsim
