/**
 * ntnsim — command-line front end.
 *
 * Subcommands:
 *   run             execute an experiment plan and write CSV outputs
 *   scenario dump   print one snapshot's sites and users as CSV
 *   channel dump    print one snapshot's link-gain matrix in dB
 */
#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "ntnsim/config.hpp"
#include "ntnsim/harness.hpp"

namespace {

struct SnapshotArgs {
  std::string config_path;
  int hour = 12;
  std::uint64_t seed = 1;
  int position = 0;
};

void add_snapshot_options(CLI::App* cmd, SnapshotArgs& a) {
  cmd->add_option("--config", a.config_path, "JSON configuration file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--hour", a.hour, "hour of day (default 12)")
      ->check(CLI::Range(0, 23));
  cmd->add_option("--seed", a.seed, "population seed (default 1)");
  cmd->add_option("--position", a.position,
                  "satellite position index (default 0)")
      ->check(CLI::Range(0, 2));
}

std::pair<ntnsim::SimConfig, ntnsim::Scenario> make_snapshot(
    const SnapshotArgs& a) {
  ntnsim::SimConfig cfg = ntnsim::load_config(a.config_path);
  const auto positions = ntnsim::satellite_positions(cfg.scenario.satellite);
  ntnsim::Scenario s =
      ntnsim::make_scenario(cfg.scenario, a.hour,
                            positions[static_cast<std::size_t>(a.position)],
                            a.seed);
  return {std::move(cfg), std::move(s)};
}

void dump_scenario(const SnapshotArgs& a) {
  const auto [cfg, s] = make_snapshot(a);
  std::printf("# hour %d  users %zu  sites %zu (terrestrial %d)\n", s.hour,
              s.ues.size(), s.mbs.size(), s.n_terrestrial);
  std::printf("# satellite %s at (%.3f, %.3f) km, altitude %.1f km\n",
              s.sat_pos.label.c_str(), s.sat_pos.x_km, s.sat_pos.y_km,
              s.sat_pos.altitude_km);
  std::printf("# sites\n");
  std::printf("id,tier,x_km,y_km,z_km,p_max_mw,gain_dbi,p0_w,psi_w\n");
  for (const auto& m : s.mbs) {
    std::printf("%d,%s,%.6f,%.6f,%.6f,%.6f,%.2f,%.3f,%.3f\n", m.id,
                m.tier == ntnsim::Tier::kSatellite ? "satellite"
                                                   : "terrestrial",
                m.x_km, m.y_km, m.z_km, m.p_max_mw, m.gain_dbi, m.p0_w,
                m.psi_w);
  }
  std::printf("# users\n");
  std::printf("id,zone,indoor,x_km,y_km,z_km,gain_dbi\n");
  for (const auto& u : s.ues) {
    std::printf("%d,%s,%d,%.6f,%.6f,%.6f,%.2f\n", u.id,
                u.zone == ntnsim::Zone::kUrban ? "urban" : "rural",
                u.indoor ? 1 : 0, u.x_km, u.y_km, u.z_km, u.gain_dbi);
  }
}

void dump_channel(const SnapshotArgs& a, bool los) {
  const auto [cfg, s] = make_snapshot(a);
  const ntnsim::ChannelState cs = ntnsim::build_channel_state(
      s, cfg.channel, ntnsim::channel_seed(a.seed, a.hour, a.position));
  std::printf("ue");
  for (const auto& m : s.mbs) {
    std::printf(",%s%d", m.tier == ntnsim::Tier::kSatellite ? "sat" : "site",
                m.id);
  }
  std::printf("\n");
  for (Eigen::Index i = 0; i < cs.beta.rows(); ++i) {
    std::printf("%lld", static_cast<long long>(i));
    for (Eigen::Index j = 0; j < cs.beta.cols(); ++j) {
      if (los) {
        std::printf(",%d", cs.los(i, j) != 0.0 ? 1 : 0);
      } else {
        std::printf(",%.6f", 10.0 * std::log10(cs.beta(i, j)));
      }
    }
    std::printf("\n");
  }
}

void print_daily_table(const std::vector<ntnsim::DailySummary>& daily) {
  std::printf("%-22s %5s %8s %8s %7s %10s %9s %12s %12s %7s %8s\n", "policy",
              "hours", "mean_K", "sat_frac", "eps", "mean_SLT", "gain_%",
              "TN_energy_J", "sat_energy_J", "TN_on", "outages");
  for (const auto& d : daily) {
    std::printf(
        "%-22s %5d %8.1f %8.4f %7.4f %10.2f %9.3f %12.1f %12.1f %7.1f %8.0f\n",
        d.policy.c_str(), d.hours, d.mean_k, d.mean_sat_fraction,
        d.mean_epsilon, d.mean_slt, d.mean_slt_gain_vs_tn_pct,
        d.daily_tn_energy_j, d.daily_sat_energy_j, d.mean_active_tn_mbs,
        d.total_outage_count);
  }
}

int run_plan(const std::string& config_path, const std::string& out_dir,
             const std::vector<std::string>& policies,
             const std::vector<int>& hours,
             const std::vector<std::uint64_t>& seeds,
             const std::vector<int>& positions,
             const std::vector<double>& lambdas, int workers,
             bool dump_traces) {
  ntnsim::SimConfig cfg = ntnsim::load_config(config_path);
  if (!policies.empty()) {
    for (const auto& p : policies) {
      if (ntnsim::known_policies().count(p) == 0) {
        std::cerr << "unknown policy \"" << p << "\"\n";
        return 1;
      }
    }
    cfg.run.policies = policies;
  }
  if (!hours.empty()) cfg.run.hours = hours;
  if (!seeds.empty()) cfg.run.seeds = seeds;
  if (!positions.empty()) cfg.run.positions = positions;
  if (lambdas.size() == 1) {
    cfg.blaster.lambda_max = lambdas[0];
    cfg.run.lambda_sweep.clear();
  } else if (lambdas.size() > 1) {
    cfg.run.lambda_sweep = lambdas;
  }
  if (workers >= 0) cfg.run.workers = workers;
  if (dump_traces) cfg.run.dump_traces = true;
  for (int h : cfg.run.hours) {
    if (h < 0 || h > 23) {
      std::cerr << "hour " << h << " outside [0, 23]\n";
      return 1;
    }
  }
  for (int p : cfg.run.positions) {
    if (p < 0 || p > 2) {
      std::cerr << "position index " << p << " outside [0, 2]\n";
      return 1;
    }
  }

  const ntnsim::RunOutputs out = ntnsim::execute_run(cfg, out_dir);
  print_daily_table(out.daily);
  std::printf("\nwrote %s\n", out.hourly_path.c_str());
  std::printf("wrote %s\n", out.daily_path.c_str());
  std::printf("wrote %s\n", out.manifest_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Terrestrial + LEO satellite downlink resource-management "
               "simulator"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "execute an experiment plan");
  std::string config_path, out_dir;
  std::vector<std::string> policies;
  std::vector<int> hours, positions;
  std::vector<std::uint64_t> seeds;
  std::vector<double> lambdas;
  int workers = -1;
  bool dump_traces = false;
  run->add_option("--config", config_path, "JSON configuration file")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_option("--policies", policies,
                  "policies to run (blaster, heuristic, 3gpp-tn, 3gpp-ntn, "
                  "3gpp-energy-saving)")
      ->delimiter(',');
  run->add_option("--hours", hours, "hours of day to simulate")
      ->delimiter(',');
  run->add_option("--seeds", seeds, "population seeds")->delimiter(',');
  run->add_option("--positions", positions, "satellite position indices")
      ->delimiter(',');
  run->add_option("--lambda-max", lambdas,
                  "energy-weight ceiling; several values sweep the blaster "
                  "policy")
      ->delimiter(',');
  run->add_option("--workers", workers,
                  "worker threads (default: hardware concurrency)");
  run->add_flag("--dump-traces", dump_traces,
                "write per-run optimizer traces under <out>/traces");

  SnapshotArgs snap;
  auto* scenario = app.add_subcommand("scenario", "inspect deployments");
  auto* scenario_dump =
      scenario->add_subcommand("dump", "print sites and users as CSV");
  add_snapshot_options(scenario_dump, snap);
  scenario->require_subcommand(1);

  bool los = false;
  auto* channel = app.add_subcommand("channel", "inspect link gains");
  auto* channel_dump =
      channel->add_subcommand("dump", "print the UE x site gain matrix in dB");
  add_snapshot_options(channel_dump, snap);
  channel_dump->add_flag("--los", los,
                         "print line-of-sight flags instead of gains");
  channel->require_subcommand(1);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return run_plan(config_path, out_dir, policies, hours, seeds, positions,
                      lambdas, workers, dump_traces);
    }
    if (scenario_dump->parsed()) {
      dump_scenario(snap);
      return 0;
    }
    if (channel_dump->parsed()) {
      dump_channel(snap, los);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
