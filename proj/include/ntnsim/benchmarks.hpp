#pragma once
/**
 * benchmarks.hpp — reference operating policies the optimizer and the
 * heuristic are measured against.
 *
 *   kTn           terrestrial-only network on its licensed 10 MHz carve-out:
 *                 every ground cell transmits at full power, users attach to
 *                 the strongest coverage-feasible ground cell, the satellite
 *                 is absent (split 0).
 *   kNtn          integrated network on the full band with a fixed split
 *                 (0.75 to the satellite tier by default): strongest-signal
 *                 attachment over both tiers, full power everywhere.
 *   kEnergySaving kTn plus the obvious saving: ground cells that attracted
 *                 no users are switched off.
 *
 * Attachment ties break toward the lower transmitter id.  A user with no
 * coverage-feasible candidate is left unattached (zero row) and counted as
 * an outage; rate accounting later gives such users the configured floor
 * rate so log-utilities stay finite.
 */

#include <Eigen/Dense>
#include <stdexcept>

#include "ntnsim/linklayer.hpp"

namespace ntnsim {

enum class Benchmark { kTn, kNtn, kEnergySaving };

struct BenchmarkConfig {
  double tn_bandwidth_hz = 10e6;  // terrestrial-only licensed share
  double ntn_eps = 0.75;          // fixed satellite share of the full band
};

struct BenchmarkOutcome {
  Allocation alloc;
  int outage_count = 0;
};

inline const char* benchmark_name(Benchmark b) {
  switch (b) {
    case Benchmark::kTn:
      return "3gpp-tn";
    case Benchmark::kNtn:
      return "3gpp-ntn";
    case Benchmark::kEnergySaving:
      return "3gpp-energy-saving";
  }
  throw std::invalid_argument("benchmark_name: unknown policy");
}

inline BenchmarkOutcome run_benchmark(Benchmark b, const ChannelState& cs,
                                      const Scenario& s, const SysParams& sys,
                                      const BenchmarkConfig& cfg = {}) {
  const int K = static_cast<int>(cs.beta.rows());
  const int L = static_cast<int>(cs.beta.cols());
  const bool sat_allowed = b == Benchmark::kNtn;

  BenchmarkOutcome out;
  Allocation& a = out.alloc;
  a.X = Eigen::ArrayXXd::Zero(K, L);
  a.p_mw = p_max_mw(s);
  if (sat_allowed) {
    a.bandwidth_hz = sys.bandwidth_hz;
    a.eps = cfg.ntn_eps;
  } else {
    a.bandwidth_hz = cfg.tn_bandwidth_hz;
    a.eps = 0.0;
    a.p_mw(s.sat_index) = 0.0;  // the satellite is not part of the network
  }

  const double floor_mw = sys.rsrp_min_mw();
  const int n_candidates = sat_allowed ? L : s.n_terrestrial;
  for (int i = 0; i < K; ++i) {
    int pick = -1;
    double best = 0.0;
    for (int j = 0; j < n_candidates; ++j) {
      const double rsrp = cs.beta(i, j) * a.p_mw(j);
      if (rsrp < floor_mw) continue;  // below the attachment floor
      if (rsrp > best) {
        best = rsrp;
        pick = j;
      }
    }
    if (pick < 0) {
      ++out.outage_count;  // row stays zero; rate floor applies downstream
    } else {
      a.X(i, pick) = 1.0;
    }
  }

  if (b == Benchmark::kEnergySaving) {
    const Eigen::ArrayXd k = loads(a.X);
    for (int j = 0; j < s.n_terrestrial; ++j) {
      if (k(j) <= 0.0) a.p_mw(j) = 0.0;
    }
  }
  return out;
}

}  // namespace ntnsim
