#pragma once
/**
 * heuristic.hpp — HEURISTIC: a low-complexity, single-pass alternative to
 * the full optimizer.  It trades the iterative relaxation for three cheap
 * rules:
 *
 *   1. association — users are ranked by their mean link gain (dB) across
 *      coverage-feasible transmitters, weakest first, and greedily pick the
 *      transmitter with the best estimated share throughput at full power
 *      given the loads accumulated so far.  During the configured night
 *      window, satellite-coverable users are steered to the satellite
 *      before the greedy pass (offloading the ground network when traffic
 *      is thin).
 *   2. consolidation — terrestrial cells with fewer users than a threshold
 *      are examined in ascending-load order; when every resident user can
 *      be re-homed to an active alternative that covers it at the
 *      alternative's current power, the users are handed over to their
 *      best-throughput alternatives and the cell is switched off.  In busy
 *      hours the threshold collapses to one, so only empty cells go dark.
 *   3. power floors — every serving transmitter drops to the smallest
 *      power that keeps its weakest user at the coverage floor; unused
 *      transmitters are off.
 *
 * The bandwidth split follows the association (satellite share of users),
 * and the consolidate/floor pair repeats until the utility stops moving.
 */

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "ntnsim/blaster.hpp"
#include "ntnsim/linklayer.hpp"
#include "ntnsim/units.hpp"

namespace ntnsim {

struct HeuristicConfig {
  double t_ue = 3.0;   // night-window shutdown threshold (users per cell)
  int low_start = 0;   // inclusive hour window treated as low traffic
  int low_end = 7;
  double eps_init = 0.5;
  double eps_floor = 1e-3;
  double tol = 1e-4;  // relative utility change declaring convergence
  int outer_cap = 50;
};

struct HeuristicResult {
  Allocation alloc;
  Eigen::ArrayXd tau_mw;  // final per-MBS coverage floors
  int handovers = 0;
  int cells_shut = 0;  // terrestrial cells emptied by consolidation
  int iterations = 0;
  bool converged = false;
};

/**
 * Users ordered by mean feasible link gain in dB, weakest first.  Users
 * with the fewest good options commit before the cells fill up.
 */
inline std::vector<int> rank_ues(const ChannelState& cs,
                                 const Eigen::ArrayXXd& mask) {
  const int K = static_cast<int>(cs.beta.rows());
  const int L = static_cast<int>(cs.beta.cols());
  std::vector<double> score(static_cast<std::size_t>(K));
  for (int i = 0; i < K; ++i) {
    double sum_db = 0.0;
    int n = 0;
    for (int j = 0; j < L; ++j) {
      if (mask(i, j) == 0.0) continue;
      sum_db += lin_to_db(cs.beta(i, j));
      ++n;
    }
    if (n == 0) {
      throw std::runtime_error("rank_ues: UE " + std::to_string(i) +
                               " has no coverage-feasible transmitter");
    }
    score[static_cast<std::size_t>(i)] = sum_db / n;
  }
  std::vector<int> order(static_cast<std::size_t>(K));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) {
                     return score[static_cast<std::size_t>(a)] <
                            score[static_cast<std::size_t>(b)];
                   });
  return order;
}

namespace detail {

/// Estimated share throughput of UE i on transmitter j if it joined now:
/// bandwidth share at load k_j + 1 times the current-power spectral
/// efficiency.
inline double join_estimate(const ChannelState& cs, const Scenario& s,
                            const SysParams& sys, const Eigen::ArrayXd& p_mw,
                            const Eigen::ArrayXXd& rx, double eps,
                            double bandwidth_hz, const Eigen::ArrayXd& k,
                            int i, int j) {
  const bool is_sat =
      s.mbs[static_cast<std::size_t>(j)].tier == Tier::kSatellite;
  const auto [w_sat, w_terr] = split_bandwidth(eps, bandwidth_hz);
  const double own = cs.beta(i, j) * p_mw(j);
  const double gamma = own / (rx(i, is_sat) - own + sys.noise_mw());
  return (is_sat ? w_sat : w_terr) / (k(j) + 1.0) * log2_1p(gamma);
}

}  // namespace detail

inline HeuristicResult run_heuristic(const ChannelState& cs,
                                     const Scenario& s, const SysParams& sys,
                                     const HeuristicConfig& cfg) {
  const int K = static_cast<int>(cs.beta.rows());
  const int L = static_cast<int>(cs.beta.cols());
  if (K == 0 || L == 0) {
    throw std::invalid_argument("run_heuristic: empty snapshot");
  }
  const Eigen::ArrayXXd mask = feasible_mask(cs, s, sys);
  const Eigen::ArrayXd cap = p_max_mw(s);
  const double floor_mw = sys.rsrp_min_mw();
  const bool low_traffic = s.hour >= cfg.low_start && s.hour <= cfg.low_end;
  const double t_eff = low_traffic ? cfg.t_ue : 1.0;

  HeuristicResult res;
  Allocation& a = res.alloc;
  a.X = Eigen::ArrayXXd::Zero(K, L);
  a.p_mw = cap;  // association and consolidation reason at full power
  a.eps = cfg.eps_init;
  a.bandwidth_hz = sys.bandwidth_hz;

  // --- 1. ranked greedy association ----------------------------------------
  {
    const Eigen::ArrayXXd rx = tier_received_mw(cs, s, a.p_mw);
    Eigen::ArrayXd k = Eigen::ArrayXd::Zero(L);
    for (int i : rank_ues(cs, mask)) {
      int pick = -1;
      if (low_traffic && mask(i, s.sat_index) != 0.0) {
        pick = s.sat_index;
      } else {
        double best = -1.0;
        for (int j = 0; j < L; ++j) {
          if (mask(i, j) == 0.0) continue;
          const double est = detail::join_estimate(
              cs, s, sys, a.p_mw, rx, a.eps, a.bandwidth_hz, k, i, j);
          if (est > best) {
            best = est;
            pick = j;
          }
        }
        if (pick < 0) {
          throw std::runtime_error("run_heuristic: UE " + std::to_string(i) +
                                   " has no coverage-feasible transmitter");
        }
      }
      a.X(i, pick) = 1.0;
      k(pick) += 1.0;
    }
  }
  a.eps = std::clamp(a.X.col(s.sat_index).sum() / static_cast<double>(K),
                     cfg.eps_floor, 1.0 - cfg.eps_floor);

  std::vector<bool> active(static_cast<std::size_t>(L), true);
  double slt_prev = 0.0;
  bool have_prev = false;

  for (int it = 1; it <= cfg.outer_cap; ++it) {
    res.iterations = it;

    // --- 2. consolidation pass, lightest cells first ------------------------
    Eigen::ArrayXd k = loads(a.X);
    const Eigen::ArrayXXd rx = tier_received_mw(cs, s, a.p_mw);
    std::vector<int> order;
    for (int j = 0; j < s.n_terrestrial; ++j) {
      if (active[static_cast<std::size_t>(j)] && k(j) > 0.0 && k(j) < t_eff) {
        order.push_back(j);
      }
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](int x, int y) { return k(x) < k(y); });
    for (int b : order) {
      if (!(k(b) > 0.0 && k(b) < t_eff)) continue;  // load moved meanwhile
      std::vector<std::pair<int, int>> moves;       // (ue, target)
      bool all_covered = true;
      for (int i = 0; i < K && all_covered; ++i) {
        if (a.X(i, b) != 1.0) continue;
        int best_j = -1;
        double best_est = -1.0;
        for (int j = 0; j < L; ++j) {
          if (j == b || !active[static_cast<std::size_t>(j)]) continue;
          if (cs.beta(i, j) * a.p_mw(j) < floor_mw) continue;  // un-covered
          const double est = detail::join_estimate(
              cs, s, sys, a.p_mw, rx, a.eps, a.bandwidth_hz, k, i, j);
          if (est > best_est) {
            best_est = est;
            best_j = j;
          }
        }
        if (best_j < 0) {
          all_covered = false;
        } else {
          moves.emplace_back(i, best_j);
        }
      }
      if (!all_covered || moves.empty()) continue;
      for (const auto& [i, j] : moves) {
        a.X(i, b) = 0.0;
        a.X(i, j) = 1.0;
        k(j) += 1.0;
        k(b) -= 1.0;
      }
      res.handovers += static_cast<int>(moves.size());
      active[static_cast<std::size_t>(b)] = false;
      a.p_mw(b) = 0.0;
      res.cells_shut += 1;
    }

    // --- 3. split follows the association, powers drop to the floors --------
    a.eps = std::clamp(a.X.col(s.sat_index).sum() / static_cast<double>(K),
                       cfg.eps_floor, 1.0 - cfg.eps_floor);
    res.tau_mw = coverage_floors(a.X, cs, sys, 1.0);
    for (int j = 0; j < L; ++j) {
      a.p_mw(j) = active[static_cast<std::size_t>(j)] ? res.tau_mw(j) : 0.0;
    }

    const double slt = sum_log_throughput(ue_throughput(a, cs, s, sys));
    if (have_prev &&
        std::abs(slt - slt_prev) <= cfg.tol * std::max(std::abs(slt_prev),
                                                       1e-300)) {
      res.converged = true;
      break;
    }
    slt_prev = slt;
    have_prev = true;
  }
  return res;
}

}  // namespace ntnsim
