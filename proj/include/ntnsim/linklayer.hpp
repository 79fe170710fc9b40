#pragma once
/**
 * linklayer.hpp — SINR, per-UE throughput, bandwidth split, energy model.
 *
 * The two tiers are frequency-orthogonal: a split fraction eps of the total
 * bandwidth W goes to the satellite tier and (1-eps) to the terrestrial
 * tier, so a link only sees interference from other transmitters of its own
 * tier.  Each MBS divides its tier bandwidth equally among its associated
 * UEs (load k_j), giving the familiar round-robin mean rate
 * (W_j / k_j) * log2(1 + SINR).
 *
 * Power bookkeeping: transmit powers are per resource element in mW; the
 * per-MBS electrical draw is  q_j = P0 + scale*p_j + psi*[p_j > 0]  in
 * watts, and energies are draws integrated over one snapshot slot, with a
 * fixed ground-segment baseline added on the satellite side.
 */

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "ntnsim/channel.hpp"
#include "ntnsim/scenario.hpp"
#include "ntnsim/units.hpp"

namespace ntnsim {

struct SysParams {
  double bandwidth_hz = 40e6;      // total W shared by the two tiers
  double re_bandwidth_hz = 180e3;  // one resource element (12 x 15 kHz)
  double noise_dbm_per_hz = -174.0;
  double rsrp_min_dbm = -120.0;
  double energy_p_scale_w_per_mw = 1.0;  // converts p (mW) into watts drawn
  double slot_seconds = 3600.0;          // one snapshot = one hour
  double orphan_rate_floor_bps = 1.0;    // rate credited to unserved UEs

  double noise_mw() const {
    return db_to_lin(noise_dbm_per_hz + 10.0 * std::log10(re_bandwidth_hz));
  }
  double rsrp_min_mw() const { return db_to_lin(rsrp_min_dbm); }
};

/// One operating point: relaxed or binary association X (rows = UEs, sum to
/// 1), per-RE transmit powers in mW, satellite bandwidth share eps, and the
/// total bandwidth the split applies to.
struct Allocation {
  Eigen::ArrayXXd X;
  Eigen::ArrayXd p_mw;
  double eps = 0.5;
  double bandwidth_hz = 40e6;
};

using LoadVector = Eigen::ArrayXd;

inline LoadVector loads(const Eigen::ArrayXXd& X) {
  return X.colwise().sum().transpose();
}

/// {satellite share, terrestrial share} of W.
inline std::pair<double, double> split_bandwidth(double eps, double w_hz) {
  if (eps < 0.0 || eps > 1.0) {
    throw std::domain_error("split_bandwidth: eps outside [0, 1]");
  }
  return {eps * w_hz, (1.0 - eps) * w_hz};
}

/// Column mask of same-tier membership for interference sums.
inline bool same_tier(const Scenario& s, int a, int b) {
  return s.mbs[static_cast<std::size_t>(a)].tier ==
         s.mbs[static_cast<std::size_t>(b)].tier;
}

/// Total received power per UE from each tier (K x 2: terrestrial, satellite).
inline Eigen::ArrayXXd tier_received_mw(const ChannelState& cs,
                                        const Scenario& s,
                                        const Eigen::ArrayXd& p_mw) {
  const int K = static_cast<int>(cs.beta.rows());
  const int L = static_cast<int>(cs.beta.cols());
  Eigen::ArrayXXd rx = Eigen::ArrayXXd::Zero(K, 2);
  for (int j = 0; j < L; ++j) {
    const int t = s.mbs[static_cast<std::size_t>(j)].tier == Tier::kSatellite;
    rx.col(t) += cs.beta.col(j) * p_mw(j);
  }
  return rx;
}

/// SINR of link (i, j): interference from same-tier transmitters j' != j.
inline double sinr(const ChannelState& cs, const Scenario& s,
                   const SysParams& sys, const Eigen::ArrayXd& p_mw, int i,
                   int j) {
  const int L = static_cast<int>(cs.beta.cols());
  double interference = 0.0;
  for (int l = 0; l < L; ++l) {
    if (l != j && same_tier(s, l, j)) interference += cs.beta(i, l) * p_mw(l);
  }
  return cs.beta(i, j) * p_mw(j) / (interference + sys.noise_mw());
}

/// Mean rate of one UE on a column with bandwidth w_j shared by k_j UEs.
inline double mean_throughput(double w_j_hz, double k_j, double gamma) {
  if (!(k_j > 0.0)) {
    throw std::domain_error("mean_throughput: load must be positive");
  }
  return w_j_hz / k_j * log2_1p(gamma);
}

/**
 * Per-UE achieved rates R_i = sum_j x_ij * (W_j / k_j) * log2(1 + SINR_ij),
 * with column loads k_j = sum_i x_ij taken from X itself.  Rows with no
 * association get the configured orphan floor rate when allow_orphans is
 * set (benchmark policies leave uncovered UEs unserved) and are an error
 * otherwise.
 */
inline Eigen::ArrayXd ue_throughput(const Allocation& a,
                                    const ChannelState& cs, const Scenario& s,
                                    const SysParams& sys,
                                    bool allow_orphans = false) {
  const int K = static_cast<int>(cs.beta.rows());
  const int L = static_cast<int>(cs.beta.cols());
  const LoadVector k = loads(a.X);
  const auto [w_sat, w_terr] = split_bandwidth(a.eps, a.bandwidth_hz);
  const Eigen::ArrayXXd rx = tier_received_mw(cs, s, a.p_mw);
  const double n0 = sys.noise_mw();

  Eigen::ArrayXd r = Eigen::ArrayXd::Zero(K);
  for (int i = 0; i < K; ++i) {
    double sum = 0.0;
    bool any = false;
    for (int j = 0; j < L; ++j) {
      const double x = a.X(i, j);
      if (x <= 0.0) continue;
      any = true;
      const bool is_sat =
          s.mbs[static_cast<std::size_t>(j)].tier == Tier::kSatellite;
      const double own = cs.beta(i, j) * a.p_mw(j);
      const double gamma = own / (rx(i, is_sat) - own + n0);
      sum += x * mean_throughput(is_sat ? w_sat : w_terr, k(j), gamma);
    }
    if (!any) {
      if (!allow_orphans) {
        throw std::runtime_error("ue_throughput: UE " + std::to_string(i) +
                                 " has no association");
      }
      sum = sys.orphan_rate_floor_bps;
    }
    r(i) = sum;
  }
  return r;
}

/// Proportional-fair utility: sum of natural logs of the per-UE rates.
inline double sum_log_throughput(const Eigen::ArrayXd& rates) {
  const int K = static_cast<int>(rates.size());
  double slt = 0.0;
  for (int i = 0; i < K; ++i) {
    if (!(rates(i) > 0.0)) {
      throw std::domain_error("sum_log_throughput: non-positive rate at UE " +
                              std::to_string(i));
    }
    slt += std::log(rates(i));
  }
  return slt;
}

struct EnergyReport {
  Eigen::ArrayXd q_w;  // electrical draw per MBS, watts
  double tn_power_w = 0.0;
  double sat_power_w = 0.0;
  double tn_energy_j = 0.0;
  double sat_energy_j = 0.0;  // includes the per-snapshot baseline
};

inline EnergyReport energy(const Allocation& a, const Scenario& s,
                           const SysParams& sys) {
  const int L = static_cast<int>(s.mbs.size());
  EnergyReport rep;
  rep.q_w = Eigen::ArrayXd::Zero(L);
  for (int j = 0; j < L; ++j) {
    const Mbs& m = s.mbs[static_cast<std::size_t>(j)];
    const double p = a.p_mw(j);
    const double q =
        p > 0.0
            ? m.p0_w + sys.energy_p_scale_w_per_mw * p + m.psi_w
            : m.p0_w;
    rep.q_w(j) = q;
    if (m.tier == Tier::kSatellite) {
      rep.sat_power_w += q;
    } else {
      rep.tn_power_w += q;
    }
  }
  rep.tn_energy_j = rep.tn_power_w * sys.slot_seconds;
  rep.sat_energy_j =
      s.sat_baseline_energy_j + rep.sat_power_w * sys.slot_seconds;
  return rep;
}

/// Eligibility mask: link (i, j) can meet the coverage floor at full power.
inline Eigen::ArrayXXd feasible_mask(const ChannelState& cs, const Scenario& s,
                                     const SysParams& sys) {
  const int K = static_cast<int>(cs.beta.rows());
  const int L = static_cast<int>(cs.beta.cols());
  const double floor_mw = sys.rsrp_min_mw();
  Eigen::ArrayXXd mask(K, L);
  for (int j = 0; j < L; ++j) {
    const double pmax = s.mbs[static_cast<std::size_t>(j)].p_max_mw;
    mask.col(j) = (cs.beta.col(j) * pmax >= floor_mw).cast<double>();
  }
  return mask;
}

/// Vector of per-column power caps in mW.
inline Eigen::ArrayXd p_max_mw(const Scenario& s) {
  Eigen::ArrayXd p(static_cast<int>(s.mbs.size()));
  for (std::size_t j = 0; j < s.mbs.size(); ++j) {
    p(static_cast<int>(j)) = s.mbs[j].p_max_mw;
  }
  return p;
}

}  // namespace ntnsim
