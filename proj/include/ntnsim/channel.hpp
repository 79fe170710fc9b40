#pragma once
/**
 * channel.hpp — stochastic link gains for terrestrial and satellite links.
 *
 * Each UE->MBS link gets one linear power gain beta built in the log domain:
 *
 *   terrestrial: G_tx + G_ue - PL(d3d) - SF - [indoor: wall + depth + var]
 *   satellite:   G_tx + G_ue - FSPL(slant) - SF - CL - scint - [indoor: entry]
 *
 * PL is a dual-state (LoS/NLoS) log-distance law; satellite shadowing (SF)
 * and clutter loss (CL) come from 10-degree elevation-bin tables that are
 * monotone in elevation.  Shadowing and indoor-variability draws are
 * clamped normals (mean ± n*sigma): the clamp bounds the worst-case link
 * budget, which is what makes "every UE is coverable" a checkable property
 * of a deployment rather than a probabilistic hope.
 *
 * Determinism: every link draws from its own stream forked from
 * (seed, ue id, mbs id), with a fixed draw order (LoS gate, shadowing,
 * indoor terms), so single- and multi-threaded builds agree bit-for-bit
 * and toggling the indoor flag provably changes only the indoor terms.
 */

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "ntnsim/rng.hpp"
#include "ntnsim/scenario.hpp"
#include "ntnsim/units.hpp"

namespace ntnsim {

struct ChannelParams {
  double fc_ghz = 2.0;
  /// Clamp point (in sigmas) for shadowing/indoor normal draws; <= 0 disables.
  double sf_clamp_nsigma = 2.0;

  // --- terrestrial path loss: intercept + 10*exponent*log10(d_m) + 20*log10(fc)
  double t_los_intercept_db = 28.0;
  double t_los_exponent = 2.2;
  double t_nlos_intercept_db = 13.54;
  double t_nlos_exponent = 3.3;
  double t_sf_sigma_los_db = 4.0;   // kept within the 4..8 dB band
  double t_sf_sigma_nlos_db = 6.0;
  /// LoS probability: 1 inside d1, then d1/d + exp(-d/decay)*(1 - d1/d).
  double t_los_d1_m = 18.0;
  double t_los_decay_m = 63.0;

  // --- outdoor-to-indoor penetration (terrestrial links)
  double o2i_wall_db = 10.0;
  double o2i_depth_max_m = 6.0;  // indoor depth ~ U(0, max)
  double o2i_per_m_db = 0.5;
  double o2i_sigma_db = 2.5;  // extra penetration variability

  // --- satellite, per 10-degree elevation bin (index 0 = 10deg ... 8 = 90deg)
  std::array<double, 9> sat_los_prob = {0.782, 0.869, 0.919, 0.929, 0.935,
                                        0.940, 0.949, 0.952, 0.987};
  std::array<double, 9> sat_sf_los_db = {1.79, 1.14, 1.04, 0.92, 0.81,
                                         0.72, 0.61, 0.49, 0.28};
  std::array<double, 9> sat_sf_nlos_db = {10.7, 10.0, 9.1, 8.2, 7.2,
                                          6.1,  5.0,  4.0, 3.0};
  std::array<double, 9> sat_cl_nlos_db = {24.0, 22.0, 20.5, 19.0, 18.0,
                                          17.2, 16.6, 16.2, 16.0};
  double sat_scint_db = 2.2;      // ionospheric scintillation margin
  double sat_entry_loss_db = 12.0;  // building entry for indoor UEs
};

/// Geometry of one link; elevation only meaningful for satellite links.
struct LinkConditions {
  bool los = true;
  double d2d_m = 0.0;
  double d3d_m = 0.0;
  double elevation_deg = 90.0;
};

/// Elevation seen from the UE toward the satellite: asin(dz / slant), deg.
inline double elevation_angle(double sat_z_km, double ue_z_km,
                              double slant_km) {
  if (!(slant_km > 0.0)) {
    throw std::domain_error("elevation_angle: slant range must be > 0");
  }
  double s = (sat_z_km - ue_z_km) / slant_km;
  s = std::clamp(s, -1.0, 1.0);
  return std::asin(s) * 180.0 / kPi;
}

/// Nearest 10-degree bin, clamped to [10, 90] -> index 0..8.
inline int elevation_bin(double elevation_deg) {
  const int b = static_cast<int>(std::lround(elevation_deg / 10.0));
  return std::clamp(b, 1, 9) - 1;
}

inline LinkConditions link_geometry(const Mbs& m, const Ue& u) {
  LinkConditions c;
  const double dx = (m.x_km - u.x_km) * 1000.0;
  const double dy = (m.y_km - u.y_km) * 1000.0;
  const double dz = (m.z_km - u.z_km) * 1000.0;
  c.d2d_m = std::hypot(dx, dy);
  c.d3d_m = std::sqrt(dx * dx + dy * dy + dz * dz);
  if (m.tier == Tier::kSatellite) {
    c.elevation_deg = elevation_angle(m.z_km, u.z_km, c.d3d_m / 1000.0);
  }
  return c;
}

inline double terrestrial_los_probability(double d2d_m,
                                          const ChannelParams& cp) {
  if (d2d_m <= cp.t_los_d1_m) return 1.0;
  const double r = cp.t_los_d1_m / d2d_m;
  return r + std::exp(-d2d_m / cp.t_los_decay_m) * (1.0 - r);
}

inline double satellite_los_probability(double elevation_deg,
                                        const ChannelParams& cp) {
  return cp.sat_los_prob[static_cast<std::size_t>(
      elevation_bin(elevation_deg))];
}

/// One Bernoulli LoS draw for a link (distance rule for terrestrial links,
/// elevation-bin table for the satellite link).
inline bool sample_los(Tier tier, const LinkConditions& cond,
                       const ChannelParams& cp, Rng& rng) {
  const double p = tier == Tier::kSatellite
                       ? satellite_los_probability(cond.elevation_deg, cp)
                       : terrestrial_los_probability(cond.d2d_m, cp);
  return rng.bernoulli(p);
}

inline double terrestrial_pathloss_db(double d3d_m, bool los,
                                      const ChannelParams& cp) {
  const double d = std::max(d3d_m, 1.0);  // clamp below 1 m
  const double intercept = los ? cp.t_los_intercept_db : cp.t_nlos_intercept_db;
  const double exponent = los ? cp.t_los_exponent : cp.t_nlos_exponent;
  return intercept + 10.0 * exponent * std::log10(d) +
         20.0 * std::log10(cp.fc_ghz);
}

/// Free-space path loss, distance in meters, carrier in GHz.
inline double fspl_db(double d_m, double fc_ghz) {
  return 92.45 + 20.0 * std::log10(fc_ghz) + 20.0 * std::log10(d_m / 1000.0);
}

/**
 * Linear gain of a terrestrial link.  Draw order (fixed): shadowing normal,
 * then — only for indoor UEs — depth uniform and penetration normal, so an
 * indoor/outdoor toggle changes nothing but the indoor terms.
 */
inline double terrestrial_gain(const Mbs& m, const Ue& u,
                               const LinkConditions& cond,
                               const ChannelParams& cp, Rng& rng) {
  const double sigma =
      cond.los ? cp.t_sf_sigma_los_db : cp.t_sf_sigma_nlos_db;
  const double sf = rng.normal_clamped(0.0, sigma, cp.sf_clamp_nsigma);
  double gain_db = m.gain_dbi + u.gain_dbi -
                   terrestrial_pathloss_db(cond.d3d_m, cond.los, cp) - sf;
  if (u.indoor) {
    const double depth = rng.uniform(0.0, cp.o2i_depth_max_m);
    const double var =
        rng.normal_clamped(0.0, cp.o2i_sigma_db, cp.sf_clamp_nsigma);
    gain_db -= cp.o2i_wall_db + cp.o2i_per_m_db * depth + var;
  }
  return db_to_lin(gain_db);
}

/// Linear gain of the satellite link (FSPL at slant range + elevation-binned
/// shadowing/clutter + scintillation + entry loss for indoor UEs).
inline double satellite_gain(const Mbs& m, const Ue& u,
                             const LinkConditions& cond,
                             const ChannelParams& cp, Rng& rng) {
  const std::size_t bin =
      static_cast<std::size_t>(elevation_bin(cond.elevation_deg));
  const double sigma =
      cond.los ? cp.sat_sf_los_db[bin] : cp.sat_sf_nlos_db[bin];
  const double sf = rng.normal_clamped(0.0, sigma, cp.sf_clamp_nsigma);
  const double cl = cond.los ? 0.0 : cp.sat_cl_nlos_db[bin];
  double gain_db = m.gain_dbi + u.gain_dbi - fspl_db(cond.d3d_m, cp.fc_ghz) -
                   sf - cl - cp.sat_scint_db;
  if (u.indoor) gain_db -= cp.sat_entry_loss_db;
  return db_to_lin(gain_db);
}

/// RSRP in dBm of a link carrying per-RE power p_mw through linear gain beta.
inline double rsrp_dbm(double beta_lin, double p_mw) {
  return mw_to_dbm(beta_lin * p_mw);
}

/// All link gains of a snapshot (rows = UEs, cols = roster order).
struct ChannelState {
  Eigen::ArrayXXd beta;  // K x L linear gains
  Eigen::ArrayXXd los;   // K x L, 1.0 = line of sight
};

inline ChannelState build_channel_state(const Scenario& s,
                                        const ChannelParams& cp,
                                        std::uint64_t seed) {
  const int K = static_cast<int>(s.ues.size());
  const int L = static_cast<int>(s.mbs.size());
  ChannelState cs;
  cs.beta.resize(K, L);
  cs.los.resize(K, L);
  const Rng base(seed);
  for (int i = 0; i < K; ++i) {
    const Ue& u = s.ues[static_cast<std::size_t>(i)];
    for (int j = 0; j < L; ++j) {
      const Mbs& m = s.mbs[static_cast<std::size_t>(j)];
      Rng link = base.fork(static_cast<std::uint64_t>(u.id) + 1,
                           static_cast<std::uint64_t>(m.id) + 1);
      LinkConditions cond = link_geometry(m, u);
      cond.los = sample_los(m.tier, cond, cp, link);
      const double beta = m.tier == Tier::kSatellite
                              ? satellite_gain(m, u, cond, cp, link)
                              : terrestrial_gain(m, u, cond, cp, link);
      cs.beta(i, j) = beta;
      cs.los(i, j) = cond.los ? 1.0 : 0.0;
    }
  }
  return cs;
}

}  // namespace ntnsim
