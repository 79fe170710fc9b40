#pragma once
/**
 * scenario.hpp — deployment geometry and population synthesis.
 *
 * A Scenario is an immutable snapshot of one simulated hour: a roster of
 * terrestrial macro base stations (MBS) laid out on hexagonal lattices (a
 * dense urban core square inside a sparser rural area), one LEO satellite
 * column appended as the last roster entry, and a UE population whose size
 * follows a 24-hour traffic profile.
 *
 * Determinism: every stochastic choice (UE positions, indoor flags) comes
 * from a forked SplitMix64 stream keyed by the caller's seed, so a
 * (params, hour, position, seed) tuple always produces the identical
 * snapshot, independent of platform or call order.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ntnsim/rng.hpp"
#include "ntnsim/units.hpp"

namespace ntnsim {

inline constexpr double kPi = 3.14159265358979323846;

enum class Tier { kTerrestrial, kSatellite };
enum class Zone { kUrban, kRural };

/// Square deployment area centered at the origin with an optional centered
/// urban core square; everything outside the core is rural.
struct AreaSpec {
  double side_km = 50.0;
  double urban_side_km = 13.9;
  double urban_isd_m = 500.0;
  double rural_isd_m = 1732.0;
  /// When > 0, keep only lattice sites within this distance of the center
  /// (lets small test layouts form exact hexagonal rings, e.g. 2.05*ISD
  /// keeps the center site plus the first two rings = 19 sites).
  double grid_clip_radius_km = 0.0;
};

struct TerrestrialParams {
  double p_max_dbm = 17.7;  // per resource element
  double gain_dbi = 14.0;
  double tower_height_m = 25.0;
  double p0_w = 0.05;   // static circuit draw when powered
  double psi_w = 0.1;   // extra draw while transmitting
};

struct SatelliteParams {
  double altitude_km = 600.0;
  double offset_km = 50.0;  // ground-track offset of the side positions
  double p_max_dbm = 15.8;  // per resource element
  double gain_dbi = 30.0;
  double p0_w = 0.05;
  double psi_w = 0.1;
  double baseline_energy_j = 500.0;  // per-snapshot ground-segment energy
};

struct Mbs {
  int id = 0;
  Tier tier = Tier::kTerrestrial;
  double x_km = 0, y_km = 0, z_km = 0;
  double p_max_mw = 0;
  double gain_dbi = 0;
  double p0_w = 0;
  double psi_w = 0;
};

struct Ue {
  int id = 0;
  Zone zone = Zone::kUrban;
  bool indoor = false;
  double x_km = 0, y_km = 0, z_km = 0;
  double gain_dbi = 0.0;
};

struct SatellitePosition {
  std::string label;  // "P1" (over center), "P2" (+offset), "P3" (-offset)
  double x_km = 0, y_km = 0;
  double altitude_km = 600.0;
};

/// Hourly UE counts before scaling; a smooth day curve built from two
/// half-cosine segments in log-count space, lowest at 5:00, highest at 20:00.
struct TrafficProfile {
  std::array<double, 24> counts{};

  static TrafficProfile cosine_day(double k_min, double k_max) {
    TrafficProfile p;
    const double lo = std::log(k_min), hi = std::log(k_max);
    for (int h = 0; h < 24; ++h) {
      double u;  // 0 at the 5:00 trough, 1 at the 20:00 peak
      if (h >= 5 && h <= 20) {
        u = 0.5 * (1.0 - std::cos(kPi * (h - 5) / 15.0));
      } else {
        const double hh = h < 5 ? h + 24.0 : h;  // 20..29 wrap
        u = 1.0 - 0.5 * (1.0 - std::cos(kPi * (hh - 20.0) / 9.0));
      }
      p.counts[static_cast<std::size_t>(h)] = std::exp(lo + (hi - lo) * u);
    }
    return p;
  }

  double min_count() const {
    return *std::min_element(counts.begin(), counts.end());
  }
};

struct ScenarioParams {
  AreaSpec area;
  TerrestrialParams terrestrial;
  SatelliteParams satellite;
  double ue_height_m = 1.5;
  double ue_gain_dbi = 0.0;
  double urban_ue_fraction = 0.4;
  double indoor_fraction = 0.8;
  TrafficProfile profile = TrafficProfile::cosine_day(400.0, 10000.0);
  double traffic_scale = 1.0;
};

struct Scenario {
  std::vector<Mbs> mbs;  // terrestrial sites first, satellite last
  std::vector<Ue> ues;
  SatellitePosition sat_pos;
  int hour = 0;
  int sat_index = 0;      // roster index of the satellite column
  int n_terrestrial = 0;  // == sat_index
  double sat_baseline_energy_j = 500.0;  // ground-segment energy per snapshot
};

namespace detail {

/// Hex lattice rows are spaced ISD*sqrt(3)/2 apart; odd rows shift half an
/// ISD sideways.  Emits sites row-major (j then i ascending) that satisfy
/// `keep`, which captures the zone clipping rule.
template <typename KeepFn>
inline void hex_lattice(double isd_km, double half_extent_km, KeepFn keep,
                        std::vector<std::pair<double, double>>* out) {
  const double row_h = isd_km * std::sqrt(3.0) / 2.0;
  // Generous index bounds; `keep` does the exact clipping.
  const int jmax = static_cast<int>(std::floor(half_extent_km / row_h)) + 1;
  for (int j = -jmax; j <= jmax; ++j) {
    const double y = j * row_h;
    const double x_shift = (j & 1) ? 0.5 * isd_km : 0.0;
    const int imax =
        static_cast<int>(std::floor(half_extent_km / isd_km)) + 2;
    for (int i = -imax; i <= imax; ++i) {
      const double x = i * isd_km + x_shift;
      if (keep(x, y)) out->emplace_back(x, y);
    }
  }
}

/// Split `total` between two buckets so bucket A holds as close to
/// fraction_a*total as integers allow (largest-remainder rounding).
inline int largest_remainder_split(int total, double fraction_a) {
  const double exact_a = fraction_a * total;
  int a = static_cast<int>(std::floor(exact_a));
  const double rem_a = exact_a - a;
  const double exact_b = (1.0 - fraction_a) * total;
  const int b = static_cast<int>(std::floor(exact_b));
  if (a + b < total) {
    // One unit left over; give it to the larger remainder (ties to A).
    if (rem_a >= exact_b - b) ++a;
  }
  return std::min(a, total);
}

}  // namespace detail

/// Terrestrial site roster: urban core lattice (strictly inside the core
/// square when a core is configured) plus rural lattice (inside the area,
/// outside the core).  Throws if an ISD exceeds its zone's extent or the
/// final roster is empty.
inline std::vector<Mbs> build_grid(const AreaSpec& area,
                                   const TerrestrialParams& terr) {
  if (area.side_km <= 0.0) {
    throw std::invalid_argument("build_grid: non-positive area side");
  }
  const double hs = 0.5 * area.side_km;
  const double hu = 0.5 * area.urban_side_km;
  const double clip = area.grid_clip_radius_km;
  const auto within_clip = [&](double x, double y) {
    return clip <= 0.0 || std::hypot(x, y) <= clip;
  };
  const auto in_core = [&](double x, double y) {  // strict: boundary is rural
    return hu > 0.0 && std::abs(x) < hu && std::abs(y) < hu;
  };

  std::vector<std::pair<double, double>> sites;
  if (area.urban_side_km > 0.0) {
    if (area.urban_isd_m / 1000.0 > area.urban_side_km) {
      throw std::invalid_argument(
          "build_grid: degenerate grid, urban ISD exceeds urban core side");
    }
    detail::hex_lattice(area.urban_isd_m / 1000.0, hu,
                        [&](double x, double y) {
                          return in_core(x, y) && within_clip(x, y);
                        },
                        &sites);
  }
  if (area.urban_side_km < area.side_km) {
    if (area.rural_isd_m / 1000.0 > area.side_km) {
      throw std::invalid_argument(
          "build_grid: degenerate grid, rural ISD exceeds area side");
    }
    detail::hex_lattice(area.rural_isd_m / 1000.0, hs,
                        [&](double x, double y) {
                          return std::abs(x) <= hs && std::abs(y) <= hs &&
                                 !in_core(x, y) && within_clip(x, y);
                        },
                        &sites);
  }
  if (sites.empty()) {
    throw std::invalid_argument("build_grid: degenerate grid, no sites fit");
  }

  std::vector<Mbs> roster;
  roster.reserve(sites.size());
  const double p_max = db_to_lin(terr.p_max_dbm);  // dBm -> mW
  for (const auto& [x, y] : sites) {
    Mbs m;
    m.id = static_cast<int>(roster.size());
    m.tier = Tier::kTerrestrial;
    m.x_km = x;
    m.y_km = y;
    m.z_km = terr.tower_height_m / 1000.0;
    m.p_max_mw = p_max;
    m.gain_dbi = terr.gain_dbi;
    m.p0_w = terr.p0_w;
    m.psi_w = terr.psi_w;
    roster.push_back(m);
  }
  return roster;
}

/// The three satellite stations used by a run: over the center and offset
/// by ±offset along the x axis.
inline std::array<SatellitePosition, 3> satellite_positions(
    const SatelliteParams& sat) {
  return {SatellitePosition{"P1", 0.0, 0.0, sat.altitude_km},
          SatellitePosition{"P2", sat.offset_km, 0.0, sat.altitude_km},
          SatellitePosition{"P3", -sat.offset_km, 0.0, sat.altitude_km}};
}

/// Scaled UE count for an hour; never below one UE.
inline int ue_count_at(int hour, const TrafficProfile& profile, double scale) {
  if (hour < 0 || hour > 23) {
    throw std::out_of_range("ue_count_at: hour must be in [0, 23]");
  }
  const double scaled = profile.counts[static_cast<std::size_t>(hour)] * scale;
  return std::max(1, static_cast<int>(std::llround(scaled)));
}

/// UE population: urban/rural split and indoor share follow
/// largest-remainder rounding so configured fractions are matched as closely
/// as integers allow; positions are uniform within the respective zone.
inline std::vector<Ue> sample_ues(int count, const ScenarioParams& params,
                                  std::uint64_t seed) {
  if (count <= 0) throw std::invalid_argument("sample_ues: count must be > 0");
  const AreaSpec& area = params.area;
  const double hs = 0.5 * area.side_km;
  const double hu = 0.5 * area.urban_side_km;
  const bool has_core = area.urban_side_km > 0.0;
  const bool has_rural = area.urban_side_km < area.side_km;

  int n_urban = has_core ? detail::largest_remainder_split(
                               count, params.urban_ue_fraction)
                         : 0;
  if (!has_rural) n_urban = count;  // no rural zone to fall back to

  Rng rng = Rng(seed).fork(0x5ce9a71au);
  std::vector<Ue> ues;
  ues.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Ue u;
    u.id = i;
    u.z_km = params.ue_height_m / 1000.0;
    u.gain_dbi = params.ue_gain_dbi;
    if (i < n_urban) {
      u.zone = Zone::kUrban;
      u.x_km = rng.uniform(-hu, hu);
      u.y_km = rng.uniform(-hu, hu);
    } else {
      u.zone = Zone::kRural;
      // Rejection-sample the area minus the core.
      int tries = 0;
      do {
        u.x_km = rng.uniform(-hs, hs);
        u.y_km = rng.uniform(-hs, hs);
        if (++tries > 100000) {
          throw std::runtime_error(
              "sample_ues: rural zone too small to sample");
        }
      } while (has_core && std::abs(u.x_km) < hu && std::abs(u.y_km) < hu);
    }
    ues.push_back(u);
  }

  // Indoor flags: exact largest-remainder count, spread uniformly over the
  // population by a seeded Fisher-Yates shuffle of the index set.
  const int n_indoor =
      detail::largest_remainder_split(count, params.indoor_fraction);
  std::vector<int> order(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng shuffle_rng = Rng(seed).fork(0x1d00b5eu);
  for (int i = count - 1; i > 0; --i) {
    const int j = static_cast<int>(shuffle_rng.next_u64() %
                                   static_cast<std::uint64_t>(i + 1));
    std::swap(order[static_cast<std::size_t>(i)],
              order[static_cast<std::size_t>(j)]);
  }
  for (int i = 0; i < n_indoor; ++i) {
    ues[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])].indoor =
        true;
  }
  return ues;
}

/// Assemble the full snapshot: terrestrial roster, satellite column, UEs.
inline Scenario make_scenario(const ScenarioParams& params, int hour,
                              const SatellitePosition& pos,
                              std::uint64_t seed) {
  Scenario s;
  s.mbs = build_grid(params.area, params.terrestrial);
  s.n_terrestrial = static_cast<int>(s.mbs.size());
  Mbs sat;
  sat.id = s.n_terrestrial;
  sat.tier = Tier::kSatellite;
  sat.x_km = pos.x_km;
  sat.y_km = pos.y_km;
  sat.z_km = pos.altitude_km;
  sat.p_max_mw = db_to_lin(params.satellite.p_max_dbm);
  sat.gain_dbi = params.satellite.gain_dbi;
  sat.p0_w = params.satellite.p0_w;
  sat.psi_w = params.satellite.psi_w;
  s.mbs.push_back(sat);
  s.sat_index = sat.id;
  s.sat_pos = pos;
  s.hour = hour;
  s.sat_baseline_energy_j = params.satellite.baseline_energy_j;

  const int count = ue_count_at(hour, params.profile, params.traffic_scale);
  // UE draws are keyed by (seed, hour) so each hour is a fresh population.
  s.ues = sample_ues(count, params,
                     Rng(seed).fork(0xae5c, static_cast<std::uint64_t>(hour))
                         .state());
  return s;
}

}  // namespace ntnsim
