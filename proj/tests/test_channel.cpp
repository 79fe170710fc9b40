// Channel-model checks against closed-form oracles: conversions, FSPL,
// elevation trig, monotone elevation tables, indoor-term isolation, and
// bit-level determinism of the channel build.
#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "ntnsim/channel.hpp"

using namespace ntnsim;

TEST_CASE("dB/linear conversions round-trip to 1e-10") {
  for (const double x : {-174.0, -120.0, -82.3, 0.0, 14.0, 17.7, 30.0}) {
    CHECK_THAT(lin_to_db(db_to_lin(x)), Catch::Matchers::WithinAbs(x, 1e-10));
  }
  CHECK_THROWS_AS(lin_to_db(0.0), std::domain_error);
}

TEST_CASE("RSRP in dBm is gain-dB plus power-dBm") {
  CHECK_THAT(rsrp_dbm(db_to_lin(-100.0), dbm_to_mw(17.7)),
             Catch::Matchers::WithinAbs(-82.3, 1e-9));
}

TEST_CASE("free-space path loss at 2 GHz over 600 km") {
  // 92.45 + 20log10(2) + 20log10(600) = 154.03 dB (hand-evaluated)
  CHECK_THAT(fspl_db(600e3, 2.0), Catch::Matchers::WithinAbs(154.0336, 5e-4));
}

TEST_CASE("elevation angle from slant geometry") {
  // Satellite 600 km above a point 50 km away on the ground:
  // slant = sqrt(600^2 + 50^2) = 602.0797 km, elevation = 85.236 deg.
  const double slant = std::hypot(600.0, 50.0);
  CHECK_THAT(slant, Catch::Matchers::WithinAbs(602.0797, 5e-4));
  CHECK_THAT(elevation_angle(600.0, 0.0, slant),
             Catch::Matchers::WithinAbs(85.2364, 5e-3));
  // Directly overhead
  CHECK_THAT(elevation_angle(600.0, 0.0, 600.0),
             Catch::Matchers::WithinAbs(90.0, 1e-9));
  CHECK_THROWS_AS(elevation_angle(600.0, 0.0, 0.0), std::domain_error);
}

TEST_CASE("elevation bins round to the nearest 10 degrees and clamp") {
  CHECK(elevation_bin(38.811) == 3);  // 40 deg bin
  CHECK(elevation_bin(90.0) == 8);
  CHECK(elevation_bin(85.24) == 8);  // rounds to 90
  CHECK(elevation_bin(4.0) == 0);    // clamped up to the 10 deg bin
  CHECK(elevation_bin(14.9) == 0);
  CHECK(elevation_bin(15.1) == 1);
}

namespace {
Mbs sat_mbs() {
  Mbs m;
  m.id = 0;
  m.tier = Tier::kSatellite;
  m.z_km = 600.0;
  m.gain_dbi = 30.0;
  m.p_max_mw = db_to_lin(15.8);
  return m;
}
Ue plain_ue() {
  Ue u;
  u.id = 0;
  u.z_km = 0.0;
  u.gain_dbi = 0.0;
  return u;
}
}  // namespace

TEST_CASE("satellite gain at nadir with all stochastic terms at their means") {
  ChannelParams cp;
  cp.sat_sf_los_db.fill(0.0);  // pin shadowing to its mean
  cp.sat_scint_db = 0.0;       // strip the deterministic margin too
  LinkConditions cond;
  cond.los = true;
  cond.d3d_m = 600e3;
  cond.elevation_deg = 90.0;
  Rng rng(1);
  const double g = satellite_gain(sat_mbs(), plain_ue(), cond, cp, rng);
  CHECK_THAT(lin_to_db(g), Catch::Matchers::WithinAbs(-124.03, 0.05));
}

TEST_CASE("gain is non-decreasing in elevation when draws are pinned") {
  ChannelParams cp;
  cp.sat_sf_los_db.fill(0.0);
  cp.sat_sf_nlos_db.fill(0.0);
  double prev = -1e18;
  for (int deg = 10; deg <= 90; deg += 10) {
    LinkConditions cond;
    cond.los = false;  // exercises the clutter-loss table
    cond.d3d_m = 650e3;  // fixed slant so only the tables vary
    cond.elevation_deg = deg;
    Rng rng(3);
    const double g = lin_to_db(satellite_gain(sat_mbs(), plain_ue(), cond, cp, rng));
    CHECK(g >= prev - 1e-12);
    prev = g;
  }
}

TEST_CASE("terrestrial path loss grows with distance and NLoS exceeds LoS") {
  ChannelParams cp;
  CHECK(terrestrial_pathloss_db(2000.0, true, cp) >
        terrestrial_pathloss_db(100.0, true, cp));
  for (const double d : {100.0, 500.0, 1500.0}) {
    CHECK(terrestrial_pathloss_db(d, false, cp) >
          terrestrial_pathloss_db(d, true, cp));
  }
  // Hand-evaluated: 28 + 22*log10(500) + 20*log10(2) = 93.4 dB LoS at 500 m.
  CHECK_THAT(terrestrial_pathloss_db(500.0, true, cp),
             Catch::Matchers::WithinAbs(28.0 + 22.0 * std::log10(500.0) +
                                            20.0 * std::log10(2.0),
                                        1e-12));
}

TEST_CASE("indoor flag changes exactly the indoor penetration terms") {
  ChannelParams cp;
  Mbs m;
  m.gain_dbi = 14.0;
  Ue out = plain_ue();
  Ue in = out;
  in.indoor = true;
  LinkConditions cond;
  cond.los = true;
  cond.d2d_m = 300.0;
  cond.d3d_m = std::sqrt(300.0 * 300.0 + 23.5 * 23.5);

  Rng rng_out(9);
  const double g_out = lin_to_db(terrestrial_gain(m, out, cond, cp, rng_out));
  // Replay the same stream by hand: shadowing first, then the indoor draws.
  Rng replay(9);
  (void)replay.normal_clamped(0.0, cp.t_sf_sigma_los_db, cp.sf_clamp_nsigma);
  const double depth = replay.uniform(0.0, cp.o2i_depth_max_m);
  const double var =
      replay.normal_clamped(0.0, cp.o2i_sigma_db, cp.sf_clamp_nsigma);
  Rng rng_in(9);
  const double g_in = lin_to_db(terrestrial_gain(m, in, cond, cp, rng_in));
  CHECK_THAT(g_out - g_in,
             Catch::Matchers::WithinAbs(
                 cp.o2i_wall_db + cp.o2i_per_m_db * depth + var, 1e-10));
}

TEST_CASE("LoS probability model hits its closed forms and edge cases") {
  ChannelParams cp;
  CHECK_THAT(terrestrial_los_probability(10.0, cp),
             Catch::Matchers::WithinAbs(1.0, 1e-15));
  const double d = 200.0;
  const double expect =
      18.0 / d + std::exp(-d / 63.0) * (1.0 - 18.0 / d);
  CHECK_THAT(terrestrial_los_probability(d, cp),
             Catch::Matchers::WithinAbs(expect, 1e-15));
  // Forcing the probability to 1 forces the draw.
  ChannelParams forced = cp;
  forced.t_los_d1_m = 1e9;
  Rng rng(4);
  bool always = true;
  LinkConditions cond;
  cond.d2d_m = 5000.0;
  for (int i = 0; i < 200; ++i) {
    always = always && sample_los(Tier::kTerrestrial, cond, forced, rng);
  }
  CHECK(always);
  // Satellite LoS probability comes straight from the elevation table.
  LinkConditions sc;
  sc.elevation_deg = 47.0;  // bin index 4 (50 deg)
  CHECK_THAT(satellite_los_probability(sc.elevation_deg, cp),
             Catch::Matchers::WithinAbs(cp.sat_los_prob[4], 1e-15));
}

TEST_CASE("channel build is bit-deterministic in the seed") {
  ScenarioParams p;
  p.area.side_km = 4.0;
  p.area.urban_side_km = 1.8;
  p.area.urban_isd_m = 600.0;
  p.area.rural_isd_m = 1000.0;
  p.traffic_scale = 0.01;
  const auto pos = satellite_positions(p.satellite);
  const Scenario s = make_scenario(p, 12, pos[1], 5);
  ChannelParams cp;
  const ChannelState a = build_channel_state(s, cp, 99);
  const ChannelState b = build_channel_state(s, cp, 99);
  const ChannelState c = build_channel_state(s, cp, 100);
  CHECK((a.beta == b.beta).all());
  CHECK((a.los == b.los).all());
  CHECK(!(a.beta == c.beta).all());
  CHECK(a.beta.rows() == static_cast<int>(s.ues.size()));
  CHECK(a.beta.cols() == static_cast<int>(s.mbs.size()));
  CHECK((a.beta > 0.0).all());
}
