#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include "ntnsim/heuristic.hpp"
#include "ntnsim/linklayer.hpp"

using namespace ntnsim;

namespace {

Scenario small_scenario(int n_ues, int hour) {
  Scenario s;
  auto add = [&](int id, Tier t, double p_max_mw) {
    Mbs m;
    m.id = id;
    m.tier = t;
    m.p_max_mw = p_max_mw;
    m.p0_w = 0.05;
    m.psi_w = 0.1;
    s.mbs.push_back(m);
  };
  add(0, Tier::kTerrestrial, 58.88);
  add(1, Tier::kTerrestrial, 58.88);
  add(2, Tier::kSatellite, 38.02);
  s.n_terrestrial = 2;
  s.sat_index = 2;
  for (int i = 0; i < n_ues; ++i) {
    Ue u;
    u.id = i;
    s.ues.push_back(u);
  }
  s.hour = hour;
  s.sat_baseline_energy_j = 500.0;
  return s;
}

ChannelState channel_from_db(const Eigen::ArrayXXd& beta_db) {
  ChannelState cs;
  cs.beta = Eigen::pow(10.0, beta_db / 10.0);
  cs.los = Eigen::ArrayXXd::Ones(beta_db.rows(), beta_db.cols());
  return cs;
}

}  // namespace

TEST_CASE("ranking orders users by mean feasible gain, weakest first") {
  Eigen::ArrayXXd beta_db(3, 3);
  beta_db << -95.0, -96.0, -111.0,   // mean -100.67 (all feasible)
      -115.0, -116.0, -117.0,        // mean -116
      -100.0, -101.0, -150.0;        // satellite link infeasible: mean -100.5
  const ChannelState cs = channel_from_db(beta_db);
  Eigen::ArrayXXd mask = Eigen::ArrayXXd::Ones(3, 3);
  mask(2, 2) = 0.0;  // drop the -150 link from UE 2's average
  const std::vector<int> order = rank_ues(cs, mask);
  REQUIRE(order == std::vector<int>{1, 0, 2});

  Eigen::ArrayXXd none = mask;
  none.row(1) = 0.0;
  REQUIRE_THROWS_AS(rank_ues(cs, none), std::runtime_error);
}

TEST_CASE("greedy association balances load when sharing halves the rate") {
  // Both UEs hear cell 0 best, but once UE 1 would have to share cell 0,
  // the emptier cell 1 wins on estimated share throughput.
  Eigen::ArrayXXd beta_db(2, 3);
  beta_db << -95.0, -102.0, -150.0,  //
      -96.0, -97.0, -150.0;
  const Scenario s = small_scenario(2, 20);  // busy hour: no night steering
  const ChannelState cs = channel_from_db(beta_db);
  SysParams sys;
  HeuristicConfig cfg;
  const HeuristicResult r = run_heuristic(cs, s, sys, cfg);
  REQUIRE(r.alloc.X(0, 0) + r.alloc.X(1, 0) == 1.0);  // exactly one on cell 0
  REQUIRE(r.alloc.X(0, 1) + r.alloc.X(1, 1) == 1.0);
  REQUIRE(r.alloc.X.col(2).sum() == 0.0);  // nobody picks the satellite link
}

TEST_CASE("night window steers satellite-coverable users to the satellite") {
  // Satellite links sit just above the coverage floor: eligible for the
  // night steering, but beaten by the strong dedicated ground cells in the
  // daytime greedy estimates.
  Eigen::ArrayXXd beta_db(3, 3);
  beta_db << -95.0, -110.0, -135.0,  // satellite feasible
      -112.0, -98.0, -150.0,         // satellite infeasible
      -110.0, -98.0, -135.0;         // satellite feasible
  SysParams sys;
  HeuristicConfig cfg;

  const ChannelState cs = channel_from_db(beta_db);
  const Scenario night = small_scenario(3, 5);
  const HeuristicResult rn = run_heuristic(cs, night, sys, cfg);
  REQUIRE(rn.alloc.X(0, 2) == 1.0);
  REQUIRE(rn.alloc.X(2, 2) == 1.0);
  REQUIRE(rn.alloc.X(1, 2) == 0.0);
  REQUIRE(rn.alloc.eps == Catch::Approx(2.0 / 3.0));

  const Scenario day = small_scenario(3, 20);
  const HeuristicResult rd = run_heuristic(cs, day, sys, cfg);
  // At full terrestrial bandwidth the ground cells dominate the estimates.
  REQUIRE(rd.alloc.X.col(2).sum() == 0.0);
  REQUIRE(rd.alloc.eps == Catch::Approx(cfg.eps_floor));
}

TEST_CASE("consolidation shuts a light cell and re-homes its user") {
  // UE 2 sits between the cells: cell 1 is its best link, cell 0 still
  // covers it at full power.  At night cell 1 (load 1 < 3) is examined,
  // UE 2 hands over to cell 0, and cell 1 goes dark.
  Eigen::ArrayXXd beta_db(3, 3);
  beta_db << -95.0, -120.0, -150.0,  //
      -96.0, -121.0, -150.0,         //
      -110.0, -105.0, -150.0;
  const Scenario s = small_scenario(3, 3);  // night, t_ue = 3
  const ChannelState cs = channel_from_db(beta_db);
  SysParams sys;
  HeuristicConfig cfg;
  const HeuristicResult r = run_heuristic(cs, s, sys, cfg);
  REQUIRE(r.cells_shut == 1);
  REQUIRE(r.handovers == 1);
  REQUIRE(r.alloc.X(2, 0) == 1.0);
  REQUIRE(r.alloc.p_mw(1) == 0.0);
  REQUIRE(loads(r.alloc.X)(0) == 3.0);

  // The survivor cell runs at the exact floor of its weakest user (UE 2).
  const double floor_mw = sys.rsrp_min_mw();
  REQUIRE(r.alloc.p_mw(0) ==
          Catch::Approx(floor_mw / cs.beta(2, 0)).epsilon(1e-12));
  REQUIRE(r.tau_mw(0) == r.alloc.p_mw(0));
}

TEST_CASE("busy hours only let empty cells go dark") {
  Eigen::ArrayXXd beta_db(3, 3);
  beta_db << -95.0, -120.0, -150.0,  //
      -96.0, -121.0, -150.0,         //
      -110.0, -105.0, -150.0;
  const Scenario s = small_scenario(3, 20);  // busy: threshold collapses to 1
  const ChannelState cs = channel_from_db(beta_db);
  SysParams sys;
  HeuristicConfig cfg;
  const HeuristicResult r = run_heuristic(cs, s, sys, cfg);
  REQUIRE(r.cells_shut == 0);
  REQUIRE(r.alloc.X(2, 1) == 1.0);     // keeps its best cell
  REQUIRE(r.alloc.p_mw(1) > 0.0);      // which stays powered at its floor
  const double floor_mw = sys.rsrp_min_mw();
  REQUIRE(r.alloc.p_mw(1) ==
          Catch::Approx(floor_mw / cs.beta(2, 1)).epsilon(1e-12));
}

TEST_CASE("heuristic output is feasible, binary, and deterministic") {
  Eigen::ArrayXXd beta_db(4, 3);
  beta_db << -95.0, -110.0, -111.0,  //
      -112.0, -98.0, -150.0,         //
      -105.0, -104.0, -111.5,        //
      -118.0, -99.0, -150.0;
  const Scenario s = small_scenario(4, 6);
  const ChannelState cs = channel_from_db(beta_db);
  SysParams sys;
  HeuristicConfig cfg;
  const HeuristicResult r = run_heuristic(cs, s, sys, cfg);

  const double floor_mw = sys.rsrp_min_mw();
  for (int i = 0; i < 4; ++i) {
    REQUIRE(r.alloc.X.row(i).sum() == 1.0);
    REQUIRE(r.alloc.X.row(i).maxCoeff() == 1.0);
    for (int j = 0; j < 3; ++j) {
      if (r.alloc.X(i, j) == 1.0) {
        REQUIRE(cs.beta(i, j) * r.alloc.p_mw(j) >= floor_mw * (1 - 1e-12));
      }
    }
  }
  const Eigen::ArrayXd cap = p_max_mw(s);
  for (int j = 0; j < 3; ++j) {
    REQUIRE(r.alloc.p_mw(j) >= 0.0);
    REQUIRE(r.alloc.p_mw(j) <= cap(j) * (1 + 1e-12));
  }
  REQUIRE(r.converged);
  REQUIRE(r.iterations <= cfg.outer_cap);

  const HeuristicResult r2 = run_heuristic(cs, s, sys, cfg);
  REQUIRE((r2.alloc.X == r.alloc.X).all());
  REQUIRE((r2.alloc.p_mw == r.alloc.p_mw).all());
  REQUIRE(r2.alloc.eps == r.alloc.eps);
}
