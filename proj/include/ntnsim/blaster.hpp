#pragma once
/**
 * blaster.hpp — BLASTER: joint user association, bandwidth split, power
 * control, and cell shutdown for the two-tier downlink.
 *
 * The optimizer maximizes a penalized proportional-fair objective
 *
 *   f(X, p, eps) = sum_i ln R_i(X, p, eps)
 *                  - lambda * ( ||p_T||_1 + (sum_{j in T} psi_j w_j) ||p_T||_2 )
 *
 * over a relaxed association matrix X (rows sum to 1), per-RE transmit
 * powers p and the satellite bandwidth share eps.  Inside the penalty the
 * powers are expressed in watts (p_T = terrestrial block / 1000 mW), the
 * same unit as the static draws psi_j, so lambda trades nats of utility
 * against watts of radiated power.  The penalty covers the terrestrial
 * block only: the shutdown machinery models ground cells that can sleep,
 * while the satellite — whose draw is dominated by a constant platform
 * baseline — has no off state to steer toward and follows the plain
 * utility ascent instead.
 *
 * Each outer iteration alternates four blocks:
 *
 *   1. association: gradient ascent on the frozen-load utility surrogate,
 *      an exact Euclidean projection onto the coverage set
 *      { X >= 0, (X .* beta) p >= rsrp_min } solved row-by-row in the dual
 *      (one nonpositive multiplier per UE), then a clip/renormalize onto
 *      the relaxed simplex; the step is line-searched against the true
 *      utility and skipped when no trial improves it;
 *   2. split: eps* = (satellite association mass) / K, the closed-form
 *      maximizer of the split-dependent part of the utility;
 *   3. power: gradient ascent on the smooth utility part, a block
 *      soft-threshold on the terrestrial block (the prox of the weighted
 *      l2 penalty), and a coverage rescue: every UE must retain at least
 *      one column whose received power clears the access floor, so a cell
 *      may go fully dark only when each UE it would carry keeps some other
 *      covered column (for outdoor users in clear sky, the satellite);
 *      otherwise the strongest column is raised to the smallest rescuing
 *      level.  The whole step is backtracked on the full objective and
 *      skipped when no trial improves it;
 *   4. reweight: w_j = 1 / (p_j + delta) in watts, sharpening the shutdown
 *      penalty around currently weak transmitters.
 *
 * Rates inside ln(.) are floored at a tiny outage rate so that a user
 * stranded on a darkened cell costs a large-but-finite utility penalty;
 * the next association step then carries exactly that user to a covered
 * column, which is what moves night traffic onto the satellite.
 *
 * The per-UE weight lambda follows the traffic schedule
 * lambda = lambda_max * K_min / K, so shutdown pressure peaks in the
 * low-traffic hours.  After convergence the relaxed association is
 * binarized per UE over the columns actually covered at the final powers,
 * powers are re-solved at the binary coverage floors, and terrestrial
 * cells left with no users are switched off.
 */

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ntnsim/linklayer.hpp"

namespace ntnsim {

constexpr double kMwPerW = 1000.0;

struct BlasterConfig {
  double lambda_max = 1e7;
  double k_min = 40.0;  // scaled daily minimum UE count (sets the schedule)
  double alpha = 1.0;   // association base step on the normalized gradient
  double eta = 1e-2;    // power base step, watts per unit utility-gradient
  int backtracks = 8;   // halvings tried per step before giving up
  double dual_step_scale = 1.0;  // per-row dual step = scale / ||c_i||^2
  int outer_cap = 150;
  int dual_cap = 1000;
  double tol = 1e-4;       // objective change per unit utility at convergence
  double dual_tol = 1e-9;  // relative coverage residual per UE row
  double eps_floor = 1e-3;
  double load_floor = 1.0;   // effective load floor in surrogate rates
  double delta_frac = 1e-3;  // reweight offset = frac * max p_max
  double rate_floor_bps = 1e-6;  // outage floor inside ln(.) for zero rates
};

struct DualState {
  Eigen::ArrayXd mu;  // one nonpositive multiplier per UE
};

struct WeightState {
  Eigen::ArrayXd w;  // reweighting coefficients, one per MBS (per watt)
};

struct ObjectiveBreakdown {
  double slt = 0.0;    // sum of ln-rates (rates floored at the outage rate)
  double l1 = 0.0;     // ||p_T||_1 over terrestrial cells, in watts
  double group = 0.0;  // (sum_{j in T} psi_j w_j) * ||p_T||_2, in watts
  double total = 0.0;  // slt - lambda * (l1 + group)
};

struct TraceRow {
  int iteration = 0;
  double f_total = 0.0;
  double slt = 0.0;
  double l1 = 0.0;
  double group = 0.0;
  double eps = 0.0;
  int active_tn_mbs = 0;
  double relative_gain = 0.0;  // (f_t - f_{t-1}) / |f_{t-1}|
  long dual_iterations = 0;    // spent in projections this outer iteration
};

struct OptimizerTrace {
  std::vector<TraceRow> rows;
  bool converged = false;
  int iterations = 0;            // outer iterations executed
  long dual_iterations_total = 0;
};

struct BlasterResult {
  Allocation alloc;  // binary association, floored powers, final split
  OptimizerTrace trace;
  Eigen::ArrayXd tau_mw;  // final per-MBS coverage floors (0 where unused)
  DualState dual;
  WeightState weights;
};

// ---------------------------------------------------------------------------
// objective pieces

inline double lambda_schedule(const BlasterConfig& cfg, int n_ues) {
  return cfg.lambda_max * cfg.k_min / static_cast<double>(n_ues);
}

inline Eigen::ArrayXd psi_w(const Scenario& s) {
  Eigen::ArrayXd psi(static_cast<int>(s.mbs.size()));
  for (std::size_t j = 0; j < s.mbs.size(); ++j) {
    psi(static_cast<int>(j)) = s.mbs[j].psi_w;
  }
  return psi;
}

/// Sum of ln-rates with an optional outage floor: rate_floor_bps > 0 maps
/// zero-rate (stranded) users to ln(rate_floor) instead of throwing, so
/// shutdown trials that momentarily strand a user stay comparable.
inline double floored_slt(const Eigen::ArrayXd& rates, double rate_floor_bps) {
  if (!(rate_floor_bps > 0.0)) return sum_log_throughput(rates);
  double slt = 0.0;
  for (int i = 0; i < rates.size(); ++i) {
    slt += std::log(std::max(rates(i), rate_floor_bps));
  }
  return slt;
}

inline ObjectiveBreakdown objective(const Allocation& a,
                                    const ChannelState& cs, const Scenario& s,
                                    const SysParams& sys,
                                    const WeightState& w, double lambda,
                                    double rate_floor_bps = 0.0) {
  ObjectiveBreakdown b;
  b.slt = floored_slt(ue_throughput(a, cs, s, sys), rate_floor_bps);
  double l1 = 0.0, sq = 0.0, wpsi = 0.0;
  for (int j = 0; j < s.n_terrestrial; ++j) {
    const double pw = a.p_mw(j) / kMwPerW;
    l1 += pw;
    sq += pw * pw;
    wpsi += s.mbs[static_cast<std::size_t>(j)].psi_w * w.w(j);
  }
  b.l1 = l1;
  b.group = std::sqrt(sq) * wpsi;
  b.total = b.slt - lambda * (b.l1 + b.group);
  return b;
}

// ---------------------------------------------------------------------------
// association block

/**
 * Potential mean rates R_ij = (W_j / kbar_j) log2(1 + SINR_ij), evaluated
 * for every link against frozen effective loads kbar (floored at
 * cfg.load_floor so lightly-loaded columns stay finite).  Masked-out links
 * get rate 0 so they attract no association mass.
 */
inline Eigen::ArrayXXd rate_matrix(const ChannelState& cs, const Scenario& s,
                                   const SysParams& sys,
                                   const Eigen::ArrayXd& p_mw, double eps,
                                   double bandwidth_hz,
                                   const Eigen::ArrayXd& kbar,
                                   const Eigen::ArrayXXd& mask) {
  const int K = static_cast<int>(cs.beta.rows());
  const int L = static_cast<int>(cs.beta.cols());
  const auto [w_sat, w_terr] = split_bandwidth(eps, bandwidth_hz);
  const Eigen::ArrayXXd rx = tier_received_mw(cs, s, p_mw);
  const double n0 = sys.noise_mw();
  Eigen::ArrayXXd r(K, L);
  for (int j = 0; j < L; ++j) {
    const bool is_sat =
        s.mbs[static_cast<std::size_t>(j)].tier == Tier::kSatellite;
    const double w_share = (is_sat ? w_sat : w_terr) / kbar(j);
    for (int i = 0; i < K; ++i) {
      if (mask(i, j) == 0.0) {
        r(i, j) = 0.0;
        continue;
      }
      const double own = cs.beta(i, j) * p_mw(j);
      const double gamma = own / (rx(i, is_sat) - own + n0);
      r(i, j) = w_share * log2_1p(gamma);
    }
  }
  return r;
}

/// Frozen-load utility surrogate: sum_i ln( sum_j x_ij * R_ij ), with rows
/// floored at rate_floor_bps when positive (zero rows throw otherwise).
inline double surrogate_slt(const Eigen::ArrayXXd& X,
                            const Eigen::ArrayXXd& rates,
                            double rate_floor_bps = 0.0) {
  const Eigen::ArrayXd row = (X * rates).rowwise().sum();
  double v = 0.0;
  for (int i = 0; i < row.size(); ++i) {
    const double r = std::max(row(i), rate_floor_bps);
    if (!(r > 0.0)) {
      throw std::runtime_error(
          "surrogate_slt: UE " + std::to_string(i) +
          " has no positive-rate association mass");
    }
    v += std::log(r);
  }
  return v;
}

/// Gradient of the frozen-load surrogate: G_ij = R_ij / (sum_j x_ij R_ij).
inline Eigen::ArrayXXd assoc_gradient(const Eigen::ArrayXXd& X,
                                      const Eigen::ArrayXXd& rates,
                                      double rate_floor_bps = 0.0) {
  const Eigen::ArrayXd row = (X * rates).rowwise().sum();
  Eigen::ArrayXXd g(X.rows(), X.cols());
  for (int i = 0; i < X.rows(); ++i) {
    const double r = std::max(row(i), rate_floor_bps);
    if (!(r > 0.0)) {
      throw std::runtime_error("assoc_gradient: zero surrogate rate at UE " +
                               std::to_string(i));
    }
    g.row(i) = rates.row(i) / r;
  }
  return g;
}

/// Plain ascent step on the association block (projection applied after).
inline Eigen::ArrayXXd assoc_gradient_step(const Eigen::ArrayXXd& X,
                                           const Eigen::ArrayXXd& grad,
                                           double alpha) {
  return X + alpha * grad;
}

/**
 * Exact Euclidean projection of one row onto
 * { x >= 0 : c . x >= floor } via its scalar dual.  g(mu) is convex with
 * derivative floor - c . max(xt - mu c, 0); projected gradient descent with
 * the Lipschitz-safe fixed step scale/||c||^2 drives the coverage residual
 * to zero.  Returns the multiplier; iteration count accumulates in iters.
 */
inline double project_row_dual(Eigen::Ref<Eigen::ArrayXd> x,
                               const Eigen::ArrayXd& xt,
                               const Eigen::ArrayXd& c, double floor_mw,
                               double mu0, const BlasterConfig& cfg,
                               long* iters) {
  x = xt.max(0.0);
  if ((x * c).sum() >= floor_mw) return 0.0;  // already covered: mu* = 0
  const double c2 = c.square().sum();
  if (!(c2 > 0.0) || c.maxCoeff() * 1e9 < floor_mw) {
    throw std::runtime_error(
        "project_row_dual: UE row cannot reach the coverage floor at the "
        "current powers");
  }
  const double step = cfg.dual_step_scale / c2;
  double mu = std::min(mu0, 0.0);
  const double tol = cfg.dual_tol * floor_mw;
  for (int it = 0; it < cfg.dual_cap; ++it) {
    ++*iters;
    x = (xt - mu * c).max(0.0);
    const double resid = floor_mw - (x * c).sum();  // = d g / d mu
    if (std::abs(resid) <= tol) break;
    mu = std::min(0.0, mu - step * resid);
  }
  x = (xt - mu * c).max(0.0);
  return mu;
}

/**
 * Dual-value oracle for the row-wise projection: the Lagrangian evaluated
 * at its minimizer X*(mu) = max(Xt - mu^pad .* C, 0), which collapses to
 *
 *   g(mu) = 0.5 ||Xt||_F^2 - 0.5 ||X*(mu)||_F^2 - floor * sum_i mu_i .
 *
 * (The quadratic constant 0.5||Xt||^2 does not affect the argmin over mu;
 * it is kept so g equals the Lagrangian value exactly.)
 */
inline double dual_value(const Eigen::ArrayXd& mu, const Eigen::ArrayXXd& Xt,
                         const Eigen::ArrayXXd& C, double floor_mw) {
  double v = 0.5 * Xt.square().sum() - floor_mw * mu.sum();
  for (int i = 0; i < Xt.rows(); ++i) {
    const Eigen::ArrayXd xs =
        (Xt.row(i).transpose() - mu(i) * C.row(i).transpose()).max(0.0);
    v -= 0.5 * xs.square().sum();
  }
  return v;
}

/// Direct Lagrangian 0.5||X - Xt||^2 + sum_i mu_i (c_i . x_i - floor).
inline double lagrangian_value(const Eigen::ArrayXXd& X,
                               const Eigen::ArrayXd& mu,
                               const Eigen::ArrayXXd& Xt,
                               const Eigen::ArrayXXd& C, double floor_mw) {
  double v = 0.5 * (X - Xt).square().sum();
  for (int i = 0; i < X.rows(); ++i) {
    v += mu(i) * ((X.row(i) * C.row(i)).sum() - floor_mw);
  }
  return v;
}

struct ProjectionResult {
  Eigen::ArrayXXd X;    // after coverage projection + simplex row handling
  Eigen::ArrayXXd raw;  // coverage projection only (the literal subproblem)
  Eigen::ArrayXd mu;
  long dual_iterations = 0;
};

/**
 * Coverage projection of the whole stepped association matrix, then the
 * relaxed-simplex row handling: clip to [0, 1] and renormalize rows with
 * positive mass; rows left without mass fall back to their strongest
 * coverage-feasible column.  `c` carries beta .* p (per-row coverage
 * coefficients); `fallback` the per-row column index used for empty rows.
 */
inline ProjectionResult project_association(const Eigen::ArrayXXd& Xt,
                                            const Eigen::ArrayXXd& c,
                                            double floor_mw,
                                            const BlasterConfig& cfg,
                                            const Eigen::ArrayXd* mu_warm,
                                            const std::vector<int>& fallback) {
  const int K = static_cast<int>(Xt.rows());
  ProjectionResult res;
  res.raw.resize(Xt.rows(), Xt.cols());
  res.mu = Eigen::ArrayXd::Zero(K);
  for (int i = 0; i < K; ++i) {
    Eigen::ArrayXd xi(Xt.cols());
    const double mu0 = mu_warm != nullptr ? (*mu_warm)(i) : 0.0;
    res.mu(i) =
        project_row_dual(xi, Xt.row(i).transpose(), c.row(i).transpose(),
                         floor_mw, mu0, cfg, &res.dual_iterations);
    res.raw.row(i) = xi.transpose();
  }
  res.X = res.raw.min(1.0).max(0.0);
  for (int i = 0; i < K; ++i) {
    const double sum = res.X.row(i).sum();
    if (sum > 0.0) {
      res.X.row(i) /= sum;
    } else {
      res.X(i, fallback[static_cast<std::size_t>(i)]) = 1.0;
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// split block

/// Closed-form optimal satellite share: association mass on the satellite
/// divided by the UE count, clamped away from the degenerate endpoints.
inline double optimal_split(const Eigen::ArrayXXd& X, int sat_index,
                            double eps_floor) {
  const double k_s = X.col(sat_index).sum();
  const double k = static_cast<double>(X.rows());
  return std::clamp(k_s / k, eps_floor, 1.0 - eps_floor);
}

// ---------------------------------------------------------------------------
// power block

/**
 * Gradient of the utility (sum of ln-rates) with respect to the power
 * vector at fixed association and split.  For link (i,j) with same-tier
 * interference denominator D_ij,
 *
 *   d SINR_ij / d p_j = beta_ij / D_ij                  (serving power)
 *   d SINR_ij / d p_l = -SINR_ij * beta_il / D_ij       (same-tier l != j)
 *
 * accumulated in O(K L) through per-UE same-tier sums.  Powers are in mW
 * here (the linklayer's unit); multiply by kMwPerW for the watt-domain
 * gradient.  Users whose current rate falls below rate_floor_bps are
 * skipped: inside the floored ln(.) their utility is locally flat, and the
 * association step — not the power step — is what rescues them.
 */
inline Eigen::ArrayXd power_gradient(const Eigen::ArrayXXd& X,
                                     const ChannelState& cs,
                                     const Scenario& s, const SysParams& sys,
                                     const Eigen::ArrayXd& p_mw, double eps,
                                     double bandwidth_hz,
                                     double rate_floor_bps = 0.0) {
  const int K = static_cast<int>(cs.beta.rows());
  const int L = static_cast<int>(cs.beta.cols());
  const auto [w_sat, w_terr] = split_bandwidth(eps, bandwidth_hz);
  const Eigen::ArrayXd k = loads(X);
  const Eigen::ArrayXXd rx = tier_received_mw(cs, s, p_mw);
  const double n0 = sys.noise_mw();

  // Per-UE rates (same formula as ue_throughput; recomputed here so the
  // helper stays self-contained for gradient checks).
  Eigen::ArrayXd rate = Eigen::ArrayXd::Zero(K);
  for (int i = 0; i < K; ++i) {
    for (int j = 0; j < L; ++j) {
      const double x = X(i, j);
      if (x <= 0.0) continue;
      const bool is_sat =
          s.mbs[static_cast<std::size_t>(j)].tier == Tier::kSatellite;
      const double own = cs.beta(i, j) * p_mw(j);
      const double gamma = own / (rx(i, is_sat) - own + n0);
      rate(i) += x * (is_sat ? w_sat : w_terr) / k(j) * log2_1p(gamma);
    }
  }

  // a_ij = x_ij (W_j / k_j) / (ln 2 * R_i * (1 + gamma_ij)) is the chain
  // factor of link (i,j); own-power terms add directly, cross terms are
  // folded through per-UE per-tier sums of a_ij * gamma_ij / D_ij.
  Eigen::ArrayXd grad = Eigen::ArrayXd::Zero(L);
  Eigen::ArrayXXd s_tier = Eigen::ArrayXXd::Zero(K, 2);
  auto link_terms = [&](int i, int j, bool is_sat, double& a_over_d,
                        double& ag_over_d) {
    const double own = cs.beta(i, j) * p_mw(j);
    const double d = rx(i, is_sat) - own + n0;
    const double gamma = own / d;
    const double a = X(i, j) * ((is_sat ? w_sat : w_terr) / k(j)) /
                     (std::log(2.0) * rate(i) * (1.0 + gamma));
    a_over_d = a / d;
    ag_over_d = a * gamma / d;
  };
  for (int i = 0; i < K; ++i) {
    if (rate(i) <= rate_floor_bps) continue;
    for (int j = 0; j < L; ++j) {
      if (X(i, j) <= 0.0) continue;
      const bool is_sat =
          s.mbs[static_cast<std::size_t>(j)].tier == Tier::kSatellite;
      double a_over_d, ag_over_d;
      link_terms(i, j, is_sat, a_over_d, ag_over_d);
      grad(j) += a_over_d * cs.beta(i, j);
      s_tier(i, is_sat) += ag_over_d;
    }
  }
  for (int l = 0; l < L; ++l) {
    const bool is_sat =
        s.mbs[static_cast<std::size_t>(l)].tier == Tier::kSatellite;
    for (int i = 0; i < K; ++i) {
      if (rate(i) <= rate_floor_bps) continue;
      double cross = s_tier(i, is_sat);
      if (X(i, l) > 0.0) {  // remove the j = l self term
        double a_over_d, ag_over_d;
        link_terms(i, l, is_sat, a_over_d, ag_over_d);
        cross -= ag_over_d;
      }
      grad(l) -= cs.beta(i, l) * cross;
    }
  }
  return grad;
}

/// Plain ascent step on the power block (prox and clamp applied after).
inline Eigen::ArrayXd power_gradient_step(const Eigen::ArrayXd& p_mw,
                                          const Eigen::ArrayXd& grad,
                                          double eta) {
  return p_mw + eta * grad;
}

/// Block soft-threshold: the prox of t * ||.||_2 — shrinks the whole power
/// vector toward the origin and zeroes it when the threshold wins.
inline Eigen::ArrayXd prox_group(const Eigen::ArrayXd& p_tilde, double t) {
  const double norm = std::sqrt(p_tilde.square().sum());
  if (!(norm > 0.0)) return Eigen::ArrayXd::Zero(p_tilde.size());
  const double scale = std::max(1.0 - t / norm, 0.0);
  return scale * p_tilde;
}

/// Smallest power keeping every claiming UE covered: tau_j = max over the
/// serving set of floor / beta_ij; 0 for columns nobody claims.
inline Eigen::ArrayXd coverage_floors(const Eigen::ArrayXXd& X,
                                      const ChannelState& cs,
                                      const SysParams& sys,
                                      double serve_thr) {
  const int K = static_cast<int>(cs.beta.rows());
  const int L = static_cast<int>(cs.beta.cols());
  const double floor_mw = sys.rsrp_min_mw();
  Eigen::ArrayXd tau = Eigen::ArrayXd::Zero(L);
  for (int j = 0; j < L; ++j) {
    for (int i = 0; i < K; ++i) {
      if (X(i, j) >= serve_thr) {
        tau(j) = std::max(tau(j), floor_mw / cs.beta(i, j));
      }
    }
  }
  return tau;
}

/**
 * Coverage rescue floors for a proposed power vector: every UE must retain
 * at least one masked column whose received power clears the access floor.
 * UEs already covered at the proposal (or by a floor raised for an earlier
 * UE, or by the satellite where its link is feasible) demand nothing, so a
 * cell whose entire neighborhood is covered elsewhere may go completely
 * dark; each remaining UE raises its strongest masked column — the
 * cheapest rescuer in watts — to the smallest level that restores access.
 * UEs are processed in index order, which makes the raised set
 * deterministic.
 */
inline Eigen::ArrayXd rescue_floors(const Eigen::ArrayXd& p_hat_mw,
                                    const ChannelState& cs,
                                    const SysParams& sys,
                                    const Eigen::ArrayXXd& mask,
                                    const Eigen::ArrayXd& p_cap_mw) {
  const int K = static_cast<int>(cs.beta.rows());
  const int L = static_cast<int>(cs.beta.cols());
  const double floor_mw = sys.rsrp_min_mw();
  Eigen::ArrayXd tau = Eigen::ArrayXd::Zero(L);
  for (int i = 0; i < K; ++i) {
    bool covered = false;
    int jstar = -1;
    double beta_star = 0.0;
    for (int j = 0; j < L; ++j) {
      if (mask(i, j) == 0.0) continue;
      const double p_eff =
          std::min(p_cap_mw(j), std::max(p_hat_mw(j), tau(j)));
      if (cs.beta(i, j) * p_eff >= floor_mw) {
        covered = true;
        break;
      }
      if (cs.beta(i, j) > beta_star) {
        beta_star = cs.beta(i, j);
        jstar = j;
      }
    }
    if (!covered && jstar >= 0) {
      tau(jstar) = std::max(tau(jstar), floor_mw / cs.beta(i, jstar));
    }
  }
  return tau;
}

/**
 * Box clamp after the prox: serving columns into [tau_j, p_max_j], unused
 * columns into [0, p_max_j].  Throws when a floor exceeds the cap — the
 * association upstream is expected to mask such links out.
 */
inline Eigen::ArrayXd power_feasibility_clamp(const Eigen::ArrayXd& p_hat,
                                              const Eigen::ArrayXd& tau,
                                              const Eigen::ArrayXd& p_cap) {
  Eigen::ArrayXd p(p_hat.size());
  for (int j = 0; j < p_hat.size(); ++j) {
    if (tau(j) > p_cap(j) * (1.0 + 1e-12)) {
      throw std::runtime_error(
          "power_feasibility_clamp: coverage floor exceeds the power cap at "
          "MBS " +
          std::to_string(j));
    }
    p(j) = std::clamp(p_hat(j), std::min(tau(j), p_cap(j)), p_cap(j));
  }
  return p;
}

/// Reweighting update: w_j = 1 / (p_j + delta), for p and delta in watts.
inline Eigen::ArrayXd reweight(const Eigen::ArrayXd& p, double delta) {
  return 1.0 / (p + delta);
}

// ---------------------------------------------------------------------------
// driver

namespace detail {

/// Strongest coverage-feasible column per UE (by full-power received power).
inline std::vector<int> best_feasible_column(const ChannelState& cs,
                                             const Scenario& s,
                                             const Eigen::ArrayXXd& mask) {
  const int K = static_cast<int>(cs.beta.rows());
  const int L = static_cast<int>(cs.beta.cols());
  std::vector<int> best(static_cast<std::size_t>(K), -1);
  for (int i = 0; i < K; ++i) {
    double top = -1.0;
    for (int j = 0; j < L; ++j) {
      if (mask(i, j) == 0.0) continue;
      const double v =
          cs.beta(i, j) * s.mbs[static_cast<std::size_t>(j)].p_max_mw;
      if (v > top) {
        top = v;
        best[static_cast<std::size_t>(i)] = j;
      }
    }
    if (best[static_cast<std::size_t>(i)] < 0) {
      throw std::runtime_error("run_blaster: UE " + std::to_string(i) +
                               " is not coverable by any transmitter at full "
                               "power");
    }
  }
  return best;
}

inline int count_active_tn(const Eigen::ArrayXd& p_mw, const Scenario& s) {
  int n = 0;
  for (int j = 0; j < s.n_terrestrial; ++j) n += p_mw(j) > 0.0;
  return n;
}

/// Static draw coefficient of the terrestrial group penalty at weights w.
inline double terrestrial_psi_weight(const Scenario& s,
                                     const Eigen::ArrayXd& psi,
                                     const Eigen::ArrayXd& w) {
  double v = 0.0;
  for (int j = 0; j < s.n_terrestrial; ++j) v += psi(j) * w(j);
  return v;
}

/// One proposed power vector: watt-domain ascent, terrestrial block prox,
/// coverage rescue, box clamp.  Returns the feasible candidate in mW.
inline Eigen::ArrayXd propose_powers(const Eigen::ArrayXd& p_mw,
                                     const Eigen::ArrayXd& grad_mw,
                                     double eta, double lambda,
                                     double wpsi_tn, const Scenario& s,
                                     const ChannelState& cs,
                                     const SysParams& sys,
                                     const Eigen::ArrayXXd& mask,
                                     const Eigen::ArrayXd& p_cap,
                                     const Eigen::ArrayXd* tau_fixed) {
  const int L = static_cast<int>(p_mw.size());
  // Ascent in watts: d slt / d p_W = kMwPerW * d slt / d p_mW.
  Eigen::ArrayXd ptw = p_mw / kMwPerW + eta * (grad_mw * kMwPerW);
  // Shutdown prox on the terrestrial block only; the satellite has no off
  // state to steer toward.
  Eigen::ArrayXd tn = ptw.head(s.n_terrestrial);
  tn = prox_group(tn, lambda * eta * wpsi_tn);
  Eigen::ArrayXd ph_mw(L);
  ph_mw.head(s.n_terrestrial) = tn * kMwPerW;
  for (int j = s.n_terrestrial; j < L; ++j) ph_mw(j) = ptw(j) * kMwPerW;
  const Eigen::ArrayXd tau =
      tau_fixed != nullptr ? *tau_fixed
                           : rescue_floors(ph_mw, cs, sys, mask, p_cap);
  return power_feasibility_clamp(ph_mw, tau, p_cap);
}

}  // namespace detail

inline BlasterResult run_blaster(const ChannelState& cs, const Scenario& s,
                                 const SysParams& sys,
                                 const BlasterConfig& cfg) {
  const int K = static_cast<int>(cs.beta.rows());
  const int L = static_cast<int>(cs.beta.cols());
  if (K == 0 || L == 0) throw std::invalid_argument("run_blaster: empty snapshot");
  if (s.sat_index != s.n_terrestrial) {
    throw std::logic_error(
        "run_blaster: expects terrestrial columns first, satellite last");
  }
  const double lambda = lambda_schedule(cfg, K);
  const Eigen::ArrayXXd mask = feasible_mask(cs, s, sys);
  const std::vector<int> fallback = detail::best_feasible_column(cs, s, mask);
  const Eigen::ArrayXd p_cap = p_max_mw(s);
  const double floor_mw = sys.rsrp_min_mw();
  const double delta_w = cfg.delta_frac * p_cap.maxCoeff() / kMwPerW;
  const Eigen::ArrayXd psi = psi_w(s);
  const double rfl = cfg.rate_floor_bps;

  // --- initialization: strongest-link association, full power, even split,
  // unit weights.
  Allocation a;
  a.X = Eigen::ArrayXXd::Zero(K, L);
  for (int i = 0; i < K; ++i) a.X(i, fallback[static_cast<std::size_t>(i)]) = 1.0;
  a.p_mw = p_cap;
  a.eps = 0.5;
  a.bandwidth_hz = sys.bandwidth_hz;
  WeightState w{Eigen::ArrayXd::Ones(L)};
  DualState dual{Eigen::ArrayXd::Zero(K)};

  OptimizerTrace trace;
  ObjectiveBreakdown prev = objective(a, cs, s, sys, w, lambda, rfl);

  for (int it = 1; it <= cfg.outer_cap; ++it) {
    long dual_iters_this = 0;
    bool x_moved = false;
    bool p_moved = false;

    // --- 1. association ascent + coverage projection -----------------------
    {
      Eigen::ArrayXd kbar = loads(a.X).max(cfg.load_floor);
      const Eigen::ArrayXXd rates = rate_matrix(
          cs, s, sys, a.p_mw, a.eps, a.bandwidth_hz, kbar, mask);
      const Eigen::ArrayXXd grad = assoc_gradient(a.X, rates, rfl);
      Allocation probe = a;
      const double slt0 = floored_slt(ue_throughput(a, cs, s, sys), rfl);
      // Coverage coefficients beta .* p, zeroed on infeasible links so the
      // projection cannot grow mass where full power misses the floor.
      Eigen::ArrayXXd cpow(K, L);
      for (int j = 0; j < L; ++j) {
        cpow.col(j) = mask.col(j) * cs.beta.col(j) * a.p_mw(j);
      }

      // Line search on the true utility: the frozen-load surrogate only
      // shapes the direction, so each trial is re-scored with trial loads
      // and the step is skipped entirely when no trial improves.
      double alpha = cfg.alpha;
      for (int bt = 0; bt <= cfg.backtracks; ++bt) {
        const Eigen::ArrayXXd xt =
            mask * assoc_gradient_step(a.X, grad, alpha);
        ProjectionResult pr = project_association(xt, cpow, floor_mw, cfg,
                                                  &dual.mu, fallback);
        dual_iters_this += pr.dual_iterations;
        probe.X = pr.X;
        const double slt = floored_slt(ue_throughput(probe, cs, s, sys), rfl);
        // Strict improvement only: accepting an equal-utility shuffle would
        // churn the association without progress and blur the stop test.
        if (slt > slt0 + 1e-12 * std::abs(slt0)) {
          a.X = std::move(pr.X);
          dual.mu = std::move(pr.mu);
          x_moved = true;
          break;
        }
        alpha *= 0.5;
      }
    }

    // --- 2. bandwidth split -------------------------------------------------
    const double eps_before = a.eps;
    a.eps = optimal_split(a.X, s.sat_index, cfg.eps_floor);
    const bool eps_moved = a.eps != eps_before;

    // --- 3. power ascent + prox + coverage rescue ---------------------------
    {
      const Eigen::ArrayXd grad = power_gradient(a.X, cs, s, sys, a.p_mw,
                                                 a.eps, a.bandwidth_hz, rfl);
      const double f0 = objective(a, cs, s, sys, w, lambda, rfl).total;
      const double wpsi_tn = detail::terrestrial_psi_weight(s, psi, w.w);
      double eta = cfg.eta;
      for (int bt = 0; bt <= cfg.backtracks; ++bt) {
        const Eigen::ArrayXd pc =
            detail::propose_powers(a.p_mw, grad, eta, lambda, wpsi_tn, s, cs,
                                   sys, mask, p_cap, nullptr);
        Allocation trial = a;
        trial.p_mw = pc;
        const double f = objective(trial, cs, s, sys, w, lambda, rfl).total;
        if (f > f0 + 1e-12 * std::abs(f0)) {
          a.p_mw = pc;
          p_moved = true;
          break;
        }
        eta *= 0.5;  // keep the current powers when no trial improves
      }
    }

    // An iteration that accepted no change is a fixed point of the update
    // map (the weights depend only on the unchanged powers), so every later
    // iteration would repeat it verbatim; stop without logging a no-op row.
    if (!x_moved && !eps_moved && !p_moved && it > 2) {
      trace.dual_iterations_total += dual_iters_this;
      trace.converged = true;
      break;
    }

    // --- 4. record progress at the weights this iteration optimized, then
    // refresh the weights for the next round.  Comparing objectives across a
    // reweight would mix two different penalties, so the gain and the stop
    // test both use the pre-refresh weights; the stop threshold is scaled by
    // the utility magnitude because the penalty can dwarf it by orders of
    // magnitude without carrying any per-iteration signal.
    const ObjectiveBreakdown now = objective(a, cs, s, sys, w, lambda, rfl);
    TraceRow row;
    row.iteration = it;
    row.f_total = now.total;
    row.slt = now.slt;
    row.l1 = now.l1;
    row.group = now.group;
    row.eps = a.eps;
    row.active_tn_mbs = detail::count_active_tn(a.p_mw, s);
    row.relative_gain =
        (now.total - prev.total) / std::max(std::abs(prev.total), 1e-300);
    row.dual_iterations = dual_iters_this;
    trace.rows.push_back(row);
    trace.dual_iterations_total += dual_iters_this;
    trace.iterations = it;

    const bool settled = std::abs(now.total - prev.total) <=
                         cfg.tol * std::max(std::abs(now.slt), 1.0);
    w.w = reweight(a.p_mw / kMwPerW, delta_w);
    prev = objective(a, cs, s, sys, w, lambda, rfl);
    if (settled && it > 1) {
      trace.converged = true;
      break;
    }
  }

  // --- finalization: binary association over the columns covered at the
  // final powers, re-floored powers, cleanup ---------------------------------
  Eigen::ArrayXXd xb = Eigen::ArrayXXd::Zero(K, L);
  for (int i = 0; i < K; ++i) {
    int jstar = -1;
    double top = 0.0;
    int jcov = -1;
    double cov_best = 0.0;
    for (int j = 0; j < L; ++j) {
      if (mask(i, j) == 0.0) continue;
      const double rx = cs.beta(i, j) * a.p_mw(j);
      if (rx < floor_mw) continue;  // dark or sub-floor at the final powers
      if (a.X(i, j) > top) {
        top = a.X(i, j);
        jstar = j;
      }
      if (rx > cov_best) {
        cov_best = rx;
        jcov = j;
      }
    }
    if (jstar < 0) jstar = jcov >= 0 ? jcov : fallback[static_cast<std::size_t>(i)];
    xb(i, jstar) = 1.0;
  }
  a.X = xb;
  a.eps = optimal_split(a.X, s.sat_index, cfg.eps_floor);
  // Re-solve powers against the binary association: its coverage floors are
  // no higher than the relaxed rescue ones (each user now binds only its
  // serving column), so without this pass the final powers would inherit
  // floors raised for mass that no longer exists.
  const Eigen::ArrayXd tau = coverage_floors(a.X, cs, sys, 1.0);
  {
    const Eigen::ArrayXd grad = power_gradient(a.X, cs, s, sys, a.p_mw,
                                               a.eps, a.bandwidth_hz, rfl);
    const double f0 = objective(a, cs, s, sys, w, lambda, rfl).total;
    const double wpsi_tn = detail::terrestrial_psi_weight(s, psi, w.w);
    double eta = cfg.eta;
    for (int bt = 0; bt <= cfg.backtracks; ++bt) {
      const Eigen::ArrayXd pc =
          detail::propose_powers(a.p_mw, grad, eta, lambda, wpsi_tn, s, cs,
                                 sys, mask, p_cap, &tau);
      Allocation trial = a;
      trial.p_mw = pc;
      if (objective(trial, cs, s, sys, w, lambda, rfl).total >=
          f0 - 1e-12 * std::abs(f0)) {
        a.p_mw = pc;
        break;
      }
      eta *= 0.5;
    }
    a.p_mw = power_feasibility_clamp(a.p_mw, tau, p_cap);
  }
  const Eigen::ArrayXd k_bin = loads(a.X);
  for (int j = 0; j < L; ++j) {
    // Empty cells stop transmitting: terrestrial ones power off entirely,
    // and an unused satellite beam mutes (its platform baseline remains in
    // the energy accounting downstream).
    if (k_bin(j) <= 0.0) a.p_mw(j) = 0.0;
  }
  // Score the final plan at the weights the last iteration optimized;
  // refresh them only afterwards for the returned state.
  const ObjectiveBreakdown fin = objective(a, cs, s, sys, w, lambda, rfl);
  w.w = reweight(a.p_mw / kMwPerW, delta_w);
  TraceRow row;
  row.iteration = trace.iterations + 1;
  row.f_total = fin.total;
  row.slt = fin.slt;
  row.l1 = fin.l1;
  row.group = fin.group;
  row.eps = a.eps;
  row.active_tn_mbs = detail::count_active_tn(a.p_mw, s);
  row.relative_gain =
      (fin.total - prev.total) / std::max(std::abs(prev.total), 1e-300);
  row.dual_iterations = 0;
  trace.rows.push_back(row);

  BlasterResult res;
  res.alloc = std::move(a);
  res.trace = std::move(trace);
  res.tau_mw = std::move(tau);
  res.dual = std::move(dual);
  res.weights = std::move(w);
  return res;
}

}  // namespace ntnsim
