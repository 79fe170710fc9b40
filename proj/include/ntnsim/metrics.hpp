#pragma once
/**
 * metrics.hpp — result rows and their CSV encodings.
 *
 * Numbers are written with %.9g so files round-trip doubles compactly and
 * reproducibly; fields follow RFC 4180 (quotes doubled, fields quoted when
 * they contain a comma, quote, or line break).  The daily summary is a
 * pure aggregation of the hourly rows, so it can always be recomputed from
 * hourly_metrics.csv.
 */

#include <cstdio>
#include <string>
#include <vector>

namespace ntnsim {

/// One (hour, policy) row: snapshot metrics averaged over seeds x positions.
struct HourlyMetrics {
  int hour = 0;
  std::string policy;
  double k = 0.0;             // mean number of users
  double sat_fraction = 0.0;  // mean share of users on the satellite
  double epsilon = 0.0;       // mean satellite bandwidth share
  double slt = 0.0;           // mean sum-log-throughput (nats)
  double slt_gain_vs_tn_pct = 0.0;  // mean per-snapshot gain vs 3gpp-tn
  double tn_energy_j = 0.0;         // mean ground-network energy per slot
  double sat_energy_j = 0.0;        // mean satellite energy per slot
  double active_tn_mbs = 0.0;       // mean powered ground cells
  double outage_count = 0.0;        // mean unattached users
  double op_estimate = 0.0;         // mean solver work estimate
};

/// Per-policy aggregation over the hourly rows (means; energies summed).
struct DailySummary {
  std::string policy;
  int hours = 0;
  double mean_k = 0.0;
  double mean_sat_fraction = 0.0;
  double mean_epsilon = 0.0;
  double mean_slt = 0.0;
  double mean_slt_gain_vs_tn_pct = 0.0;
  double daily_tn_energy_j = 0.0;
  double daily_sat_energy_j = 0.0;
  double mean_active_tn_mbs = 0.0;
  double total_outage_count = 0.0;
  double mean_op_estimate = 0.0;
};

inline std::string format_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline const char* hourly_csv_header() {
  return "hour,policy,K,sat_fraction,epsilon,slt,slt_gain_vs_tn_pct,"
         "tn_energy_j,sat_energy_j,active_tn_mbs,outage_count,op_estimate";
}

inline std::string hourly_csv_row(const HourlyMetrics& m) {
  std::string out = std::to_string(m.hour);
  out += ',';
  out += csv_field(m.policy);
  for (double v : {m.k, m.sat_fraction, m.epsilon, m.slt,
                   m.slt_gain_vs_tn_pct, m.tn_energy_j, m.sat_energy_j,
                   m.active_tn_mbs, m.outage_count, m.op_estimate}) {
    out += ',';
    out += format_g9(v);
  }
  return out;
}

inline const char* daily_csv_header() {
  return "policy,hours,mean_K,mean_sat_fraction,mean_epsilon,mean_slt,"
         "mean_slt_gain_vs_tn_pct,daily_tn_energy_j,daily_sat_energy_j,"
         "mean_active_tn_mbs,total_outage_count,mean_op_estimate";
}

inline std::string daily_csv_row(const DailySummary& d) {
  std::string out = csv_field(d.policy);
  out += ',';
  out += std::to_string(d.hours);
  for (double v :
       {d.mean_k, d.mean_sat_fraction, d.mean_epsilon, d.mean_slt,
        d.mean_slt_gain_vs_tn_pct, d.daily_tn_energy_j, d.daily_sat_energy_j,
        d.mean_active_tn_mbs, d.total_outage_count, d.mean_op_estimate}) {
    out += ',';
    out += format_g9(v);
  }
  return out;
}

/// Groups hourly rows by policy (first-appearance order): means of the
/// per-hour metrics, with energies and outages summed over the hours.
inline std::vector<DailySummary> compute_daily(
    const std::vector<HourlyMetrics>& rows) {
  std::vector<DailySummary> out;
  for (const auto& r : rows) {
    DailySummary* d = nullptr;
    for (auto& existing : out) {
      if (existing.policy == r.policy) {
        d = &existing;
        break;
      }
    }
    if (d == nullptr) {
      out.push_back(DailySummary{});
      d = &out.back();
      d->policy = r.policy;
    }
    d->hours += 1;
    d->mean_k += r.k;
    d->mean_sat_fraction += r.sat_fraction;
    d->mean_epsilon += r.epsilon;
    d->mean_slt += r.slt;
    d->mean_slt_gain_vs_tn_pct += r.slt_gain_vs_tn_pct;
    d->daily_tn_energy_j += r.tn_energy_j;
    d->daily_sat_energy_j += r.sat_energy_j;
    d->mean_active_tn_mbs += r.active_tn_mbs;
    d->total_outage_count += r.outage_count;
    d->mean_op_estimate += r.op_estimate;
  }
  for (auto& d : out) {
    const double n = d.hours > 0 ? d.hours : 1;
    d.mean_k /= n;
    d.mean_sat_fraction /= n;
    d.mean_epsilon /= n;
    d.mean_slt /= n;
    d.mean_slt_gain_vs_tn_pct /= n;
    d.mean_active_tn_mbs /= n;
    d.mean_op_estimate /= n;
  }
  return out;
}

}  // namespace ntnsim
