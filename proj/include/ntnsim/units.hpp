#pragma once
/**
 * units.hpp — dB/linear conversions and shared numeric helpers.
 *
 * Conventions used across the library:
 *   - antenna/path gains: dB (log) or dimensionless linear power ratio;
 *   - transmit powers and RSRP: dBm (log) or milliwatt (linear);
 *   - all optimization math runs in linear units, logs are for I/O.
 */

#include <cmath>
#include <stdexcept>
#include <string>

namespace ntnsim {

inline double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }

inline double lin_to_db(double lin) {
  if (!(lin > 0.0)) {
    throw std::domain_error("lin_to_db: non-positive linear value " +
                            std::to_string(lin));
  }
  return 10.0 * std::log10(lin);
}

// dBm <-> mW are the same mapping; named separately for readable call sites.
inline double dbm_to_mw(double dbm) { return db_to_lin(dbm); }
inline double mw_to_dbm(double mw) { return lin_to_db(mw); }

inline constexpr double kLog2E = 1.4426950408889634074;  // 1/ln(2)

/// log2(1+x) with the exact small-x path.
inline double log2_1p(double x) { return std::log1p(x) * kLog2E; }

}  // namespace ntnsim
