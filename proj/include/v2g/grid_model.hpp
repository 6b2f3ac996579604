#pragma once

// Static descriptions of the transmission grid, distribution feeder,
// charging stations and loads, plus per-unit conversion. Everything here is
// immutable after construction and safe to share across threads.

#include <cstddef>
#include <vector>

#include "v2g/errors.hpp"

namespace v2g {

enum class Unit { power, voltage, impedance };

/// Per-unit base of one distribution bank.
struct PerUnitBase {
    double s_base_va = 0.0;    ///< apparent power base [VA]
    double v_base_v = 0.0;     ///< voltage base [V]
    double f_nominal_hz = 0.0; ///< nominal grid frequency [Hz]
    double z_base_ohm = 0.0;   ///< derived, v_base^2 / s_base [ohm]
};

/// Builds a validated base; throws ConfigError on non-positive entries.
PerUnitBase make_base(double s_base_va, double v_base_v, double f_nominal_hz);

double to_per_unit(double value, const PerUnitBase& base, Unit kind);
double from_per_unit(double value, const PerUnitBase& base, Unit kind);

/// Electrical constants of one straight-line feeder. The admittance
/// decomposition is chosen so that g/y^2 equals the per-unit series
/// resistance per km (and b/y^2 the reactance), which is what the
/// voltage-gradient formulas rely on.
struct FeederSpec {
    double length_km = 0.0;
    double r_ohm_per_km = 0.0;
    double x_ohm_per_km = 0.0;
    double r_pu_per_km = 0.0; ///< series resistance [pu/km]
    double x_pu_per_km = 0.0; ///< series reactance [pu/km]
    double g = 0.0;           ///< per-unit-length conductance, r_pu/(r_pu^2+x_pu^2)
    double b = 0.0;           ///< per-unit-length susceptance, x_pu/(r_pu^2+x_pu^2)
    double y_squared = 0.0;   ///< g^2 + b^2, stored as computed
    double y_mag = 0.0;       ///< sqrt(y_squared)
    double v_bank_pu = 1.0;   ///< regulated bank secondary voltage [pu]

    /// g/y^2 == r_pu_per_km; the weight of an injection in the gradient sum.
    double resistance_factor() const { return g / y_squared; }
    double reactance_factor() const { return b / y_squared; }
};

FeederSpec build_feeder(double length_km, double r_ohm_per_km, double x_ohm_per_km,
                        double v_bank_pu, const PerUnitBase& base);

/// One charging station on the feeder.
struct StationSpec {
    int index = 0;
    double location_km = 0.0;   ///< distance from the bank
    int ev_count = 0;
    double p_per_ev_max_w = 0.0;
    double p_max_w = 0.0;       ///< ev_count * p_per_ev_max_w

    double p_max_pu(const PerUnitBase& base) const { return p_max_w / base.s_base_va; }
};

StationSpec make_station(int index, double location_km, int ev_count,
                         double p_per_ev_max_w);

/// Validates ordering and bounds of a station list against the feeder.
/// Stations must be strictly inside (0, L), strictly ascending, no duplicates.
void validate_stations(const std::vector<StationSpec>& stations, const FeederSpec& feeder);

/// One constant-power load. Consumption positive; unity power factor.
struct LoadSpec {
    double location_km = 0.0; ///< in (0, L]
    double p_load_w = 0.0;
    double q_load_var = 0.0;  ///< zero in all shipped scenarios
};

/// A point power exchange with the feeder in per-unit.
/// power_pu > 0 injects into the feeder (discharge), < 0 consumes (charge/load).
struct PointInjection {
    double location_km = 0.0;
    double power_pu = 0.0;
};

} // namespace v2g
