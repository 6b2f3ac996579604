#pragma once

// Operator-side synthesis of charging/discharging upper bounds: the linear
// end-of-feeder deviation estimate is evaluated once per mode with every
// station at full power, and a single scaling factor per mode brings the
// estimate down to the configured limit. Pure functions; no shared state.

#include <vector>

#include "v2g/grid_model.hpp"

namespace v2g {

struct VoltageLimits {
    double dv_cha_limit_pu = 0.0;    ///< tolerated extra drop while charging
    double dv_discha_limit_pu = 0.0; ///< tolerated rise while discharging
};

/// Per-station power caps. Charging is a consumption, so the charge cap is
/// the (non-positive) floor of the station power; the discharge cap the
/// (non-negative) ceiling.
struct StationBound {
    double charge_cap_pu = 0.0;    ///< -alpha_cha * p_max [pu], <= 0
    double discharge_cap_pu = 0.0; ///< +alpha_discha * p_max [pu], >= 0
};

struct BoundSet {
    double alpha_cha = 1.0;
    double alpha_discha = 1.0;
    std::vector<StationBound> station_caps;
    double valid_from_s = 0.0;
    double valid_until_s = 0.0;
};

/// Default refresh period of the bound set (one prediction cycle).
inline constexpr double kDefaultBoundUpdatePeriodS = 15.0 * 60.0;

/// The scaling factor for one mode: limit / deviation, clamped into [0, 1].
/// A zero predicted deviation leaves the stations unconstrained (alpha = 1).
double compute_alpha(double dv_end_pu, double dv_limit_pu);

/// Evaluates the full-power deviation per mode and derives the caps.
/// An empty station list yields an all-zero (but valid) bound set.
BoundSet synthesize_bounds(const FeederSpec& feeder,
                           const std::vector<StationSpec>& stations,
                           const PerUnitBase& base, const VoltageLimits& limits,
                           double now_s,
                           double update_period_s = kDefaultBoundUpdatePeriodS);

} // namespace v2g
