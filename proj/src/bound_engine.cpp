#include "v2g/bound_engine.hpp"

#include <algorithm>
#include <stdexcept>

#include "v2g/voltage_solver.hpp"

namespace v2g {

double compute_alpha(double dv_end_pu, double dv_limit_pu) {
    if (dv_limit_pu <= 0.0) throw std::domain_error("compute_alpha: limit must be > 0");
    if (dv_end_pu < 0.0) throw std::domain_error("compute_alpha: deviation must be >= 0");
    if (dv_end_pu == 0.0) return 1.0;
    return std::min(1.0, dv_limit_pu / dv_end_pu);
}

BoundSet synthesize_bounds(const FeederSpec& feeder,
                           const std::vector<StationSpec>& stations,
                           const PerUnitBase& base, const VoltageLimits& limits,
                           double now_s, double update_period_s) {
    if (limits.dv_cha_limit_pu <= 0.0 || limits.dv_discha_limit_pu <= 0.0)
        throw ConfigError("voltage limits must be > 0");
    if (update_period_s <= 0.0) throw ConfigError("bound update period must be > 0");
    validate_stations(stations, feeder);

    BoundSet bounds;
    bounds.valid_from_s = now_s;
    bounds.valid_until_s = now_s + update_period_s;

    // Full-power deviation per mode; the magnitudes coincide, the limits
    // (and hence the alphas) generally do not.
    std::vector<double> full_power_pu(stations.size());
    for (std::size_t i = 0; i < stations.size(); ++i)
        full_power_pu[i] = stations[i].p_max_pu(base);
    const double dv_full = end_deviation(feeder, stations, full_power_pu);

    bounds.alpha_cha = compute_alpha(dv_full, limits.dv_cha_limit_pu);
    bounds.alpha_discha = compute_alpha(dv_full, limits.dv_discha_limit_pu);

    bounds.station_caps.resize(stations.size());
    for (std::size_t i = 0; i < stations.size(); ++i) {
        const double p_max = stations[i].p_max_pu(base);
        bounds.station_caps[i].charge_cap_pu = -bounds.alpha_cha * p_max;
        bounds.station_caps[i].discharge_cap_pu = bounds.alpha_discha * p_max;
    }
    return bounds;
}

} // namespace v2g
