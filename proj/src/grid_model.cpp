#include "v2g/grid_model.hpp"

#include <cmath>
#include <string>

namespace v2g {

PerUnitBase make_base(double s_base_va, double v_base_v, double f_nominal_hz) {
    if (s_base_va <= 0.0) throw ConfigError("per-unit base: s_base must be > 0");
    if (v_base_v <= 0.0) throw ConfigError("per-unit base: v_base must be > 0");
    if (f_nominal_hz <= 0.0) throw ConfigError("per-unit base: f_nominal must be > 0");
    PerUnitBase base;
    base.s_base_va = s_base_va;
    base.v_base_v = v_base_v;
    base.f_nominal_hz = f_nominal_hz;
    base.z_base_ohm = v_base_v * v_base_v / s_base_va;
    return base;
}

namespace {

double base_of(const PerUnitBase& base, Unit kind) {
    switch (kind) {
        case Unit::power: return base.s_base_va;
        case Unit::voltage: return base.v_base_v;
        case Unit::impedance: return base.z_base_ohm;
    }
    throw ConfigError("unknown per-unit kind");
}

} // namespace

double to_per_unit(double value, const PerUnitBase& base, Unit kind) {
    const double b = base_of(base, kind);
    if (b <= 0.0) throw ConfigError("per-unit conversion with non-positive base");
    return value / b;
}

double from_per_unit(double value, const PerUnitBase& base, Unit kind) {
    const double b = base_of(base, kind);
    if (b <= 0.0) throw ConfigError("per-unit conversion with non-positive base");
    return value * b;
}

FeederSpec build_feeder(double length_km, double r_ohm_per_km, double x_ohm_per_km,
                        double v_bank_pu, const PerUnitBase& base) {
    if (length_km <= 0.0) throw ConfigError("feeder: length must be > 0 km");
    if (r_ohm_per_km <= 0.0) throw ConfigError("feeder: resistance must be > 0 ohm/km");
    if (x_ohm_per_km < 0.0) throw ConfigError("feeder: reactance must be >= 0 ohm/km");
    if (v_bank_pu <= 0.0) throw ConfigError("feeder: bank voltage must be > 0 pu");

    FeederSpec f;
    f.length_km = length_km;
    f.r_ohm_per_km = r_ohm_per_km;
    f.x_ohm_per_km = x_ohm_per_km;
    f.r_pu_per_km = to_per_unit(r_ohm_per_km, base, Unit::impedance);
    f.x_pu_per_km = to_per_unit(x_ohm_per_km, base, Unit::impedance);
    const double z2 = f.r_pu_per_km * f.r_pu_per_km + f.x_pu_per_km * f.x_pu_per_km;
    f.g = f.r_pu_per_km / z2;
    f.b = f.x_pu_per_km / z2;
    f.y_squared = f.g * f.g + f.b * f.b;
    f.y_mag = std::sqrt(f.y_squared);
    f.v_bank_pu = v_bank_pu;
    return f;
}

StationSpec make_station(int index, double location_km, int ev_count,
                         double p_per_ev_max_w) {
    if (ev_count < 0)
        throw ConfigError("station " + std::to_string(index) + ": ev_count must be >= 0");
    if (p_per_ev_max_w < 0.0)
        throw ConfigError("station " + std::to_string(index) + ": per-EV power must be >= 0");
    StationSpec s;
    s.index = index;
    s.location_km = location_km;
    s.ev_count = ev_count;
    s.p_per_ev_max_w = p_per_ev_max_w;
    s.p_max_w = static_cast<double>(ev_count) * p_per_ev_max_w;
    return s;
}

void validate_stations(const std::vector<StationSpec>& stations, const FeederSpec& feeder) {
    double prev = 0.0;
    for (std::size_t i = 0; i < stations.size(); ++i) {
        const StationSpec& s = stations[i];
        if (s.location_km <= 0.0 || s.location_km >= feeder.length_km)
            throw ConfigError("station " + std::to_string(s.index) +
                              ": location must lie strictly inside (0, L)");
        if (i > 0 && s.location_km == prev)
            throw ConfigError("station " + std::to_string(s.index) +
                              ": duplicate location " + std::to_string(s.location_km) + " km");
        if (i > 0 && s.location_km < prev)
            throw ConfigError("station " + std::to_string(s.index) +
                              ": stations must be ordered by ascending location");
        prev = s.location_km;
    }
}

} // namespace v2g
