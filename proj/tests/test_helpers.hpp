#pragma once

// Shared fixtures and the profile residual checker used by both the unit
// suites and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "v2g/grid_model.hpp"
#include "v2g/voltage_solver.hpp"

namespace v2gtest {

// 12 MVA / 6.6 kV / 50 Hz bank, 4.63 km feeder at 0.227 + j0.401 ohm/km.
inline v2g::PerUnitBase bank_base() { return v2g::make_base(12e6, 6600.0, 50.0); }

inline v2g::FeederSpec reference_feeder() {
    return v2g::build_feeder(4.63, 0.227, 0.401, 1.0, bank_base());
}

// Feeder whose gradient weight g/y^2 is exactly 1 pu km (1 ohm/km on a
// 1 ohm impedance base, purely resistive). Handy for hand-checkable sums.
inline v2g::FeederSpec unit_feeder(double length_km = 5.0) {
    return v2g::build_feeder(length_km, 1.0, 0.0, 1.0, v2g::make_base(1.0, 1.0, 50.0));
}

// Deterministic uniform in [0, 1) independent of library distributions.
class TestRng {
public:
    explicit TestRng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

    double uniform() {
        // splitmix64
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        z = z ^ (z >> 31);
        return static_cast<double>(z >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    int uniform_int(int lo, int hi) { // inclusive
        return lo + static_cast<int>(uniform() * (hi - lo + 1));
    }

private:
    std::uint64_t state_;
};

// Largest defect of the solved profile against the piecewise ODE: between
// sources, dw/dx must equal f^2/v^3 (checked with centered differences on
// the stored samples) and the line flow must be constant.
inline double max_profile_residual(const v2g::FeederSpec& feeder,
                                   const v2g::VoltageProfile& profile) {
    const std::vector<v2g::VoltageSample>& s = profile.samples;
    if (s.size() < 3) return 0.0;

    const auto is_edge = [&](double x) {
        if (x == 0.0 || x == feeder.length_km) return true;
        return std::binary_search(profile.breakpoints_km.begin(),
                                  profile.breakpoints_km.end(), x);
    };

    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        if (is_edge(s[i].x_km) || is_edge(s[i - 1].x_km) || is_edge(s[i + 1].x_km))
            continue;
        const double dwdx =
            (s[i + 1].w_pu_per_km - s[i - 1].w_pu_per_km) / (s[i + 1].x_km - s[i - 1].x_km);
        const double target = s[i].flow_pu * s[i].flow_pu / (s[i].v_pu * s[i].v_pu * s[i].v_pu);
        worst = std::max(worst, std::abs(dwdx - target));
        worst = std::max(worst, std::abs(s[i + 1].flow_pu - s[i].flow_pu));
    }
    return worst;
}

} // namespace v2gtest
