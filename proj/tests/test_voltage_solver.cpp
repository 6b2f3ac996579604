#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstring>
#include <vector>

#include "test_helpers.hpp"
#include "v2g/voltage_solver.hpp"

using namespace v2g;

namespace {

// Independent two-bus check: the whole feeder lumped into one series
// impedance with a single constant-power bus at its end, solved by plain
// fixed-point iteration on V = v_bank - z * conj(S/V).
double two_bus_end_voltage(const FeederSpec& f, double injection_pu) {
    const std::complex<double> z(f.r_pu_per_km * f.length_km, f.x_pu_per_km * f.length_km);
    const std::complex<double> s_load(-injection_pu, 0.0);
    std::complex<double> v(f.v_bank_pu, 0.0);
    for (int i = 0; i < 500; ++i)
        v = std::complex<double>(f.v_bank_pu, 0.0) - z * std::conj(s_load / v);
    return std::abs(v);
}

} // namespace

TEST_SUITE_BEGIN("voltage_solver");

TEST_CASE("unloaded feeder stays at the bank voltage") {
    const FeederSpec f = v2gtest::reference_feeder();
    const VoltageProfile p = solve_bvp(f, {});
    CHECK(p.samples.front().x_km == 0.0);
    CHECK(p.samples.back().x_km == f.length_km);
    for (const VoltageSample& s : p.samples) {
        CHECK(s.v_pu == f.v_bank_pu);
        CHECK(s.w_pu_per_km == 0.0);
        CHECK(s.theta_rad == 0.0);
        CHECK(s.flow_pu == 0.0);
    }
}

TEST_CASE("single end load agrees with the two-bus fixed point") {
    const FeederSpec f = v2gtest::reference_feeder();
    const double p_inj = -0.05; // 600 kW consumption at the terminal
    const VoltageProfile p = solve_bvp(f, {{f.length_km, p_inj}});
    const double expected = two_bus_end_voltage(f, p_inj);
    CHECK(std::abs(p.end_voltage_pu() - expected) < 1e-6);
    CHECK(p.boundary_residual_pu < 1e-9);
}

TEST_CASE("voltage drop stops past the loading centre") {
    // Loads worth 10% of the bank capacity, all within the first 2 km.
    const FeederSpec f = v2gtest::reference_feeder();
    const std::vector<PointInjection> loads = {
        {0.4, -0.02}, {0.8, -0.02}, {1.2, -0.02}, {1.6, -0.02}, {2.0, -0.02}};
    const VoltageProfile p = solve_bvp(f, loads);

    double last_before = f.v_bank_pu + 2e-9; // allow the shooting residual at x=0
    for (const VoltageSample& s : p.samples) {
        if (s.x_km <= 2.0) {
            CHECK(s.v_pu <= last_before + 1e-12);
            last_before = s.v_pu;
        } else {
            // Nothing downstream: w and f vanish, the profile is flat.
            CHECK(s.v_pu == p.end_voltage_pu());
            CHECK(s.w_pu_per_km == 0.0);
        }
    }
    CHECK(p.end_voltage_pu() < f.v_bank_pu);
}

TEST_CASE("solved profiles satisfy the ODE and its boundary conditions") {
    const FeederSpec f = v2gtest::reference_feeder();
    const std::vector<PointInjection> mix = {
        {0.5, -0.03}, {1.3, 0.012}, {2.2, -0.08}, {3.1, 0.02}, {4.1, -0.05}};
    const VoltageProfile p = solve_bvp(f, mix);

    CHECK(std::abs(p.bank_voltage_pu() - f.v_bank_pu) < 1e-9);
    CHECK(p.samples.back().w_pu_per_km == 0.0);
    CHECK(p.samples.back().flow_pu == 0.0);
    CHECK(v2gtest::max_profile_residual(f, p) < 1e-6);

    for (std::size_t i = 1; i < p.samples.size(); ++i)
        CHECK(p.samples[i].x_km > p.samples[i - 1].x_km);
    for (const VoltageSample& s : p.samples) CHECK(s.v_pu > 0.0);
}

TEST_CASE("solve_bvp agrees with the ladder oracle") {
    const FeederSpec f = v2gtest::reference_feeder();
    v2gtest::TestRng rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<PointInjection> inj;
        const int n = rng.uniform_int(1, 12);
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            const double p = rng.uniform(-0.5 / n, 0.5 / n);
            inj.push_back({rng.uniform(0.05, 0.99) * f.length_km, p});
            total += std::abs(p);
        }
        REQUIRE(total <= 0.5);
        const double v_bvp = solve_bvp(f, inj).end_voltage_pu();
        const double v_oracle = lumped_oracle(f, inj);
        CHECK(std::abs(v_bvp - v_oracle) < 1e-6);
    }
}

TEST_CASE("ladder oracle basics") {
    const FeederSpec f = v2gtest::reference_feeder();
    CHECK(lumped_oracle(f, {}) == f.v_bank_pu);

    // One mid-feeder load: beyond the bus the profile is flat, so the
    // two-bus fixed point lumping only the first half applies.
    const double p_inj = -0.04;
    const FeederSpec half = build_feeder(f.length_km / 2.0, f.r_ohm_per_km, f.x_ohm_per_km,
                                         f.v_bank_pu, v2gtest::bank_base());
    const double expected = two_bus_end_voltage(half, p_inj);
    CHECK(std::abs(lumped_oracle(f, {{f.length_km / 2.0, p_inj}}) - expected) < 1e-9);

    std::vector<PointInjection> too_many;
    for (int i = 0; i < 33; ++i)
        too_many.push_back({f.length_km * (i + 1) / 34.0, -0.001});
    CHECK_THROWS_AS(lumped_oracle(f, too_many), ConfigError);
}

TEST_CASE("oracle and BVP agree on infeasibility") {
    const FeederSpec f = v2gtest::reference_feeder();

    // Ramp a single end load until the ladder flow first fails, then check
    // that both methods reject a clearly collapsed loading.
    double p = -0.5;
    bool oracle_failed = false;
    for (int i = 0; i < 40 && !oracle_failed; ++i) {
        try {
            lumped_oracle(f, {{f.length_km, p}});
            p *= 1.25;
        } catch (const SolverError&) {
            oracle_failed = true;
        }
    }
    REQUIRE(oracle_failed);
    const double collapsed = 2.0 * p;
    CHECK_THROWS_AS(lumped_oracle(f, {{f.length_km, collapsed}}), SolverError);
    CHECK_THROWS_AS(solve_bvp(f, {{f.length_km, collapsed}}), SolverError);
}

TEST_CASE("approx_gradient evaluates the downstream sum") {
    const FeederSpec unit = v2gtest::unit_feeder(5.0);
    REQUIRE(unit.resistance_factor() == 1.0);

    SUBCASE("no injections downstream") {
        CHECK(approx_gradient(unit, {{1.0, -0.2}}, 2.0) == 0.0);
        CHECK(approx_gradient(unit, {}, 0.0) == 0.0);
    }
    SUBCASE("single source, hand value") {
        CHECK(approx_gradient(unit, {{3.0, -0.01}}, 1.0) == -0.01);
    }
    SUBCASE("index-set boundaries") {
        const std::vector<PointInjection> inj = {{1.0, -0.03}, {3.0, -0.01}};
        CHECK(approx_gradient(unit, inj, 3.0) == 0.0);  // just past the farthest
        CHECK(approx_gradient(unit, inj, 0.0) == -0.04); // full sum at the bank
    }
    SUBCASE("additive over disjoint sets, exact for dyadic powers") {
        const std::vector<PointInjection> a = {{1.0, -0.25}, {2.5, 0.125}};
        const std::vector<PointInjection> b = {{1.5, -0.5}, {4.0, 0.0625}};
        std::vector<PointInjection> both = a;
        both.insert(both.end(), b.begin(), b.end());
        for (const double x : {0.0, 0.5, 1.25, 2.0, 3.0, 4.5}) {
            CHECK(approx_gradient(unit, both, x) ==
                  approx_gradient(unit, a, x) + approx_gradient(unit, b, x));
        }
    }
    SUBCASE("linear in each power") {
        const double w1 = approx_gradient(unit, {{2.0, -0.02}}, 1.0);
        const double w2 = approx_gradient(unit, {{2.0, -0.04}}, 1.0);
        CHECK(w2 == doctest::Approx(2.0 * w1).epsilon(1e-15));
    }
    SUBCASE("evaluation point must lie on the feeder") {
        CHECK_THROWS_AS(approx_gradient(unit, {}, -0.1), ConfigError);
        CHECK_THROWS_AS(approx_gradient(unit, {}, 5.1), ConfigError);
    }
}

TEST_CASE("end_deviation hand values and scaling") {
    const FeederSpec unit = v2gtest::unit_feeder(5.0);
    const std::vector<StationSpec> stations = {make_station(0, 3.0, 1, 1.0),
                                               make_station(1, 1.0, 1, 1.0)};

    SUBCASE("two-station hand value") {
        CHECK(end_deviation(unit, stations, {-0.01, -0.02}) ==
              doctest::Approx(0.05).epsilon(1e-15));
    }
    SUBCASE("all zero powers") {
        CHECK(end_deviation(unit, stations, {0.0, 0.0}) == 0.0);
    }
    SUBCASE("uniform scaling") {
        const double dv = end_deviation(unit, stations, {-0.01, -0.02});
        const double scaled = end_deviation(unit, stations, {-0.007, -0.014});
        CHECK(scaled == doctest::Approx(0.7 * dv).epsilon(1e-12));
    }
    SUBCASE("mixed-sign powers rejected") {
        CHECK_THROWS_AS(end_deviation(unit, stations, {-0.01, 0.02}), std::domain_error);
    }
    SUBCASE("discharging mode works the same") {
        CHECK(end_deviation(unit, stations, {0.01, 0.02}) ==
              doctest::Approx(0.05).epsilon(1e-15));
    }
}

TEST_CASE("linear estimate matches the direct solve near unity voltage") {
    const FeederSpec f = v2gtest::reference_feeder();
    v2gtest::TestRng rng(17);

    // Stations spread along the feeder with the 0.05 pu total split among
    // them, the population shape the estimate is meant for.
    for (int trial = 0; trial < 20; ++trial) {
        const int n = rng.uniform_int(4, 8);
        std::vector<double> weights(n);
        double weight_sum = 0.0;
        for (double& w : weights) {
            w = rng.uniform(0.2, 1.0);
            weight_sum += w;
        }
        std::vector<StationSpec> stations;
        std::vector<double> powers;
        std::vector<PointInjection> inj;
        for (int i = 0; i < n; ++i) {
            stations.push_back(make_station(i, (i + 1) * f.length_km / (n + 1), 1, 1.0));
            const double p = -0.05 * weights[static_cast<std::size_t>(i)] / weight_sum;
            powers.push_back(p);
            inj.push_back({stations.back().location_km, p});
        }
        const double dv_linear = end_deviation(f, stations, powers);
        const double dv_direct = f.v_bank_pu - solve_bvp(f, inj).end_voltage_pu();
        CHECK(std::abs(dv_linear - dv_direct) / dv_linear < 0.02);
    }
}

TEST_CASE("injections at the terminal and duplicate locations") {
    const FeederSpec f = v2gtest::reference_feeder();
    // Two half-loads at one location equal one merged load.
    const double v_two = solve_bvp(f, {{2.0, -0.02}, {2.0, -0.02}}).end_voltage_pu();
    const double v_one = solve_bvp(f, {{2.0, -0.04}}).end_voltage_pu();
    CHECK(v_two == v_one);

    CHECK_THROWS_AS(solve_bvp(f, {{-0.1, -0.02}}), ConfigError);
    CHECK_THROWS_AS(solve_bvp(f, {{4.64, -0.02}}), ConfigError);
    // At the terminal itself: legal, and consistent with the oracle.
    const double v_bvp = solve_bvp(f, {{f.length_km, -0.03}}).end_voltage_pu();
    CHECK(std::abs(v_bvp - lumped_oracle(f, {{f.length_km, -0.03}})) < 1e-6);
}

TEST_CASE("bit-identical profiles for identical inputs") {
    const FeederSpec f = v2gtest::reference_feeder();
    const std::vector<PointInjection> inj = {{0.7, -0.02}, {2.9, 0.01}, {4.2, -0.06}};
    const VoltageProfile a = solve_bvp(f, inj);
    const VoltageProfile b = solve_bvp(f, inj);
    REQUIRE(a.samples.size() == b.samples.size());
    CHECK(std::memcmp(a.samples.data(), b.samples.data(),
                      a.samples.size() * sizeof(VoltageSample)) == 0);
}

TEST_SUITE_END();
