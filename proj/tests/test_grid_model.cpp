#include <doctest.h>

#include <cmath>

#include "test_helpers.hpp"
#include "v2g/grid_model.hpp"

using namespace v2g;

TEST_SUITE_BEGIN("grid_model");

TEST_CASE("per-unit conversion of the reference quantities") {
    const PerUnitBase base = v2gtest::bank_base();
    CHECK(base.z_base_ohm == doctest::Approx(3.63).epsilon(1e-12));

    // 80 V on the 6.6 kV base.
    CHECK(to_per_unit(80.0, base, Unit::voltage) ==
          doctest::Approx(0.012121212121212121).epsilon(1e-15));
    // Zero power is zero in any base.
    CHECK(to_per_unit(0.0, base, Unit::power) == 0.0);
    // Full-length feeder series resistance.
    CHECK(to_per_unit(0.227 * 4.63, base, Unit::impedance) ==
          doctest::Approx(0.289534435261708).epsilon(1e-15));
}

TEST_CASE("per-unit round trip is exact to 1e-15 relative") {
    const PerUnitBase base = v2gtest::bank_base();
    for (const Unit kind : {Unit::power, Unit::voltage, Unit::impedance}) {
        for (const double value : {80.0, 6600.0, 0.227, 1.2345e7, 3.7e-4}) {
            const double round_tripped =
                from_per_unit(to_per_unit(value, base, kind), base, kind);
            CHECK(std::abs(round_tripped - value) <= 1e-15 * std::abs(value));
        }
    }
}

TEST_CASE("per-unit base validation") {
    CHECK_THROWS_AS(make_base(0.0, 6600.0, 50.0), ConfigError);
    CHECK_THROWS_AS(make_base(12e6, -1.0, 50.0), ConfigError);
    CHECK_THROWS_AS(make_base(12e6, 6600.0, 0.0), ConfigError);
}

TEST_CASE("build_feeder admittance decomposition") {
    const FeederSpec f = v2gtest::reference_feeder();

    // Stored identity: y_squared is exactly g^2 + b^2.
    CHECK(f.y_squared == f.g * f.g + f.b * f.b);
    // The gradient weight recovers the per-unit resistance per km.
    CHECK(std::abs(f.resistance_factor() - f.r_pu_per_km) <= 1e-12 * f.r_pu_per_km);
    CHECK(std::abs(f.reactance_factor() - f.x_pu_per_km) <= 1e-12 * f.x_pu_per_km);
    CHECK(f.r_pu_per_km == doctest::Approx(0.227 / 3.63).epsilon(1e-15));
}

TEST_CASE("build_feeder limiting cases") {
    const PerUnitBase base = v2gtest::bank_base();

    SUBCASE("purely resistive line") {
        const FeederSpec f = build_feeder(4.63, 0.227, 0.0, 1.0, base);
        CHECK(f.b == 0.0);
        CHECK(f.g == doctest::Approx(1.0 / f.r_pu_per_km).epsilon(1e-15));
    }
    SUBCASE("r equal to x gives g equal to b") {
        const FeederSpec f = build_feeder(4.63, 0.3, 0.3, 1.0, base);
        CHECK(f.g == f.b);
    }
    SUBCASE("rejects degenerate feeders") {
        CHECK_THROWS_AS(build_feeder(0.0, 0.227, 0.401, 1.0, base), ConfigError);
        CHECK_THROWS_AS(build_feeder(4.63, 0.0, 0.401, 1.0, base), ConfigError);
        CHECK_THROWS_AS(build_feeder(4.63, 0.227, 0.401, 0.0, base), ConfigError);
    }
}

TEST_CASE("station construction and list validation") {
    const FeederSpec f = v2gtest::reference_feeder();

    const StationSpec s = make_station(0, 1.5, 42, 4000.0);
    CHECK(s.p_max_w == 168000.0);
    CHECK(s.p_max_pu(v2gtest::bank_base()) == doctest::Approx(0.014).epsilon(1e-15));
    CHECK_THROWS_AS(make_station(0, 1.5, -1, 4000.0), ConfigError);

    std::vector<StationSpec> ok = {make_station(0, 0.5, 10, 4000.0),
                                   make_station(1, 2.0, 5, 4000.0)};
    CHECK_NOTHROW(validate_stations(ok, f));
    CHECK_NOTHROW(validate_stations({}, f));

    SUBCASE("out of range") {
        std::vector<StationSpec> bad = {make_station(0, 4.63, 10, 4000.0)};
        CHECK_THROWS_AS(validate_stations(bad, f), ConfigError);
        bad = {make_station(0, -0.5, 10, 4000.0)};
        CHECK_THROWS_AS(validate_stations(bad, f), ConfigError);
    }
    SUBCASE("duplicates rejected") {
        std::vector<StationSpec> bad = {make_station(0, 2.0, 10, 4000.0),
                                        make_station(1, 2.0, 5, 4000.0)};
        CHECK_THROWS_AS(validate_stations(bad, f), ConfigError);
    }
    SUBCASE("ordering enforced") {
        std::vector<StationSpec> bad = {make_station(0, 2.0, 10, 4000.0),
                                        make_station(1, 1.0, 5, 4000.0)};
        CHECK_THROWS_AS(validate_stations(bad, f), ConfigError);
    }
}

TEST_SUITE_END();
