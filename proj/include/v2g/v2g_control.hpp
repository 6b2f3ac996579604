#pragma once

// Station-side control: the droop law that maps the locally measured
// frequency deviation to a power reference within the operator caps, the
// feeder-level reserve capability measures, and the delay-plus-lag response
// of the power-conversion chain. A station controller reads nothing but its
// own cap and the local frequency deviation.

#include <cstddef>
#include <utility>
#include <vector>

#include "v2g/errors.hpp"
#include "v2g/grid_model.hpp"

namespace v2g {

inline constexpr double kDefaultDroopHalfWidthHz = 0.2;

/// The four-branch droop characteristic of one station: full charging power
/// above +df1, full discharging below -df1, linear in between, continuous
/// at the three knots by construction of the slopes. Caps are magnitudes.
/// Returns the signed power reference (discharge positive) [same unit as caps].
double droop_power(double delta_f_hz, double charge_cap, double discharge_cap,
                   double df1_hz);

/// Feeder reserve per unit frequency deviation, (charging, discharging).
/// The charging measure is non-positive, the discharging one non-negative.
std::pair<double, double> capability(double alpha_cha, double alpha_discha,
                                     double p_max_total, double df1_hz);

/// Delay-plus-lag model of the power conversion chain: the realized output
/// follows the reference through a pure delay T1 and a first-order lag T2.
/// T1 is rounded to the nearest whole number of engine steps (error <= dt/2).
/// With T1 = T2 = 0 the output equals the reference sample-for-sample.
class ConversionDynamics {
public:
    ConversionDynamics(double delay_t1_s, double lag_t2_s, double dt_s);

    /// Feeds one reference sample, returns the realized output for the
    /// current step interval.
    double step(double reference);

    void reset();

    double delay_t1_s() const { return delay_t1_s_; }
    double lag_t2_s() const { return lag_t2_s_; }
    std::size_t delay_steps() const { return delay_steps_; }

private:
    double delay_t1_s_;
    double lag_t2_s_;
    double dt_s_;
    std::size_t delay_steps_;
    double lag_decay_; ///< exp(-dt/T2)
    std::vector<double> ring_;
    std::size_t head_ = 0;
    double lag_state_ = 0.0;
};

} // namespace v2g
