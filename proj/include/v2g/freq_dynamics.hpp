#pragma once

// Transmission-grid frequency model: net imbalance through inertia and
// damping, with a thermal plant (first-order governor and turbine) closing
// the primary-control loop. The exogenous drivers (load, PV, scheduled
// generation, secondary-control signal) enter as piecewise-linear series.

#include <istream>
#include <vector>

#include "v2g/errors.hpp"

namespace v2g {

struct GridDynamicsConfig {
    double inertia_m_s = 9.0;          ///< inertia constant M [s]
    double damping_d_pu = 2.0;         ///< load damping D [pu]
    double s_grid_va = 8.3e9;          ///< grid capacity (per-unit base) [VA]
    double f_nominal_hz = 50.0;
    double governor_droop_r_pu = 0.05; ///< infinity disables the governor
    double governor_tc_s = 0.2;
    double turbine_tc_s = 5.0;
};

/// Frequency deviation state. delta_omega is the per-unit angular-frequency
/// deviation; delta_f_hz carries the same quantity in hertz
/// (delta_f = delta_omega * f_nominal) and is kept in lock-step.
struct FrequencyState {
    double delta_omega_pu = 0.0;
    double governor_pu = 0.0; ///< governor (valve) state
    double turbine_pu = 0.0;  ///< turbine mechanical-power state
    double delta_f_hz = 0.0;
};

/// Advances the three-state loop one fixed step of size dt (<= 0.1 s) under
/// a constant net imbalance and secondary-control input, using the classic
/// fourth-order scheme. Throws NumericalFault if the state goes non-finite.
FrequencyState step_frequency(const FrequencyState& state, double net_imbalance_pu,
                              const GridDynamicsConfig& cfg, double dt_s,
                              double lfc_pu = 0.0);

/// Piecewise-linear time series; evaluation between knots interpolates,
/// evaluation outside the knot range is a range error.
class PiecewiseLinearSeries {
public:
    PiecewiseLinearSeries() = default;
    PiecewiseLinearSeries(std::vector<double> times_s, std::vector<double> values);

    /// Two columns (time [s], value), comma or whitespace separated.
    /// Lines starting with '#' and a leading header line are skipped.
    static PiecewiseLinearSeries parse_csv(std::istream& in);

    double at(double t_s) const;
    bool covers(double t0_s, double t1_s) const;
    bool empty() const { return !constant_ && times_.empty(); }
    bool is_constant() const { return constant_; }
    double constant_value() const { return constant_value_; }
    double front_time_s() const { return times_.front(); }
    double back_time_s() const { return times_.back(); }
    const std::vector<double>& times() const { return times_; }
    const std::vector<double>& values() const { return values_; }

    /// A constant series covering everything.
    static PiecewiseLinearSeries constant(double value);

private:
    std::vector<double> times_;
    std::vector<double> values_;
    bool constant_ = false;
    double constant_value_ = 0.0;
};

/// The exogenous drivers, all in per-unit on the grid base.
struct ExogenousSeries {
    PiecewiseLinearSeries load; ///< consumption, positive
    PiecewiseLinearSeries pv;   ///< photovoltaic generation, positive
    PiecewiseLinearSeries lfc;  ///< secondary-control signal into the governor
    PiecewiseLinearSeries edc;  ///< scheduled thermal generation
};

/// Net power imbalance seen by the grid at time t; EV discharge adds,
/// charging subtracts. The secondary-control series does not enter here --
/// it feeds the governor inside step_frequency.
double net_imbalance(double t_s, const ExogenousSeries& series, double ev_total_pu);

} // namespace v2g
