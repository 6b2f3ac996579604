#pragma once

// Closed-loop co-simulation: the grid frequency model, the per-station
// droop controllers with conversion dynamics, and the quasi-static feeder
// voltage evaluation, with periodic bound synthesis. One engine owns one
// scenario run; separate runs are fully independent.

#include <cstdint>
#include <string>
#include <vector>

#include "v2g/bound_engine.hpp"
#include "v2g/freq_dynamics.hpp"
#include "v2g/grid_model.hpp"
#include "v2g/v2g_control.hpp"
#include "v2g/voltage_solver.hpp"

namespace v2g {

enum class OperatingMode {
    multi_objective,  ///< caps from the bound engine (frequency + voltage)
    single_objective, ///< caps forced to full station power (frequency only)
    no_ev,            ///< stations silent; frequency model alone
};

std::string to_string(OperatingMode mode);
OperatingMode mode_from_string(const std::string& name);

/// Piecewise-constant EV-count schedule of one station.
struct EvCountStep {
    double time_s = 0.0;
    int count = 0;
};

struct StationSchedule {
    double location_km = 0.0;
    double p_per_ev_max_w = 0.0;
    std::vector<EvCountStep> steps; ///< ascending; first entry at t = 0

    int count_at(double t_s) const;
};

struct Scenario {
    std::string name;
    double horizon_s = 60.0;
    double dt_s = 0.01;
    PerUnitBase base;
    GridDynamicsConfig grid;
    FeederSpec feeder;
    std::vector<StationSchedule> stations;
    std::vector<LoadSpec> loads;
    VoltageLimits limits;
    double df1_hz = kDefaultDroopHalfWidthHz;
    double conv_delay_t1_s = 0.0;
    double conv_lag_t2_s = 0.0;
    int feeder_replication = 1;
    OperatingMode mode = OperatingMode::multi_objective;
    double bound_update_period_s = kDefaultBoundUpdatePeriodS;
    double voltage_eval_period_s = 1.0;
    bool record_profiles = false; ///< keep the full spatial profile per eval
    std::uint64_t seed = 0;
    ExogenousSeries series;
    bool synthetic_series = true; ///< series generated from the seed
    SolverConfig solver;
};

/// Throws ValidationError on inconsistent timing, replication, geometry or
/// series coverage.
void validate_scenario(const Scenario& scenario);

/// Station specs with the EV counts the schedules prescribe at time t.
std::vector<StationSpec> stations_at_time(const Scenario& scenario, double t_s);

struct VoltageRecord {
    double t_s = 0.0;
    double v_end_pu = 0.0;
    double v_end_v = 0.0;
    double dev_charge_v = 0.0;    ///< drop below the loads-only end voltage
    double dev_discharge_v = 0.0; ///< rise above the loads-only end voltage
};

struct BoundRecord {
    double t_s = 0.0;
    double alpha_cha = 1.0;
    double alpha_discha = 1.0;
    std::vector<double> charge_cap_w;    ///< magnitudes, one per station
    std::vector<double> discharge_cap_w; ///< magnitudes, one per station
};

struct ScenarioTrace {
    // Per-tick records, columnar. The driver columns hold the sampled
    // values that entered the power balance on that tick.
    std::vector<double> t_s;
    std::vector<double> delta_f_hz;
    std::vector<double> net_imbalance_pu;
    std::vector<double> load_pu;
    std::vector<double> pv_pu;
    std::vector<double> edc_pu;
    std::vector<double> lfc_pu;
    std::vector<double> ev_total_w;  ///< replication * sum of station outputs
    std::vector<double> ev_total_pu; ///< ev_total_w / s_grid
    std::vector<std::vector<double>> station_ref_w; ///< [station][tick]
    std::vector<std::vector<double>> station_out_w; ///< [station][tick]

    std::vector<VoltageRecord> voltage;
    std::vector<VoltageProfile> profiles; ///< one per eval when requested
    std::vector<BoundRecord> bounds;

    double v_end_loads_only_pu = 0.0; ///< static baseline, loads without EVs
    double control_error_v = 0.0;     ///< |direct EV deviation at caps - charge limit|

    bool faulted = false;
    std::string fault_message;
    double fault_time_s = 0.0;

    double rms_delta_f_hz() const;
    double max_abs_delta_f_hz() const;
    /// Largest exceedance of either per-mode limit at the feeder end [V];
    /// zero when the trace stayed inside both limits.
    double max_voltage_violation_v(const VoltageLimits& limits_pu, double v_base_v) const;
};

/// Runs the scenario to completion (or to the first numerical fault, which
/// is recorded in the trace rather than thrown).
ScenarioTrace run(const Scenario& scenario);

enum class SweepParameter {
    droop_half_width, ///< df1 [Hz]
    charge_limit,     ///< dv_cha_limit [V]
    loading_fraction, ///< total load as a fraction of the bank capacity
};

SweepParameter sweep_parameter_from_string(const std::string& name);
std::string to_string(SweepParameter p);

struct SweepPoint {
    double value = 0.0;
    double rms_delta_f_hz = 0.0;
    double max_abs_delta_f_hz = 0.0;
    double max_voltage_violation_v = 0.0;
    double control_error_v = 0.0;
    bool faulted = false;
    std::string fault_message;
};

/// One run per value; per-run faults are reported in the corresponding
/// point and do not stop the sweep.
std::vector<SweepPoint> sweep(const Scenario& base, SweepParameter parameter,
                              const std::vector<double>& values);

/// Seeded bounded-random-walk load and PV series (1 s knots) plus constant
/// scheduled generation, covering [0, horizon]. Same seed, same series.
ExogenousSeries make_synthetic_series(std::uint64_t seed, double horizon_s);

} // namespace v2g
