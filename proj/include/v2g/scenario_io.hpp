#pragma once

// Scenario file handling and all text output: a JSON scenario schema with
// units spelled out in the field names, frozen CSV schemas for the run
// artifacts, and the command-line entry point. Numeric CSV fields are
// written in scientific notation with 17 significant digits so that
// repeated runs are byte-identical.

#include <iosfwd>
#include <string>
#include <vector>

#include "v2g/cosim_engine.hpp"

namespace v2g {

/// Parses and fully validates a scenario file. Voltage quantities arrive in
/// volts and are converted to per-unit here; nothing downstream sees volts.
/// Non-fatal remarks (applied defaults) are appended to `notices` if given.
Scenario load_scenario(const std::string& path,
                       std::vector<std::string>* notices = nullptr);

/// Normalized scenario dump (defaults materialized, units as in the input
/// schema). load_scenario on the dumped text reproduces the scenario.
std::string dump_scenario(const Scenario& scenario);

// --- CSV writers; headers are part of the stable interface. ---

/// t_s,delta_f_hz,net_imbalance_pu,ev_total_w,ev_total_pu,
/// sta<i>_ref_w,sta<i>_out_w ... (two columns per station, 1-based)
void write_trace_csv(std::ostream& out, const ScenarioTrace& trace,
                     std::size_t every_nth = 1);

/// t_s,v_end_pu,v_end_volts,dev_charge_volts,dev_discharge_volts
void write_voltage_csv(std::ostream& out, const ScenarioTrace& trace);

/// t_s,alpha_cha,alpha_discha,sta<i>_charge_cap_w,sta<i>_discharge_cap_w ...
void write_bounds_csv(std::ostream& out, const ScenarioTrace& trace);

/// param,value,rms_delta_f_hz,max_abs_delta_f_hz,
/// max_voltage_violation_volts,control_error_volts,fault
void write_sweep_csv(std::ostream& out, SweepParameter parameter,
                     const std::vector<SweepPoint>& points);

/// x_km,v_pu,v_volts,theta_rad,w_pu_per_km,w_volts_per_km,flow_pu,flow_w
void write_profile_csv(std::ostream& out, const VoltageProfile& profile,
                       const PerUnitBase& base);

/// Stacked per-eval snapshots (requires Scenario::record_profiles):
/// t_s followed by the profile columns above.
void write_profiles_csv(std::ostream& out, const ScenarioTrace& trace,
                        const PerUnitBase& base);

/// Scientific, 17 significant digits; the one formatting used everywhere.
std::string format_sci(double value);

/// Command-line entry point (subcommands: bounds, profile, simulate, sweep,
/// oracle-check). Returns the process exit code: 0 success, 1 validation
/// error, 2 numerical fault.
int run_cli(int argc, char** argv);

} // namespace v2g
