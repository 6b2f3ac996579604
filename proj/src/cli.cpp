#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "v2g/scenario_io.hpp"

namespace v2g {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

std::vector<double> parse_value_list(const std::string& csv) {
    std::vector<double> values;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        values.push_back(std::stod(item));
    }
    if (values.empty()) throw ValidationError("--values", "no values given");
    return values;
}

Scenario load_with_notices(const std::string& path) {
    std::vector<std::string> notices;
    Scenario sc = load_scenario(path, &notices);
    for (const std::string& n : notices) std::cerr << "notice: " << n << "\n";
    return sc;
}

void print_bounds(const Scenario& sc, double at_time_s) {
    const std::vector<StationSpec> stations = stations_at_time(sc, at_time_s);
    const BoundSet bounds = synthesize_bounds(sc.feeder, stations, sc.base, sc.limits,
                                              at_time_s, sc.bound_update_period_s);

    std::cout << "alpha_cha,alpha_discha\n"
              << format_sci(bounds.alpha_cha) << ',' << format_sci(bounds.alpha_discha)
              << "\n\n";
    std::cout << "station,location_km,ev_count,p_max_w,charge_cap_w,discharge_cap_w\n";
    for (std::size_t i = 0; i < stations.size(); ++i) {
        const double p_max_w = stations[i].p_max_w;
        std::cout << (i + 1) << ',' << format_sci(stations[i].location_km) << ','
                  << stations[i].ev_count << ',' << format_sci(p_max_w) << ','
                  << format_sci(-bounds.station_caps[i].charge_cap_pu * sc.base.s_base_va)
                  << ','
                  << format_sci(bounds.station_caps[i].discharge_cap_pu * sc.base.s_base_va)
                  << "\n";
    }

    std::cout << "\n";
    char line[160];
    std::snprintf(line, sizeof(line), "alpha_cha = %.4f   alpha_discha = %.4f\n\n",
                  bounds.alpha_cha, bounds.alpha_discha);
    std::cout << line;
    std::snprintf(line, sizeof(line), "%8s %12s %9s %11s %15s %18s\n", "station",
                  "location_km", "ev_count", "p_max_kw", "charge_cap_kw",
                  "discharge_cap_kw");
    std::cout << line;
    for (std::size_t i = 0; i < stations.size(); ++i) {
        std::snprintf(line, sizeof(line), "%8zu %12.2f %9d %11.1f %15.2f %18.2f\n", i + 1,
                      stations[i].location_km, stations[i].ev_count,
                      stations[i].p_max_w / 1e3,
                      -bounds.station_caps[i].charge_cap_pu * sc.base.s_base_va / 1e3,
                      bounds.station_caps[i].discharge_cap_pu * sc.base.s_base_va / 1e3);
        std::cout << line;
    }
}

std::vector<PointInjection> profile_injections(const Scenario& sc, const std::string& mode,
                                               const std::string& powers_csv) {
    std::vector<PointInjection> inj;
    for (const LoadSpec& load : sc.loads)
        inj.push_back({load.location_km, -load.p_load_w / sc.base.s_base_va});

    const std::vector<StationSpec> stations = stations_at_time(sc, 0.0);
    if (!powers_csv.empty()) {
        const std::vector<double> powers_w = parse_value_list(powers_csv);
        if (powers_w.size() != stations.size())
            throw ValidationError("--powers-w", "expected one value per station (" +
                                                    std::to_string(stations.size()) + ")");
        for (std::size_t i = 0; i < stations.size(); ++i)
            inj.push_back({stations[i].location_km, powers_w[i] / sc.base.s_base_va});
        return inj;
    }

    if (mode == "loads_only") return inj;
    const BoundSet bounds = synthesize_bounds(sc.feeder, stations, sc.base, sc.limits, 0.0,
                                              sc.bound_update_period_s);
    for (std::size_t i = 0; i < stations.size(); ++i) {
        const double p_max_pu = stations[i].p_max_pu(sc.base);
        double p = 0.0;
        if (mode == "charge_caps") p = bounds.station_caps[i].charge_cap_pu;
        else if (mode == "discharge_caps") p = bounds.station_caps[i].discharge_cap_pu;
        else if (mode == "charge_max") p = -p_max_pu;
        else if (mode == "discharge_max") p = p_max_pu;
        else throw ValidationError("--mode", "unknown profile mode '" + mode + "'");
        inj.push_back({stations[i].location_km, p});
    }
    return inj;
}

int do_simulate(const Scenario& sc, const std::string& out_dir, bool plot_data) {
    std::filesystem::create_directories(out_dir);
    const ScenarioTrace trace = run(sc);

    const auto write_file = [&](const std::string& name, const auto& writer) {
        std::ofstream out(std::filesystem::path(out_dir) / name);
        if (!out) throw ValidationError(out_dir + "/" + name, "cannot open for writing");
        writer(out);
    };
    write_file("trace.csv", [&](std::ostream& o) { write_trace_csv(o, trace); });
    write_file("voltage.csv", [&](std::ostream& o) { write_voltage_csv(o, trace); });
    write_file("bounds.csv", [&](std::ostream& o) { write_bounds_csv(o, trace); });
    write_file("scenario_normalized.scn",
               [&](std::ostream& o) { o << dump_scenario(sc); });
    if (sc.record_profiles)
        write_file("profiles.csv",
                   [&](std::ostream& o) { write_profiles_csv(o, trace, sc.base); });
    if (plot_data) {
        const std::size_t stride = std::max<std::size_t>(1, trace.t_s.size() / 5000);
        write_file("trace_plot.csv",
                   [&](std::ostream& o) { write_trace_csv(o, trace, stride); });
    }

    std::cout << "run " << sc.name << " (" << to_string(sc.mode) << "): " << trace.t_s.size()
              << " ticks, " << trace.voltage.size() << " voltage evals, "
              << trace.bounds.size() << " bound updates\n";
    std::cout << "  rms delta_f            = " << trace.rms_delta_f_hz() << " Hz\n";
    std::cout << "  max |delta_f|          = " << trace.max_abs_delta_f_hz() << " Hz\n";
    std::cout << "  max voltage violation  = "
              << trace.max_voltage_violation_v(sc.limits, sc.base.v_base_v) << " V\n";
    std::cout << "  control error (charge) = " << trace.control_error_v << " V\n";
    if (trace.faulted) {
        std::cerr << "fault at t=" << trace.fault_time_s << " s: " << trace.fault_message
                  << "\n";
        return kExitNumerical;
    }
    return kExitOk;
}

int do_oracle_check(const Scenario& sc, int n_injections, int trials,
                    std::uint64_t seed) {
    if (n_injections < 1 || n_injections > 32)
        throw ValidationError("--injections", "must lie in [1, 32]");
    if (trials < 1) throw ValidationError("--trials", "must be >= 1");

    std::mt19937_64 rng(seed);
    const auto uniform = [&rng]() {
        return static_cast<double>(rng() >> 11) * 0x1.0p-53;
    };

    double max_dev = 0.0;
    double sum_dev = 0.0;
    for (int t = 0; t < trials; ++t) {
        std::vector<PointInjection> inj;
        double total = 0.0;
        for (int i = 0; i < n_injections; ++i) {
            const double x = (0.05 + 0.95 * uniform()) * sc.feeder.length_km;
            const double p = (2.0 * uniform() - 1.0) * 0.5 / n_injections;
            inj.push_back({x, p});
            total += std::abs(p);
        }
        if (total > 0.5)
            for (PointInjection& p : inj) p.power_pu *= 0.5 / total;

        const double v_bvp = solve_bvp(sc.feeder, inj, sc.solver).end_voltage_pu();
        const double v_oracle = lumped_oracle(sc.feeder, inj);
        const double dev = std::abs(v_bvp - v_oracle);
        max_dev = std::max(max_dev, dev);
        sum_dev += dev;
    }

    const double threshold = 1e-6;
    std::cout << "oracle-check: " << trials << " trials x " << n_injections
              << " injections on feeder '" << sc.name << "'\n";
    std::cout << "  max |v_bvp(L) - v_oracle(L)|  = " << max_dev << " pu\n";
    std::cout << "  mean |v_bvp(L) - v_oracle(L)| = " << sum_dev / trials << " pu\n";
    std::cout << "  threshold                     = " << threshold << " pu\n";
    std::cout << (max_dev < threshold ? "PASS" : "FAIL") << "\n";
    return max_dev < threshold ? kExitOk : kExitNumerical;
}

} // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"autonomous V2G co-simulation: feeder voltage bounds, droop-based "
                 "frequency reserve, and the coupled grid/feeder run"};
    app.require_subcommand(1);

    std::string scn_path;
    std::string out_dir = "out";
    std::string mode_override;
    bool plot_data = false;
    bool record_profiles = false;
    double at_time_s = 0.0;
    std::string profile_mode = "loads_only";
    std::string powers_csv;
    std::string profile_out;
    std::string sweep_param;
    std::string sweep_values;
    int oracle_injections = 8;
    int oracle_trials = 50;
    std::uint64_t oracle_seed = 42;

    CLI::App* bounds_cmd =
        app.add_subcommand("bounds", "print the synthesized charge/discharge caps");
    bounds_cmd->add_option("scenario", scn_path, "scenario file")->required();
    bounds_cmd->add_option("--at", at_time_s, "schedule sampling time [s]");

    CLI::App* profile_cmd =
        app.add_subcommand("profile", "static voltage profile for a power assignment");
    profile_cmd->add_option("scenario", scn_path, "scenario file")->required();
    profile_cmd->add_option("--mode", profile_mode,
                            "loads_only|charge_caps|discharge_caps|charge_max|discharge_max");
    profile_cmd->add_option("--powers-w", powers_csv,
                            "explicit per-station powers [W], comma separated");
    profile_cmd->add_option("-o,--output", profile_out, "output CSV (default stdout)");

    CLI::App* simulate_cmd = app.add_subcommand("simulate", "run the closed loop");
    simulate_cmd->add_option("scenario", scn_path, "scenario file")->required();
    simulate_cmd->add_option("--mode", mode_override,
                             "multi_objective|single_objective|no_ev");
    simulate_cmd->add_option("--out", out_dir, "output directory (default 'out')");
    simulate_cmd->add_flag("--plot-data", plot_data, "also write downsampled trace");
    simulate_cmd->add_flag("--profiles", record_profiles,
                           "record a full voltage profile per eval (profiles.csv)");

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "run one scenario per value");
    sweep_cmd->add_option("scenario", scn_path, "scenario file")->required();
    sweep_cmd->add_option("--param", sweep_param, "df1|dv_cha_limit|loading_fraction")
        ->required();
    sweep_cmd->add_option("--values", sweep_values, "comma-separated values")->required();
    sweep_cmd->add_option("--out", out_dir, "output directory (default 'out')");
    sweep_cmd->add_option("--mode", mode_override,
                          "multi_objective|single_objective|no_ev");

    CLI::App* oracle_cmd =
        app.add_subcommand("oracle-check", "compare the BVP solve against the ladder oracle");
    oracle_cmd->add_option("scenario", scn_path, "scenario file")->required();
    oracle_cmd->add_option("--injections", oracle_injections, "points per trial (<= 32)");
    oracle_cmd->add_option("--trials", oracle_trials, "number of random trials");
    oracle_cmd->add_option("--seed", oracle_seed, "RNG seed for the trials");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitValidation;
    }

    try {
        Scenario sc = load_with_notices(scn_path);
        if (!mode_override.empty()) sc.mode = mode_from_string(mode_override);
        if (record_profiles) sc.record_profiles = true;

        if (bounds_cmd->parsed()) {
            print_bounds(sc, at_time_s);
            return kExitOk;
        }
        if (profile_cmd->parsed()) {
            const std::vector<PointInjection> inj =
                profile_injections(sc, profile_mode, powers_csv);
            const VoltageProfile profile = solve_bvp(sc.feeder, inj, sc.solver);
            if (profile_out.empty()) {
                write_profile_csv(std::cout, profile, sc.base);
            } else {
                std::ofstream out(profile_out);
                if (!out) throw ValidationError(profile_out, "cannot open for writing");
                write_profile_csv(out, profile, sc.base);
            }
            return kExitOk;
        }
        if (simulate_cmd->parsed()) return do_simulate(sc, out_dir, plot_data);
        if (sweep_cmd->parsed()) {
            const SweepParameter param = sweep_parameter_from_string(sweep_param);
            const std::vector<double> values = parse_value_list(sweep_values);
            const std::vector<SweepPoint> points = sweep(sc, param, values);
            std::filesystem::create_directories(out_dir);
            std::ofstream out(std::filesystem::path(out_dir) / "summary.csv");
            if (!out) throw ValidationError(out_dir + "/summary.csv", "cannot open");
            write_sweep_csv(out, param, points);
            bool any_fault = false;
            for (const SweepPoint& p : points) {
                std::cout << to_string(param) << "=" << p.value
                          << "  rms_delta_f=" << p.rms_delta_f_hz
                          << " Hz  max|delta_f|=" << p.max_abs_delta_f_hz
                          << " Hz  violation=" << p.max_voltage_violation_v
                          << " V  control_error=" << p.control_error_v << " V"
                          << (p.faulted ? "  FAULT" : "") << "\n";
                if (p.faulted) {
                    std::cerr << "fault at " << to_string(param) << "=" << p.value << ": "
                              << p.fault_message << "\n";
                    any_fault = true;
                }
            }
            return any_fault ? kExitNumerical : kExitOk;
        }
        if (oracle_cmd->parsed())
            return do_oracle_check(sc, oracle_injections, oracle_trials, oracle_seed);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const SolverError& e) {
        std::cerr << "numerical fault: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const NumericalFault& e) {
        std::cerr << "numerical fault: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitValidation;
}

} // namespace v2g
