#include "v2g/scenario_io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace v2g {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& reason) {
    throw ValidationError(field, reason);
}

void expect_object(const json& value, const std::string& field) {
    if (!value.is_object()) fail(field, "expected an object");
}

void expect_keys(const json& obj, const std::string& section,
                 std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (const char* k : allowed)
            if (key == k) { known = true; break; }
        if (!known) fail(section + "." + key, "unknown key");
    }
}

const json* find(const json& obj, const char* key) {
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

double get_number(const json& obj, const std::string& section, const char* key) {
    const json* v = find(obj, key);
    if (!v) fail(section + "." + key, "required field missing");
    if (!v->is_number()) fail(section + "." + key, "expected a number");
    return v->get<double>();
}

double get_number_or(const json& obj, const std::string& section, const char* key,
                     double fallback) {
    const json* v = find(obj, key);
    if (!v) return fallback;
    if (!v->is_number()) fail(section + "." + key, "expected a number");
    return v->get<double>();
}

long get_integer(const json& obj, const std::string& section, const char* key,
                 long fallback) {
    const json* v = find(obj, key);
    if (!v) return fallback;
    if (!v->is_number_integer()) fail(section + "." + key, "expected an integer");
    return v->get<long>();
}

PiecewiseLinearSeries parse_knots(const json& arr, const std::string& field) {
    std::vector<double> t, v;
    t.reserve(arr.size());
    v.reserve(arr.size());
    for (const json& row : arr) {
        if (!row.is_array() || row.size() != 2 || !row[0].is_number() || !row[1].is_number())
            fail(field, "expected rows of the form [time_s, value]");
        t.push_back(row[0].get<double>());
        v.push_back(row[1].get<double>());
    }
    try {
        return PiecewiseLinearSeries(std::move(t), std::move(v));
    } catch (const ConfigError& e) {
        fail(field, e.what());
    }
}

PiecewiseLinearSeries parse_series_value(const json& value, const std::string& field,
                                         const std::filesystem::path& scenario_dir) {
    if (value.is_array()) return parse_knots(value, field);
    if (value.is_object()) {
        expect_keys(value, field, {"csv", "constant"});
        if (const json* c = find(value, "constant")) {
            if (!c->is_number()) fail(field + ".constant", "expected a number");
            return PiecewiseLinearSeries::constant(c->get<double>());
        }
        if (const json* p = find(value, "csv")) {
            if (!p->is_string()) fail(field + ".csv", "expected a path string");
            const std::filesystem::path csv_path =
                scenario_dir / p->get<std::string>();
            std::ifstream in(csv_path);
            if (!in) fail(field + ".csv", "cannot open '" + csv_path.string() + "'");
            try {
                return PiecewiseLinearSeries::parse_csv(in);
            } catch (const ConfigError& e) {
                fail(field + ".csv", e.what());
            }
        }
        fail(field, "expected 'csv' or 'constant'");
    }
    fail(field, "expected a knot array, {\"csv\": path} or {\"constant\": value}");
}

json dump_series_value(const PiecewiseLinearSeries& series) {
    if (series.is_constant()) return json{{"constant", series.constant_value()}};
    json knots = json::array();
    for (std::size_t i = 0; i < series.times().size(); ++i)
        knots.push_back(json::array({series.times()[i], series.values()[i]}));
    return knots;
}

} // namespace

Scenario load_scenario(const std::string& path, std::vector<std::string>* notices) {
    std::ifstream in(path);
    if (!in) throw ValidationError(path, "cannot open scenario file");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(path, std::string("not valid JSON: ") + e.what());
    }
    expect_object(doc, "scenario");
    expect_keys(doc, "scenario",
                {"name", "base", "grid", "feeder", "stations", "loads", "limits",
                 "control", "engine", "series", "solver"});

    const auto note = [&](const std::string& message) {
        if (notices) notices->push_back(message);
    };

    Scenario sc;
    sc.name = std::filesystem::path(path).stem().string();
    if (const json* name = find(doc, "name")) {
        if (!name->is_string()) fail("name", "expected a string");
        sc.name = name->get<std::string>();
    }

    // base
    const json* base = find(doc, "base");
    if (!base) fail("base", "required section missing");
    expect_object(*base, "base");
    expect_keys(*base, "base", {"s_base_va", "v_base_v", "f_nominal_hz"});
    try {
        sc.base = make_base(get_number(*base, "base", "s_base_va"),
                            get_number(*base, "base", "v_base_v"),
                            get_number(*base, "base", "f_nominal_hz"));
    } catch (const ConfigError& e) {
        fail("base", e.what());
    }

    // grid
    sc.grid.f_nominal_hz = sc.base.f_nominal_hz;
    if (const json* grid = find(doc, "grid")) {
        expect_object(*grid, "grid");
        expect_keys(*grid, "grid",
                    {"inertia_m_s", "damping_d_pu", "s_grid_va", "governor_droop_r_pu",
                     "governor_tc_s", "turbine_tc_s"});
        sc.grid.inertia_m_s = get_number_or(*grid, "grid", "inertia_m_s", sc.grid.inertia_m_s);
        sc.grid.damping_d_pu = get_number_or(*grid, "grid", "damping_d_pu", sc.grid.damping_d_pu);
        sc.grid.s_grid_va = get_number_or(*grid, "grid", "s_grid_va", sc.grid.s_grid_va);
        sc.grid.governor_droop_r_pu =
            get_number_or(*grid, "grid", "governor_droop_r_pu", sc.grid.governor_droop_r_pu);
        sc.grid.governor_tc_s = get_number_or(*grid, "grid", "governor_tc_s", sc.grid.governor_tc_s);
        sc.grid.turbine_tc_s = get_number_or(*grid, "grid", "turbine_tc_s", sc.grid.turbine_tc_s);
    }
    if (sc.grid.inertia_m_s <= 0.0) fail("grid.inertia_m_s", "must be > 0");
    if (sc.grid.damping_d_pu < 0.0) fail("grid.damping_d_pu", "must be >= 0");
    if (sc.grid.s_grid_va <= 0.0) fail("grid.s_grid_va", "must be > 0");
    if (sc.grid.governor_tc_s <= 0.0) fail("grid.governor_tc_s", "must be > 0");
    if (sc.grid.turbine_tc_s <= 0.0) fail("grid.turbine_tc_s", "must be > 0");

    // feeder
    const json* feeder = find(doc, "feeder");
    if (!feeder) fail("feeder", "required section missing");
    expect_object(*feeder, "feeder");
    expect_keys(*feeder, "feeder",
                {"length_km", "r_ohm_per_km", "x_ohm_per_km", "v_bank_volts"});
    try {
        sc.feeder = build_feeder(get_number(*feeder, "feeder", "length_km"),
                                 get_number(*feeder, "feeder", "r_ohm_per_km"),
                                 get_number(*feeder, "feeder", "x_ohm_per_km"),
                                 get_number(*feeder, "feeder", "v_bank_volts") /
                                     sc.base.v_base_v,
                                 sc.base);
    } catch (const ConfigError& e) {
        fail("feeder", e.what());
    }

    // stations
    const json* stations = find(doc, "stations");
    if (!stations) fail("stations", "required section missing (may be an empty array)");
    if (!stations->is_array()) fail("stations", "expected an array");
    for (std::size_t i = 0; i < stations->size(); ++i) {
        const std::string section = "stations[" + std::to_string(i) + "]";
        const json& st = (*stations)[i];
        expect_object(st, section);
        expect_keys(st, section,
                    {"location_km", "p_per_ev_max_w", "ev_count", "ev_schedule"});
        StationSchedule schedule;
        schedule.location_km = get_number(st, section, "location_km");
        schedule.p_per_ev_max_w = get_number(st, section, "p_per_ev_max_w");
        const json* count = find(st, "ev_count");
        const json* sched = find(st, "ev_schedule");
        if ((count == nullptr) == (sched == nullptr))
            fail(section, "exactly one of ev_count / ev_schedule required");
        if (count) {
            if (!count->is_number_integer()) fail(section + ".ev_count", "expected an integer");
            schedule.steps.push_back({0.0, count->get<int>()});
        } else {
            if (!sched->is_array() || sched->empty())
                fail(section + ".ev_schedule", "expected a non-empty array of [time_s, count]");
            for (const json& row : *sched) {
                if (!row.is_array() || row.size() != 2 || !row[0].is_number() ||
                    !row[1].is_number_integer())
                    fail(section + ".ev_schedule", "expected rows of the form [time_s, count]");
                schedule.steps.push_back({row[0].get<double>(), row[1].get<int>()});
            }
            if (schedule.steps.front().time_s != 0.0)
                fail(section + ".ev_schedule", "first entry must be at time 0");
        }
        if (schedule.location_km <= 0.0 || schedule.location_km >= sc.feeder.length_km)
            fail(section + ".location_km",
                 "station lies outside (0, L) with L = " +
                     std::to_string(sc.feeder.length_km) + " km");
        sc.stations.push_back(std::move(schedule));
    }

    // loads
    if (const json* loads = find(doc, "loads")) {
        if (!loads->is_array()) fail("loads", "expected an array");
        for (std::size_t i = 0; i < loads->size(); ++i) {
            const std::string section = "loads[" + std::to_string(i) + "]";
            const json& ld = (*loads)[i];
            expect_object(ld, section);
            expect_keys(ld, section, {"location_km", "p_load_w", "q_load_var"});
            LoadSpec load;
            load.location_km = get_number(ld, section, "location_km");
            load.p_load_w = get_number(ld, section, "p_load_w");
            load.q_load_var = get_number_or(ld, section, "q_load_var", 0.0);
            if (load.q_load_var != 0.0)
                fail(section + ".q_load_var",
                     "reactive loads are not supported (unity power factor model)");
            if (load.location_km <= 0.0 || load.location_km > sc.feeder.length_km)
                fail(section + ".location_km", "load lies outside (0, L]");
            sc.loads.push_back(load);
        }
    }

    // limits
    const json* limits = find(doc, "limits");
    if (!limits) fail("limits", "required section missing");
    expect_object(*limits, "limits");
    expect_keys(*limits, "limits", {"dv_cha_limit_volts", "dv_discha_limit_volts"});
    sc.limits.dv_cha_limit_pu =
        get_number(*limits, "limits", "dv_cha_limit_volts") / sc.base.v_base_v;
    sc.limits.dv_discha_limit_pu =
        get_number(*limits, "limits", "dv_discha_limit_volts") / sc.base.v_base_v;
    if (sc.limits.dv_cha_limit_pu <= 0.0) fail("limits.dv_cha_limit_volts", "must be > 0");
    if (sc.limits.dv_discha_limit_pu <= 0.0) fail("limits.dv_discha_limit_volts", "must be > 0");

    // control
    bool df1_given = false;
    if (const json* control = find(doc, "control")) {
        expect_object(*control, "control");
        expect_keys(*control, "control",
                    {"df1_hz", "conversion_delay_t1_s", "conversion_lag_t2_s"});
        if (find(*control, "df1_hz")) {
            df1_given = true;
            sc.df1_hz = get_number(*control, "control", "df1_hz");
        }
        sc.conv_delay_t1_s = get_number_or(*control, "control", "conversion_delay_t1_s", 0.0);
        sc.conv_lag_t2_s = get_number_or(*control, "control", "conversion_lag_t2_s", 0.0);
    }
    if (!df1_given)
        note("control.df1_hz not set; defaulting to " + std::to_string(sc.df1_hz) + " Hz");

    // engine
    const json* engine = find(doc, "engine");
    if (!engine) fail("engine", "required section missing");
    expect_object(*engine, "engine");
    expect_keys(*engine, "engine",
                {"horizon_s", "dt_s", "bound_update_period_s", "voltage_eval_period_s",
                 "record_profiles", "feeder_replication", "mode", "seed"});
    sc.horizon_s = get_number(*engine, "engine", "horizon_s");
    sc.dt_s = get_number(*engine, "engine", "dt_s");
    sc.bound_update_period_s =
        get_number_or(*engine, "engine", "bound_update_period_s", sc.bound_update_period_s);
    sc.voltage_eval_period_s =
        get_number_or(*engine, "engine", "voltage_eval_period_s", sc.voltage_eval_period_s);
    sc.feeder_replication =
        static_cast<int>(get_integer(*engine, "engine", "feeder_replication", 1));
    if (const json* rec = find(*engine, "record_profiles")) {
        if (!rec->is_boolean()) fail("engine.record_profiles", "expected a boolean");
        sc.record_profiles = rec->get<bool>();
    }
    if (const json* mode = find(*engine, "mode")) {
        if (!mode->is_string()) fail("engine.mode", "expected a string");
        sc.mode = mode_from_string(mode->get<std::string>());
    }
    sc.seed = static_cast<std::uint64_t>(get_integer(*engine, "engine", "seed", 0));

    // solver
    if (const json* solver = find(doc, "solver")) {
        expect_object(*solver, "solver");
        expect_keys(*solver, "solver", {"shoot_tol_pu", "max_newton_iters", "segment_step_km"});
        sc.solver.shoot_tol_pu =
            get_number_or(*solver, "solver", "shoot_tol_pu", sc.solver.shoot_tol_pu);
        sc.solver.max_newton_iters = static_cast<int>(
            get_integer(*solver, "solver", "max_newton_iters", sc.solver.max_newton_iters));
        sc.solver.segment_step_km =
            get_number_or(*solver, "solver", "segment_step_km", sc.solver.segment_step_km);
    }

    // series
    const std::filesystem::path scenario_dir =
        std::filesystem::path(path).has_parent_path()
            ? std::filesystem::path(path).parent_path()
            : std::filesystem::path(".");
    if (const json* series = find(doc, "series")) {
        expect_object(*series, "series");
        if (find(*series, "synthetic")) {
            expect_keys(*series, "series", {"synthetic"});
            if (!(*series)["synthetic"].is_boolean() || !(*series)["synthetic"].get<bool>())
                fail("series.synthetic", "expected true (or give the series explicitly)");
            sc.synthetic_series = true;
            sc.series = make_synthetic_series(sc.seed, sc.horizon_s);
        } else {
            expect_keys(*series, "series", {"load", "pv", "lfc", "edc"});
            sc.synthetic_series = false;
            const json* load = find(*series, "load");
            const json* pv = find(*series, "pv");
            if (!load || !pv) fail("series", "explicit series need at least load and pv");
            sc.series.load = parse_series_value(*load, "series.load", scenario_dir);
            sc.series.pv = parse_series_value(*pv, "series.pv", scenario_dir);
            sc.series.lfc = find(*series, "lfc")
                                ? parse_series_value(*find(*series, "lfc"), "series.lfc",
                                                     scenario_dir)
                                : PiecewiseLinearSeries::constant(0.0);
            sc.series.edc = find(*series, "edc")
                                ? parse_series_value(*find(*series, "edc"), "series.edc",
                                                     scenario_dir)
                                : PiecewiseLinearSeries::constant(0.0);
        }
    } else {
        note("series not given; generating synthetic load/PV series from seed " +
             std::to_string(sc.seed));
        sc.synthetic_series = true;
        sc.series = make_synthetic_series(sc.seed, sc.horizon_s);
    }

    validate_scenario(sc);
    return sc;
}

std::string dump_scenario(const Scenario& sc) {
    json doc;
    doc["name"] = sc.name;
    doc["base"] = {{"s_base_va", sc.base.s_base_va},
                   {"v_base_v", sc.base.v_base_v},
                   {"f_nominal_hz", sc.base.f_nominal_hz}};
    doc["grid"] = {{"inertia_m_s", sc.grid.inertia_m_s},
                   {"damping_d_pu", sc.grid.damping_d_pu},
                   {"s_grid_va", sc.grid.s_grid_va},
                   {"governor_droop_r_pu", sc.grid.governor_droop_r_pu},
                   {"governor_tc_s", sc.grid.governor_tc_s},
                   {"turbine_tc_s", sc.grid.turbine_tc_s}};
    doc["feeder"] = {{"length_km", sc.feeder.length_km},
                     {"r_ohm_per_km", sc.feeder.r_ohm_per_km},
                     {"x_ohm_per_km", sc.feeder.x_ohm_per_km},
                     {"v_bank_volts", sc.feeder.v_bank_pu * sc.base.v_base_v}};
    doc["stations"] = json::array();
    for (const StationSchedule& st : sc.stations) {
        json entry = {{"location_km", st.location_km},
                      {"p_per_ev_max_w", st.p_per_ev_max_w}};
        if (st.steps.size() == 1 && st.steps.front().time_s == 0.0) {
            entry["ev_count"] = st.steps.front().count;
        } else {
            json sched = json::array();
            for (const EvCountStep& step : st.steps)
                sched.push_back(json::array({step.time_s, step.count}));
            entry["ev_schedule"] = sched;
        }
        doc["stations"].push_back(entry);
    }
    doc["loads"] = json::array();
    for (const LoadSpec& load : sc.loads)
        doc["loads"].push_back({{"location_km", load.location_km},
                                {"p_load_w", load.p_load_w},
                                {"q_load_var", load.q_load_var}});
    doc["limits"] = {{"dv_cha_limit_volts", sc.limits.dv_cha_limit_pu * sc.base.v_base_v},
                     {"dv_discha_limit_volts",
                      sc.limits.dv_discha_limit_pu * sc.base.v_base_v}};
    doc["control"] = {{"df1_hz", sc.df1_hz},
                      {"conversion_delay_t1_s", sc.conv_delay_t1_s},
                      {"conversion_lag_t2_s", sc.conv_lag_t2_s}};
    doc["engine"] = {{"horizon_s", sc.horizon_s},
                     {"dt_s", sc.dt_s},
                     {"bound_update_period_s", sc.bound_update_period_s},
                     {"voltage_eval_period_s", sc.voltage_eval_period_s},
                     {"record_profiles", sc.record_profiles},
                     {"feeder_replication", sc.feeder_replication},
                     {"mode", to_string(sc.mode)},
                     {"seed", sc.seed}};
    doc["solver"] = {{"shoot_tol_pu", sc.solver.shoot_tol_pu},
                     {"max_newton_iters", sc.solver.max_newton_iters},
                     {"segment_step_km", sc.solver.segment_step_km}};
    if (sc.synthetic_series) {
        doc["series"] = {{"synthetic", true}};
    } else {
        doc["series"] = {{"load", dump_series_value(sc.series.load)},
                         {"pv", dump_series_value(sc.series.pv)},
                         {"lfc", dump_series_value(sc.series.lfc)},
                         {"edc", dump_series_value(sc.series.edc)}};
    }
    return doc.dump(2) + "\n";
}

std::string format_sci(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.16e", value);
    return buf;
}

void write_trace_csv(std::ostream& out, const ScenarioTrace& trace,
                     std::size_t every_nth) {
    if (every_nth == 0) every_nth = 1;
    const std::size_t n_sta = trace.station_ref_w.size();
    out << "t_s,delta_f_hz,net_imbalance_pu,load_pu,pv_pu,edc_pu,lfc_pu,"
           "ev_total_w,ev_total_pu";
    for (std::size_t i = 1; i <= n_sta; ++i)
        out << ",sta" << i << "_ref_w,sta" << i << "_out_w";
    out << "\n";
    for (std::size_t k = 0; k < trace.t_s.size(); k += every_nth) {
        out << format_sci(trace.t_s[k]) << ',' << format_sci(trace.delta_f_hz[k]) << ','
            << format_sci(trace.net_imbalance_pu[k]) << ',' << format_sci(trace.load_pu[k])
            << ',' << format_sci(trace.pv_pu[k]) << ',' << format_sci(trace.edc_pu[k]) << ','
            << format_sci(trace.lfc_pu[k]) << ',' << format_sci(trace.ev_total_w[k]) << ','
            << format_sci(trace.ev_total_pu[k]);
        for (std::size_t i = 0; i < n_sta; ++i)
            out << ',' << format_sci(trace.station_ref_w[i][k]) << ','
                << format_sci(trace.station_out_w[i][k]);
        out << "\n";
    }
    if (trace.faulted)
        out << "# fault at t=" << format_sci(trace.fault_time_s) << ": "
            << trace.fault_message << "\n";
}

void write_voltage_csv(std::ostream& out, const ScenarioTrace& trace) {
    out << "t_s,v_end_pu,v_end_volts,dev_charge_volts,dev_discharge_volts\n";
    for (const VoltageRecord& rec : trace.voltage)
        out << format_sci(rec.t_s) << ',' << format_sci(rec.v_end_pu) << ','
            << format_sci(rec.v_end_v) << ',' << format_sci(rec.dev_charge_v) << ','
            << format_sci(rec.dev_discharge_v) << "\n";
}

void write_bounds_csv(std::ostream& out, const ScenarioTrace& trace) {
    const std::size_t n_sta = trace.station_ref_w.size();
    out << "t_s,alpha_cha,alpha_discha";
    for (std::size_t i = 1; i <= n_sta; ++i)
        out << ",sta" << i << "_charge_cap_w,sta" << i << "_discharge_cap_w";
    out << "\n";
    for (const BoundRecord& rec : trace.bounds) {
        out << format_sci(rec.t_s) << ',' << format_sci(rec.alpha_cha) << ','
            << format_sci(rec.alpha_discha);
        for (std::size_t i = 0; i < rec.charge_cap_w.size(); ++i)
            out << ',' << format_sci(rec.charge_cap_w[i]) << ','
                << format_sci(rec.discharge_cap_w[i]);
        out << "\n";
    }
}

void write_sweep_csv(std::ostream& out, SweepParameter parameter,
                     const std::vector<SweepPoint>& points) {
    out << "param,value,rms_delta_f_hz,max_abs_delta_f_hz,"
           "max_voltage_violation_volts,control_error_volts,fault\n";
    for (const SweepPoint& p : points)
        out << to_string(parameter) << ',' << format_sci(p.value) << ','
            << format_sci(p.rms_delta_f_hz) << ',' << format_sci(p.max_abs_delta_f_hz) << ','
            << format_sci(p.max_voltage_violation_v) << ',' << format_sci(p.control_error_v)
            << ',' << (p.faulted ? 1 : 0) << "\n";
}

namespace {

void write_profile_row(std::ostream& out, const VoltageSample& s, const PerUnitBase& base) {
    out << format_sci(s.x_km) << ',' << format_sci(s.v_pu) << ','
        << format_sci(s.v_pu * base.v_base_v) << ',' << format_sci(s.theta_rad) << ','
        << format_sci(s.w_pu_per_km) << ',' << format_sci(s.w_pu_per_km * base.v_base_v)
        << ',' << format_sci(s.flow_pu) << ',' << format_sci(s.flow_pu * base.s_base_va)
        << "\n";
}

} // namespace

void write_profile_csv(std::ostream& out, const VoltageProfile& profile,
                       const PerUnitBase& base) {
    out << "x_km,v_pu,v_volts,theta_rad,w_pu_per_km,w_volts_per_km,flow_pu,flow_w\n";
    for (const VoltageSample& s : profile.samples) write_profile_row(out, s, base);
}

void write_profiles_csv(std::ostream& out, const ScenarioTrace& trace,
                        const PerUnitBase& base) {
    out << "t_s,x_km,v_pu,v_volts,theta_rad,w_pu_per_km,w_volts_per_km,flow_pu,flow_w\n";
    for (std::size_t i = 0; i < trace.profiles.size(); ++i) {
        const double t = i < trace.voltage.size() ? trace.voltage[i].t_s : 0.0;
        for (const VoltageSample& s : trace.profiles[i].samples) {
            out << format_sci(t) << ',';
            write_profile_row(out, s, base);
        }
    }
}

} // namespace v2g
