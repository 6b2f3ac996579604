#include "v2g/cosim_engine.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <random>

namespace v2g {

std::string to_string(OperatingMode mode) {
    switch (mode) {
        case OperatingMode::multi_objective: return "multi_objective";
        case OperatingMode::single_objective: return "single_objective";
        case OperatingMode::no_ev: return "no_ev";
    }
    return "?";
}

OperatingMode mode_from_string(const std::string& name) {
    if (name == "multi_objective") return OperatingMode::multi_objective;
    if (name == "single_objective") return OperatingMode::single_objective;
    if (name == "no_ev") return OperatingMode::no_ev;
    throw ValidationError("mode", "unknown operating mode '" + name + "'");
}

int StationSchedule::count_at(double t_s) const {
    int count = 0;
    for (const EvCountStep& step : steps) {
        if (step.time_s > t_s) break;
        count = step.count;
    }
    return count;
}

namespace {

// Number of engine ticks in a period; the period must be a whole number of
// ticks.
long ticks_in(double period_s, double dt_s, const char* what) {
    const double ratio = period_s / dt_s;
    const long ticks = std::lround(ratio);
    if (ticks < 1 || std::abs(ratio - static_cast<double>(ticks)) > 1e-9 * ratio)
        throw ValidationError(what, "must be a whole multiple of dt");
    return ticks;
}

std::vector<PointInjection> load_injections(const std::vector<LoadSpec>& loads,
                                            const PerUnitBase& base) {
    std::vector<PointInjection> inj;
    inj.reserve(loads.size());
    for (const LoadSpec& load : loads)
        inj.push_back({load.location_km, -load.p_load_w / base.s_base_va});
    return inj;
}

} // namespace

std::vector<StationSpec> stations_at_time(const Scenario& sc, double t_s) {
    std::vector<StationSpec> out;
    out.reserve(sc.stations.size());
    for (std::size_t i = 0; i < sc.stations.size(); ++i)
        out.push_back(make_station(static_cast<int>(i), sc.stations[i].location_km,
                                   sc.stations[i].count_at(t_s),
                                   sc.stations[i].p_per_ev_max_w));
    return out;
}

void validate_scenario(const Scenario& sc) {
    if (sc.horizon_s <= 0.0) throw ValidationError("engine.horizon_s", "must be > 0");
    if (sc.dt_s <= 0.0 || sc.dt_s > 0.1)
        throw ValidationError("engine.dt_s", "must lie in (0, 0.1] s");
    ticks_in(sc.horizon_s, sc.dt_s, "engine.horizon_s");
    ticks_in(sc.bound_update_period_s, sc.dt_s, "engine.bound_update_period_s");
    ticks_in(sc.voltage_eval_period_s, sc.dt_s, "engine.voltage_eval_period_s");
    if (sc.feeder_replication < 1)
        throw ValidationError("engine.feeder_replication", "must be >= 1");
    if (sc.df1_hz <= 0.0) throw ValidationError("control.df1_hz", "must be > 0");
    if (sc.conv_delay_t1_s < 0.0 || sc.conv_lag_t2_s < 0.0)
        throw ValidationError("control", "conversion T1/T2 must be >= 0");
    if (sc.limits.dv_cha_limit_pu <= 0.0 || sc.limits.dv_discha_limit_pu <= 0.0)
        throw ValidationError("limits", "voltage limits must be > 0");

    try {
        validate_stations(stations_at_time(sc, 0.0), sc.feeder);
    } catch (const ConfigError& e) {
        throw ValidationError("stations", e.what());
    }
    for (std::size_t i = 0; i < sc.stations.size(); ++i) {
        const StationSchedule& st = sc.stations[i];
        if (st.steps.empty())
            throw ValidationError("stations[" + std::to_string(i) + "]",
                                  "EV-count schedule is empty");
        for (std::size_t k = 1; k < st.steps.size(); ++k)
            if (st.steps[k].time_s <= st.steps[k - 1].time_s)
                throw ValidationError("stations[" + std::to_string(i) + "]",
                                      "schedule times must be strictly increasing");
        for (const EvCountStep& step : st.steps)
            if (step.count < 0)
                throw ValidationError("stations[" + std::to_string(i) + "]",
                                      "EV counts must be >= 0");
    }
    for (std::size_t i = 0; i < sc.loads.size(); ++i) {
        const LoadSpec& load = sc.loads[i];
        if (load.location_km <= 0.0 || load.location_km > sc.feeder.length_km)
            throw ValidationError("loads[" + std::to_string(i) + "]",
                                  "location must lie in (0, L]");
        if (load.p_load_w < 0.0)
            throw ValidationError("loads[" + std::to_string(i) + "]",
                                  "consumption must be >= 0");
    }
    if (!sc.series.load.covers(0.0, sc.horizon_s) || !sc.series.pv.covers(0.0, sc.horizon_s) ||
        !sc.series.lfc.covers(0.0, sc.horizon_s) || !sc.series.edc.covers(0.0, sc.horizon_s))
        throw ValidationError("series", "must cover the full scenario horizon");
}

double ScenarioTrace::rms_delta_f_hz() const {
    if (delta_f_hz.empty()) return 0.0;
    double sum_sq = 0.0;
    for (double f : delta_f_hz) sum_sq += f * f;
    return std::sqrt(sum_sq / static_cast<double>(delta_f_hz.size()));
}

double ScenarioTrace::max_abs_delta_f_hz() const {
    double m = 0.0;
    for (double f : delta_f_hz) m = std::max(m, std::abs(f));
    return m;
}

double ScenarioTrace::max_voltage_violation_v(const VoltageLimits& limits_pu,
                                              double v_base_v) const {
    const double cha_limit_v = limits_pu.dv_cha_limit_pu * v_base_v;
    const double discha_limit_v = limits_pu.dv_discha_limit_pu * v_base_v;
    double worst = 0.0;
    for (const VoltageRecord& rec : voltage) {
        worst = std::max(worst, rec.dev_charge_v - cha_limit_v);
        worst = std::max(worst, rec.dev_discharge_v - discha_limit_v);
    }
    return std::max(worst, 0.0);
}

namespace {

BoundSet bounds_for_mode(const Scenario& sc, const std::vector<StationSpec>& stations,
                         double t_s) {
    if (sc.mode == OperatingMode::multi_objective)
        return synthesize_bounds(sc.feeder, stations, sc.base, sc.limits, t_s,
                                 sc.bound_update_period_s);
    // Full station power; the frequency-only comparison case.
    BoundSet bounds;
    bounds.alpha_cha = 1.0;
    bounds.alpha_discha = 1.0;
    bounds.valid_from_s = t_s;
    bounds.valid_until_s = t_s + sc.bound_update_period_s;
    bounds.station_caps.resize(stations.size());
    for (std::size_t i = 0; i < stations.size(); ++i) {
        const double p_max = stations[i].p_max_pu(sc.base);
        bounds.station_caps[i] = StationBound{-p_max, p_max};
    }
    return bounds;
}

// Deviation of the feeder-end voltage caused by all stations charging at
// their synthesized caps, from two direct solves. Positive for a drop.
double direct_charge_deviation_v(const Scenario& sc, double v_loads_only_pu,
                                 const std::vector<StationSpec>& stations,
                                 const BoundSet& bounds) {
    std::vector<PointInjection> inj = load_injections(sc.loads, sc.base);
    for (std::size_t i = 0; i < stations.size(); ++i)
        inj.push_back({stations[i].location_km, bounds.station_caps[i].charge_cap_pu});
    const VoltageProfile profile = solve_bvp(sc.feeder, inj, sc.solver);
    return (v_loads_only_pu - profile.end_voltage_pu()) * sc.base.v_base_v;
}

} // namespace

ScenarioTrace run(const Scenario& sc) {
    validate_scenario(sc);

    const long n_ticks = std::lround(sc.horizon_s / sc.dt_s);
    const long bound_ticks = ticks_in(sc.bound_update_period_s, sc.dt_s,
                                      "engine.bound_update_period_s");
    const long voltage_ticks = ticks_in(sc.voltage_eval_period_s, sc.dt_s,
                                        "engine.voltage_eval_period_s");
    const std::size_t n_sta = sc.stations.size();

    ScenarioTrace trace;
    trace.t_s.reserve(n_ticks);
    trace.delta_f_hz.reserve(n_ticks);
    trace.net_imbalance_pu.reserve(n_ticks);
    trace.load_pu.reserve(n_ticks);
    trace.pv_pu.reserve(n_ticks);
    trace.edc_pu.reserve(n_ticks);
    trace.lfc_pu.reserve(n_ticks);
    trace.ev_total_w.reserve(n_ticks);
    trace.ev_total_pu.reserve(n_ticks);
    trace.station_ref_w.assign(n_sta, {});
    trace.station_out_w.assign(n_sta, {});
    for (std::size_t i = 0; i < n_sta; ++i) {
        trace.station_ref_w[i].reserve(n_ticks);
        trace.station_out_w[i].reserve(n_ticks);
    }

    const std::vector<PointInjection> loads_pu = load_injections(sc.loads, sc.base);

    try {
        // Static loads-only baseline; the reference level the per-mode
        // voltage limits apply to.
        trace.v_end_loads_only_pu =
            solve_bvp(sc.feeder, loads_pu, sc.solver).end_voltage_pu();

        {
            // Bound-method control error at the t=0 prediction: the direct
            // deviation at the caps against the one the linear estimate
            // promises there (the charge limit itself whenever it binds).
            const std::vector<StationSpec> stations0 = stations_at_time(sc, 0.0);
            const BoundSet bounds0 = synthesize_bounds(sc.feeder, stations0, sc.base,
                                                       sc.limits, 0.0,
                                                       sc.bound_update_period_s);
            std::vector<double> full(stations0.size());
            for (std::size_t i = 0; i < stations0.size(); ++i)
                full[i] = stations0[i].p_max_pu(sc.base);
            const double promised_v = bounds0.alpha_cha *
                                      end_deviation(sc.feeder, stations0, full) *
                                      sc.base.v_base_v;
            const double dev_v = direct_charge_deviation_v(sc, trace.v_end_loads_only_pu,
                                                           stations0, bounds0);
            trace.control_error_v = std::abs(dev_v - promised_v);
        }

        FrequencyState state;
        std::vector<ConversionDynamics> converters(
            n_sta, ConversionDynamics(sc.conv_delay_t1_s, sc.conv_lag_t2_s, sc.dt_s));
        std::vector<double> charge_cap_w(n_sta, 0.0);
        std::vector<double> discharge_cap_w(n_sta, 0.0);

        for (long k = 0; k < n_ticks; ++k) {
            const double t = static_cast<double>(k) * sc.dt_s;

            if (sc.mode != OperatingMode::no_ev && k % bound_ticks == 0) {
                const std::vector<StationSpec> stations = stations_at_time(sc, t);
                const BoundSet bounds = bounds_for_mode(sc, stations, t);
                BoundRecord rec;
                rec.t_s = t;
                rec.alpha_cha = bounds.alpha_cha;
                rec.alpha_discha = bounds.alpha_discha;
                rec.charge_cap_w.resize(n_sta);
                rec.discharge_cap_w.resize(n_sta);
                for (std::size_t i = 0; i < n_sta; ++i) {
                    charge_cap_w[i] =
                        -bounds.station_caps[i].charge_cap_pu * sc.base.s_base_va;
                    discharge_cap_w[i] =
                        bounds.station_caps[i].discharge_cap_pu * sc.base.s_base_va;
                    rec.charge_cap_w[i] = charge_cap_w[i];
                    rec.discharge_cap_w[i] = discharge_cap_w[i];
                }
                trace.bounds.push_back(std::move(rec));
            }

            const double delta_f = state.delta_f_hz;
            double station_sum_w = 0.0;
            for (std::size_t i = 0; i < n_sta; ++i) {
                double ref = 0.0;
                double out = 0.0;
                if (sc.mode != OperatingMode::no_ev) {
                    ref = droop_power(delta_f, charge_cap_w[i], discharge_cap_w[i],
                                      sc.df1_hz);
                    out = converters[i].step(ref);
                }
                trace.station_ref_w[i].push_back(ref);
                trace.station_out_w[i].push_back(out);
                station_sum_w += out;
            }
            const double ev_total_w = static_cast<double>(sc.feeder_replication) *
                                      station_sum_w;
            const double ev_total_pu = ev_total_w / sc.grid.s_grid_va;

            if (k % voltage_ticks == 0) {
                std::vector<PointInjection> inj = loads_pu;
                for (std::size_t i = 0; i < n_sta; ++i)
                    inj.push_back({sc.stations[i].location_km,
                                   trace.station_out_w[i].back() / sc.base.s_base_va});
                VoltageProfile profile = solve_bvp(sc.feeder, inj, sc.solver);
                VoltageRecord rec;
                rec.t_s = t;
                rec.v_end_pu = profile.end_voltage_pu();
                rec.v_end_v = rec.v_end_pu * sc.base.v_base_v;
                rec.dev_charge_v =
                    (trace.v_end_loads_only_pu - rec.v_end_pu) * sc.base.v_base_v;
                rec.dev_discharge_v = -rec.dev_charge_v;
                trace.voltage.push_back(rec);
                if (sc.record_profiles) trace.profiles.push_back(std::move(profile));
            }

            // Exogenous drivers are sampled at the interval midpoint, which
            // keeps the zero-order hold second-order accurate in dt.
            const double t_mid = t + 0.5 * sc.dt_s;
            const double load = sc.series.load.at(t_mid);
            const double pv = sc.series.pv.at(t_mid);
            const double edc = sc.series.edc.at(t_mid);
            const double lfc = sc.series.lfc.at(t_mid);
            const double dp = net_imbalance(t_mid, sc.series, ev_total_pu);

            trace.t_s.push_back(t);
            trace.delta_f_hz.push_back(delta_f);
            trace.net_imbalance_pu.push_back(dp);
            trace.load_pu.push_back(load);
            trace.pv_pu.push_back(pv);
            trace.edc_pu.push_back(edc);
            trace.lfc_pu.push_back(lfc);
            trace.ev_total_w.push_back(ev_total_w);
            trace.ev_total_pu.push_back(ev_total_pu);

            state = step_frequency(state, dp, sc.grid, sc.dt_s, lfc);
        }
    } catch (const SolverError& e) {
        trace.faulted = true;
        trace.fault_message = e.what();
        trace.fault_time_s = trace.t_s.empty() ? 0.0 : trace.t_s.back();
    } catch (const NumericalFault& e) {
        trace.faulted = true;
        trace.fault_message = e.what();
        trace.fault_time_s = trace.t_s.empty() ? 0.0 : trace.t_s.back();
    }
    return trace;
}

SweepParameter sweep_parameter_from_string(const std::string& name) {
    if (name == "df1") return SweepParameter::droop_half_width;
    if (name == "dv_cha_limit") return SweepParameter::charge_limit;
    if (name == "loading_fraction") return SweepParameter::loading_fraction;
    throw ValidationError("sweep.param",
                          "expected one of df1, dv_cha_limit, loading_fraction; got '" +
                              name + "'");
}

std::string to_string(SweepParameter p) {
    switch (p) {
        case SweepParameter::droop_half_width: return "df1";
        case SweepParameter::charge_limit: return "dv_cha_limit";
        case SweepParameter::loading_fraction: return "loading_fraction";
    }
    return "?";
}

namespace {

Scenario apply_sweep_value(const Scenario& base, SweepParameter parameter, double value) {
    Scenario sc = base;
    switch (parameter) {
        case SweepParameter::droop_half_width:
            sc.df1_hz = value;
            break;
        case SweepParameter::charge_limit:
            sc.limits.dv_cha_limit_pu = value / sc.base.v_base_v;
            break;
        case SweepParameter::loading_fraction: {
            double total_w = 0.0;
            for (const LoadSpec& load : sc.loads) total_w += load.p_load_w;
            if (total_w <= 0.0)
                throw ValidationError("sweep",
                                      "loading_fraction sweep needs nonzero base loads");
            const double scale = value * sc.base.s_base_va / total_w;
            for (LoadSpec& load : sc.loads) load.p_load_w *= scale;
            break;
        }
    }
    return sc;
}

SweepPoint run_sweep_point(const Scenario& sc, double value) {
    SweepPoint point;
    point.value = value;
    const ScenarioTrace trace = run(sc);
    point.rms_delta_f_hz = trace.rms_delta_f_hz();
    point.max_abs_delta_f_hz = trace.max_abs_delta_f_hz();
    point.max_voltage_violation_v =
        trace.max_voltage_violation_v(sc.limits, sc.base.v_base_v);
    point.control_error_v = trace.control_error_v;
    point.faulted = trace.faulted;
    point.fault_message = trace.fault_message;
    return point;
}

} // namespace

std::vector<SweepPoint> sweep(const Scenario& base, SweepParameter parameter,
                              const std::vector<double>& values) {
    if (values.empty()) throw ValidationError("sweep.values", "must be non-empty");

    // Runs are isolated, so the points execute concurrently; results keep
    // the caller's value order regardless of completion order.
    std::vector<Scenario> scenarios;
    scenarios.reserve(values.size());
    for (double value : values) scenarios.push_back(apply_sweep_value(base, parameter, value));

    std::vector<std::future<SweepPoint>> futures;
    futures.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        futures.push_back(std::async(std::launch::async, run_sweep_point,
                                     std::cref(scenarios[i]), values[i]));

    std::vector<SweepPoint> points;
    points.reserve(values.size());
    for (std::future<SweepPoint>& f : futures) points.push_back(f.get());
    return points;
}

ExogenousSeries make_synthetic_series(std::uint64_t seed, double horizon_s) {
    if (horizon_s <= 0.0) throw ConfigError("synthetic series: horizon must be > 0");

    // Aperiodic drivers: reflected random walks on 1 s knots, sized so the
    // scheduled generation balances the mean and the residual imbalance
    // swings by a few percent of the grid capacity.
    constexpr double kKnotSpacingS = 1.0;
    constexpr double kLoadStart = 0.60, kLoadStepPu = 0.008;
    constexpr double kLoadLo = 0.42, kLoadHi = 0.78;
    constexpr double kPvStart = 0.20, kPvStepPu = 0.012;
    constexpr double kPvLo = 0.02, kPvHi = 0.38;
    constexpr double kEdcPu = 0.40;

    const std::size_t n_knots =
        static_cast<std::size_t>(std::ceil(horizon_s / kKnotSpacingS)) + 2;

    std::mt19937_64 rng(seed);
    // Explicit mapping instead of std::uniform_real_distribution keeps the
    // stream identical across standard library implementations.
    const auto uniform = [&rng]() {
        return static_cast<double>(rng() >> 11) * 0x1.0p-53;
    };
    const auto reflect = [](double v, double lo, double hi) {
        if (v > hi) v = 2.0 * hi - v;
        if (v < lo) v = 2.0 * lo - v;
        return v;
    };

    std::vector<double> t(n_knots), load(n_knots), pv(n_knots);
    double load_v = kLoadStart;
    double pv_v = kPvStart;
    for (std::size_t k = 0; k < n_knots; ++k) {
        t[k] = static_cast<double>(k) * kKnotSpacingS;
        load[k] = load_v;
        pv[k] = pv_v;
        load_v = reflect(load_v + kLoadStepPu * (2.0 * uniform() - 1.0), kLoadLo, kLoadHi);
        pv_v = reflect(pv_v + kPvStepPu * (2.0 * uniform() - 1.0), kPvLo, kPvHi);
    }

    ExogenousSeries series;
    series.load = PiecewiseLinearSeries(t, load);
    series.pv = PiecewiseLinearSeries(std::move(t), std::move(pv));
    series.lfc = PiecewiseLinearSeries::constant(0.0);
    series.edc = PiecewiseLinearSeries::constant(kEdcPu);
    return series;
}

} // namespace v2g
