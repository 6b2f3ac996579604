#include "v2g/freq_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace v2g {

namespace {

struct FreqDeriv {
    double d_omega;
    double d_gov;
    double d_turb;
};

inline FreqDeriv freq_rhs(double omega, double gov, double turb, double dp_pu,
                          double lfc_pu, const GridDynamicsConfig& cfg) {
    const double inv_droop =
        std::isinf(cfg.governor_droop_r_pu) ? 0.0 : 1.0 / cfg.governor_droop_r_pu;
    return FreqDeriv{
        (dp_pu + turb - cfg.damping_d_pu * omega) / cfg.inertia_m_s,
        ((-omega * inv_droop + lfc_pu) - gov) / cfg.governor_tc_s,
        (gov - turb) / cfg.turbine_tc_s};
}

} // namespace

FrequencyState step_frequency(const FrequencyState& state, double net_imbalance_pu,
                              const GridDynamicsConfig& cfg, double dt_s,
                              double lfc_pu) {
    if (dt_s <= 0.0 || dt_s > 0.1)
        throw ConfigError("step_frequency: dt must lie in (0, 0.1] s");
    if (cfg.inertia_m_s <= 0.0 || cfg.governor_tc_s <= 0.0 || cfg.turbine_tc_s <= 0.0)
        throw ConfigError("step_frequency: M, T_g, T_t must be > 0");
    if (cfg.damping_d_pu < 0.0)
        throw ConfigError("step_frequency: damping must be >= 0");

    const double h = dt_s;
    const double o = state.delta_omega_pu;
    const double g = state.governor_pu;
    const double t = state.turbine_pu;

    const FreqDeriv k1 = freq_rhs(o, g, t, net_imbalance_pu, lfc_pu, cfg);
    const FreqDeriv k2 = freq_rhs(o + 0.5 * h * k1.d_omega, g + 0.5 * h * k1.d_gov,
                                  t + 0.5 * h * k1.d_turb, net_imbalance_pu, lfc_pu, cfg);
    const FreqDeriv k3 = freq_rhs(o + 0.5 * h * k2.d_omega, g + 0.5 * h * k2.d_gov,
                                  t + 0.5 * h * k2.d_turb, net_imbalance_pu, lfc_pu, cfg);
    const FreqDeriv k4 = freq_rhs(o + h * k3.d_omega, g + h * k3.d_gov,
                                  t + h * k3.d_turb, net_imbalance_pu, lfc_pu, cfg);

    FrequencyState next;
    next.delta_omega_pu = o + h / 6.0 * (k1.d_omega + 2.0 * k2.d_omega + 2.0 * k3.d_omega + k4.d_omega);
    next.governor_pu = g + h / 6.0 * (k1.d_gov + 2.0 * k2.d_gov + 2.0 * k3.d_gov + k4.d_gov);
    next.turbine_pu = t + h / 6.0 * (k1.d_turb + 2.0 * k2.d_turb + 2.0 * k3.d_turb + k4.d_turb);
    next.delta_f_hz = next.delta_omega_pu * cfg.f_nominal_hz;

    if (!std::isfinite(next.delta_omega_pu) || !std::isfinite(next.governor_pu) ||
        !std::isfinite(next.turbine_pu)) {
        std::ostringstream msg;
        msg << "frequency state went non-finite (delta_omega=" << next.delta_omega_pu
            << ", governor=" << next.governor_pu << ", turbine=" << next.turbine_pu
            << ", dP=" << net_imbalance_pu << ")";
        throw NumericalFault(msg.str());
    }
    return next;
}

PiecewiseLinearSeries::PiecewiseLinearSeries(std::vector<double> times_s,
                                             std::vector<double> values)
    : times_(std::move(times_s)), values_(std::move(values)) {
    if (times_.size() != values_.size())
        throw ConfigError("series: time and value columns differ in length");
    if (times_.empty()) throw ConfigError("series: at least one knot required");
    for (std::size_t i = 1; i < times_.size(); ++i)
        if (times_[i] <= times_[i - 1])
            throw ConfigError("series: knot times must be strictly increasing");
    for (double v : values_)
        if (!std::isfinite(v)) throw ConfigError("series: non-finite value");
}

PiecewiseLinearSeries PiecewiseLinearSeries::constant(double value) {
    PiecewiseLinearSeries s;
    s.constant_ = true;
    s.constant_value_ = value;
    return s;
}

PiecewiseLinearSeries PiecewiseLinearSeries::parse_csv(std::istream& in) {
    std::vector<double> t, v;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::string cleaned = line;
        std::replace(cleaned.begin(), cleaned.end(), ',', ' ');
        std::istringstream row(cleaned);
        double ti = 0.0, vi = 0.0;
        if (!(row >> ti >> vi)) {
            if (first) { first = false; continue; } // header
            throw ConfigError("series CSV: malformed row '" + line + "'");
        }
        first = false;
        t.push_back(ti);
        v.push_back(vi);
    }
    if (t.empty()) throw ConfigError("series CSV: no data rows");
    return PiecewiseLinearSeries(std::move(t), std::move(v));
}

double PiecewiseLinearSeries::at(double t_s) const {
    if (constant_) return constant_value_;
    if (times_.empty()) throw ConfigError("series: empty");
    if (t_s < times_.front() || t_s > times_.back())
        throw std::out_of_range("series: t=" + std::to_string(t_s) +
                                " s outside [" + std::to_string(times_.front()) + ", " +
                                std::to_string(times_.back()) + "] s");
    if (times_.size() == 1) return values_.front();
    const auto it = std::upper_bound(times_.begin(), times_.end(), t_s);
    if (it == times_.end()) return values_.back();
    const std::size_t hi = static_cast<std::size_t>(it - times_.begin());
    const std::size_t lo = hi - 1;
    const double u = (t_s - times_[lo]) / (times_[hi] - times_[lo]);
    return values_[lo] + u * (values_[hi] - values_[lo]);
}

bool PiecewiseLinearSeries::covers(double t0_s, double t1_s) const {
    if (constant_) return true;
    if (times_.empty()) return false;
    return times_.front() <= t0_s && times_.back() >= t1_s;
}

double net_imbalance(double t_s, const ExogenousSeries& series, double ev_total_pu) {
    return series.edc.at(t_s) + series.pv.at(t_s) - series.load.at(t_s) + ev_total_pu;
}

} // namespace v2g
