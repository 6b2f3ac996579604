#include "v2g/v2g_control.hpp"

#include <cmath>

namespace v2g {

double droop_power(double delta_f_hz, double charge_cap, double discharge_cap,
                   double df1_hz) {
    if (df1_hz <= 0.0) throw ConfigError("droop: df1 must be > 0");
    if (charge_cap < 0.0 || discharge_cap < 0.0)
        throw ConfigError("droop: caps are magnitudes and must be >= 0");

    if (delta_f_hz >= df1_hz) return -charge_cap;
    if (delta_f_hz >= 0.0) return -charge_cap * (delta_f_hz / df1_hz);
    if (delta_f_hz >= -df1_hz) return -discharge_cap * (delta_f_hz / df1_hz);
    return discharge_cap;
}

std::pair<double, double> capability(double alpha_cha, double alpha_discha,
                                     double p_max_total, double df1_hz) {
    if (df1_hz <= 0.0) throw ConfigError("capability: df1 must be > 0");
    return {-(alpha_cha / df1_hz) * p_max_total, (alpha_discha / df1_hz) * p_max_total};
}

ConversionDynamics::ConversionDynamics(double delay_t1_s, double lag_t2_s, double dt_s)
    : delay_t1_s_(delay_t1_s), lag_t2_s_(lag_t2_s), dt_s_(dt_s) {
    if (delay_t1_s < 0.0 || lag_t2_s < 0.0)
        throw ConfigError("conversion dynamics: T1 and T2 must be >= 0");
    if (dt_s <= 0.0) throw ConfigError("conversion dynamics: dt must be > 0");
    delay_steps_ = static_cast<std::size_t>(std::llround(delay_t1_s / dt_s));
    lag_decay_ = lag_t2_s > 0.0 ? std::exp(-dt_s / lag_t2_s) : 0.0;
    ring_.assign(delay_steps_ + 1, 0.0);
}

void ConversionDynamics::reset() {
    ring_.assign(ring_.size(), 0.0);
    head_ = 0;
    lag_state_ = 0.0;
}

double ConversionDynamics::step(double reference) {
    ring_[head_] = reference;
    head_ = (head_ + 1) % ring_.size();
    // Oldest entry = reference from delay_steps_ calls ago.
    const double delayed = ring_[head_];

    if (lag_t2_s_ <= 0.0) return delayed;

    // The delayed reference drives the lag over the *next* interval; the
    // value realized on the current one is the state accumulated so far.
    // This keeps the sampled step response exactly on the analytic curve
    // 1 - exp(-(t - T1)/T2) at the step boundaries.
    const double realized = lag_state_;
    lag_state_ = lag_decay_ * lag_state_ + (1.0 - lag_decay_) * delayed;
    return realized;
}

} // namespace v2g
