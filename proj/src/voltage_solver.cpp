#include "v2g/voltage_solver.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>

namespace v2g {

namespace {

constexpr double kCollapseFloorPu = 1e-6;

struct OdeState {
    double v;
    double w;
    double theta;
};

struct Derivative {
    double dv;
    double dw;
    double dtheta;
};

// Smooth-segment right-hand side; the line flow f is constant here.
inline Derivative rhs(const OdeState& s, double flow) {
    const double v2 = s.v * s.v;
    return Derivative{s.w, flow * flow / (v2 * s.v), flow / v2};
}

inline bool usable(const OdeState& s) {
    return std::isfinite(s.v) && std::isfinite(s.w) && std::isfinite(s.theta) &&
           s.v > kCollapseFloorPu;
}

// One classic fourth-order step of signed size h.
inline OdeState rk4_step(const OdeState& s, double flow, double h) {
    const Derivative k1 = rhs(s, flow);
    const OdeState s2{s.v + 0.5 * h * k1.dv, s.w + 0.5 * h * k1.dw, s.theta + 0.5 * h * k1.dtheta};
    const Derivative k2 = rhs(s2, flow);
    const OdeState s3{s.v + 0.5 * h * k2.dv, s.w + 0.5 * h * k2.dw, s.theta + 0.5 * h * k2.dtheta};
    const Derivative k3 = rhs(s3, flow);
    const OdeState s4{s.v + h * k3.dv, s.w + h * k3.dw, s.theta + h * k3.dtheta};
    const Derivative k4 = rhs(s4, flow);
    return OdeState{
        s.v + h / 6.0 * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv),
        s.w + h / 6.0 * (k1.dw + 2.0 * k2.dw + 2.0 * k3.dw + k4.dw),
        s.theta + h / 6.0 * (k1.dtheta + 2.0 * k2.dtheta + 2.0 * k3.dtheta + k4.dtheta)};
}

// Sorted ascending, same-location entries merged.
std::vector<PointInjection> normalize(const FeederSpec& feeder,
                                      std::vector<PointInjection> inj) {
    for (const PointInjection& p : inj) {
        if (p.location_km <= 0.0 || p.location_km > feeder.length_km)
            throw ConfigError("injection at " + std::to_string(p.location_km) +
                              " km lies outside (0, L]");
    }
    std::sort(inj.begin(), inj.end(), [](const PointInjection& a, const PointInjection& b) {
        return a.location_km < b.location_km;
    });
    std::vector<PointInjection> merged;
    for (const PointInjection& p : inj) {
        if (!merged.empty() && merged.back().location_km == p.location_km)
            merged.back().power_pu += p.power_pu;
        else
            merged.push_back(p);
    }
    return merged;
}

// Integrates from the terminal down to the bank for a trial terminal
// voltage. Returns the bank voltage, or nullopt on collapse. When `out`
// is given, samples are pushed in descending x: terminal-side values at
// x = L, bank-side (post-jump) values at interior source locations.
std::optional<double> backward_pass(const FeederSpec& feeder,
                                    const std::vector<PointInjection>& sources,
                                    double terminal_v, double step_km,
                                    std::vector<VoltageSample>* out) {
    OdeState s{terminal_v, 0.0, 0.0};
    double flow = 0.0;
    if (!usable(s)) return std::nullopt;
    if (out) out->push_back({feeder.length_km, s.v, s.theta, s.w, flow});

    const double rf = feeder.resistance_factor();
    const double xf = feeder.reactance_factor();
    double x_hi = feeder.length_km;

    // Each source owns the smooth segment above it plus the jump at its own
    // location; index -1 stands for the final stretch down to x = 0.
    for (int i = static_cast<int>(sources.size()) - 1; i >= -1; --i) {
        const double x_lo = (i >= 0) ? sources[static_cast<std::size_t>(i)].location_km : 0.0;
        const double seg = x_hi - x_lo;
        if (seg > 0.0) {
            const int n = std::max(1, static_cast<int>(std::ceil(seg / step_km)));
            const double h = seg / n;
            for (int k = 1; k <= n; ++k) {
                s = rk4_step(s, flow, -h);
                if (!usable(s)) return std::nullopt;
                if (out && k < n) out->push_back({x_hi - k * h, s.v, s.theta, s.w, flow});
            }
        }
        if (i >= 0) {
            const double p = sources[static_cast<std::size_t>(i)].power_pu;
            s.w += rf * p / s.v;
            flow += xf * p;
        }
        // Bank-side values at x_lo; skipped when the source sits exactly at
        // the terminal (the x = L sample keeps the terminal-side values).
        if (out && x_lo < feeder.length_km)
            out->push_back({x_lo, s.v, s.theta, s.w, flow});
        x_hi = x_lo;
    }
    return s.v;
}

} // namespace

VoltageProfile solve_bvp(const FeederSpec& feeder,
                         const std::vector<PointInjection>& injections,
                         const SolverConfig& cfg) {
    if (cfg.shoot_tol_pu <= 0.0) throw ConfigError("solver: shoot_tol must be > 0");
    if (cfg.max_newton_iters < 1) throw ConfigError("solver: max_newton_iters must be >= 1");
    if (cfg.segment_step_km <= 0.0) throw ConfigError("solver: segment_step must be > 0");

    const std::vector<PointInjection> sources = normalize(feeder, injections);

    // The gradient approximation gives a good terminal guess:
    // v(L) - v_bank is close to the signed sum of g/y^2 * P_j * xi_j.
    double guess = feeder.v_bank_pu;
    for (const PointInjection& p : sources)
        guess += feeder.resistance_factor() * p.power_pu * p.location_km;
    guess = std::max(guess, 0.1);

    const auto residual_at = [&](double s) -> std::optional<double> {
        const std::optional<double> v0 =
            backward_pass(feeder, sources, s, cfg.segment_step_km, nullptr);
        if (!v0) return std::nullopt;
        return *v0 - feeder.v_bank_pu;
    };

    double s = guess;
    std::optional<double> res = residual_at(s);
    if (!res)
        throw SolverError("voltage collapse at the initial terminal guess (infeasible loading)");

    int iters = 0;
    while (std::abs(*res) >= cfg.shoot_tol_pu) {
        if (iters >= cfg.max_newton_iters)
            throw SolverError("shooting Newton did not converge within " +
                                  std::to_string(cfg.max_newton_iters) +
                                  " iterations; last residual " + std::to_string(*res) + " pu",
                              *res);
        ++iters;

        const double h = 1e-7 * std::max(1.0, std::abs(s));
        const std::optional<double> res_h = residual_at(s + h);
        if (!res_h)
            throw SolverError("voltage collapse while probing the shooting derivative "
                              "(infeasible loading)", *res);
        const double deriv = (*res_h - *res) / h;
        if (deriv == 0.0 || !std::isfinite(deriv))
            throw SolverError("degenerate shooting derivative; last residual " +
                                  std::to_string(*res) + " pu",
                              *res);

        // Damped Newton: halve the step until the residual improves.
        const double full_step = -*res / deriv;
        double scale = 1.0;
        bool accepted = false;
        for (int bt = 0; bt < 25; ++bt) {
            const double s_try = s + scale * full_step;
            if (s_try > kCollapseFloorPu) {
                const std::optional<double> res_try = residual_at(s_try);
                if (res_try && std::abs(*res_try) < std::abs(*res)) {
                    s = s_try;
                    res = res_try;
                    accepted = true;
                    break;
                }
            }
            scale *= 0.5;
        }
        if (!accepted)
            throw SolverError("shooting step rejected (infeasible loading); last residual " +
                                  std::to_string(*res) + " pu",
                              *res);
    }

    VoltageProfile profile;
    profile.newton_iterations = iters;
    profile.boundary_residual_pu = std::abs(*res);
    profile.samples.reserve(static_cast<std::size_t>(feeder.length_km / cfg.segment_step_km) +
                            sources.size() + 2);
    const std::optional<double> v0 =
        backward_pass(feeder, sources, s, cfg.segment_step_km, &profile.samples);
    if (!v0) throw SolverError("voltage collapse on the recording pass");
    std::reverse(profile.samples.begin(), profile.samples.end());

    // The phase reference belongs at the bank.
    const double theta0 = profile.samples.front().theta_rad;
    for (VoltageSample& sample : profile.samples) sample.theta_rad -= theta0;

    profile.breakpoints_km.reserve(sources.size());
    for (const PointInjection& p : sources) profile.breakpoints_km.push_back(p.location_km);
    return profile;
}

double approx_gradient(const FeederSpec& feeder,
                       const std::vector<PointInjection>& injections,
                       double x_km) {
    if (x_km < 0.0 || x_km > feeder.length_km)
        throw ConfigError("approx_gradient: x outside [0, L]");
    const double rf = feeder.resistance_factor();
    double w = 0.0;
    for (const PointInjection& p : injections)
        if (x_km < p.location_km) w += p.power_pu * rf;
    return w;
}

double end_deviation(const FeederSpec& feeder,
                     const std::vector<StationSpec>& stations,
                     const std::vector<double>& station_powers_pu) {
    if (stations.size() != station_powers_pu.size())
        throw ConfigError("end_deviation: one power per station required");
    bool any_pos = false;
    bool any_neg = false;
    for (double p : station_powers_pu) {
        any_pos |= p > 0.0;
        any_neg |= p < 0.0;
    }
    if (any_pos && any_neg)
        throw std::domain_error("end_deviation: mixed charging/discharging powers; "
                                "the estimate is valid per operating mode only");
    const double rf = feeder.resistance_factor();
    double dv = 0.0;
    for (std::size_t i = 0; i < stations.size(); ++i)
        dv += rf * std::abs(station_powers_pu[i]) * stations[i].location_km;
    return dv;
}

double lumped_oracle(const FeederSpec& feeder,
                     const std::vector<PointInjection>& injections) {
    const std::vector<PointInjection> sources = normalize(feeder, injections);
    if (sources.size() > 32)
        throw ConfigError("lumped oracle supports at most 32 injection points");
    if (sources.empty()) return feeder.v_bank_pu;

    const std::size_t n = sources.size();
    const std::complex<double> z_per_km(feeder.r_pu_per_km, feeder.x_pu_per_km);

    std::vector<std::complex<double>> seg_z(n);
    double prev = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        seg_z[k] = z_per_km * (sources[k].location_km - prev);
        prev = sources[k].location_km;
    }

    std::vector<std::complex<double>> v(n, std::complex<double>(feeder.v_bank_pu, 0.0));
    std::vector<std::complex<double>> v_new(n);
    std::vector<std::complex<double>> branch(n);

    double damping = 1.0;
    double prev_residual = std::numeric_limits<double>::infinity();
    const int max_iters = 5000;
    for (int it = 0; it < max_iters; ++it) {
        // Backward sweep: accumulate bus currents into branch currents.
        std::complex<double> downstream(0.0, 0.0);
        for (std::size_t k = n; k-- > 0;) {
            if (std::abs(v[k]) < kCollapseFloorPu)
                throw SolverError("lumped oracle: bus voltage collapsed (infeasible loading)");
            // Consumption is -P; bus current drawn from the feeder.
            const std::complex<double> s_load(-sources[k].power_pu, 0.0);
            downstream += std::conj(s_load / v[k]);
            branch[k] = downstream;
        }
        // Forward sweep: voltage drops from the bank.
        std::complex<double> upstream(feeder.v_bank_pu, 0.0);
        double residual = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            v_new[k] = upstream - seg_z[k] * branch[k];
            residual = std::max(residual, std::abs(v_new[k] - v[k]));
            upstream = v_new[k];
        }
        if (!std::isfinite(residual))
            throw SolverError("lumped oracle diverged (infeasible loading)");
        if (residual < 1e-10) return std::abs(v_new[n - 1]);
        if (residual > prev_residual) damping = std::max(0.05, damping * 0.5);
        prev_residual = residual;
        for (std::size_t k = 0; k < n; ++k) v[k] += damping * (v_new[k] - v[k]);
    }
    throw SolverError("lumped oracle did not reach residual 1e-10 in 5000 iterations "
                      "(infeasible or near-collapse loading)",
                      prev_residual);
}

} // namespace v2g
