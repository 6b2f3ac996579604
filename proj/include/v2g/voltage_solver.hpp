#pragma once

// Distribution-voltage model of one straight-line feeder: the voltage
// amplitude v(x) and phase theta(x) obey, between point sources,
//
//     v'' = v * theta'^2 + f^2 / v^3,      f := v^2 * theta'  (constant),
//
// and across a point exchange of power P at xi the derivatives jump by
//
//     [w] = -g * P / (v * y^2),   [f] = -b * P / y^2,    w := dv/dx.
//
// The boundary-value problem v(0) = v_bank, w(L) = 0, f(L) = 0 is solved by
// backward shooting from the non-loading terminal: the single unknown v(L)
// is found by Newton iteration on the bank-voltage residual.
//
// All functions here are pure; callers may run many solves concurrently.

#include <vector>

#include "v2g/grid_model.hpp"

namespace v2g {

struct VoltageSample {
    double x_km = 0.0;
    double v_pu = 0.0;
    double theta_rad = 0.0;
    double w_pu_per_km = 0.0; ///< dv/dx
    double flow_pu = 0.0;     ///< f = v^2 dtheta/dx, constant between sources
};

struct VoltageProfile {
    std::vector<VoltageSample> samples;   ///< x strictly increasing, 0 .. L
    std::vector<double> breakpoints_km;   ///< merged source locations
    int newton_iterations = 0;
    double boundary_residual_pu = 0.0;    ///< |v(0) - v_bank| at convergence

    double end_voltage_pu() const { return samples.back().v_pu; }
    double bank_voltage_pu() const { return samples.front().v_pu; }
};

struct SolverConfig {
    double shoot_tol_pu = 1e-9;   ///< tolerance on the v(0) residual
    int max_newton_iters = 50;
    double segment_step_km = 1e-3; ///< max integration step (4th-order fixed step)
};

/// Solves the boundary-value problem for the given point injections
/// (discharge positive, charge/load negative; locations in (0, L]).
/// Throws SolverError on Newton non-convergence or voltage collapse.
VoltageProfile solve_bvp(const FeederSpec& feeder,
                         const std::vector<PointInjection>& injections,
                         const SolverConfig& cfg = {});

/// Linear approximation of the voltage gradient at x: the sum of
/// g/y^2 * P_j over all sources strictly downstream of x.
double approx_gradient(const FeederSpec& feeder,
                       const std::vector<PointInjection>& injections,
                       double x_km);

/// Linear estimate of the end-of-feeder voltage deviation caused by the
/// stations charging (or discharging) with |station_powers_pu|:
/// sum of g/y^2 * |P_i| * xi_i. All powers must share one sign
/// (one of the two operating modes); mixed signs throw std::domain_error.
double end_deviation(const FeederSpec& feeder,
                     const std::vector<StationSpec>& stations,
                     const std::vector<double>& station_powers_pu);

/// Independent ground truth: exact ladder power flow over the same series
/// impedance with constant-power buses at the injection points, solved by
/// damped fixed-point (backward/forward sweep) to a 1e-10 pu residual.
/// Returns the end-of-feeder voltage magnitude [pu]. At most 32 points.
double lumped_oracle(const FeederSpec& feeder,
                     const std::vector<PointInjection>& injections);

} // namespace v2g
