#pragma once
#include <functional>
#include <string>
#include <vector>

#include "honet/tableau.hpp"

namespace honet {

using OdeState = std::vector<double>;
using OdeRhs = std::function<OdeState(double, const OdeState&)>;

struct IVProblem {
    std::string name;
    OdeRhs f;
    OdeState y0;
    double t0 = 0.0;
    double t1 = 1.0;
    std::function<OdeState(double)> analytic;  // optional
};

/// One explicit RK step with a shared right-hand side.
OdeState ode_step(const Tableau& t, const OdeRhs& f, double time, const OdeState& y, double h);

/// Uniform-step trajectory from t0 to t1, length n_steps + 1.
std::vector<OdeState> ode_integrate(const Tableau& t, const IVProblem& p, std::size_t n_steps);

struct OrderEstimate {
    std::vector<double> hs;      // points used in the final fit
    std::vector<double> errors;  // matching global errors at t1
    double slope = 0.0;          // fitted p in error ~ h^p
    double residual = 0.0;       // RMS of log-log fit residuals
    bool endpoints_trimmed = false;
    int underflow_dropped = 0;   // h values discarded with error < 1e-13
};

/// Least-squares slope of log|error(t1)| vs log h. Sub-1e-13 errors are
/// dropped (roundoff floor); if the fit residual exceeds 0.05 with at least
/// six points, the largest and smallest h are discarded and the fit redone.
OrderEstimate measure_order(const Tableau& t, const IVProblem& p, const std::vector<double>& h_list);

/// Fixed test suite: exponential growth, Gaussian decay, 2-D rotation.
std::vector<IVProblem> standard_problems();

/// Default geometric step grid 2^-2 .. 2^-7.
std::vector<double> default_h_grid();

}  // namespace honet
