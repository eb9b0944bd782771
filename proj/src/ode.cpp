#include "honet/ode.hpp"

#include <algorithm>
#include <cmath>

namespace honet {

OdeState ode_step(const Tableau& t, const OdeRhs& f, double time, const OdeState& y, double h) {
    if (h <= 0.0) throw contract_error("ode_step: h must be positive");
    const std::vector<double> c = t.abscissae();
    const std::size_t dim = y.size();
    std::vector<OdeState> k;
    k.reserve(t.stages);
    for (std::size_t i = 0; i < t.stages; ++i) {
        OdeState yi = y;
        for (const auto& term : t.stage_rules[i])
            for (std::size_t d = 0; d < dim; ++d)
                yi[d] += h * term.coef * k[static_cast<std::size_t>(term.source)][d];
        OdeState ki = f(time + c[i] * h, yi);
        for (double v : ki)
            if (!std::isfinite(v))
                throw divergence_error("ode_step: non-finite stage k" + std::to_string(i + 1), -1,
                                       static_cast<int>(i));
        k.push_back(std::move(ki));
    }
    OdeState out = y;
    for (const auto& term : t.output_rule)
        for (std::size_t d = 0; d < dim; ++d)
            out[d] += h * term.coef * k[static_cast<std::size_t>(term.source)][d];
    return out;
}

std::vector<OdeState> ode_integrate(const Tableau& t, const IVProblem& p, std::size_t n_steps) {
    if (n_steps < 1) throw contract_error("ode_integrate: n_steps must be >= 1");
    const double h = (p.t1 - p.t0) / static_cast<double>(n_steps);
    std::vector<OdeState> traj;
    traj.reserve(n_steps + 1);
    traj.push_back(p.y0);
    double time = p.t0;
    for (std::size_t s = 0; s < n_steps; ++s) {
        try {
            traj.push_back(ode_step(t, p.f, time, traj.back(), h));
        } catch (const divergence_error& e) {
            throw divergence_error(std::string(e.what()) + " at step " + std::to_string(s), -1,
                                   e.stage_index);
        }
        time = p.t0 + static_cast<double>(s + 1) * h;
    }
    return traj;
}

namespace {

struct Fit {
    double slope;
    double residual;
};

Fit ols_loglog(const std::vector<double>& hs, const std::vector<double>& errs) {
    const std::size_t n = hs.size();
    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = std::log(hs[i]);
        ys[i] = std::log(errs[i]);
    }
    double xm = 0.0, ym = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        xm += xs[i];
        ym += ys[i];
    }
    xm /= static_cast<double>(n);
    ym /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (xs[i] - xm) * (ys[i] - ym);
        sxx += (xs[i] - xm) * (xs[i] - xm);
    }
    const double slope = sxy / sxx;
    const double icept = ym - slope * xm;
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ys[i] - (slope * xs[i] + icept);
        rss += r * r;
    }
    return {slope, std::sqrt(rss / static_cast<double>(n))};
}

}  // namespace

OrderEstimate measure_order(const Tableau& t, const IVProblem& p, const std::vector<double>& h_list) {
    if (h_list.size() < 4) throw contract_error("measure_order: need at least 4 step sizes");
    if (!p.analytic) throw contract_error("measure_order: problem lacks an analytic solution");
    for (std::size_t i = 2; i < h_list.size(); ++i) {
        const double r0 = h_list[1] / h_list[0], ri = h_list[i] / h_list[i - 1];
        if (std::fabs(ri - r0) > 1e-9 * std::fabs(r0))
            throw contract_error("measure_order: h_list must be geometric");
    }
    const OdeState ref = p.analytic(p.t1);
    OrderEstimate est;
    std::vector<double> hs, errs;
    for (double h : h_list) {
        const auto n = static_cast<std::size_t>(std::llround((p.t1 - p.t0) / h));
        const OdeState end = ode_integrate(t, p, std::max<std::size_t>(n, 1)).back();
        double err = 0.0;
        for (std::size_t d = 0; d < ref.size(); ++d) err = std::max(err, std::fabs(end[d] - ref[d]));
        if (err < 1e-13) {
            ++est.underflow_dropped;
            continue;
        }
        hs.push_back(h);
        errs.push_back(err);
    }
    if (hs.size() < 2)
        throw contract_error("measure_order: errors below roundoff floor on " +
                             std::to_string(est.underflow_dropped) + " of " +
                             std::to_string(h_list.size()) + " step sizes; enlarge h range");
    Fit fit = ols_loglog(hs, errs);
    if (fit.residual > 0.05 && hs.size() >= 6) {
        std::vector<double> hs2(hs.begin() + 1, hs.end() - 1);
        std::vector<double> errs2(errs.begin() + 1, errs.end() - 1);
        fit = ols_loglog(hs2, errs2);
        est.endpoints_trimmed = true;
        hs = std::move(hs2);
        errs = std::move(errs2);
    }
    est.hs = std::move(hs);
    est.errors = std::move(errs);
    est.slope = fit.slope;
    est.residual = fit.residual;
    return est;
}

std::vector<IVProblem> standard_problems() {
    std::vector<IVProblem> ps;
    ps.push_back({"growth", [](double, const OdeState& y) { return OdeState{y[0]}; }, {1.0}, 0.0, 1.0,
                  [](double t) { return OdeState{std::exp(t)}; }});
    ps.push_back({"decay", [](double t, const OdeState& y) { return OdeState{-2.0 * t * y[0]}; },
                  {1.0}, 0.0, 1.5, [](double t) { return OdeState{std::exp(-t * t)}; }});
    ps.push_back({"rotation",
                  [](double, const OdeState& y) {
                      return OdeState{-y[1], y[0]};
                  },
                  {1.0, 0.0}, 0.0, 6.283185307179586476925286766559,
                  [](double t) { return OdeState{std::cos(t), std::sin(t)}; }});
    return ps;
}

std::vector<double> default_h_grid() {
    return {0.25, 0.125, 0.0625, 0.03125, 0.015625, 0.0078125};
}

}  // namespace honet
