#pragma once
// Hamilton flow of p = lambda^2 + g0^{ij} mu_i mu_j - 1 in zero-cotangent
// coordinates, and of the shifted, x-divided symbol
//   ptilde / x = x xi^2 - 2 xi + x g0^{ij} eta_i eta_j
// in standard coordinates lambda = -1 + x xi, mu = x eta. The shifted field
// extends smoothly to x = 0 and reaches it in finite time with xdot -> -2.
// Geodesics run at speed 2 in flow time: arclength = 2 t.

#include <cmath>
#include <optional>
#include <vector>

#include "ahres/linalg.hpp"
#include "ahres/metric.hpp"
#include "ahres/ode.hpp"

namespace ahres {

// ------------------------------------------------------------ vector fields

struct FlowDeriv {
    double xdot = 0.0;
    vecd ydot;
    double lambdadot = 0.0;
    vecd mudot;
};

inline FlowDeriv hamilton_field_0(const MetricModel& m, const PhasePoint0& pt) {
    const int n = m.n;
    const Metric0 g = g0_eval(m, pt.x, pt.y);
    FlowDeriv d;
    d.ydot.assign(n, 0.0);
    d.mudot.assign(n, 0.0);
    d.xdot = 2.0 * pt.x * pt.lambda;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) d.ydot[i] += 2.0 * pt.x * g.Ginv(i, j) * pt.mu[j];
    double q = 0.0;  // (2 g0^{ij} + x dx g0^{ij}) mu_i mu_j
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            q += (2.0 * g.Ginv(i, j) + pt.x * g.dGinv_dx(i, j)) * pt.mu[i] * pt.mu[j];
    d.lambdadot = -q;
    for (int k = 0; k < n; ++k) {
        double r = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) r += g.dGinv_dy[k](i, j) * pt.mu[i] * pt.mu[j];
        d.mudot[k] = 2.0 * pt.lambda * pt.mu[k] - pt.x * r;
    }
    return d;
}

struct ShiftedDeriv {
    double xdot = 0.0;
    vecd ydot;
    double xidot = 0.0;
    vecd etadot;
};

// Hamilton field of ptilde/x. Note the coefficient (g0 + x dx g0), not
// (2 g0 + x dx g0): the latter appears only in the unshifted lambdadot.
inline ShiftedDeriv hamilton_field_shifted(const MetricModel& m, const ShiftedPoint& sp) {
    const int n = m.n;
    const Metric0 g = g0_eval(m, sp.x, sp.y);
    ShiftedDeriv d;
    d.ydot.assign(n, 0.0);
    d.etadot.assign(n, 0.0);
    d.xdot = 2.0 * sp.x * sp.xi - 2.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) d.ydot[i] += 2.0 * sp.x * g.Ginv(i, j) * sp.eta[j];
    double q = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            q += (g.Ginv(i, j) + sp.x * g.dGinv_dx(i, j)) * sp.eta[i] * sp.eta[j];
    d.xidot = -sp.xi * sp.xi - q;
    for (int k = 0; k < n; ++k) {
        double r = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) r += g.dGinv_dy[k](i, j) * sp.eta[i] * sp.eta[j];
        d.etadot[k] = -sp.x * r;
    }
    return d;
}

// ----------------------------------------------------------- state packing

namespace detail {

inline vecd pack0(const PhasePoint0& p) {
    vecd s(2 * p.y.size() + 2);
    const int n = int(p.y.size());
    s[0] = p.x;
    for (int i = 0; i < n; ++i) s[1 + i] = p.y[i];
    s[1 + n] = p.lambda;
    for (int i = 0; i < n; ++i) s[2 + n + i] = p.mu[i];
    return s;
}

inline PhasePoint0 unpack0(const vecd& s, int n) {
    PhasePoint0 p;
    p.x = s[0];
    p.y.assign(s.begin() + 1, s.begin() + 1 + n);
    p.lambda = s[1 + n];
    p.mu.assign(s.begin() + 2 + n, s.begin() + 2 + 2 * n);
    return p;
}

inline vecd pack_sh(const ShiftedPoint& p) {
    vecd s(2 * p.y.size() + 2);
    const int n = int(p.y.size());
    s[0] = p.x;
    for (int i = 0; i < n; ++i) s[1 + i] = p.y[i];
    s[1 + n] = p.xi;
    for (int i = 0; i < n; ++i) s[2 + n + i] = p.eta[i];
    return s;
}

inline ShiftedPoint unpack_sh(const vecd& s, int n) {
    ShiftedPoint p;
    p.x = s[0];
    p.y.assign(s.begin() + 1, s.begin() + 1 + n);
    p.xi = s[1 + n];
    p.eta.assign(s.begin() + 2 + n, s.begin() + 2 + 2 * n);
    return p;
}

}  // namespace detail

inline OdeRhs flow_rhs(const MetricModel& m) {
    const int n = m.n;
    return [m, n](double, const vecd& s, vecd& ds) {
        const PhasePoint0 p = detail::unpack0(s, n);
        const FlowDeriv d = hamilton_field_0(m, p);
        ds.resize(s.size());
        ds[0] = d.xdot;
        for (int i = 0; i < n; ++i) ds[1 + i] = d.ydot[i];
        ds[1 + n] = d.lambdadot;
        for (int i = 0; i < n; ++i) ds[2 + n + i] = d.mudot[i];
    };
}

inline OdeRhs shifted_rhs(const MetricModel& m) {
    const int n = m.n;
    return [m, n](double, const vecd& s, vecd& ds) {
        const ShiftedPoint p = detail::unpack_sh(s, n);
        const ShiftedDeriv d = hamilton_field_shifted(m, p);
        ds.resize(s.size());
        ds[0] = d.xdot;
        for (int i = 0; i < n; ++i) ds[1 + i] = d.ydot[i];
        ds[1 + n] = d.xidot;
        for (int i = 0; i < n; ++i) ds[2 + n + i] = d.etadot[i];
    };
}

// -------------------------------------------------------------- trajectories

enum class Terminal { time_limit, hit_boundary };

struct BoundaryFit {
    bool valid = false;
    double slope_lambda = 0.0;  // exponent of lambda + 1 in x
    double slope_mu = 0.0;      // exponent of |mu|^2_{g0} in x
    double stderr_lambda = 0.0;
    double stderr_mu = 0.0;
};

struct TrajectorySample {
    double t = 0.0;
    PhasePoint0 pt;
};

struct Trajectory {
    std::vector<TrajectorySample> samples;
    Terminal terminal = Terminal::time_limit;
    double t_end = 0.0;
    double energy_drift = 0.0;  // max |p| over samples
    BoundaryFit fit;
    OdeSolution dense;  // packed states, for interpolation
    int n = 0;
};

struct ShiftedSample {
    double t = 0.0;
    ShiftedPoint pt;
};

struct ShiftedTrajectory {
    std::vector<ShiftedSample> samples;
    Terminal terminal = Terminal::time_limit;
    double t_end = 0.0;
    double energy_drift = 0.0;  // max |ptilde| over samples
    double xdot_end = 0.0;      // terminal xdot, -> -2 at the boundary
    OdeSolution dense;
    int n = 0;
};

struct FlowOptions {
    double t_max = 10.0;
    double x_floor = 1e-8;
    double on_shell_tol = 1e-8;
    OdeOptions ode;
    // lowest x used by the boundary exponent fit; below ~1e-5 the quantity
    // lambda + 1 = O(x^2) drowns in double-precision cancellation
    double fit_x_lo = 1e-4;
};

namespace detail {

inline BoundaryFit boundary_exponents(const MetricModel& m,
                                      const std::vector<TrajectorySample>& samples,
                                      double x_floor, double fit_x_lo) {
    BoundaryFit fit;
    double xlo = std::max(x_floor, fit_x_lo);
    for (int widen = 0; widen < 3 && !fit.valid; ++widen, xlo *= 10.0) {
        vecd xs, l1, mu2;
        for (const auto& s : samples) {
            if (s.pt.x < xlo || s.pt.x > 10.0 * xlo) continue;
            const double lam1 = s.pt.lambda + 1.0;
            const Metric0 g = g0_eval(m, s.pt.x, s.pt.y);
            const double mn = mu_norm2(g, s.pt.mu);
            if (lam1 <= 0.0 || mn <= 0.0) continue;
            xs.push_back(s.pt.x);
            l1.push_back(lam1);
            mu2.push_back(mn);
        }
        if (xs.size() < 5) continue;
        const LineFit fl = fit_loglog(xs, l1);
        const LineFit fm = fit_loglog(xs, mu2);
        fit.valid = true;
        fit.slope_lambda = fl.slope;
        fit.stderr_lambda = fl.slope_stderr;
        fit.slope_mu = fm.slope;
        fit.stderr_mu = fm.slope_stderr;
    }
    return fit;
}

}  // namespace detail

inline Trajectory integrate_flow(const MetricModel& m, const PhasePoint0& start,
                                 const FlowOptions& opt = {}) {
    require(int(start.y.size()) == m.n && int(start.mu.size()) == m.n, errc::precondition,
            "integrate_flow: dimension mismatch");
    require_domain(m, start.x, start.y, "integrate_flow");
    const double p0 = symbol_p(m, start);
    require(std::fabs(p0) <= opt.on_shell_tol, errc::precondition,
            "integrate_flow: start not on the characteristic variety");

    const OdeRhs rhs = flow_rhs(m);
    const double floor_ = opt.x_floor;
    auto event = [floor_](double, const vecd& s) { return s[0] - floor_; };
    OdeResult r = integrate_adaptive(rhs, 0.0, detail::pack0(start), opt.t_max, opt.ode, event);

    Trajectory traj;
    traj.n = m.n;
    traj.dense = r.sol;
    traj.terminal = r.event_hit ? Terminal::hit_boundary : Terminal::time_limit;
    traj.t_end = r.event_hit ? r.t_event : opt.t_max;
    for (std::size_t i = 0; i < r.sol.size(); ++i) {
        TrajectorySample s;
        s.t = r.sol.t(i);
        s.pt = detail::unpack0(r.sol.y(i), m.n);
        traj.energy_drift = std::max(traj.energy_drift, std::fabs(symbol_p(m, s.pt)));
        traj.samples.push_back(std::move(s));
    }
    if (traj.terminal == Terminal::hit_boundary)
        traj.fit = detail::boundary_exponents(m, traj.samples, opt.x_floor, opt.fit_x_lo);
    return traj;
}

inline ShiftedTrajectory integrate_shifted(const MetricModel& m, const ShiftedPoint& start,
                                           const FlowOptions& opt = {}) {
    require(int(start.y.size()) == m.n && int(start.eta.size()) == m.n, errc::precondition,
            "integrate_shifted: dimension mismatch");
    const double p0 = symbol_p_shifted(m, start);
    require(std::fabs(p0) <= opt.on_shell_tol, errc::precondition,
            "integrate_shifted: start not on the characteristic variety");

    const OdeRhs rhs = shifted_rhs(m);
    const double floor_ = opt.x_floor;
    auto event = [floor_](double, const vecd& s) { return s[0] - floor_; };
    OdeResult r = integrate_adaptive(rhs, 0.0, detail::pack_sh(start), opt.t_max, opt.ode, event);

    ShiftedTrajectory traj;
    traj.n = m.n;
    traj.dense = r.sol;
    traj.terminal = r.event_hit ? Terminal::hit_boundary : Terminal::time_limit;
    traj.t_end = r.event_hit ? r.t_event : opt.t_max;
    for (std::size_t i = 0; i < r.sol.size(); ++i) {
        ShiftedSample s;
        s.t = r.sol.t(i);
        s.pt = detail::unpack_sh(r.sol.y(i), m.n);
        traj.energy_drift = std::max(traj.energy_drift, std::fabs(symbol_p_shifted(m, s.pt)));
        traj.samples.push_back(std::move(s));
    }
    const ShiftedPoint last = traj.samples.back().pt;
    traj.xdot_end = hamilton_field_shifted(m, last).xdot;
    return traj;
}

// Locate the time at which a monotone-in-x stretch of a trajectory passes
// through x_target; used to compare the two flows as point sets.
inline std::optional<double> time_at_x(const Trajectory& traj, double x_target) {
    for (std::size_t i = 0; i + 1 < traj.samples.size(); ++i) {
        const double a = traj.samples[i].pt.x - x_target;
        const double b = traj.samples[i + 1].pt.x - x_target;
        if (a == 0.0) return traj.samples[i].t;
        if (a * b > 0.0) continue;
        double lo = traj.samples[i].t, hi = traj.samples[i + 1].t;
        const bool decreasing = a > 0.0;
        for (int it = 0; it < 100; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double xm = traj.dense.eval(mid)[0] - x_target;
            if ((xm > 0.0) == decreasing)
                lo = mid;
            else
                hi = mid;
            if (std::fabs(xm) < 1e-13) return mid;
        }
        return 0.5 * (lo + hi);
    }
    return std::nullopt;
}

}  // namespace ahres
