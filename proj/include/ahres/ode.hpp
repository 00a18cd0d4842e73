#pragma once
// Adaptive embedded Runge-Kutta 5(4), Dormand-Prince coefficients.
// Interpolation inside an accepted step is done by re-stepping from the step's
// left node (one order-5 step of the requested size), which keeps interpolated
// values at the same accuracy as accepted nodes. Events are located by
// bisection on such re-steps.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "ahres/linalg.hpp"

namespace ahres {

using OdeRhs = std::function<void(double t, const vecd& y, vecd& dydt)>;

struct OdeOptions {
    double rtol = 1e-11;
    double atol = 1e-11;
    double h_init = 1e-3;
    double h_min = 1e-13;
    double h_max = 0.5;
    long max_steps = 4000000;
};

namespace dp5 {

inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// difference b(5th) - b(4th), used for the error estimate
inline constexpr double e1 = b1 - 5179.0 / 57600, e3 = b3 - 7571.0 / 16695,
                        e4 = b4 - 393.0 / 640, e5 = b5 + 92097.0 / 339200,
                        e6 = b6 - 187.0 / 2100, e7 = -1.0 / 40;

}  // namespace dp5

// One 5th-order step of size h from (t, y); fills y_out and the embedded-pair
// error estimate err_out (absolute, per component).
inline void dp5_step(const OdeRhs& f, double t, const vecd& y, double h, vecd& y_out,
                     vecd* err_out) {
    using namespace dp5;
    const std::size_t n = y.size();
    vecd k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n);
    f(t, y, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * a21 * k1[i];
    f(t + c2 * h, tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    f(t + c3 * h, tmp, k3);
    for (std::size_t i = 0; i < n; ++i)
        tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    f(t + c4 * h, tmp, k4);
    for (std::size_t i = 0; i < n; ++i)
        tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    f(t + c5 * h, tmp, k5);
    for (std::size_t i = 0; i < n; ++i)
        tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    f(t + h, tmp, k6);
    y_out.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        y_out[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    if (err_out) {
        f(t + h, y_out, k7);
        err_out->resize(n);
        for (std::size_t i = 0; i < n; ++i)
            (*err_out)[i] =
                h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
    }
}

// Accepted node sequence with enough data to interpolate by re-stepping.
class OdeSolution {
public:
    OdeSolution() = default;
    explicit OdeSolution(OdeRhs f) : f_(std::move(f)) {}

    void push(double t, const vecd& y) {
        ts_.push_back(t);
        ys_.push_back(y);
    }

    std::size_t size() const { return ts_.size(); }
    double t(std::size_t i) const { return ts_[i]; }
    const vecd& y(std::size_t i) const { return ys_[i]; }
    double t_front() const { return ts_.front(); }
    double t_back() const { return ts_.back(); }
    const vecd& y_back() const { return ys_.back(); }

    // value at arbitrary time inside the covered span
    vecd eval(double t) const {
        require(!ts_.empty(), errc::precondition, "ode eval: empty solution");
        const bool fwd = ts_.back() >= ts_.front();
        require(fwd ? (t >= ts_.front() - 1e-12 && t <= ts_.back() + 1e-12)
                    : (t <= ts_.front() + 1e-12 && t >= ts_.back() - 1e-12),
                errc::precondition, "ode eval: t outside solution span");
        // rightmost node not past t
        std::size_t lo = 0, hi = ts_.size() - 1;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            if (fwd ? (ts_[mid] <= t) : (ts_[mid] >= t))
                lo = mid;
            else
                hi = mid;
        }
        const double dt = t - ts_[lo];
        if (std::fabs(dt) < 1e-15) return ys_[lo];
        vecd out;
        dp5_step(f_, ts_[lo], ys_[lo], dt, out, nullptr);
        return out;
    }

private:
    OdeRhs f_;
    std::vector<double> ts_;
    std::vector<vecd> ys_;
};

struct OdeResult {
    OdeSolution sol;
    bool event_hit = false;
    double t_event = 0.0;
    vecd y_event;
    long n_steps = 0;
    long n_rejected = 0;
};

// Integrate dy/dt = f(t, y) from t0 to t1 (t1 > t0). If `event` is supplied,
// integration stops where the event function crosses zero from positive to
// negative; the crossing is located by bisection until the bracket in the
// event value is below event_tol.
inline OdeResult integrate_adaptive(const OdeRhs& f, double t0, vecd y0, double t1,
                                    const OdeOptions& opt = {},
                                    const std::function<double(double, const vecd&)>& event = {},
                                    double event_tol = 1e-12) {
    OdeResult res;
    res.sol = OdeSolution(f);
    res.sol.push(t0, y0);

    double t = t0;
    vecd y = std::move(y0);
    double h = std::min(opt.h_init, t1 - t0);
    double ev_prev = event ? event(t, y) : 1.0;
    vecd ynew, err;

    while (t < t1) {
        if (res.n_steps + res.n_rejected > opt.max_steps)
            fail(errc::integrator, "ode: step budget exhausted");
        h = std::min(h, t1 - t);
        if (h < opt.h_min) h = opt.h_min;

        dp5_step(f, t, y, h, ynew, &err);
        double sc = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double tol = opt.atol + opt.rtol * std::max(std::fabs(y[i]), std::fabs(ynew[i]));
            sc = std::max(sc, std::fabs(err[i]) / tol);
        }
        if (sc > 1.0 && h > opt.h_min) {
            ++res.n_rejected;
            h = std::max(opt.h_min, 0.9 * h * std::pow(sc, -0.25));
            continue;
        }

        // accepted
        double t_acc = t + h;
        if (event) {
            const double ev = event(t_acc, ynew);
            if (ev_prev > 0.0 && ev <= 0.0) {
                // bisect inside [t, t_acc] by re-stepping from (t, y)
                double lo = 0.0, hi = h;
                vecd ymid;
                for (int it = 0; it < 200; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    dp5_step(f, t, y, mid, ymid, nullptr);
                    const double em = event(t + mid, ymid);
                    if (em > 0.0)
                        lo = mid;
                    else
                        hi = mid;
                    if (std::fabs(em) < event_tol && em <= 0.0) break;
                }
                dp5_step(f, t, y, hi, ymid, nullptr);
                res.event_hit = true;
                res.t_event = t + hi;
                res.y_event = ymid;
                res.sol.push(res.t_event, ymid);
                ++res.n_steps;
                return res;
            }
            ev_prev = ev;
        }

        t = t_acc;
        y = ynew;
        res.sol.push(t, y);
        ++res.n_steps;
        const double grow = (sc > 1e-30) ? 0.9 * std::pow(sc, -0.2) : 5.0;
        h = std::min(opt.h_max, h * std::min(5.0, std::max(0.2, grow)));
    }
    return res;
}

}  // namespace ahres
