#pragma once
// Boundary metric families in normal form g = (dx^2 + g0(x,y,dy)) / x^2 and the
// zero-cotangent phase space over them. Points carry fibre coordinates
// (lambda, mu) dual to dx/x, dy/x; the principal symbol of the shifted,
// rescaled operator is p = lambda^2 + g0^{ij} mu_i mu_j - 1.

#include <cmath>
#include <numbers>
#include <vector>

#include "ahres/linalg.hpp"

namespace ahres {

struct BumpShape {
    // product of squared raised cosines, compactly supported
    double x_halfwidth = 0.8;
    double y_halfwidth = 1.5;
    vecd y_center;  // defaults to the origin, resized to n
};

struct MetricModel {
    enum class Family { half_space, poincare_ball, perturbed };
    Family family = Family::half_space;
    int n = 2;           // boundary dimension; the space has dimension n + 1
    double eps = 0.0;    // perturbation strength, only meaningful for perturbed
    BumpShape bump;
};

inline const char* family_name(MetricModel::Family f) {
    switch (f) {
        case MetricModel::Family::half_space: return "half-space";
        case MetricModel::Family::poincare_ball: return "poincare-ball";
        case MetricModel::Family::perturbed: return "perturbed";
    }
    return "?";
}

// Validated constructor. The eps cap keeps the perturbed family inside the
// regime where the flow diagnostics certify non-trapping behaviour; tests that
// deliberately need stronger focusing construct the aggregate directly.
inline MetricModel make_model(MetricModel::Family f, int n, double eps = 0.0,
                              BumpShape bump = {}) {
    require(n >= 1 && n <= 8, errc::domain, "make_model: boundary dimension n must be in [1, 8]");
    require(eps >= 0.0 && eps <= 0.1, errc::domain, "make_model: eps must lie in [0, 0.1]");
    require(bump.x_halfwidth > 0 && bump.y_halfwidth > 0, errc::domain,
            "make_model: bump halfwidths must be positive");
    MetricModel m;
    m.family = f;
    m.n = n;
    m.eps = (f == MetricModel::Family::perturbed) ? eps : 0.0;
    m.bump = bump;
    m.bump.y_center.resize(n, 0.0);
    return m;
}

// chart domain used for precondition checks
inline bool in_chart_domain(const MetricModel& m, double x, const vecd& y) {
    if (int(y.size()) != m.n) return false;
    if (m.family == MetricModel::Family::poincare_ball) {
        if (x < 0.0 || x > 0.9) return false;
        // polar angles away from the coordinate axis, azimuth bounded
        for (int i = 0; i + 1 < m.n; ++i)
            if (y[i] < 0.1 || y[i] > std::numbers::pi - 0.1) return false;
        if (std::fabs(y[m.n - 1]) > 10.0) return false;
        return true;
    }
    if (x < 0.0 || x > 10.0) return false;
    for (double v : y)
        if (std::fabs(v) > 10.0) return false;
    return true;
}

inline void require_domain(const MetricModel& m, double x, const vecd& y, const char* who) {
    require(in_chart_domain(m, x, y), errc::domain, std::string(who) + ": point outside chart domain");
}

namespace detail {

// squared raised cosine profile, C^3 across the support edge
inline double bump_profile(double u) {
    if (std::fabs(u) >= 1.0) return 0.0;
    const double c = std::cos(0.5 * std::numbers::pi * u);
    return c * c * c * c;
}

inline double bump_profile_d(double u) {
    if (std::fabs(u) >= 1.0) return 0.0;
    const double a = 0.5 * std::numbers::pi * u;
    const double c = std::cos(a);
    return -2.0 * std::numbers::pi * c * c * c * std::sin(a);
}

}  // namespace detail

// scalar bump b(x, y) in [0, 1] and its first partials
struct BumpEval {
    double b = 0.0;
    double db_dx = 0.0;
    vecd db_dy;
};

inline BumpEval eval_bump(const MetricModel& m, double x, const vecd& y) {
    BumpEval out;
    out.db_dy.assign(m.n, 0.0);
    const double ux = x / m.bump.x_halfwidth;
    double fx = detail::bump_profile(ux);
    double dfx = detail::bump_profile_d(ux) / m.bump.x_halfwidth;
    vecd fy(m.n), dfy(m.n);
    double prod_y = 1.0;
    for (int i = 0; i < m.n; ++i) {
        const double c = (i < int(m.bump.y_center.size())) ? m.bump.y_center[i] : 0.0;
        const double u = (y[i] - c) / m.bump.y_halfwidth;
        fy[i] = detail::bump_profile(u);
        dfy[i] = detail::bump_profile_d(u) / m.bump.y_halfwidth;
        prod_y *= fy[i];
    }
    out.b = fx * prod_y;
    out.db_dx = dfx * prod_y;
    for (int i = 0; i < m.n; ++i) {
        double p = fx * dfy[i];
        for (int j = 0; j < m.n; ++j)
            if (j != i) p *= fy[j];
        out.db_dy[i] = p;
    }
    return out;
}

// Boundary metric, its inverse, and the analytic first partials of the inverse
// together with d log det g0. Everything the Hamilton fields and the exact
// Laplacian need.
struct Metric0 {
    matd G;                    // g0_{ij}
    matd Ginv;                 // g0^{ij}
    matd dGinv_dx;             // d/dx of g0^{ij}
    std::vector<matd> dGinv_dy;  // d/dy_k of g0^{ij}
    double dlogdet_dx = 0.0;
    vecd dlogdet_dy;
};

inline Metric0 g0_eval(const MetricModel& m, double x, const vecd& y) {
    require(int(y.size()) == m.n, errc::precondition, "g0_eval: y has wrong dimension");
    const int n = m.n;
    Metric0 out;
    out.G = matd::identity(n);
    out.Ginv = matd::identity(n);
    out.dGinv_dx = matd(n, n);
    out.dGinv_dy.assign(n, matd(n, n));
    out.dlogdet_dy.assign(n, 0.0);

    switch (m.family) {
        case MetricModel::Family::half_space:
            break;

        case MetricModel::Family::poincare_ball: {
            // g0 = (1/4)(1 - x^2)^2 * (round sphere metric in polar coordinates)
            const double c = 0.5 * (1.0 - x * x);
            const double c2 = c * c;
            const double dc = -x;  // dc/dx
            vecd S(n, 1.0);        // S_kk = prod_{j<k} sin^2 y_j
            for (int k = 1; k < n; ++k) {
                const double s = std::sin(y[k - 1]);
                S[k] = S[k - 1] * s * s;
            }
            for (int k = 0; k < n; ++k) {
                out.G(k, k) = c2 * S[k];
                out.Ginv(k, k) = 1.0 / (c2 * S[k]);
                out.dGinv_dx(k, k) = -2.0 * dc / (c2 * c * S[k]);
                for (int mm = 0; mm < k; ++mm) {
                    const double cot = std::cos(y[mm]) / std::sin(y[mm]);
                    out.dGinv_dy[mm](k, k) = -2.0 * cot / (c2 * S[k]);
                }
            }
            out.dlogdet_dx = 2.0 * n * dc / c;
            for (int mm = 0; mm + 1 < n; ++mm) {
                const double cot = std::cos(y[mm]) / std::sin(y[mm]);
                out.dlogdet_dy[mm] = 2.0 * double(n - 1 - mm) * cot;
            }
            break;
        }

        case MetricModel::Family::perturbed: {
            // g0 = (1 + eps b) Id
            const BumpEval be = eval_bump(m, x, y);
            const double a = 1.0 + m.eps * be.b;
            require(a > 0.0, errc::domain, "g0_eval: perturbed metric not positive");
            const double ax = m.eps * be.db_dx;
            for (int k = 0; k < n; ++k) {
                out.G(k, k) = a;
                out.Ginv(k, k) = 1.0 / a;
                out.dGinv_dx(k, k) = -ax / (a * a);
                for (int mm = 0; mm < n; ++mm)
                    out.dGinv_dy[mm](k, k) = -m.eps * be.db_dy[mm] / (a * a);
            }
            out.dlogdet_dx = double(n) * ax / a;
            for (int mm = 0; mm < n; ++mm)
                out.dlogdet_dy[mm] = double(n) * m.eps * be.db_dy[mm] / a;
            break;
        }
    }
    return out;
}

// quadratic form g0^{ij} mu_i mu_j on covectors
inline double mu_norm2(const Metric0& g, const vecd& mu) {
    double s = 0.0;
    const int n = int(mu.size());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s += g.Ginv(i, j) * mu[i] * mu[j];
    return s;
}

// ------------------------------------------------------- phase space points

// point in the rescaled cotangent bundle: covector lambda dx/x + mu . dy/x
struct PhasePoint0 {
    double x = 0.0;
    vecd y;
    double lambda = 0.0;
    vecd mu;
};

// same point after the characteristic shift lambda = -1 + x xi, mu = x eta
struct ShiftedPoint {
    double x = 0.0;
    vecd y;
    double xi = 0.0;
    vecd eta;
};

inline double symbol_p(const MetricModel& m, const PhasePoint0& pt) {
    const Metric0 g = g0_eval(m, pt.x, pt.y);
    return pt.lambda * pt.lambda + mu_norm2(g, pt.mu) - 1.0;
}

// shifted symbol ptilde = (x xi)^2 - 2 x xi + x^2 g0^{ij} eta_i eta_j,
// equal to p at the corresponding unshifted point
inline double symbol_p_shifted(const MetricModel& m, const ShiftedPoint& sp) {
    const Metric0 g = g0_eval(m, sp.x, sp.y);
    const double xxi = sp.x * sp.xi;
    double ee = 0.0;
    for (int i = 0; i < m.n; ++i)
        for (int j = 0; j < m.n; ++j) ee += g.Ginv(i, j) * sp.eta[i] * sp.eta[j];
    return xxi * xxi - 2.0 * xxi + sp.x * sp.x * ee;
}

inline ShiftedPoint shift_to_standard(const PhasePoint0& pt) {
    require(pt.x > 0.0, errc::precondition, "shift_to_standard: needs x > 0");
    ShiftedPoint sp;
    sp.x = pt.x;
    sp.y = pt.y;
    sp.xi = (pt.lambda + 1.0) / pt.x;
    sp.eta = scaled(pt.mu, 1.0 / pt.x);
    return sp;
}

inline PhasePoint0 unshift(const ShiftedPoint& sp) {
    PhasePoint0 pt;
    pt.x = sp.x;
    pt.y = sp.y;
    pt.lambda = -1.0 + sp.x * sp.xi;
    pt.mu = scaled(sp.eta, sp.x);
    return pt;
}

// Per-point classifier for the flow-out: nondegenerate zone x >= eps/2 versus
// the boundary zone where the scattering normalization takes over.
enum class FlowZone { nondegenerate, boundary };

inline FlowZone classify_flow_zone(double x, double eps = 0.1) {
    return (x >= 0.5 * eps) ? FlowZone::nondegenerate : FlowZone::boundary;
}

}  // namespace ahres
