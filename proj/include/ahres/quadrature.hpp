#pragma once
// Quadrature building blocks: cached Gauss-Legendre rules of arbitrary order
// (Newton on the three-term Legendre recurrence), complex panel sums, and an
// adaptive Gauss-Kronrod 7/15 scheme for generic oscillatory integrands.

#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <vector>

#include "ahres/linalg.hpp"

namespace ahres {

struct QuadRule {
    vecd nodes;  // on [-1, 1]
    vecd weights;
};

inline const QuadRule& gauss_legendre(int n) {
    static std::map<int, QuadRule> cache;
    static std::mutex guard;
    std::lock_guard<std::mutex> lock(guard);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    QuadRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 1.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::fabs(dx) < 1e-15) break;
        }
        rule.nodes[i] = x;
        rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return cache.emplace(n, std::move(rule)).first->second;
}

template <class F>
cplx gl_panel(F&& f, double lo, double hi, const QuadRule& q) {
    const double mid = 0.5 * (hi + lo), rad = 0.5 * (hi - lo);
    cplx acc = 0.0;
    for (std::size_t i = 0; i < q.nodes.size(); ++i)
        acc += q.weights[i] * f(mid + rad * q.nodes[i]);
    return acc * rad;
}

namespace detail {

// 7-point Gauss embedded in the 15-point Kronrod extension (positive half)
inline constexpr double gk_x[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr double gk_wk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double gk_wg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
void gk15(F&& f, double lo, double hi, cplx* kronrod, double* err) {
    const double mid = 0.5 * (hi + lo), rad = 0.5 * (hi - lo);
    cplx acc_k = 0.0, acc_g = 0.0;
    const cplx fmid = f(mid);
    acc_k += gk_wk[7] * fmid;
    acc_g += gk_wg[3] * fmid;
    for (int i = 0; i < 7; ++i) {
        const cplx fp = f(mid + rad * gk_x[i]);
        const cplx fm = f(mid - rad * gk_x[i]);
        acc_k += gk_wk[i] * (fp + fm);
        if (i % 2 == 1) acc_g += gk_wg[i / 2] * (fp + fm);
    }
    *kronrod = acc_k * rad;
    *err = std::abs((acc_k - acc_g) * rad);
}

}  // namespace detail

// Adaptive bisection on the 7/15 pair down to an absolute tolerance.
inline cplx adaptive_quad(const std::function<cplx(double)>& f, double a, double b,
                          double abs_tol, int max_depth = 52) {
    struct Seg {
        double lo, hi, tol;
        int depth;
    };
    std::vector<Seg> stack{{a, b, abs_tol, 0}};
    cplx total = 0.0;
    double leftover = 0.0;
    while (!stack.empty()) {
        const Seg s = stack.back();
        stack.pop_back();
        cplx val;
        double err;
        detail::gk15(f, s.lo, s.hi, &val, &err);
        if (err <= s.tol || s.depth >= max_depth) {
            total += val;
            if (err > s.tol) leftover += err;
            continue;
        }
        const double mid = 0.5 * (s.lo + s.hi);
        stack.push_back({s.lo, mid, 0.5 * s.tol, s.depth + 1});
        stack.push_back({mid, s.hi, 0.5 * s.tol, s.depth + 1});
    }
    require(leftover <= abs_tol, errc::accuracy, "adaptive_quad: failed to reach tolerance");
    return total;
}

}  // namespace ahres
