// Acceptance battery. Each criterion prints one PASS/FAIL line with the
// measured quantity and the tolerance it is held to; the exit code is the
// number of failures. Everything here is pinned: tolerances, grids and
// configurations are written out literally so a change in behavior shows up
// as a red line instead of a silently moved goalpost.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "ahres/charts.hpp"
#include "ahres/distance.hpp"
#include "ahres/flow.hpp"
#include "ahres/hypres.hpp"
#include "ahres/metric.hpp"
#include "ahres/wkb.hpp"

using namespace ahres;

namespace {

MetricModel half_space(int n) { return make_model(MetricModel::Family::half_space, n); }

double bump(double u) {
    const double q = 1.0 - u * u;
    return q > 0.0 ? std::exp(-u * u / q) : 0.0;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

// ---------------------------------------------------------------- criteria

// closed form (derivative / integral) against the hypergeometric series
Outcome cross_representation() {
    double worst = 0.0;
    for (int n : {1, 2, 3, 4})
        for (double h : {1.0, 0.5, 0.2, 0.1})
            for (double r : {0.5, 1.0, 2.0, 4.0}) {
                const SpectralParam sp = make_spectral(n, h, true);
                const cplx a = green_closed(sp, r);
                const cplx b = green_hypergeometric(sp, r);
                worst = std::max(worst, std::abs(a - b) / std::abs(b));
            }
    return {worst < 1e-6, "worst rel " + fmt("%.2e", worst) + " over 64 (n,h,r), tol 1e-6"};
}

// finite differences of the closed-form kernel against the defining equation
Outcome exact_kernel_residual() {
    const MetricModel m = half_space(2);
    const double xp = 1.0;
    const vecd yp{0.0, 0.0};
    const std::vector<std::pair<double, vecd>> grid{{1.0, {0.6, 0.0}},
                                                    {0.8, {-0.9, 0.4}},
                                                    {1.6, {1.2, -0.8}},
                                                    {0.45, {2.0, 1.0}},
                                                    {0.3, {3.0, -1.5}}};
    double worst = 0.0;
    for (double h : {1.0, 0.5}) {
        const SpectralParam sp = make_spectral(2, h, true);
        const auto kern = [&](double x, const vecd& y) {
            return green_closed(sp, half_space_distance(x, y, xp, yp));
        };
        for (const auto& s : residual_check(kern, m, grid, xp, yp, h, h / 4000.0))
            worst = std::max(worst, s.rel);
    }
    return {worst < 1e-5, "worst rel residual " + fmt("%.2e", worst) +
                              " on r in [0.5, 4], h in {1, 0.5}, tol 1e-5"};
}

// energy drift, sech/tanh closed form, boundary exponents of lambda + 1
Outcome flow_integrity() {
    FlowOptions fo;
    fo.t_max = 2.0;
    const Trajectory tr = integrate_flow(half_space(1), {1.0, {0.0}, 0.0, {1.0}}, fo);
    double closed = 0.0;
    for (double t : {0.1, 0.25, 0.5, 1.0, 1.7}) {
        const vecd s = tr.dense.eval(t);
        closed = std::max(closed, std::fabs(s[0] - 1.0 / std::cosh(2.0 * t)));
        closed = std::max(closed, std::fabs(s[1] - std::tanh(2.0 * t)));
    }

    FlowOptions bo;
    bo.t_max = 30.0;
    bo.x_floor = 1e-4;
    const Trajectory te = integrate_flow(half_space(1), {1.0, {0.0}, 0.0, {1.0}}, bo);
    const MetricModel mp = make_model(MetricModel::Family::perturbed, 1, 0.1);
    PhasePoint0 s2{0.6, {-0.4}, -0.2, {}};
    s2.mu = {std::sqrt((1.0 - 0.04) / g0_eval(mp, s2.x, s2.y).Ginv(0, 0))};
    const Trajectory tp = integrate_flow(mp, s2, bo);

    const bool ok = tr.energy_drift < 1e-9 && closed < 1e-8 && te.fit.valid &&
                    std::fabs(te.fit.slope_lambda - 2.0) < 0.2 && tp.fit.valid &&
                    tp.fit.slope_lambda >= 1.5 && tp.fit.slope_mu >= 1.5;
    return {ok, "drift " + fmt("%.1e", tr.energy_drift) + ", closed " + fmt("%.1e", closed) +
                    ", exponent " + fmt("%.3f", te.fit.slope_lambda) + " (2 +- 0.2), perturbed " +
                    fmt("%.3f", std::min(tp.fit.slope_lambda, tp.fit.slope_mu)) + " (>= 1.5)"};
}

// terminal slope of the shifted flow and the face behavior of the scaled fields
Outcome shifted_transversality() {
    const ShiftedTrajectory st =
        integrate_shifted(half_space(2), {1.0, {0.0, 0.0}, 0.2, {0.6, 0.0}});
    const double slope_dev = std::fabs(st.xdot_end + 2.0);

    const MetricModel m = make_model(MetricModel::Family::perturbed, 2, 0.1);
    double face = 0.0;  // worst deviation from the face pattern, all three charts

    ShiftedPoint sp;
    sp.x = 0.0;
    sp.y = {0.3, -0.5};
    sp.xi = 0.8;
    sp.eta = {0.4, 0.1};
    face = std::max(face,
                    std::fabs(transversality_probe(m, Region::R2a, RegionCoords{}, nullptr,
                                                   nullptr, &sp)
                                  .normal_component +
                              2.0));

    RegionCoords c4;
    c4.region = Region::R4a;
    c4.n = 2;
    c4.s = 0.0;
    c4.xp4 = 0.3;
    c4.y4 = {0.2, -0.1};
    c4.Y = {0.5, 0.4};
    Fibre4a f4{0.7, -0.2, {0.6, -0.3}, {0.2, 0.1}};
    face = std::max(
        face,
        std::fabs(transversality_probe(m, Region::R4a, c4, &f4, nullptr, nullptr).normal_component +
                  2.0));

    RegionCoords c5;
    c5.region = Region::R5;
    c5.n = 2;
    c5.s1 = 0.0;
    c5.s2 = 0.4;
    c5.t = 0.6;
    c5.Z = {0.3};
    c5.y5 = {0.1, 0.2};
    c5.axis = 0;
    c5.sign = 1.0;
    Fibre5 f5{0.5, -0.4, 0.3, {0.2}, {0.7, -0.6}};
    const Field5 d = scaled_field_r5(m, c5, f5);
    face = std::max({face, std::fabs(d.ds1 + 2.0), std::fabs(d.ds2), std::fabs(d.dt)});

    const bool ok = st.terminal == Terminal::hit_boundary && slope_dev < 1e-3 && face < 1e-6;
    return {ok, "terminal xdot dev " + fmt("%.1e", slope_dev) + " (tol 1e-3), face pattern dev " +
                    fmt("%.1e", face) + " (tol 1e-6)"};
}

// closed leaf parametrization against the front-face flow system
Outcome leaf_identity() {
    double worst = 0.0;
    for (int n : {1, 2, 3}) {
        vecd N0(n, 0.0);
        N0[0] = 1.0;
        for (int i = 1; i <= 50; ++i)
            for (int j = 1; j <= 50; ++j)
                worst = std::max(worst,
                                 leaf_residual(M_PI * i / 51.0, M_PI * j / 51.0, N0));
    }
    return {worst < 1e-9,
            "worst residual " + fmt("%.2e", worst) + " on 50x50, n in {1,2,3}, tol 1e-9"};
}

// fitted vanishing order of det dpi near the diagonal
Outcome rank_drop() {
    vecd grid;
    for (int k = 0; k <= 6; ++k) grid.push_back(std::min(1e-1, 1e-3 * std::pow(10.0, k / 3.0)));
    const RankDropReport f1 = jacobian_dpi(half_space(1), 1.0, {0.0}, 0.3, {1.0}, grid);
    const RankDropReport f2 = jacobian_dpi(half_space(2), 1.0, {0.0, 0.0}, 0.3, {0.8, 0.5}, grid);
    const MetricModel mp = make_model(MetricModel::Family::perturbed, 2, 0.05);
    const RankDropReport fp = jacobian_dpi(mp, 1.0, {0.0, 0.0}, 0.3, {0.8, 0.5}, grid);
    const bool ok = std::fabs(f1.fit.slope - 1.0) < 0.05 && std::fabs(f2.fit.slope - 2.0) < 0.05 &&
                    std::fabs(fp.fit.slope - 2.0) < 0.1;
    return {ok, "orders " + fmt("%.3f", f1.fit.slope) + " (1 +- 0.05), " +
                    fmt("%.3f", f2.fit.slope) + " (2 +- 0.05), perturbed " +
                    fmt("%.3f", fp.fit.slope) + " (2 +- 0.1)"};
}

// eikonal defect of the shot distance and decay of the regular phase part
Outcome eikonal_and_decomposition() {
    double worst = 0.0;
    worst = std::max(worst, eikonal_check(half_space(2), 1.3, {0.4, -0.2}, 0.8, {1.2, 0.5}));
    const MetricModel pm = make_model(MetricModel::Family::perturbed, 2, 0.05);
    worst = std::max(worst, eikonal_check(pm, 1.3, {0.4, -0.2}, 0.8, {1.2, 0.5}));
    worst = std::max(worst, eikonal_check(pm, 0.9, {0.5, -0.2}, 1.15, {-0.3, 0.35}));

    const MetricModel m1 = half_space(1);
    std::vector<ProductBase> path;
    for (int k = 4; k <= 10; ++k) {
        const double x = std::ldexp(1.0, -k);
        path.push_back(ProductBase{x, {0.0}, x, {1.0}});
    }
    const DecompositionReport rep = boundary_decomposition(m1, path);
    double oracle = 0.0;
    for (const auto& s : rep.samples)
        oracle = std::max(oracle, std::fabs(s.psi - half_space_distance(s.pair.x, s.pair.y,
                                                                        s.pair.xp, s.pair.yp)));
    // the limit of psi + log x + log x' here is 2 log |y - y'| = 0
    const double limit_dev = std::fabs(rep.samples.back().psi_tilde);

    const bool ok = worst < 1e-5 && rep.cauchy && rep.ratio_max < 1.0 && oracle < 1e-8 &&
                    limit_dev < 1e-4;
    return {ok, "eikonal " + fmt("%.1e", worst) + " (tol 1e-5), increment ratio " +
                    fmt("%.2f", rep.ratio_max) + " (< 1), oracle " + fmt("%.1e", oracle) +
                    ", limit " + fmt("%.1e", limit_dev)};
}

// transported kernel against e^{ir/h} / (4 pi sinh r) on the model space
Outcome wkb_vs_model() {
    const MetricModel m = half_space(2);
    const double h = 0.3;
    const vecd yp{0.0, 0.0};
    const struct {
        double x;
        vecd y;
    } pts[] = {{1.0, {0.12, 0.0}}, {1.0, {0.151, 0.0}}, {0.7, {0.3, 0.2}},  {1.9, {1.4, 0.0}},
               {0.32, {0.9, -0.6}}, {2.4, {3.0, 1.0}},   {0.2, {6.0, 0.0}}};
    const WkbOptions wo;
    double worst = 0.0, r_lo = 1e9, r_hi = 0.0;
    for (const auto& p : pts) {
        const double r = half_space_distance(p.x, p.y, 1.0, yp);
        r_lo = std::min(r_lo, r);
        r_hi = std::max(r_hi, r);
        const cplx K = wkb_kernel(m, p.x, p.y, 1.0, yp, h, wo);
        const cplx G = std::exp(cplx(0.0, r / h)) / (4.0 * M_PI * std::sinh(r));
        worst = std::max(worst, std::abs(K - G) / std::abs(G));
    }
    return {worst < 1e-5, "worst rel " + fmt("%.2e", worst) + " on r in [" + fmt("%.2f", r_lo) +
                              ", " + fmt("%.2f", r_hi) + "], tol 1e-5"};
}

// h-exponent of the FD residual of the transported kernel, perturbed metric
Outcome wkb_residual_scaling() {
    BumpShape bs;
    bs.x_halfwidth = 1.5;
    bs.y_halfwidth = 1.0;
    bs.y_center = {0.5, 0.0};
    const MetricModel m = make_model(MetricModel::Family::perturbed, 2, 0.1, bs);
    const double xp = 1.0;
    const vecd yp{0.0, 0.0};
    const std::vector<std::pair<double, vecd>> grid{{0.75, {0.45, 0.1}}, {1.3, {-0.5, 0.25}}};
    WkbOptions wo;
    wo.fd_angle = 2e-3;
    wo.flow.ode.rtol = wo.flow.ode.atol = 1e-13;
    wo.dist.flow.ode.rtol = wo.dist.flow.ode.atol = 1e-13;
    vecd hs, res;
    for (int k = 0; k <= 3; ++k) {
        const double h = 0.2 * std::pow(2.0, -k);
        const auto kern = [&](double x, const vecd& y) {
            return wkb_kernel(m, x, y, xp, yp, h, wo);
        };
        double worstr = 0.0;
        for (const auto& s : residual_check(kern, m, grid, xp, yp, h, h / 300.0))
            worstr = std::max(worstr, s.rel);
        hs.push_back(h);
        res.push_back(worstr);
    }
    const double slope = fit_loglog(hs, res).slope;
    return {std::fabs(slope - 2.0) < 0.3,
            "fitted exponent " + fmt("%.3f", slope) + " over h = 0.2 * 2^{-k}, k = 0..3 (2 +- 0.3)"};
}

// truncation order of the expansion against the quadrature oracle
Outcome stationary_orders() {
    struct Pair {
        const char* name;
        phase_fn phi;
        amp_fn a;
        double lo, hi;
    };
    const std::vector<Pair> pairs{
        {"quadratic", [](double x) { return 0.5 * x * x; },
         [](double x) { return cplx(bump(x / 2.0), 0.0); }, -2.0, 2.0},
        {"cubic tilt", [](double x) { return 0.5 * x * x + 0.05 * x * x * x; },
         [](double x) { return cplx(bump(x / 2.0) * (1.0 + 0.5 * x), 0.0); }, -2.0, 2.0},
        {"negative curvature", [](double x) { return -0.5 * x * x - 0.05 * x * x * x; },
         [](double x) { return cplx(bump(x / 2.0) * (1.0 + 0.5 * x), 0.0); }, -2.0, 2.0},
        {"sine bend", [](double x) { return 0.5 * x * x + 0.2 * std::sin(x); },
         [](double x) { return cplx(bump(x / 2.0) * (1.0 + x * x), 0.0); }, -2.0, 2.0},
        {"quartic shift",
         [](double x) { return 0.5 * (x - 0.3) * (x - 0.3) + 0.1 * std::pow(x - 0.3, 4); },
         [](double x) { return bump((x - 0.3) / 1.7) * cplx(1.0, 0.3 * x); }, -1.4, 2.0},
    };
    double dev0 = 0.0, dev1 = 0.0;
    for (const auto& p : pairs) {
        vecd hs, e0, e1;
        for (int k = 2; k <= 6; ++k) {
            const double h = 0.1 * std::pow(2.0, -k);
            const cplx exact = oscillatory_quad(p.phi, p.a, h, p.lo, p.hi);
            hs.push_back(h);
            e0.push_back(std::abs(stationary_phase(p.phi, p.a, h, 0, p.lo, p.hi) - exact) /
                         std::abs(exact));
            e1.push_back(std::abs(stationary_phase(p.phi, p.a, h, 1, p.lo, p.hi) - exact) /
                         std::abs(exact));
        }
        dev0 = std::max(dev0, std::fabs(fit_loglog(hs, e0).slope - 1.0));
        dev1 = std::max(dev1, std::fabs(fit_loglog(hs, e1).slope - 2.0));
    }
    return {dev0 < 0.2 && dev1 < 0.2, "worst order dev " + fmt("%.3f", dev0) + " (k = 0), " +
                                          fmt("%.3f", dev1) + " (k = 1) on 5 pairs, tol 0.2"};
}

// the gamma-quotient prefactor stays in a narrow band after the h rescale
Outcome gamma_band() {
    double factor = 0.0;
    for (int n : {2, 3}) {
        double lo = 1e300, hi = 0.0;
        for (int k = 0; k <= 12; ++k) {
            const double h = 0.02 * std::pow(50.0, k / 12.0);
            const double v = gamma_coeff(make_spectral(n, h, true)) * std::pow(h, 0.5 * (n - 1));
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        factor = std::max(factor, hi / lo);
    }
    return {factor < 4.0, "band factor " + fmt("%.3f", factor) +
                              " over h in [0.02, 1], n in {2, 3}, tol 4"};
}

// conjugated-operator identity on smooth tests and the indicial round trip
Outcome conjugate_and_indicial() {
    const MetricModel m = half_space(2);
    const SupportBox box{0.5, 1.5, {-0.5, -0.5}, {0.5, 0.5}};
    const auto gauss = [](double x, const vecd& y) {
        const double q = (x - 1.0) * (x - 1.0) + y[0] * y[0] + y[1] * y[1];
        return std::exp(-q / (0.25 * 0.25));
    };
    const auto ridge = [](double x, const vecd&) {
        return std::exp(-(x - 1.0) * (x - 1.0) / 0.09);
    };
    double defect = 0.0;
    for (double h : {1.0, 0.5, 0.25})
        defect = std::max(defect, q_conjugate_check(m, gauss, box, h, 1e-3).defect);
    for (double h : {1.0, 0.25})
        defect = std::max(defect, q_conjugate_check(m, ridge, box, h, 1e-3).defect);

    double round = 0.0;
    const cplx e(0.7, -0.2);
    for (int j : {0, 1, 2, 5})
        for (double h : {1.0, 0.3})
            round = std::max(round,
                             std::abs(indicial_poly(j, h) * indicial_solve(j, h, e) + e) /
                                 std::abs(e));
    return {defect < 1e-4 && round < 1e-14, "defect " + fmt("%.2e", defect) +
                                                " (tol 1e-4), round trip " + fmt("%.1e", round) +
                                                " (tol 1e-14)"};
}

}  // namespace

int main() {
    struct Criterion {
        const char* label;
        Outcome (*fn)();
    };
    const Criterion list[] = {
        {"kernel representations agree", cross_representation},
        {"exact kernel solves its equation", exact_kernel_residual},
        {"flow drift, closed form, boundary exponents", flow_integrity},
        {"shifted flow transversality", shifted_transversality},
        {"front-face leaf identity", leaf_identity},
        {"diagonal projection rank drop", rank_drop},
        {"eikonal and boundary phase decomposition", eikonal_and_decomposition},
        {"geometric optics matches the model kernel", wkb_vs_model},
        {"wkb residual h-scaling (perturbed)", wkb_residual_scaling},
        {"stationary phase truncation orders", stationary_orders},
        {"high-energy coefficient band", gamma_band},
        {"conjugated identity and indicial solve", conjugate_and_indicial},
    };

    int failures = 0;
    int id = 0;
    const auto all0 = std::chrono::steady_clock::now();
    for (const auto& c : list) {
        ++id;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.fn();
        } catch (const std::exception& ex) {
            out = {false, std::string("exception: ") + ex.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                                .count();
        if (!out.pass) ++failures;
        std::printf("[%2d] %s  %-44s %s  (%.2f s)\n", id, out.pass ? "PASS" : "FAIL", c.label,
                    out.detail.c_str(), secs);
    }
    const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - all0)
                             .count();
    std::printf("%d of 12 criteria passed in %.1f s\n", 12 - failures, total);
    return failures;
}
