#pragma once
// Two-point geodesic problems: multistart Newton shooting for the distance
// (arclength equals twice the Hamiltonian flow time on the unit covector
// bundle), the eikonal residual by finite differences, the boundary
// decomposition of the phase against the product of boundary defining
// functions, and the vanishing order of the diagonal-projection Jacobian.

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "ahres/charts.hpp"
#include "ahres/flow.hpp"
#include "ahres/linalg.hpp"
#include "ahres/metric.hpp"

namespace ahres {

enum class Multiplicity { unique, multiple, failed };

inline const char* multiplicity_name(Multiplicity f) {
    switch (f) {
        case Multiplicity::unique: return "unique";
        case Multiplicity::multiple: return "multiple";
        default: return "failed";
    }
}

struct DistanceResult {
    double value = 0.0;
    PhasePoint0 initial_covector;  // fibre data anchored at z
    PhasePoint0 final_covector;    // fibre data anchored at z'
    Multiplicity flag = Multiplicity::failed;
    int solutions_found = 0;
};

struct DistanceOptions {
    int starts = 8;
    int newton_max = 50;
    double damping = 0.5;    // step shrink factor while the residual increases
    double tol = 1e-11;      // endpoint mismatch, sup norm
    double fd_step = 1e-6;   // forward differences for the shooting Jacobian
    double chart_eps = 0.05;     // convex-neighborhood scale
    bool enforce_region = true;  // admissibility: convex ball or interior
    unsigned seed = 7141;        // multistart scatter
    std::optional<PhasePoint0> hint;  // initial covector guess, anchored at z
    double hint_time = 0.0;           // flow-time guess that goes with it
    FlowOptions flow;
};

// closed-form distance of the unperturbed half-space model; doubles as the
// oracle in tests and as the multistart hint everywhere else
inline double half_space_distance(double x, const vecd& y, double xp, const vecd& yp) {
    require(x > 0.0 && xp > 0.0, errc::domain, "half_space_distance: x must be positive");
    double q = (x - xp) * (x - xp);
    for (std::size_t i = 0; i < y.size(); ++i) q += (y[i] - yp[i]) * (y[i] - yp[i]);
    return std::acosh(1.0 + q / (2.0 * x * xp));
}

namespace detail {

// rescale raw fibre coefficients to unit metric length (p = 0) at (x, y)
inline PhasePoint0 onshell_covector(const MetricModel& m, double x, const vecd& y, double lraw,
                                    const vecd& mraw) {
    const Metric0 g = g0_eval(m, x, y);
    const double s = std::sqrt(lraw * lraw + mu_norm2(g, mraw));
    require(s > 1e-14, errc::precondition, "distance: zero-length covector");
    return PhasePoint0{x, y, lraw / s, scaled(mraw, 1.0 / s)};
}

// unit covector at z along the half-space geodesic toward z', from the
// gradient of the closed-form distance
inline void half_space_hint(double x, const vecd& y, double xp, const vecd& yp, double& lam,
                            vecd& mu) {
    const double d = half_space_distance(x, y, xp, yp);
    const double sh = std::sinh(d);
    lam = -((x - xp) / xp - (std::cosh(d) - 1.0)) / sh;
    mu.assign(y.size(), 0.0);
    for (std::size_t i = 0; i < y.size(); ++i) mu[i] = -(y[i] - yp[i]) / (xp * sh);
}

// position after flowing the unit covector for time T; if the trajectory
// leaves the chart early, the exit point is returned instead (the Newton
// residual then steers away from it)
inline vecd shoot_endpoint(const MetricModel& m, const PhasePoint0& zeta, double T,
                           const FlowOptions& base) {
    FlowOptions o = base;
    o.t_max = T;
    const Trajectory tr = integrate_flow(m, zeta, o);
    const vecd s = tr.dense.eval(std::min(T, tr.t_end));
    vecd pos(m.n + 1);
    for (int i = 0; i <= m.n; ++i) pos[i] = s[i];
    return pos;
}

// Euclidean orthonormal complement of u, a chart for the covector sphere
inline std::vector<vecd> sphere_basis(const vecd& u) {
    const std::size_t d = u.size();
    std::vector<vecd> basis;
    std::size_t pivot = 0;
    for (std::size_t i = 1; i < d; ++i)
        if (std::fabs(u[i]) > std::fabs(u[pivot])) pivot = i;
    for (std::size_t j = 0; j < d; ++j) {
        if (j == pivot) continue;
        vecd v(d, 0.0);
        v[j] = 1.0;
        auto project_out = [&](const vecd& w) {
            const double c = dot(v, w) / dot(w, w);
            for (std::size_t i = 0; i < d; ++i) v[i] -= c * w[i];
        };
        project_out(u);
        for (const auto& b : basis) project_out(b);
        const double nv = norm(v);
        for (std::size_t i = 0; i < d; ++i) v[i] /= nv;
        basis.push_back(std::move(v));
    }
    return basis;
}

struct ShootStart {
    double lam = 0.0;
    vecd mu;
    double T = 0.0;
};

struct ShootSolution {
    double T = 0.0;
    PhasePoint0 zeta;      // converged unit covector at z
    PhasePoint0 endpoint;  // full fibre state at the far end
    double resid = 0.0;
};

inline std::optional<ShootSolution> newton_shoot(const MetricModel& m, double x, const vecd& y,
                                                 double xp, const vecd& yp, const ShootStart& st,
                                                 const DistanceOptions& o) {
    const int n = m.n;
    vecd target(n + 1);
    target[0] = xp;
    for (int i = 0; i < n; ++i) target[1 + i] = yp[i];

    PhasePoint0 zeta = onshell_covector(m, x, y, st.lam, st.mu);
    double T = std::clamp(st.T, 1e-8, 50.0);

    auto pack_dir = [&](const PhasePoint0& z) {
        vecd v(n + 1);
        v[0] = z.lambda;
        for (int i = 0; i < n; ++i) v[1 + i] = z.mu[i];
        return v;
    };
    auto residual_at = [&](const PhasePoint0& z, double t) {
        vecd f = shoot_endpoint(m, z, t, o.flow);
        for (int i = 0; i <= n; ++i) f[i] -= target[i];
        return f;
    };

    vecd F = residual_at(zeta, T);
    double r0 = max_abs(F);
    int stalls = 0;
    for (int iter = 0; iter < o.newton_max; ++iter) {
        if (r0 < o.tol) {
            FlowOptions fo = o.flow;
            fo.t_max = T;
            const Trajectory tr = integrate_flow(m, zeta, fo);
            ShootSolution sol;
            sol.T = T;
            sol.zeta = zeta;
            sol.endpoint = unpack0(tr.dense.eval(std::min(T, tr.t_end)), n);
            sol.resid = r0;
            return sol;
        }
        const vecd dir = pack_dir(zeta);
        const auto basis = sphere_basis(dir);
        const double dth = o.fd_step;
        const double dT = o.fd_step * std::max(T, 0.1);

        matd J(n + 1, n + 1);
        for (int j = 0; j < n; ++j) {
            vecd v = dir;
            for (int i = 0; i <= n; ++i) v[i] += dth * basis[j][i];
            const PhasePoint0 zj =
                onshell_covector(m, x, y, v[0], vecd(v.begin() + 1, v.end()));
            const vecd Fj = residual_at(zj, T);
            for (int i = 0; i <= n; ++i) J(i, j) = (Fj[i] - F[i]) / dth;
        }
        const vecd Ft = residual_at(zeta, T + dT);
        for (int i = 0; i <= n; ++i) J(i, n) = (Ft[i] - F[i]) / dT;

        vecd rhs(n + 1);
        for (int i = 0; i <= n; ++i) rhs[i] = -F[i];
        vecd step;
        try {
            step = solve(J, rhs);
        } catch (const error&) {
            return std::nullopt;  // singular shooting Jacobian, give up here
        }

        double scale = 1.0;
        bool accepted = false;
        for (int halve = 0; halve < 14; ++halve) {
            vecd v = dir;
            for (int j = 0; j < n; ++j)
                for (int i = 0; i <= n; ++i) v[i] += scale * step[j] * basis[j][i];
            const double Tn = std::clamp(T + scale * step[n], 1e-8, 50.0);
            PhasePoint0 zn;
            try {
                zn = onshell_covector(m, x, y, v[0], vecd(v.begin() + 1, v.end()));
            } catch (const error&) {
                scale *= o.damping;
                continue;
            }
            const vecd Fn = residual_at(zn, Tn);
            const double rn = max_abs(Fn);
            if (rn < r0) {
                zeta = zn;
                T = Tn;
                F = Fn;
                r0 = rn;
                accepted = true;
                break;
            }
            scale *= o.damping;
        }
        if (!accepted && ++stalls >= 2) return std::nullopt;
    }
    return std::nullopt;
}

}  // namespace detail

// Solve the two-point problem z -> z' by shooting. Admissible pairs lie in a
// convex near-boundary neighborhood or in the interior x, x' > 0.1; the flag
// reports whether the multistarts agreed on one geodesic.
inline DistanceResult distance_shoot(const MetricModel& m, double x, const vecd& y, double xp,
                                     const vecd& yp, const DistanceOptions& opts = {}) {
    const int n = m.n;
    require(int(y.size()) == n && int(yp.size()) == n, errc::precondition,
            "distance_shoot: dimension mismatch");
    require_domain(m, x, y, "distance_shoot");
    require_domain(m, xp, yp, "distance_shoot");

    double sep = std::fabs(x - xp);
    for (int i = 0; i < n; ++i) sep = std::max(sep, std::fabs(y[i] - yp[i]));
    if (sep < 1e-13) {
        DistanceResult out;
        out.value = 0.0;
        out.initial_covector = PhasePoint0{x, y, 0.0, vecd(n, 0.0)};
        out.final_covector = out.initial_covector;
        out.flag = Multiplicity::unique;
        out.solutions_found = 1;
        return out;
    }

    bool in_ball = false;
    if (opts.enforce_region) {
        const double eps = opts.chart_eps;
        double half2 = 0.0;  // |y - y0|^2 at the midpoint center, same for both
        for (int i = 0; i < n; ++i) half2 += 0.25 * (y[i] - yp[i]) * (y[i] - yp[i]);
        in_ball = (half2 + (x - 0.5 * eps) * (x - 0.5 * eps) <= 2.0 * eps * eps) &&
                  (half2 + (xp - 0.5 * eps) * (xp - 0.5 * eps) <= 2.0 * eps * eps);
        require(in_ball || (x > 0.1 && xp > 0.1), errc::precondition,
                "distance_shoot: pair is neither interior nor inside a convex neighborhood");
    }

    // deterministic multistarts: the half-space solution, then scattered
    // directions and times around it
    std::vector<detail::ShootStart> starts;
    {
        detail::ShootStart s0;
        if (opts.hint) {
            s0.lam = opts.hint->lambda;
            s0.mu = opts.hint->mu;
            s0.T = opts.hint_time > 0.0 ? opts.hint_time
                                        : 0.5 * half_space_distance(x, y, xp, yp);
        } else {
            detail::half_space_hint(x, y, xp, yp, s0.lam, s0.mu);
            s0.T = 0.5 * half_space_distance(x, y, xp, yp);
        }
        starts.push_back(s0);
        std::mt19937 rng(opts.seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        const double tfac[] = {1.0, 0.6, 1.6, 1.0, 0.8, 1.3, 1.0, 2.2};
        for (int k = 1; k < opts.starts; ++k) {
            detail::ShootStart s = s0;
            const double spread = 0.25 * (1 + (k - 1) % 4);
            s.lam += spread * gauss(rng);
            for (int i = 0; i < n; ++i) s.mu[i] += spread * gauss(rng);
            s.T = s0.T * tfac[k % 8];
            starts.push_back(s);
        }
    }

    std::vector<std::future<std::optional<detail::ShootSolution>>> jobs;
    jobs.reserve(starts.size());
    for (const auto& st : starts)
        jobs.push_back(std::async(std::launch::async, [&, st] {
            try {
                return detail::newton_shoot(m, x, y, xp, yp, st, opts);
            } catch (const error&) {
                return std::optional<detail::ShootSolution>{};
            }
        }));

    std::vector<detail::ShootSolution> found;
    for (auto& j : jobs) {
        auto sol = j.get();
        if (!sol) continue;
        bool dup = false;
        for (const auto& f : found) {
            if (std::fabs(f.T - sol->T) < 1e-7 &&
                std::fabs(f.zeta.lambda - sol->zeta.lambda) < 1e-6 &&
                max_abs_diff(f.zeta.mu, sol->zeta.mu) < 1e-6) {
                dup = true;
                break;
            }
        }
        if (!dup) found.push_back(*sol);
    }

    DistanceResult out;
    if (found.empty()) {
        out.flag = Multiplicity::failed;
        out.value = std::numeric_limits<double>::quiet_NaN();
        out.initial_covector = PhasePoint0{x, y, 0.0, vecd(n, 0.0)};
        out.final_covector = PhasePoint0{xp, yp, 0.0, vecd(n, 0.0)};
        return out;
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < found.size(); ++i)
        if (found[i].T < found[best].T) best = i;
    const auto& w = found[best];
    out.value = 2.0 * w.T;
    out.initial_covector = w.zeta;
    out.final_covector = w.endpoint;
    out.solutions_found = int(found.size());
    out.flag = found.size() == 1 ? Multiplicity::unique : Multiplicity::multiple;
    return out;
}

inline DistanceResult distance_shoot(const MetricModel& m, const ProductBase& b,
                                     const DistanceOptions& opts = {}) {
    return distance_shoot(m, b.x, b.y, b.xp, b.yp, opts);
}

// d(phase)/d(first endpoint) in fibre form, by central differences of the
// shooting distance; the diagonal is excluded because the distance is not
// differentiable there
inline PhasePoint0 distance_gradient(const MetricModel& m, double x, const vecd& y, double xp,
                                     const vecd& yp, const DistanceOptions& opts = {},
                                     double fd = 1e-4) {
    const DistanceResult base = distance_shoot(m, x, y, xp, yp, opts);
    require(base.flag != Multiplicity::failed, errc::precondition,
            "distance_gradient: shooting failed");
    require(base.value > 0.05, errc::precondition,
            "distance_gradient: pair too close to the diagonal");
    require(fd > 0.0 && fd < 0.25 * base.value, errc::precondition,
            "distance_gradient: step too large for this separation");

    DistanceOptions o = opts;
    o.starts = 1;
    o.enforce_region = false;
    o.hint = base.initial_covector;
    o.hint_time = 0.5 * base.value;

    auto psi = [&](double xq, const vecd& yq) {
        const DistanceResult r = distance_shoot(m, xq, yq, xp, yp, o);
        require(r.flag != Multiplicity::failed, errc::accuracy,
                "distance_gradient: shooting failed at a stencil point");
        return r.value;
    };

    PhasePoint0 g;
    g.x = x;
    g.y = y;
    g.lambda = x * (psi(x + fd, y) - psi(x - fd, y)) / (2.0 * fd);
    g.mu.assign(y.size(), 0.0);
    for (std::size_t i = 0; i < y.size(); ++i) {
        vecd yq = y;
        yq[i] = y[i] + fd;
        const double up = psi(x, yq);
        yq[i] = y[i] - fd;
        const double dn = psi(x, yq);
        g.mu[i] = x * (up - dn) / (2.0 * fd);
    }
    return g;
}

// | |dPsi|_g^2 - 1 |, the eikonal residual at z
inline double eikonal_check(const MetricModel& m, double x, const vecd& y, double xp,
                            const vecd& yp, const DistanceOptions& opts = {}, double fd = 1e-4) {
    const PhasePoint0 g = distance_gradient(m, x, y, xp, yp, opts, fd);
    return std::fabs(symbol_p(m, g));
}

// ------------------------------------------------- boundary decomposition

struct DecompositionSample {
    ProductBase pair;
    double psi = 0.0;
    double psi_tilde = 0.0;  // psi + log rho_L + log rho_R
    Multiplicity flag = Multiplicity::failed;
};

struct DecompositionReport {
    std::vector<DecompositionSample> samples;
    vecd increments;        // |psi_tilde_{k+1} - psi_tilde_k|
    double ratio_max = 0.0;  // worst consecutive-increment ratio
    bool cauchy = false;     // increments decay geometrically
};

// Follow a path of pairs approaching the boundary and record the regular
// part of the phase after peeling off the logs of both boundary defining
// functions. The admissibility region of distance_shoot is deliberately not
// enforced here: the endpoints go to the boundary while the connecting
// geodesics stay interior.
inline DecompositionReport boundary_decomposition(const MetricModel& m,
                                                  const std::vector<ProductBase>& path,
                                                  const DistanceOptions& base = {}) {
    require(path.size() >= 3, errc::precondition,
            "boundary_decomposition: need at least three pairs along the path");
    DistanceOptions o = base;
    o.enforce_region = false;

    DecompositionReport rep;
    for (std::size_t k = 0; k < path.size(); ++k) {
        const auto& pb = path[k];
        const DistanceResult r = distance_shoot(m, pb, o);
        require(r.flag != Multiplicity::failed, errc::accuracy,
                "boundary_decomposition: shooting failed along the path");
        DecompositionSample s;
        s.pair = pb;
        s.psi = r.value;
        s.psi_tilde = r.value + std::log(pb.x) + std::log(pb.xp);
        s.flag = r.flag;
        rep.samples.push_back(std::move(s));
        o.hint = r.initial_covector;  // warm start for the next pair
        o.hint_time = 0.5 * r.value;
    }
    for (std::size_t k = 0; k + 1 < rep.samples.size(); ++k)
        rep.increments.push_back(
            std::fabs(rep.samples[k + 1].psi_tilde - rep.samples[k].psi_tilde));
    rep.cauchy = true;
    for (std::size_t k = 0; k + 1 < rep.increments.size(); ++k) {
        const double prev = rep.increments[k];
        const double ratio = prev > 1e-13 ? rep.increments[k + 1] / prev : 0.0;
        rep.ratio_max = std::max(rep.ratio_max, ratio);
        if (ratio >= 0.95) rep.cauchy = false;
    }
    return rep;
}

// ------------------------------------------------- rank drop of d(pi)

struct RankDropReport {
    LineFit fit;  // slope of log|det| against log r
    double r2 = 0.0;
    vecd r_grid;
    vecd dets;
};

// Differential of (direction, r) -> endpoint of the radius-r geodesic from a
// fixed base point, by finite differences; its determinant vanishes like r^n
// as the sphere collapses onto the diagonal, and the fitted slope returns
// that order.
inline RankDropReport jacobian_dpi(const MetricModel& m, double xp, const vecd& yp,
                                   double lam_dir, const vecd& mu_dir, const vecd& r_grid,
                                   const FlowOptions& fo = {}) {
    const int n = m.n;
    require(int(yp.size()) == n && int(mu_dir.size()) == n, errc::precondition,
            "jacobian_dpi: dimension mismatch");
    require(r_grid.size() >= 4, errc::precondition, "jacobian_dpi: need at least four radii");
    for (double r : r_grid)
        require(r >= 1e-3 && r <= 1e-1, errc::precondition,
                "jacobian_dpi: radii must lie in [1e-3, 1e-1]");

    const PhasePoint0 zeta = detail::onshell_covector(m, xp, yp, lam_dir, mu_dir);
    vecd dir(n + 1);
    dir[0] = zeta.lambda;
    for (int i = 0; i < n; ++i) dir[1 + i] = zeta.mu[i];
    const auto basis = detail::sphere_basis(dir);
    const double dth = 1e-5;

    RankDropReport rep;
    rep.r_grid = r_grid;
    for (double r : r_grid) {
        matd J(n + 1, n + 1);
        for (int j = 0; j < n; ++j) {
            vecd vp = dir, vm = dir;
            for (int i = 0; i <= n; ++i) {
                vp[i] += dth * basis[j][i];
                vm[i] -= dth * basis[j][i];
            }
            const vecd Ep = detail::shoot_endpoint(
                m, detail::onshell_covector(m, xp, yp, vp[0], vecd(vp.begin() + 1, vp.end())),
                0.5 * r, fo);
            const vecd Em = detail::shoot_endpoint(
                m, detail::onshell_covector(m, xp, yp, vm[0], vecd(vm.begin() + 1, vm.end())),
                0.5 * r, fo);
            for (int i = 0; i <= n; ++i) J(i, j) = (Ep[i] - Em[i]) / (2.0 * dth);
        }
        const double dr = 1e-3 * r;
        const vecd Ep = detail::shoot_endpoint(m, zeta, 0.5 * (r + dr), fo);
        const vecd Em = detail::shoot_endpoint(m, zeta, 0.5 * (r - dr), fo);
        for (int i = 0; i <= n; ++i) J(i, n) = (Ep[i] - Em[i]) / (2.0 * dr);
        const double d = std::fabs(det(J));
        require(d > 0.0, errc::fit, "jacobian_dpi: vanishing determinant sample");
        rep.dets.push_back(d);
    }

    rep.fit = fit_loglog(rep.r_grid, rep.dets);
    double sst = 0.0, ssr = 0.0, mean = 0.0;
    for (double d : rep.dets) mean += std::log(d);
    mean /= double(rep.dets.size());
    for (std::size_t i = 0; i < rep.dets.size(); ++i) {
        const double ly = std::log(rep.dets[i]);
        const double fitted = rep.fit.intercept + rep.fit.slope * std::log(rep.r_grid[i]);
        sst += (ly - mean) * (ly - mean);
        ssr += (ly - fitted) * (ly - fitted);
    }
    rep.r2 = sst > 0.0 ? 1.0 - ssr / sst : 0.0;
    require(rep.r2 >= 0.99, errc::fit, "jacobian_dpi: power-law fit is degenerate");
    return rep;
}

}  // namespace ahres
