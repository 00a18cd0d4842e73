#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "ahres/gammafn.hpp"
#include "ahres/hypres.hpp"
#include "ahres/linalg.hpp"

using namespace ahres;
using std::numbers::pi;

namespace {

double rel_diff(cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

// reference kernel values, frozen from an independent arbitrary-precision
// evaluation of the hypergeometric representation
struct RefPoint {
    int n;
    double h, r;
    cplx g;
};
const std::vector<RefPoint> ref_points = {
    {1, 1.0, 1.0, {-0.0116220862590438334, 0.17984584671636612}},
    {1, 0.2, 0.5, {-0.12211427436541822, -0.0113457809937339312}},
    {2, 1.0, 1.0, {0.0365859834077599448, 0.0569792931733414217}},
    {2, 0.5, 3.0, {0.00762715887539424568, -0.00221955045541486601}},
    {2, 0.05, 2.0, {-0.014633384982011966, 0.0163486361918612752}},
    {3, 1.0, 1.0, {0.0243274841763634085, 0.0165963200291815961}},
    {3, 0.2, 1.0, {-0.0219664049303204089, -0.0518205456927179734}},
    {3, 0.05, 2.0, {0.000737293078411249228, 0.0205489994958652151}},
    {4, 1.0, 1.0, {0.0142223567976481701, 0.00517738400434667338}},
    {4, 0.1, 0.5, {-0.418629945118692888, -0.229090370242906129}},
};

// geodesic distance between upper half-space points, used by the PDE check
double hs_distance(double x, const vecd& y, double xp, const vecd& yp) {
    double q = (x - xp) * (x - xp);
    for (std::size_t i = 0; i < y.size(); ++i) q += (y[i] - yp[i]) * (y[i] - yp[i]);
    return std::acosh(1.0 + q / (2.0 * x * xp));
}

}  // namespace

TEST_CASE("log gamma matches reference points") {
    // |Gamma(1/2 + i)|^2 = pi / cosh(pi)
    const cplx lg = log_gamma(cplx(0.5, 1.0));
    CHECK(std::abs(std::exp(2.0 * lg.real()) - pi / std::cosh(pi)) < 1e-14);

    CHECK(std::abs(gamma_fn(cplx(1.0, 0.0)) - 1.0) < 1e-14);
    CHECK(std::abs(gamma_fn(cplx(4.0, 0.0)) - 6.0) < 1e-13);
    CHECK(std::abs(gamma_fn(cplx(0.5, 0.0)) - std::sqrt(pi)) < 1e-14);

    // recursion Gamma(z + 1) = z Gamma(z) across the strip the kernels use
    const std::vector<cplx> zs = {{0.5, 2.0}, {1.3, -7.0}, {2.1, 20.0}, {0.7, 0.1}, {2.9, -0.4}};
    for (cplx z : zs) {
        const cplx lhs = log_gamma(z + 1.0);
        const cplx rhs = std::log(z) + log_gamma(z);
        CHECK(std::abs(std::exp(lhs - rhs) - 1.0) < 1e-12);
    }

    // reflection: Gamma(z) Gamma(1 - z) = pi / sin(pi z), with Re z < 1/2
    const cplx z(-1.3, 0.7);
    const cplx prod = gamma_fn(z) * gamma_fn(1.0 - z);
    CHECK(rel_diff(prod, pi / std::sin(pi * z)) < 1e-12);
}

TEST_CASE("closed kernels match frozen reference values") {
    for (const auto& rp : ref_points) {
        const SpectralParam p = make_spectral(rp.n, rp.h);
        const cplx closed = green_closed(p, rp.r);
        const double tol = (rp.n % 2 == 0) ? 1e-12 : 1e-8;
        INFO("n=" << rp.n << " h=" << rp.h << " r=" << rp.r);
        CHECK(rel_diff(closed, rp.g) < tol);
    }
}

TEST_CASE("hypergeometric kernel matches frozen reference values") {
    for (const auto& rp : ref_points) {
        const SpectralParam p = make_spectral(rp.n, rp.h);
        const cplx hyp = green_hypergeometric(p, rp.r);
        INFO("n=" << rp.n << " h=" << rp.h << " r=" << rp.r);
        CHECK(rel_diff(hyp, rp.g) < 1e-9);
    }
}

TEST_CASE("n = 2 kernel equals the textbook expression") {
    for (double h : {1.0, 0.3, 0.07}) {
        for (double r : {0.2, 1.0, 3.5}) {
            const cplx g = green_even(make_spectral(2, h), r);
            const cplx exact = std::exp(cplx(0.0, r / h)) / (4.0 * pi * std::sinh(r));
            CHECK(rel_diff(g, exact) < 1e-14);
            // constant modulus after removing the volume factor
            CHECK(std::abs(std::abs(g) * 4.0 * pi * std::sinh(r)) - 1.0 < 1e-13);
        }
    }
    // printed digits of the worked example
    const cplx g = green_even(make_spectral(2, 1.0), 1.0);
    CHECK(std::abs(g.real() - 0.036586) < 1e-5);
    CHECK(std::abs(g.imag() - 0.056979) < 1e-5);

    // incoming kernel is the conjugate
    const cplx gin = green_even(make_spectral(2, 1.0, false), 1.0);
    CHECK(std::abs(gin - std::conj(g)) < 1e-15);
}

TEST_CASE("n = 4 closed kernel matches a finite-difference descent") {
    // apply the recursion operator numerically (5-point stencils, nested)
    const double delta = 1e-2;
    for (double h : {1.0, 0.5}) {
        auto phi0 = [&](double s) { return std::exp(cplx(0.0, s / h)); };
        auto d_once = [&](auto f, double s) {
            const cplx d1 =
                (-f(s + 2 * delta) + 8.0 * f(s + delta) - 8.0 * f(s - delta) + f(s - 2 * delta)) /
                (12.0 * delta);
            return -d1 / (2.0 * pi * std::sinh(s));
        };
        auto phi1 = [&](double s) { return d_once(phi0, s); };
        for (double r : {0.8, 1.5}) {
            const cplx fd = cplx(0.0, 0.5 * h) * d_once(phi1, r);
            const cplx g = green_even(make_spectral(4, h), r);
            CHECK(rel_diff(fd, g) < 1e-6);
        }
    }
}

TEST_CASE("even and odd kernels agree with the hypergeometric form") {
    for (int n : {1, 2, 3, 4}) {
        for (double h : {1.0, 0.5, 0.2, 0.1}) {
            for (double r : {0.5, 1.0, 2.0, 4.0}) {
                const SpectralParam p = make_spectral(n, h);
                const cplx a = green_closed(p, r);
                const cplx b = green_hypergeometric(p, r);
                INFO("n=" << n << " h=" << h << " r=" << r);
                CHECK(rel_diff(a, b) < 1e-7);
            }
        }
    }
}

TEST_CASE("kernel oscillates outgoing at the advertised frequency") {
    // strip the volume decay e^{-nr/2}; the leftover phase must advance at
    // rate 1/h (outgoing) or -1/h (incoming)
    auto slope = [](const SpectralParam& p) {
        std::vector<double> rs, phase;
        double prev = 0.0, acc = 0.0;
        for (double r = 5.0; r <= 10.0 + 1e-9; r += 0.25) {
            const cplx g = green_closed(p, r) * std::exp(0.5 * p.n * r);
            double a = std::arg(g);
            if (!rs.empty()) {
                double d = a - prev;
                while (d > pi) d -= 2.0 * pi;
                while (d < -pi) d += 2.0 * pi;
                acc += d;
            }
            prev = a;
            rs.push_back(r);
            phase.push_back(acc);
        }
        return fit_line(rs, phase).slope;
    };
    for (int n : {2, 3}) {
        const double h = 0.25;
        CHECK(std::abs(slope(make_spectral(n, h)) - 1.0 / h) < 1e-3);
        CHECK(std::abs(slope(make_spectral(n, h, false)) + 1.0 / h) < 1e-3);
    }
}

TEST_CASE("kernel solves the resolvent equation on the half-space model") {
    // u = G(d(z, z0)) must satisfy (Lap - n^2/4 - 1/h^2) u = 0 away from z0,
    // with Lap u = (n-1) x u_x - x^2 u_xx - x^2 sum_i u_{y_i y_i}
    const int n = 2;
    const double xp = 1.0;
    const vecd yp = {0.0, 0.0};
    struct Pt {
        double x;
        vecd y;
    };
    const std::vector<Pt> pts = {
        {std::exp(0.6), {0.0, 0.0}}, {std::exp(2.0), {0.0, 0.0}}, {1.2, {0.8, -0.3}},
        {0.7, {2.0, 1.0}},           {2.5, {3.0, 0.0}},           {0.8, {0.5, 0.3}},
    };
    for (double h : {1.0, 0.5}) {
        const SpectralParam p = make_spectral(n, h);
        auto u = [&](double x, const vecd& y) {
            return green_even(p, hs_distance(x, y, xp, yp));
        };
        const double delta = 4e-4;
        for (const auto& pt : pts) {
            const double r = hs_distance(pt.x, pt.y, xp, yp);
            REQUIRE(r > 0.5);
            REQUIRE(r < 4.5);
            const cplx u0 = u(pt.x, pt.y);
            const cplx ux = (u(pt.x + delta, pt.y) - u(pt.x - delta, pt.y)) / (2.0 * delta);
            const cplx uxx =
                (u(pt.x + delta, pt.y) - 2.0 * u0 + u(pt.x - delta, pt.y)) / (delta * delta);
            cplx uyy = 0.0;
            for (int i = 0; i < n; ++i) {
                vecd yq = pt.y;
                yq[i] += delta;
                const cplx up = u(pt.x, yq);
                yq[i] -= 2.0 * delta;
                const cplx um = u(pt.x, yq);
                uyy += (up - 2.0 * u0 + um) / (delta * delta);
            }
            const cplx lap = (n - 1.0) * pt.x * ux - pt.x * pt.x * (uxx + uyy);
            const cplx res = lap - (0.25 * n * n + 1.0 / (h * h)) * u0;
            const double rel = std::abs(res) / ((0.25 * n * n + 1.0 / (h * h)) * std::abs(u0));
            INFO("h=" << h << " r=" << r);
            CHECK(rel < 1e-5);
        }
    }
}

TEST_CASE("gamma coefficient matches its closed evaluations") {
    for (double h : {1.0, 0.5, 0.3, 0.27, 0.11, 0.02}) {
        const double y = 1.0 / h;
        const double c2 = gamma_coeff(make_spectral(2, h));
        const double exact2 =
            std::sqrt(2.0 * pi * y / std::sinh(2.0 * pi * y)) * std::cosh(pi * y) / pi;
        CHECK(std::abs(c2 / exact2 - 1.0) < 1e-12);

        const double c3 = gamma_coeff(make_spectral(3, h));
        const double exact3 = std::sqrt(0.25 + y * y) / std::sqrt(pi);
        CHECK(std::abs(c3 / exact3 - 1.0) < 1e-12);
    }
}

TEST_CASE("gamma coefficient grows like h^{-(n-1)/2}") {
    for (int n : {2, 3}) {
        double lo = 1e300, hi = 0.0;
        for (double h = 1.0; h >= 0.02 * (1.0 - 1e-12); h *= 0.8) {
            const double f = gamma_coeff(make_spectral(n, h)) * std::pow(h, 0.5 * (n - 1));
            lo = std::min(lo, f);
            hi = std::max(hi, f);
        }
        CHECK(hi / lo < 4.0);
        // limit value 1/sqrt(pi), approached by h = 0.02
        const double f = gamma_coeff(make_spectral(n, 0.02)) * std::pow(0.02, 0.5 * (n - 1));
        CHECK(std::abs(f * std::sqrt(pi) - 1.0) < 0.1);
    }
}

TEST_CASE("invalid kernel arguments are rejected") {
    CHECK_THROWS_AS(make_spectral(0, 1.0), error);
    CHECK_THROWS_AS(make_spectral(2, -1.0), error);
    CHECK_THROWS_AS(make_spectral(2, 0.0), error);

    auto check_code = [](auto fn, errc want) {
        try {
            fn();
            FAIL("expected a throw");
        } catch (const error& e) {
            CHECK(e.code() == want);
        }
    };
    check_code([] { green_even(make_spectral(3, 1.0), 1.0); }, errc::precondition);
    check_code([] { green_odd(make_spectral(2, 1.0), 1.0); }, errc::precondition);
    check_code([] { green_even(make_spectral(2, 1.0), 0.0); }, errc::domain);
    check_code([] { green_even(make_spectral(2, 1.0), -1.0); }, errc::domain);
    check_code([] { green_hypergeometric(make_spectral(2, 1.0), 0.0); }, errc::domain);
    check_code([] { green_odd(make_spectral(3, 1.0), 0.02); }, errc::accuracy);
    check_code([] { gamma_coeff(SpectralParam{2, 1.5, true}); }, errc::domain);
}
