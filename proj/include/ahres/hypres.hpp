#pragma once
// Exact resolvent kernel of hyperbolic (n+1)-space in its three printed
// representations, as a function of geodesic distance r:
//  - n even: closed form from the symbolic descent recursion (no quadrature)
//  - n odd:  one extra descent step integrated against the square-root weight
//  - any n:  hypergeometric form via the Euler integral on phase-graded panels
// plus the high-energy gamma-coefficient factor. Spectral convention:
// zeta = n/2 -+ i/h, outgoing kernels oscillate like e^{+ir/h}.

#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <string>
#include <utility>

#include "ahres/gammafn.hpp"
#include "ahres/linalg.hpp"
#include "ahres/quadrature.hpp"

namespace ahres {

struct SpectralParam {
    int n = 2;
    double h = 1.0;
    bool outgoing = true;

    cplx zeta() const { return cplx(0.5 * n, outgoing ? -1.0 / h : 1.0 / h); }
    double lambda_spec() const { return 1.0 / h; }
};

inline SpectralParam make_spectral(int n, double h, bool outgoing = true) {
    require(n >= 1, errc::domain, "make_spectral: n must be a positive integer");
    require(h > 0.0, errc::domain, "make_spectral: h must be positive");
    return SpectralParam{n, h, outgoing};
}

struct KernelSample {
    int n = 0;
    double h = 0.0;
    double r = 0.0;
    cplx value;
    std::string representation;  // derivative | integral | hypergeometric | wkb
};

namespace detail {

// Descent terms c * cosh(s)^a * sinh(s)^{-b} * e^{is/h}, keyed by (a, b).
// One application of D: f -> -(1/(2 pi sinh s)) f' maps a term to at most
// three, so k applications stay exactly representable.
using TermTable = std::map<std::pair<int, int>, cplx>;

inline TermTable descent_terms(int k, double h) {
    constexpr double pi = std::numbers::pi;
    TermTable t;
    t[{0, 0}] = 1.0;
    for (int step = 0; step < k; ++step) {
        TermTable nt;
        for (const auto& [ab, c] : t) {
            const auto [a, b] = ab;
            nt[{a, b + 1}] += c * cplx(0.0, 1.0 / h) * (-1.0 / (2.0 * pi));
            if (a) nt[{a - 1, b}] += c * double(a) * (-1.0 / (2.0 * pi));
            if (b) nt[{a + 1, b + 2}] += c * double(-b) * (-1.0 / (2.0 * pi));
        }
        t = std::move(nt);
    }
    return t;
}

inline cplx descent_eval(const TermTable& t, double h, double s) {
    const double ch = std::cosh(s), sh = std::sinh(s);
    cplx acc = 0.0;
    for (const auto& [ab, c] : t) {
        const auto [a, b] = ab;
        acc += c * std::pow(ch, a) / std::pow(sh, b);
    }
    return acc * std::exp(cplx(0.0, s / h));
}

}  // namespace detail

// kernel for n even: G = -(h/2i) D^{n/2} e^{ir/h}, exact up to round-off
inline cplx green_even(const SpectralParam& p, double r) {
    require(p.n % 2 == 0, errc::precondition, "green_even: n must be even");
    require(r > 0.0, errc::domain, "green_even: r must be positive");
    const auto terms = detail::descent_terms(p.n / 2, p.h);
    const cplx val = cplx(0.0, 0.5 * p.h) * detail::descent_eval(terms, p.h, r);
    return p.outgoing ? val : std::conj(val);
}

// kernel for n odd: one descent step beyond the even case, then
//   G = -(h / sqrt(2) i) Int_r^inf Phi_k(s) (cosh s - cosh r)^{-1/2} sinh s ds
// with k = (n+1)/2. The endpoint square root is removed by s = r + u^2 and
// the difference of coshs is evaluated through its product form to avoid
// cancellation; the tail decays like e^{-ns/2} and is truncated accordingly.
inline cplx green_odd(const SpectralParam& p, double r) {
    constexpr double pi = std::numbers::pi;
    require(p.n % 2 == 1, errc::precondition, "green_odd: n must be odd");
    require(r > 0.0, errc::domain, "green_odd: r must be positive");
    require(r >= 0.05, errc::accuracy, "green_odd: below the validated range r >= 0.05");
    const int k = (p.n + 1) / 2;
    const auto terms = detail::descent_terms(k, p.h);
    const QuadRule& q = gauss_legendre(24);

    auto weight = [&](double s) {
        // cosh s - cosh r = 2 sinh((s+r)/2) sinh((s-r)/2)
        return 2.0 * std::sinh(0.5 * (s + r));
    };
    auto f_near = [&](double u) {
        const double s = r + u * u;
        const double d = weight(s) * std::sinh(0.5 * u * u);
        return detail::descent_eval(terms, p.h, s) * std::sinh(s) * 2.0 * u / std::sqrt(d);
    };
    auto f_far = [&](double s) {
        const double d = weight(s) * std::sinh(0.5 * (s - r));
        return detail::descent_eval(terms, p.h, s) * std::sinh(s) / std::sqrt(d);
    };

    cplx total = 0.0;
    const int nw = std::max(2, int(std::ceil(1.0 / (pi * p.h))));
    for (int i = 0; i < nw; ++i)
        total += gl_panel(f_near, double(i) / nw, double(i + 1) / nw, q);
    const double s_max = r + 1.0 + 2.0 * std::max(1.0, 56.0 / p.n);
    const double width = std::min(1.0, pi * p.h);
    const int ns = int(std::ceil((s_max - (r + 1.0)) / width));
    for (int i = 0; i < ns; ++i) {
        const double lo = r + 1.0 + (s_max - r - 1.0) * i / ns;
        const double hi = r + 1.0 + (s_max - r - 1.0) * (i + 1) / ns;
        total += gl_panel(f_far, lo, hi, q);
    }
    const cplx val = cplx(0.0, p.h / std::sqrt(2.0)) * total;
    return p.outgoing ? val : std::conj(val);
}

// hypergeometric representation, valid for every n:
//   G = 2^{-2 zeta - 1} pi^{-n/2} (Gamma(zeta)/Gamma(zeta - n/2 + 1))
//       cosh(r/2)^{-2 zeta} F(zeta, zeta - (n-1)/2; 2 zeta - n + 1; cosh(r/2)^{-2})
// with F computed from its Euler integral after t = sin^2(theta). The
// integrand oscillates at frequency 2/h in log(theta) near both endpoints, so
// the panels are graded geometrically (fixed phase travel per panel) instead
// of using one global rule.
inline cplx green_hypergeometric(const SpectralParam& p, double r) {
    constexpr double pi = std::numbers::pi;
    require(r > 0.0, errc::domain, "green_hypergeometric: r must be positive");
    const cplx zeta = p.zeta();
    const cplx e = zeta - 0.5 * p.n;  // -+ i/h, the pure oscillation exponent
    const double w = std::pow(std::cosh(0.5 * r), -2.0);
    const double tw = std::tanh(0.5 * r) * std::tanh(0.5 * r);  // 1 - w, exactly

    auto f = [&](double th) {
        const double sn = std::sin(th), cs = std::cos(th);
        const double s2 = sn * sn, c2 = cs * cs;
        // 1 - s2 w = (1 - w) + w c2 without cancellation
        const double base = tw + w * c2;
        return 2.0 * std::exp(e * (std::log(s2) + std::log(c2)) - zeta * std::log(base));
    };

    const int nn = std::max(12, int(std::ceil(0.8 * (2.0 / p.h) * std::numbers::ln2)) + 4);
    const QuadRule& q = gauss_legendre(nn);
    const int levels = 40;
    cplx total = 0.0;
    for (int half = 0; half < 2; ++half) {
        auto g = [&](double th) { return half == 0 ? f(th) : f(0.5 * pi - th); };
        double hi = 0.25 * pi;
        for (int k = 0; k < levels; ++k) {
            const double lo = (k + 1 < levels) ? 0.5 * hi : hi * 1e-3;
            total += gl_panel(g, lo, hi, q);
            hi = lo;
        }
    }
    const cplx logF = log_gamma(2.0 * zeta - double(p.n) + 1.0) -
                      2.0 * log_gamma(zeta - 0.5 * (p.n - 1.0));
    const cplx logpre = (-2.0 * zeta - 1.0) * std::numbers::ln2 - 0.5 * p.n * std::log(pi) +
                        log_gamma(zeta) - log_gamma(zeta - 0.5 * p.n + 1.0) -
                        2.0 * zeta * std::log(std::cosh(0.5 * r));
    return std::exp(logpre + logF) * total;
}

// closed representation appropriate to the parity of n
inline cplx green_closed(const SpectralParam& p, double r) {
    return (p.n % 2 == 0) ? green_even(p, r) : green_odd(p, r);
}

inline const char* closed_representation(int n) {
    return (n % 2 == 0) ? "derivative" : "integral";
}

// | Gamma(n/2 + iy) Gamma(1 + 2iy) / (Gamma(1 + iy) Gamma(1/2 + iy)^2) |,
// y = 1/h: the prefactor controlling the kernel's high-energy size. Grows
// like y^{(n-1)/2}, which the band test pins down.
inline double gamma_coeff(const SpectralParam& p) {
    require(p.h > 0.0 && p.h <= 1.0, errc::domain, "gamma_coeff: h must lie in (0, 1]");
    const double y = 1.0 / p.h;
    const cplx v = log_gamma(cplx(0.5 * p.n, y)) - log_gamma(cplx(1.0, y)) +
                   log_gamma(cplx(1.0, 2.0 * y)) - 2.0 * log_gamma(cplx(0.5, y));
    return std::exp(v.real());
}

}  // namespace ahres
