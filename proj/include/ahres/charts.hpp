#pragma once
// Coordinate atlas of the blown-up double space. Five region families cover
// neighbourhoods of the diagonal, the two boundary faces, their corner, and
// the front face:
//   R1   interior x interior            (z, z')
//   R2a  left face x interior           (x, y, z')
//   R2b  interior x right face          (z, x', y')
//   R3   left x right, away from corner (x, y, x', y')
//   R4a  front face, |y - y'| << x'     (s = x/x', x', y, Y = (y'-y)/x')
//   R4b  mirror of R4a                  (s' = x'/x, x, y', Y' = (y-y')/x)
//   R5   front face, angular sector     (s1 = x/t, s2 = x'/t, t = eps*(y'_a - y_a),
//                                        Z_i = eps*(y'_i - y_i)/t, y)
// where a is the boundary axis with the largest separation and eps = +-1 makes
// t positive. Fibre transforms are the exact dualities induced by these base
// changes on lambda dx/x + mu dy/x + lambda' dx'/x' + mu' dy'/x'; in region
// coordinates the fibres are plain canonical coefficients, e.g. in R5
//   alpha = sigma1 ds1 + sigma2 ds2 + tau dt + zeta.dZ + eta.dy.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "ahres/flow.hpp"
#include "ahres/linalg.hpp"
#include "ahres/metric.hpp"

namespace ahres {

enum class Region { R1, R2a, R2b, R3, R4a, R4b, R5 };

inline const char* region_name(Region r) {
    switch (r) {
        case Region::R1: return "R1";
        case Region::R2a: return "R2a";
        case Region::R2b: return "R2b";
        case Region::R3: return "R3";
        case Region::R4a: return "R4a";
        case Region::R4b: return "R4b";
        case Region::R5: return "R5";
    }
    return "?";
}

// base point of the double space in product coordinates
struct ProductBase {
    double x = 0.0;
    vecd y;
    double xp = 0.0;
    vecd yp;
};

// Region coordinates. Only the fields of the active region are meaningful.
struct RegionCoords {
    Region region = Region::R3;
    int n = 0;

    // R1/R2a/R2b/R3 reuse product fields directly
    ProductBase prod;

    // R4a
    double s = 0.0;     // x / x'
    double xp4 = 0.0;   // x'
    vecd y4;            // y
    vecd Y;             // (y' - y) / x'

    // R4b
    double sp = 0.0;    // x' / x
    double x4 = 0.0;    // x
    vecd yp4;           // y'
    vecd Yp;            // (y - y') / x

    // R5; axis is the singled-out boundary coordinate, sign makes t > 0.
    // Z has size n-1 and skips axis, keeping the original relative order.
    double s1 = 0.0, s2 = 0.0, t = 0.0;
    vecd Z;
    vecd y5;  // y (left copy, original order)
    int axis = 0;
    double sign = 1.0;
};

// ------------------------------------------------------------ base changes

inline RegionCoords to_region(Region r, const ProductBase& b) {
    RegionCoords c;
    c.region = r;
    c.n = int(b.y.size());
    switch (r) {
        case Region::R1:
        case Region::R2a:
        case Region::R2b:
        case Region::R3:
            c.prod = b;
            break;
        case Region::R4a: {
            require(b.xp > 0.0, errc::domain, "to_region R4a: needs x' > 0");
            c.s = b.x / b.xp;
            c.xp4 = b.xp;
            c.y4 = b.y;
            c.Y.resize(c.n);
            for (int i = 0; i < c.n; ++i) c.Y[i] = (b.yp[i] - b.y[i]) / b.xp;
            break;
        }
        case Region::R4b: {
            require(b.x > 0.0, errc::domain, "to_region R4b: needs x > 0");
            c.sp = b.xp / b.x;
            c.x4 = b.x;
            c.yp4 = b.yp;
            c.Yp.resize(c.n);
            for (int i = 0; i < c.n; ++i) c.Yp[i] = (b.y[i] - b.yp[i]) / b.x;
            break;
        }
        case Region::R5: {
            int axis = 0;
            double best = 0.0;
            for (int i = 0; i < c.n; ++i) {
                const double d = std::fabs(b.yp[i] - b.y[i]);
                if (d > best) {
                    best = d;
                    axis = i;
                }
            }
            require(best > 0.0, errc::domain, "to_region R5: needs y != y'");
            c.axis = axis;
            c.sign = (b.yp[axis] - b.y[axis] > 0.0) ? 1.0 : -1.0;
            c.t = c.sign * (b.yp[axis] - b.y[axis]);
            c.s1 = b.x / c.t;
            c.s2 = b.xp / c.t;
            c.y5 = b.y;
            c.Z.clear();
            for (int i = 0; i < c.n; ++i)
                if (i != axis) c.Z.push_back(c.sign * (b.yp[i] - b.y[i]) / c.t);
            break;
        }
    }
    return c;
}

inline ProductBase to_product(const RegionCoords& c) {
    ProductBase b;
    switch (c.region) {
        case Region::R1:
        case Region::R2a:
        case Region::R2b:
        case Region::R3:
            return c.prod;
        case Region::R4a: {
            b.xp = c.xp4;
            b.x = c.s * c.xp4;
            b.y = c.y4;
            b.yp.resize(c.n);
            for (int i = 0; i < c.n; ++i) b.yp[i] = c.y4[i] + c.xp4 * c.Y[i];
            return b;
        }
        case Region::R4b: {
            b.x = c.x4;
            b.xp = c.sp * c.x4;
            b.yp = c.yp4;
            b.y.resize(c.n);
            for (int i = 0; i < c.n; ++i) b.y[i] = c.yp4[i] + c.x4 * c.Yp[i];
            return b;
        }
        case Region::R5: {
            b.x = c.s1 * c.t;
            b.xp = c.s2 * c.t;
            b.y = c.y5;
            b.yp = c.y5;
            b.yp[c.axis] += c.sign * c.t;
            int k = 0;
            for (int i = 0; i < c.n; ++i) {
                if (i == c.axis) continue;
                b.yp[i] += c.sign * c.t * c.Z[k];
                ++k;
            }
            return b;
        }
    }
    return b;
}

// --------------------------------------------------------- fibre transforms

struct ZeroFibrePair {
    double lambda = 0.0;
    vecd mu;
    double lambda_p = 0.0;
    vecd mu_p;
};

// R4a fibre coordinates (sigma, xi', eta, N) dual to (s, x', y, Y).
struct Fibre4a {
    double sigma = 0.0;
    double xip = 0.0;
    vecd eta;
    vecd N;
};

inline ZeroFibrePair fibre_from_4a(const RegionCoords& c, const Fibre4a& f) {
    require(c.region == Region::R4a, errc::precondition, "fibre_from_4a: wrong region");
    const int n = c.n;
    ZeroFibrePair z;
    z.lambda = c.s * f.sigma;
    z.mu.resize(n);
    for (int i = 0; i < n; ++i) z.mu[i] = c.s * (c.xp4 * f.eta[i] - f.N[i]);
    z.mu_p = f.N;
    double ny = 0.0;
    for (int i = 0; i < n; ++i) ny += f.N[i] * c.Y[i];
    z.lambda_p = c.xp4 * f.xip - z.lambda - ny;
    return z;
}

inline Fibre4a fibre_to_4a(const RegionCoords& c, const ZeroFibrePair& z) {
    require(c.region == Region::R4a, errc::precondition, "fibre_to_4a: wrong region");
    require(c.s > 0.0 && c.xp4 > 0.0, errc::domain, "fibre_to_4a: needs s > 0, x' > 0");
    const int n = c.n;
    Fibre4a f;
    f.sigma = z.lambda / c.s;
    f.N = z.mu_p;
    f.eta.resize(n);
    for (int i = 0; i < n; ++i) f.eta[i] = (z.mu[i] / c.s + f.N[i]) / c.xp4;
    double ny = 0.0;
    for (int i = 0; i < n; ++i) ny += f.N[i] * c.Y[i];
    f.xip = (z.lambda + z.lambda_p + ny) / c.xp4;
    return f;
}

// R4b fibre coordinates (sigma', xi, eta', N') dual to (s', x, y', Y').
struct Fibre4b {
    double sigmap = 0.0;
    double xi = 0.0;
    vecd etap;
    vecd Np;
};

inline ZeroFibrePair fibre_from_4b(const RegionCoords& c, const Fibre4b& f) {
    require(c.region == Region::R4b, errc::precondition, "fibre_from_4b: wrong region");
    const int n = c.n;
    ZeroFibrePair z;
    z.lambda_p = c.sp * f.sigmap;
    z.mu_p.resize(n);
    for (int i = 0; i < n; ++i) z.mu_p[i] = c.sp * (c.x4 * f.etap[i] - f.Np[i]);
    z.mu = f.Np;
    double ny = 0.0;
    for (int i = 0; i < n; ++i) ny += f.Np[i] * c.Yp[i];
    z.lambda = c.x4 * f.xi - z.lambda_p - ny;
    return z;
}

inline Fibre4b fibre_to_4b(const RegionCoords& c, const ZeroFibrePair& z) {
    require(c.region == Region::R4b, errc::precondition, "fibre_to_4b: wrong region");
    require(c.sp > 0.0 && c.x4 > 0.0, errc::domain, "fibre_to_4b: needs s' > 0, x > 0");
    const int n = c.n;
    Fibre4b f;
    f.sigmap = z.lambda_p / c.sp;
    f.Np = z.mu;
    f.etap.resize(n);
    for (int i = 0; i < n; ++i) f.etap[i] = (z.mu_p[i] / c.sp + f.Np[i]) / c.x4;
    double ny = 0.0;
    for (int i = 0; i < n; ++i) ny += f.Np[i] * c.Yp[i];
    f.xi = (z.lambda + z.lambda_p + ny) / c.x4;
    return f;
}

// R5 fibre coordinates (sigma1, sigma2, tau, zeta, eta) dual to
// (s1, s2, t, Z, y). zeta matches Z (size n-1, skips the axis); eta and the
// returned mu, mu' are in the original coordinate order.
struct Fibre5 {
    double sigma1 = 0.0;
    double sigma2 = 0.0;
    double tau = 0.0;
    vecd zeta;  // n - 1
    vecd eta;   // n
};

inline ZeroFibrePair fibre_from_5(const RegionCoords& c, const Fibre5& f) {
    require(c.region == Region::R5, errc::precondition, "fibre_from_5: wrong region");
    const int n = c.n;
    const double e = c.sign;
    ZeroFibrePair z;
    z.lambda = c.s1 * f.sigma1;
    z.lambda_p = c.s2 * f.sigma2;
    double zz = 0.0;
    for (int j = 0; j + 1 < n; ++j) zz += f.zeta[j] * c.Z[j];
    z.mu.resize(n);
    z.mu_p.resize(n);
    z.mu_p[c.axis] = e * c.s2 * (c.t * f.tau - z.lambda - z.lambda_p - zz);
    z.mu[c.axis] =
        c.s1 * (e * (z.lambda + z.lambda_p - c.t * f.tau + zz) + c.t * f.eta[c.axis]);
    int k = 0;
    for (int i = 0; i < n; ++i) {
        if (i == c.axis) continue;
        z.mu_p[i] = e * c.s2 * f.zeta[k];
        z.mu[i] = c.s1 * (c.t * f.eta[i] - e * f.zeta[k]);
        ++k;
    }
    return z;
}

inline Fibre5 fibre_to_5(const RegionCoords& c, const ZeroFibrePair& z) {
    require(c.region == Region::R5, errc::precondition, "fibre_to_5: wrong region");
    require(c.s1 > 0.0 && c.s2 > 0.0 && c.t > 0.0, errc::domain,
            "fibre_to_5: needs s1, s2, t > 0");
    const int n = c.n;
    const double e = c.sign;
    Fibre5 f;
    f.sigma1 = z.lambda / c.s1;
    f.sigma2 = z.lambda_p / c.s2;
    f.zeta.resize(n - 1);
    f.eta.resize(n);
    int k = 0;
    double zmu = 0.0;  // sum over off-axis mu'_i Z_i
    for (int i = 0; i < n; ++i) {
        f.eta[i] = z.mu[i] / (c.s1 * c.t) + z.mu_p[i] / (c.s2 * c.t);
        if (i == c.axis) continue;
        f.zeta[k] = e * z.mu_p[i] / c.s2;
        zmu += z.mu_p[i] * c.Z[k];
        ++k;
    }
    f.tau = (z.lambda + z.lambda_p + e * (z.mu_p[c.axis] + zmu) / c.s2) / c.t;
    return f;
}

// ------------------------------------------- shifted symbols per region

// Left symbol after conjugating away the side-face oscillation: the fibre
// input is the conjugated covector, whose physical normal components sit one
// unit lower (lambda_phys = lambda - 1, and likewise on the right factor; the
// tangential components are untouched). In each region this amounts to the
// substitution sigma -> sigma - 1/rho into the inverse fibre transform.

// here `lambda` already denotes the conjugated variable (x xi in flow terms)
inline double shifted_symbol_r2a(const MetricModel& m, double x, const vecd& y, double lambda,
                                 const vecd& mu) {
    const Metric0 g = g0_eval(m, x, y);
    return lambda * lambda - 2.0 * lambda + mu_norm2(g, mu);
}

inline double shifted_symbol_r4a(const MetricModel& m, const RegionCoords& c, const Fibre4a& f) {
    require(c.region == Region::R4a, errc::precondition, "shifted_symbol_r4a: wrong region");
    const double x = c.s * c.xp4;
    const Metric0 g = g0_eval(m, x, c.y4);
    const double sl = c.s * f.sigma;
    vecd w(c.n);
    for (int i = 0; i < c.n; ++i) w[i] = c.s * (c.xp4 * f.eta[i] - f.N[i]);
    return sl * sl - 2.0 * sl + mu_norm2(g, w);
}

namespace detail {
// physical mu of the conjugated covector in R5, original index order
inline vecd r5_shifted_mu(const RegionCoords& c, const Fibre5& f) {
    const int n = c.n;
    const double e = c.sign;
    double zz = 0.0;
    for (int j = 0; j + 1 < n; ++j) zz += f.zeta[j] * c.Z[j];
    const double B = c.s1 * f.sigma1 + c.s2 * f.sigma2 - c.t * f.tau + zz;
    vecd w(n);
    w[c.axis] = c.s1 * (e * (B - 2.0) + c.t * f.eta[c.axis]);
    int k = 0;
    for (int i = 0; i < n; ++i) {
        if (i == c.axis) continue;
        w[i] = c.s1 * (c.t * f.eta[i] - e * f.zeta[k]);
        ++k;
    }
    return w;
}
}  // namespace detail

inline double shifted_symbol_r5(const MetricModel& m, const RegionCoords& c, const Fibre5& f) {
    require(c.region == Region::R5, errc::precondition, "shifted_symbol_r5: wrong region");
    const double x = c.s1 * c.t;
    const Metric0 g = g0_eval(m, x, c.y5);
    const vecd w = detail::r5_shifted_mu(c, f);
    const double sl = c.s1 * f.sigma1;
    return sl * sl - 2.0 * sl + mu_norm2(g, w);
}

// --------------------------------------- transversality of the scaled field

// Hamilton field of (shifted left symbol) / rho_L in canonical region
// coordinates. Its normal component approaches -2 at the left face, and the
// components along the other face functions vanish there: the scaled flow
// crosses the left face transversally and preserves the other faces.

struct Field4a {
    double ds = 0.0, dxp = 0.0;
    vecd dy, dY;
    double dsigma = 0.0, dxip = 0.0;
    vecd deta, dN;
};

inline Field4a scaled_field_r4a(const MetricModel& m, const RegionCoords& c, const Fibre4a& f) {
    require(c.region == Region::R4a, errc::precondition, "scaled_field_r4a: wrong region");
    const int n = c.n;
    const double x = c.s * c.xp4;
    const Metric0 g = g0_eval(m, x, c.y4);
    // f/s = s sigma^2 - 2 sigma + s Q, Q = g0^{ij}(s x', y) w_i w_j, w = x' eta - N
    vecd w(n);
    for (int i = 0; i < n; ++i) w[i] = c.xp4 * f.eta[i] - f.N[i];
    vecd gw(n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) gw[i] += g.Ginv(i, j) * w[j];
    double Q = 0.0, Qx = 0.0;
    for (int i = 0; i < n; ++i) {
        Q += w[i] * gw[i];
        for (int j = 0; j < n; ++j) Qx += g.dGinv_dx(i, j) * w[i] * w[j];
    }
    Field4a d;
    d.dy.assign(n, 0.0);
    d.dY.assign(n, 0.0);
    d.deta.assign(n, 0.0);
    d.dN.assign(n, 0.0);
    d.ds = 2.0 * c.s * f.sigma - 2.0;
    d.dxp = 0.0;
    for (int i = 0; i < n; ++i) d.dy[i] = 2.0 * c.s * c.xp4 * gw[i];
    for (int i = 0; i < n; ++i) d.dY[i] = -2.0 * c.s * gw[i];
    d.dsigma = -(f.sigma * f.sigma + Q + c.s * c.xp4 * Qx);
    double geta = 0.0;
    for (int i = 0; i < n; ++i) geta += gw[i] * f.eta[i];
    d.dxip = -(c.s * c.s * Qx + 2.0 * c.s * geta);
    for (int k = 0; k < n; ++k) {
        double Qy = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) Qy += g.dGinv_dy[k](i, j) * w[i] * w[j];
        d.deta[k] = -c.s * Qy;
    }
    return d;
}

struct Field5 {
    double ds1 = 0.0, ds2 = 0.0, dt = 0.0;
    vecd dZ, dy;
    double dsigma1 = 0.0, dsigma2 = 0.0, dtau = 0.0;
    vecd dzeta, deta;
};

inline Field5 scaled_field_r5(const MetricModel& m, const RegionCoords& c, const Fibre5& f) {
    require(c.region == Region::R5, errc::precondition, "scaled_field_r5: wrong region");
    const int n = c.n;
    const double e = c.sign;
    const double x = c.s1 * c.t;
    const Metric0 g = g0_eval(m, x, c.y5);
    // f/s1 = s1 sigma1^2 - 2 sigma1 + s1 Q, Q = g0^{ij}(s1 t, y) M_i M_j with
    // M = (shifted mu)/s1, which has the s1-free closed form used here;
    // M_axis depends on every normal fibre variable.
    double zz = 0.0;
    for (int j = 0; j + 1 < n; ++j) zz += f.zeta[j] * c.Z[j];
    const double B = c.s1 * f.sigma1 + c.s2 * f.sigma2 - c.t * f.tau + zz;
    vecd M(n);
    M[c.axis] = e * (B - 2.0) + c.t * f.eta[c.axis];
    {
        int k = 0;
        for (int i = 0; i < n; ++i) {
            if (i == c.axis) continue;
            M[i] = c.t * f.eta[i] - e * f.zeta[k];
            ++k;
        }
    }
    vecd gM(n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) gM[i] += g.Ginv(i, j) * M[j];
    double Q = 0.0, Qx = 0.0;
    for (int i = 0; i < n; ++i) {
        Q += M[i] * gM[i];
        for (int j = 0; j < n; ++j) Qx += g.dGinv_dx(i, j) * M[i] * M[j];
    }
    const double ga = gM[c.axis];
    Field5 d;
    d.dZ.assign(n - 1, 0.0);
    d.dy.assign(n, 0.0);
    d.dzeta.assign(n - 1, 0.0);
    d.deta.assign(n, 0.0);

    d.ds1 = 2.0 * c.s1 * f.sigma1 - 2.0 + 2.0 * e * c.s1 * c.s1 * ga;
    d.ds2 = 2.0 * e * c.s1 * c.s2 * ga;
    d.dt = -2.0 * e * c.s1 * c.t * ga;
    {
        int k = 0;
        for (int i = 0; i < n; ++i) {
            if (i == c.axis) continue;
            d.dZ[k] = 2.0 * e * c.s1 * (ga * c.Z[k] - gM[i]);
            ++k;
        }
    }
    for (int i = 0; i < n; ++i) d.dy[i] = 2.0 * c.s1 * c.t * gM[i];

    d.dsigma1 = -(f.sigma1 * f.sigma1 + Q + c.s1 * c.t * Qx + 2.0 * e * c.s1 * f.sigma1 * ga);
    d.dsigma2 = -2.0 * e * c.s1 * f.sigma2 * ga;
    d.dtau = -(c.s1 * c.s1 * Qx + 2.0 * c.s1 * ga * (f.eta[c.axis] - e * f.tau));
    for (int i = 0; i < n; ++i)
        if (i != c.axis) d.dtau -= 2.0 * c.s1 * gM[i] * f.eta[i];
    for (int j = 0; j + 1 < n; ++j) d.dzeta[j] = -2.0 * e * c.s1 * ga * f.zeta[j];
    for (int k = 0; k < n; ++k) {
        double Qy = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) Qy += g.dGinv_dy[k](i, j) * M[i] * M[j];
        d.deta[k] = -c.s1 * Qy;
    }
    return d;
}

// Normal and tangential components of the scaled field at the faces, for
// probing the crossing geometry. For R2a the scaled field is the shifted flow
// field itself.
struct TransversalityReport {
    double normal_component = 0.0;  // approaches -2 at the left face
    double tangency_fr = 0.0;       // R5: ds2 / (s1 s2), stays bounded
    double tangency_ff = 0.0;       // R5: dt / (s1 t), stays bounded
};

inline TransversalityReport transversality_probe(const MetricModel& m, Region r,
                                                 const RegionCoords& c, const Fibre4a* f4,
                                                 const Fibre5* f5, const ShiftedPoint* sp) {
    TransversalityReport rep;
    switch (r) {
        case Region::R2a: {
            require(sp != nullptr, errc::precondition, "probe R2a: shifted point required");
            rep.normal_component = hamilton_field_shifted(m, *sp).xdot;
            break;
        }
        case Region::R4a: {
            require(f4 != nullptr, errc::precondition, "probe R4a: fibre required");
            rep.normal_component = scaled_field_r4a(m, c, *f4).ds;
            break;
        }
        case Region::R5: {
            require(f5 != nullptr, errc::precondition, "probe R5: fibre required");
            const Field5 d = scaled_field_r5(m, c, *f5);
            rep.normal_component = d.ds1;
            rep.tangency_fr = (c.s1 > 0 && c.s2 > 0) ? d.ds2 / (c.s1 * c.s2) : 0.0;
            rep.tangency_ff = (c.s1 > 0 && c.t > 0) ? d.dt / (c.s1 * c.t) : 0.0;
            break;
        }
        default:
            fail(errc::precondition, "transversality_probe: region not covered by the lemma");
    }
    return rep;
}

// ------------------------------------------------------------- leaf model

// Exact flow-out leaf on the front face over a boundary point, in R4a front
// face coordinates (x' = 0, s and Y free). Parametrized by the arc angles
// (r, r') of the two legs; N0 is the launch direction, |N0| = 1.
struct LeafPoint {
    double r = 0.0, rp = 0.0;
    double s = 0.0;         // sin r / sin r'
    vecd Y;                 // ((cos r' - cos r) / sin r') N0
    double lambda = 0.0;    // cos r
    vecd mu;                // sin r N0
    double lambda_p = 0.0;  // -cos r'
    vecd mu_p;              // -sin r' N0
};

inline LeafPoint leaf_model(double r, double rp, const vecd& N0) {
    require(r > 0.0 && r < std::numbers::pi && rp > 0.0 && rp < std::numbers::pi, errc::domain,
            "leaf_model: angles must lie in (0, pi)");
    const int n = int(N0.size());
    double nn = 0.0;
    for (double v : N0) nn += v * v;
    require(std::fabs(nn - 1.0) < 1e-12, errc::precondition, "leaf_model: N0 must be unit");
    LeafPoint L;
    L.r = r;
    L.rp = rp;
    L.s = std::sin(r) / std::sin(rp);
    L.lambda = std::cos(r);
    L.lambda_p = -std::cos(rp);
    L.Y.resize(n);
    L.mu.resize(n);
    L.mu_p.resize(n);
    const double c = (std::cos(rp) - std::cos(r)) / std::sin(rp);
    for (int i = 0; i < n; ++i) {
        L.Y[i] = c * N0[i];
        L.mu[i] = std::sin(r) * N0[i];
        L.mu_p[i] = -std::sin(rp) * N0[i];
    }
    return L;
}

// Residual of the leaf against the front-face flow-out system under the
// pushforward of 2 sin(r) d/dr: with sigma = lambda/s, N = mu',
//   sdot = 2 s lambda, Ydot = 2 s mu, lambdadot = -2 |mu|^2, mudot = 2 lambda mu,
//   sigmadot = -2 s (sigma^2 + |N|^2),
// plus the fibre energy s^2 (sigma^2 + |N|^2) = 1. All derivatives in r are
// closed forms.
inline double leaf_residual(double r, double rp, const vecd& N0) {
    const LeafPoint L = leaf_model(r, rp, N0);
    const double sr = std::sin(r), cr = std::cos(r), srp = std::sin(rp);
    const double speed = 2.0 * sr;
    double res = 0.0;
    // s
    res = std::max(res, std::fabs(speed * (cr / srp) - 2.0 * L.s * L.lambda));
    // Y and mu, componentwise
    for (std::size_t i = 0; i < N0.size(); ++i) {
        const double dY = (sr / srp) * N0[i];
        res = std::max(res, std::fabs(speed * dY - 2.0 * L.s * L.mu[i]));
        const double dmu = cr * N0[i];
        res = std::max(res, std::fabs(speed * dmu - 2.0 * L.lambda * L.mu[i]));
    }
    // lambda
    res = std::max(res, std::fabs(speed * (-sr) - (-2.0 * sr * sr)));
    // sigma equation in the fibre parametrization
    const double sigma = L.lambda / L.s;
    double n2 = 0.0;
    for (double v : L.mu_p) n2 += v * v;  // N = mu' on the leaf: |N| = sin r'
    const double dsigma = speed * (-srp / (sr * sr));  // 2 sin r * d(sigma)/dr
    res = std::max(res, std::fabs(dsigma - (-2.0 * L.s * (sigma * sigma + n2))));
    // fibre energy
    res = std::max(res, std::fabs(L.s * L.s * (sigma * sigma + n2) - 1.0));
    return res;
}

// Endpoint proximity diagnostic: a flow-out leaf degenerates when the two
// boundary endpoints of the geodesic coincide in y. Returns the separation.
inline double endpoint_separation(const Trajectory& fwd, const Trajectory& bwd) {
    require(fwd.terminal == Terminal::hit_boundary && bwd.terminal == Terminal::hit_boundary,
            errc::precondition, "endpoint_separation: both legs must reach the boundary");
    const PhasePoint0 a = fwd.samples.back().pt;
    const PhasePoint0 b = bwd.samples.back().pt;
    return max_abs_diff(a.y, b.y);
}

}  // namespace ahres
