#pragma once
// Small dense linear algebra (dimensions <= 8 throughout this library),
// error taxonomy, and the least-squares line fit used by exponent diagnostics.

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ahres {

using cplx = std::complex<double>;
using vecd = std::vector<double>;

// Failure classes. The CLI maps domain/precondition to exit code 3 and
// invariant (accuracy/integrator/caustic/fit) failures to exit code 1.
enum class errc { domain, precondition, accuracy, integrator, caustic, fit };

class error : public std::runtime_error {
public:
    error(errc c, const std::string& what) : std::runtime_error(what), code_(c) {}
    errc code() const noexcept { return code_; }

private:
    errc code_;
};

[[noreturn]] inline void fail(errc c, const std::string& what) { throw error(c, what); }

inline void require(bool ok, errc c, const std::string& what) {
    if (!ok) fail(c, what);
}

// ---------------------------------------------------------------- vectors

inline double dot(const vecd& a, const vecd& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm(const vecd& a) { return std::sqrt(dot(a, a)); }

inline vecd axpy(double alpha, const vecd& x, const vecd& y) {
    vecd r(y);
    for (std::size_t i = 0; i < x.size(); ++i) r[i] += alpha * x[i];
    return r;
}

inline vecd scaled(const vecd& x, double alpha) {
    vecd r(x);
    for (auto& v : r) v *= alpha;
    return r;
}

inline double max_abs_diff(const vecd& a, const vecd& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

inline double max_abs(const vecd& a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::fabs(v));
    return m;
}

// ---------------------------------------------------------------- matrices

class matd {
public:
    matd() = default;
    matd(std::size_t r, std::size_t c, double fill = 0.0) : r_(r), c_(c), a_(r * c, fill) {}

    static matd identity(std::size_t n) {
        matd m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    double& operator()(std::size_t i, std::size_t j) { return a_[i * c_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * c_ + j]; }
    std::size_t rows() const { return r_; }
    std::size_t cols() const { return c_; }

    vecd mul(const vecd& x) const {
        vecd y(r_, 0.0);
        for (std::size_t i = 0; i < r_; ++i)
            for (std::size_t j = 0; j < c_; ++j) y[i] += (*this)(i, j) * x[j];
        return y;
    }

private:
    std::size_t r_ = 0, c_ = 0;
    vecd a_;
};

// LU with partial pivoting; returns the determinant, solves in place if b given.
// Throws errc::domain on (numerically) singular input.
inline double lu_det_solve(matd A, vecd* b) {
    const std::size_t n = A.rows();
    require(A.cols() == n, errc::precondition, "lu: square matrix required");
    double det = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::fabs(A(i, k)) > std::fabs(A(piv, k))) piv = i;
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(A(k, j), A(piv, j));
            if (b) std::swap((*b)[k], (*b)[piv]);
            det = -det;
        }
        const double akk = A(k, k);
        if (akk == 0.0) {
            if (b) fail(errc::domain, "lu: singular matrix");
            return 0.0;
        }
        det *= akk;
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = A(i, k) / akk;
            A(i, k) = f;
            for (std::size_t j = k + 1; j < n; ++j) A(i, j) -= f * A(k, j);
            if (b) (*b)[i] -= f * (*b)[k];
        }
    }
    if (b) {
        for (std::size_t ii = n; ii-- > 0;) {
            for (std::size_t j = ii + 1; j < n; ++j) (*b)[ii] -= A(ii, j) * (*b)[j];
            (*b)[ii] /= A(ii, ii);
        }
    }
    return det;
}

inline vecd solve(const matd& A, vecd b) {
    lu_det_solve(A, &b);
    return b;
}

inline double det(const matd& A) { return lu_det_solve(A, nullptr); }

// Cholesky-based SPD test; fills L if requested.
inline bool cholesky(const matd& A, matd* L = nullptr) {
    const std::size_t n = A.rows();
    matd C(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = A(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= C(i, k) * C(j, k);
            if (i == j) {
                if (s <= 0.0) return false;
                C(i, i) = std::sqrt(s);
            } else {
                C(i, j) = s / C(j, j);
            }
        }
    }
    if (L) *L = C;
    return true;
}

// ------------------------------------------------------------- line fits

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;  // 1-sigma from residual scatter
};

inline LineFit fit_line(const vecd& x, const vecd& y) {
    const std::size_t m = x.size();
    require(m >= 2 && y.size() == m, errc::precondition, "fit_line: need >= 2 points");
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < m; ++i) { sx += x[i]; sy += y[i]; }
    const double mx = sx / double(m), my = sy / double(m);
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    require(sxx > 0, errc::fit, "fit_line: degenerate abscissas");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    if (m > 2) {
        double ss = 0;
        for (std::size_t i = 0; i < m; ++i) {
            const double r = y[i] - (f.intercept + f.slope * x[i]);
            ss += r * r;
        }
        f.slope_stderr = std::sqrt(ss / double(m - 2) / sxx);
    }
    return f;
}

// log-log power fit: y ~ C x^p, returns p with stderr
inline LineFit fit_loglog(const vecd& x, const vecd& y) {
    vecd lx(x.size()), ly(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        require(x[i] > 0 && y[i] > 0, errc::fit, "fit_loglog: positive data required");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    return fit_line(lx, ly);
}

}  // namespace ahres
