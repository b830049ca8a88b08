#pragma once

// Small dense vector/matrix helpers. Everything here is desk-scale (n <= 8 or so);
// clarity and determinism beat throughput.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace supdiff {

using Vec = std::vector<double>;

inline void check_dim(const Vec& a, std::size_t n, const char* what) {
    if (a.size() != n) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

inline double dot(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline Vec add(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw std::invalid_argument("add: dimension mismatch");
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

inline Vec sub(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw std::invalid_argument("sub: dimension mismatch");
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

inline Vec scale(double c, const Vec& a) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = c * a[i];
    return r;
}

// a + c*b
inline Vec axpy(const Vec& a, double c, const Vec& b) {
    if (a.size() != b.size()) throw std::invalid_argument("axpy: dimension mismatch");
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + c * b[i];
    return r;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(const Vec& a) {
    double m = 0.0;
    for (double x : a) m = std::max(m, std::fabs(x));
    return m;
}

inline double norm1(const Vec& a) {
    double s = 0.0;
    for (double x : a) s += std::fabs(x);
    return s;
}

inline Vec unit_vec(std::size_t n, std::size_t i, double sign = 1.0) {
    Vec r(n, 0.0);
    r[i] = sign;
    return r;
}

inline bool all_finite(const Vec& a) {
    for (double x : a) if (!std::isfinite(x)) return false;
    return true;
}

// strict weak order for deterministic sorting of generator lists
inline bool lex_less(const Vec& a, const Vec& b) {
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
        if (a[i] < b[i]) return true;
        if (a[i] > b[i]) return false;
    }
    return a.size() < b.size();
}

// Row-major dense matrix, only what the quadratic nodes and basis math need.
struct Matrix {
    std::size_t rows = 0, cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    Vec mul(const Vec& x) const {
        if (x.size() != cols) throw std::invalid_argument("Matrix::mul: dimension mismatch");
        Vec r(rows, 0.0);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) r[i] += (*this)(i, j) * x[j];
        return r;
    }
};

inline double quad_form(const Matrix& q, const Vec& x) {
    return dot(x, q.mul(x));
}

// Positive semidefiniteness via LDL^T pivots; symmetric input assumed.
// Tolerance is relative to the largest diagonal magnitude.
inline bool is_psd(const Matrix& q, double tol = 1e-9) {
    if (q.rows != q.cols) return false;
    const std::size_t n = q.rows;
    double scale_ref = 1.0;
    for (std::size_t i = 0; i < n; ++i) scale_ref = std::max(scale_ref, std::fabs(q(i, i)));
    Matrix m = q;
    for (std::size_t k = 0; k < n; ++k) {
        double piv = m(k, k);
        if (piv < -tol * scale_ref) return false;
        if (piv <= tol * scale_ref) {
            // zero pivot: row/col must vanish too, else indefinite
            for (std::size_t j = k + 1; j < n; ++j)
                if (std::fabs(m(k, j)) > 1e-7 * scale_ref) return false;
            continue;
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            double f = m(i, k) / piv;
            for (std::size_t j = k; j < n; ++j) m(i, j) -= f * m(k, j);
        }
    }
    return true;
}

// Orthonormalize the span of `vecs` (modified Gram-Schmidt), dropping near-dependent
// inputs. Returns an orthonormal basis of the span.
inline std::vector<Vec> orthonormal_basis(const std::vector<Vec>& vecs, double tol = 1e-10) {
    std::vector<Vec> basis;
    for (const Vec& v : vecs) {
        Vec w = v;
        for (const Vec& b : basis) w = axpy(w, -dot(w, b), b);
        double nw = norm2(w);
        if (nw > tol * std::max(1.0, norm2(v))) basis.push_back(scale(1.0 / nw, w));
    }
    return basis;
}

// Orthonormal basis of the orthogonal complement of span(vecs) in R^n.
inline std::vector<Vec> orthogonal_complement(const std::vector<Vec>& vecs, std::size_t n) {
    std::vector<Vec> basis = orthonormal_basis(vecs);
    std::vector<Vec> comp;
    for (std::size_t i = 0; i < n; ++i) {
        Vec w = unit_vec(n, i);
        for (const Vec& b : basis) w = axpy(w, -dot(w, b), b);
        for (const Vec& c : comp) w = axpy(w, -dot(w, c), c);
        double nw = norm2(w);
        if (nw > 1e-10) comp.push_back(scale(1.0 / nw, w));
    }
    return comp;
}

} // namespace supdiff
