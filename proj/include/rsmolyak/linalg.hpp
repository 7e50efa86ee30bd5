#pragma once

// Small dense symmetric matrices and the cyclic Jacobi eigenvalue method.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace rsmolyak {

/// Row-major n x n matrix.
struct Matrix {
    std::size_t n = 0;
    std::vector<double> a;

    Matrix() = default;
    explicit Matrix(std::size_t size) : n(size), a(size * size, 0.0) {}
    Matrix(std::size_t size, std::vector<double> values) : n(size), a(std::move(values)) {
        if (a.size() != n * n) throw std::invalid_argument("Matrix: expected n*n entries");
    }

    double& operator()(std::size_t r, std::size_t c) { return a[r * n + c]; }
    double operator()(std::size_t r, std::size_t c) const { return a[r * n + c]; }

    bool is_symmetric(double tol = 0.0) const {
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = r + 1; c < n; ++c) {
                const double scale = std::max({1.0, std::fabs((*this)(r, c)), std::fabs((*this)(c, r))});
                if (std::fabs((*this)(r, c) - (*this)(c, r)) > tol * scale) return false;
            }
        return true;
    }

    /// (M + M^T) / 2
    Matrix symmetrized() const {
        Matrix out(n);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c) out(r, c) = 0.5 * ((*this)(r, c) + (*this)(c, r));
        return out;
    }

    double trace() const {
        double t = 0.0;
        for (std::size_t r = 0; r < n; ++r) t += (*this)(r, r);
        return t;
    }
};

struct EigenSystem {
    std::vector<double> values;   // ascending
    Matrix vectors;               // column c is the eigenvector of values[c]
};

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops below tol * ||M||_F.
inline EigenSystem jacobi_eigen(const Matrix& m, double tol = 1e-12, int max_sweeps = 100) {
    if (!m.is_symmetric(1e-12)) throw std::invalid_argument("jacobi_eigen: matrix is not symmetric");
    const std::size_t n = m.n;
    Matrix A = m.symmetrized();
    Matrix V(n);
    for (std::size_t r = 0; r < n; ++r) V(r, r) = 1.0;
    double frob = 0.0;
    for (double x : A.a) frob += x * x;
    frob = std::sqrt(frob);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += 2.0 * A(p, q) * A(p, q);
        if (std::sqrt(off) <= tol * frob || off == 0.0) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = A(p, q);
                if (apq == 0.0) continue;
                const double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = A(k, p), akq = A(k, q);
                    A(k, p) = c * akp - s * akq;
                    A(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = A(p, k), aqk = A(q, k);
                    A(p, k) = c * apk - s * aqk;
                    A(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = V(k, p), vkq = V(k, q);
                    V(k, p) = c * vkp - s * vkq;
                    V(k, q) = s * vkp + c * vkq;
                }
            }
    }
    std::vector<std::size_t> order(n);
    for (std::size_t r = 0; r < n; ++r) order[r] = r;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return A(x, x) < A(y, y); });
    EigenSystem es{std::vector<double>(n), Matrix(n)};
    for (std::size_t c = 0; c < n; ++c) {
        es.values[c] = A(order[c], order[c]);
        for (std::size_t r = 0; r < n; ++r) es.vectors(r, c) = V(r, order[c]);
    }
    return es;
}

inline std::vector<double> eigenvalues(const Matrix& m) { return jacobi_eigen(m).values; }

/// Largest absolute eigenvalue of a symmetric matrix.
inline double spectral_radius(const Matrix& m) {
    if (m.n == 0) return 0.0;
    const auto ev = eigenvalues(m);
    return std::max(std::fabs(ev.front()), std::fabs(ev.back()));
}

}  // namespace rsmolyak
