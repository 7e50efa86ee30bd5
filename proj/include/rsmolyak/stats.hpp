#pragma once

// Summation, moment estimates, Kolmogorov-Smirnov distance and small least-squares fits.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace rsmolyak {

/// Pairwise (cascade) summation; fixed split points, so the result only depends on the input order.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

struct MomentEstimate {
    double mean = 0.0;
    double second_moment = 0.0;
    double se = 0.0;         // standard error of the mean
    double se_second = 0.0;  // standard error of the second moment
    std::size_t count = 0;
};

inline MomentEstimate estimate_moments(std::span<const double> samples) {
    const std::size_t R = samples.size();
    if (R < 2) throw std::invalid_argument("estimate_moments: need at least 2 replications");
    std::vector<double> sq(R);
    for (std::size_t r = 0; r < R; ++r) sq[r] = samples[r] * samples[r];
    MomentEstimate m;
    m.count = R;
    m.mean = pairwise_sum(samples) / static_cast<double>(R);
    m.second_moment = pairwise_sum(sq) / static_cast<double>(R);
    std::vector<double> dev(R), dev2(R);
    for (std::size_t r = 0; r < R; ++r) {
        dev[r] = (samples[r] - m.mean) * (samples[r] - m.mean);
        dev2[r] = (sq[r] - m.second_moment) * (sq[r] - m.second_moment);
    }
    const double n = static_cast<double>(R);
    m.se = std::sqrt(pairwise_sum(dev) / (n - 1.0) / n);
    m.se_second = std::sqrt(pairwise_sum(dev2) / (n - 1.0) / n);
    return m;
}

/// sup_x |F_n(x) - x| for a sample on [0,1).
inline double ks_uniform(std::vector<double> samples) {
    if (samples.empty()) throw std::invalid_argument("ks_uniform: empty sample");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double x = samples[i];
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - x, x - static_cast<double>(i) / n});
    }
    return d;
}

/// 1% critical value of the one-sample KS distance (asymptotic).
inline double ks_critical_1pct(std::size_t n) { return 1.63 / std::sqrt(static_cast<double>(n)); }

/// Ordinary least squares y ≈ X beta (X row-major, n x p), solved by normal equations with
/// Gaussian elimination and partial pivoting. p is tiny here.
struct LinearFit {
    std::vector<double> coef;
    std::vector<double> residuals;
    std::vector<double> fitted;
};

inline LinearFit least_squares(const std::vector<double>& X, const std::vector<double>& y, std::size_t p) {
    const std::size_t n = y.size();
    if (p == 0 || X.size() != n * p) throw std::invalid_argument("least_squares: shape mismatch");
    if (n < p) throw std::invalid_argument("least_squares: fewer observations than regressors");
    std::vector<double> A(p * (p + 1), 0.0);  // augmented [X^T X | X^T y]
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t a = 0; a < p; ++a) {
            for (std::size_t c = 0; c < p; ++c) A[a * (p + 1) + c] += X[r * p + a] * X[r * p + c];
            A[a * (p + 1) + p] += X[r * p + a] * y[r];
        }
    for (std::size_t col = 0; col < p; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < p; ++r)
            if (std::fabs(A[r * (p + 1) + col]) > std::fabs(A[piv * (p + 1) + col])) piv = r;
        if (std::fabs(A[piv * (p + 1) + col]) < 1e-300) throw std::domain_error("least_squares: singular design");
        if (piv != col)
            for (std::size_t c = 0; c <= p; ++c) std::swap(A[piv * (p + 1) + c], A[col * (p + 1) + c]);
        for (std::size_t r = 0; r < p; ++r) {
            if (r == col) continue;
            const double f = A[r * (p + 1) + col] / A[col * (p + 1) + col];
            for (std::size_t c = col; c <= p; ++c) A[r * (p + 1) + c] -= f * A[col * (p + 1) + c];
        }
    }
    LinearFit fit;
    fit.coef.resize(p);
    for (std::size_t a = 0; a < p; ++a) fit.coef[a] = A[a * (p + 1) + p] / A[a * (p + 1) + a];
    fit.fitted.resize(n);
    fit.residuals.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
        double v = 0.0;
        for (std::size_t a = 0; a < p; ++a) v += X[r * p + a] * fit.coef[a];
        fit.fitted[r] = v;
        fit.residuals[r] = y[r] - v;
    }
    return fit;
}

/// y ≈ intercept + slope x.
inline LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("fit_line: size mismatch");
    std::vector<double> X;
    X.reserve(2 * x.size());
    for (double v : x) {
        X.push_back(1.0);
        X.push_back(v);
    }
    return least_squares(X, y, 2);
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

}  // namespace rsmolyak
