#pragma once

// Deterministic (0,m,s)-nets in base b and an exhaustive net-property checker.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rsmolyak/core.hpp"

namespace rsmolyak {

struct NetParams {
    int b = 2;
    int m = 0;
    int s = 1;

    void validate() const {
        check_base(b);
        if (m < 0) throw std::invalid_argument("net level m must be >= 0");
        if (s < 1) throw std::invalid_argument("net dimension s must be >= 1");
    }

    std::uint64_t size() const { return ipow(static_cast<std::uint64_t>(b), m); }

    friend bool operator==(const NetParams&, const NetParams&) = default;
};

/// Point of [0,1)^s held as base-b digits (most significant first) plus a remainder per
/// coordinate: x_t = Σ_r digits[t][r] b^{-r} + remainder[t] b^{-P}.
struct DigitPoint {
    std::vector<std::vector<int>> digits;
    std::vector<double> remainder;

    DigitPoint() = default;
    DigitPoint(std::size_t s, int depth) : digits(s, std::vector<int>(static_cast<std::size_t>(depth), 0)), remainder(s, 0.0) {}

    std::size_t dimension() const noexcept { return digits.size(); }
    int depth() const noexcept { return digits.empty() ? 0 : static_cast<int>(digits.front().size()); }

    double value(std::size_t t, int b) const { return value_of(digits[t], b, remainder[t]); }

    static DigitPoint from_values(std::span<const double> x, int b, int depth) {
        DigitPoint p;
        p.digits.reserve(x.size());
        for (double v : x) p.digits.push_back(digits_of(v, b, depth));
        p.remainder.assign(x.size(), 0.0);
        // Sub-resolution part is kept so that values round-trip.
        for (std::size_t t = 0; t < x.size(); ++t) {
            const double head = value_of(p.digits[t], b);
            double rem = (x[t] - head) * dpow(b, depth);
            p.remainder[t] = std::clamp(rem, 0.0, std::nextafter(1.0, 0.0));
        }
        return p;
    }
};

/// Index of the b-adic cell of resolution q containing coordinate t: floor(x_t b^q).
inline std::uint64_t leading_index(const DigitPoint& p, std::size_t t, int q, int b) {
    const auto& dg = p.digits[t];
    std::uint64_t k = 0;
    const int stored = static_cast<int>(dg.size());
    for (int r = 0; r < std::min(q, stored); ++r) k = k * static_cast<std::uint64_t>(b) + static_cast<std::uint64_t>(dg[static_cast<std::size_t>(r)]);
    if (q > stored) {
        const auto extra = digits_of(p.remainder[t], b, q - stored);
        for (int v : extra) k = k * static_cast<std::uint64_t>(b) + static_cast<std::uint64_t>(v);
    }
    return k;
}

struct PointSet {
    NetParams params;
    std::vector<DigitPoint> points;

    std::size_t size() const noexcept { return points.size(); }

    std::vector<double> point_values(std::size_t i) const {
        std::vector<double> x(points[i].dimension());
        for (std::size_t t = 0; t < x.size(); ++t) x[t] = points[i].value(t, params.b);
        return x;
    }

    /// Row-major n x s matrix of point coordinates.
    std::vector<double> values() const {
        std::vector<double> out;
        out.reserve(points.size() * static_cast<std::size_t>(params.s));
        for (const auto& p : points)
            for (std::size_t t = 0; t < p.dimension(); ++t) out.push_back(p.value(t, params.b));
        return out;
    }
};

/// { k b^{-m} : k in ϑ_m }, a (0,m,1)-net.
inline PointSet stratified_grid(int b, int m) {
    NetParams params{b, m, 1};
    params.validate();
    PointSet set{params, {}};
    const std::uint64_t n = params.size();
    set.points.reserve(n);
    for (std::uint64_t k = 0; k < n; ++k) {
        DigitPoint p(1, m);
        std::uint64_t v = k;
        for (int r = m - 1; r >= 0; --r) {
            p.digits[0][static_cast<std::size_t>(r)] = static_cast<int>(v % static_cast<std::uint64_t>(b));
            v /= static_cast<std::uint64_t>(b);
        }
        set.points.push_back(std::move(p));
    }
    return set;
}

inline bool is_prime(int n) {
    if (n < 2) return false;
    for (int q = 2; q * q <= n; ++q)
        if (n % q == 0) return false;
    return true;
}

/// Faure (0,m,s)-net for prime b and s <= b. Coordinate r (0-based) uses the r-th power of the
/// upper-triangular Pascal matrix mod b as generator matrix: G_r[i][j] = C(j,i) r^{j-i} mod b.
inline PointSet faure_net(int b, int m, int s) {
    NetParams params{b, m, s};
    params.validate();
    if (!is_prime(b)) throw UnsupportedParameters("faure_net: base " + std::to_string(b) + " is not prime");
    if (s > b) throw UnsupportedParameters("faure_net: dimension " + std::to_string(s) + " exceeds base " + std::to_string(b));

    const auto mu = static_cast<std::size_t>(m);
    // generators[r][i][j]
    std::vector<std::vector<std::vector<int>>> generators(static_cast<std::size_t>(s),
                                                          std::vector<std::vector<int>>(mu, std::vector<int>(mu, 0)));
    for (int r = 0; r < s; ++r) {
        for (int i = 0; i < m; ++i) {
            for (int j = i; j < m; ++j) {
                long long power = 1;
                for (int e = 0; e < j - i; ++e) power = (power * r) % b;
                const long long entry = (binomial(j, i) % b) * power % b;
                generators[static_cast<std::size_t>(r)][static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = static_cast<int>(entry);
            }
        }
    }

    PointSet set{params, {}};
    const std::uint64_t n = params.size();
    set.points.reserve(n);
    std::vector<int> a(mu, 0);
    for (std::uint64_t idx = 0; idx < n; ++idx) {
        std::uint64_t v = idx;
        for (std::size_t j = 0; j < mu; ++j) {
            a[j] = static_cast<int>(v % static_cast<std::uint64_t>(b));
            v /= static_cast<std::uint64_t>(b);
        }
        DigitPoint p(static_cast<std::size_t>(s), m);
        for (std::size_t r = 0; r < static_cast<std::size_t>(s); ++r) {
            for (std::size_t i = 0; i < mu; ++i) {
                long long acc = 0;
                for (std::size_t j = i; j < mu; ++j) acc += static_cast<long long>(generators[r][i][j]) * a[j];
                p.digits[r][i] = static_cast<int>(acc % b);
            }
        }
        set.points.push_back(std::move(p));
    }
    return set;
}

/// Net construction used by building blocks. Any (0,m,s)-net generator may be plugged in.
using NetGenerator = std::function<PointSet(int b, int m, int s)>;

/// Stratified grid for s = 1 (any base), Faure otherwise.
inline PointSet default_net(int b, int m, int s) { return s == 1 ? stratified_grid(b, m) : faure_net(b, m, s); }

struct NetWitness {
    MultiIndex shape;                 // resolution vector j, |j| = m
    std::vector<std::uint64_t> cell;  // shift k
    std::uint64_t count = 0;          // points found in E^j_k (!= 1)
};

struct NetCheck {
    bool is_net = true;
    std::optional<NetWitness> witness;
    explicit operator bool() const noexcept { return is_net; }
};

/// Exhaustive (0,m,s)-net check: every elementary interval of volume b^{-m} holds exactly one
/// point. Inspects all C(m+s-1, s-1) shapes and all b^m cells per shape.
inline NetCheck is_net(const std::vector<DigitPoint>& points, int b, int m, int s) {
    NetParams{b, m, s}.validate();
    const std::uint64_t n = ipow(static_cast<std::uint64_t>(b), m);
    if (points.size() != n)
        throw PreconditionError("is_net: expected " + std::to_string(n) + " points, got " + std::to_string(points.size()));
    for (const auto& p : points)
        if (static_cast<int>(p.dimension()) != s) throw std::invalid_argument("is_net: point dimension mismatch");

    // prefixes[i][t][q] = floor(x_{i,t} b^q) for q = 0..m
    const auto mq = static_cast<std::size_t>(m) + 1;
    std::vector<std::uint64_t> prefixes(points.size() * static_cast<std::size_t>(s) * mq);
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t t = 0; t < static_cast<std::size_t>(s); ++t)
            for (int q = 0; q <= m; ++q)
                prefixes[(i * static_cast<std::size_t>(s) + t) * mq + static_cast<std::size_t>(q)] = leading_index(points[i], t, q, b);

    std::vector<std::uint64_t> counts(n);
    for (const auto& shape : compositions(m, s, 0)) {
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < points.size(); ++i) {
            std::uint64_t cell = 0;
            for (std::size_t t = 0; t < static_cast<std::size_t>(s); ++t) {
                const int q = shape[t];
                cell = cell * ipow(static_cast<std::uint64_t>(b), q) + prefixes[(i * static_cast<std::size_t>(s) + t) * mq + static_cast<std::size_t>(q)];
            }
            ++counts[cell];
        }
        for (std::uint64_t cell = 0; cell < n; ++cell) {
            if (counts[cell] == 1) continue;
            NetWitness w{shape, std::vector<std::uint64_t>(static_cast<std::size_t>(s)), counts[cell]};
            std::uint64_t v = cell;
            for (std::size_t t = static_cast<std::size_t>(s); t-- > 0;) {
                const std::uint64_t radix = ipow(static_cast<std::uint64_t>(b), shape[t]);
                w.cell[t] = v % radix;
                v /= radix;
            }
            return NetCheck{false, std::move(w)};
        }
    }
    return NetCheck{};
}

inline NetCheck is_net(const PointSet& set, int b, int m, int s) { return is_net(set.points, b, m, s); }

/// Checks points given as coordinates (row-major n x s).
inline NetCheck is_net(std::span<const double> coords, int b, int m, int s) {
    if (s < 1 || coords.size() % static_cast<std::size_t>(s) != 0) throw std::invalid_argument("is_net: ragged coordinates");
    std::vector<DigitPoint> pts;
    pts.reserve(coords.size() / static_cast<std::size_t>(s));
    for (std::size_t i = 0; i < coords.size(); i += static_cast<std::size_t>(s))
        pts.push_back(DigitPoint::from_values(coords.subspan(i, static_cast<std::size_t>(s)), b, m));
    return is_net(pts, b, m, s);
}

}  // namespace rsmolyak
