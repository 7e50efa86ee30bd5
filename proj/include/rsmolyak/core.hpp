#pragma once

// Base-b digit arithmetic, elementary intervals and multi-index combinatorics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rsmolyak {

/// Raised when a documented precondition of an operation does not hold.
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised for parameter combinations a construction does not support.
class UnsupportedParameters : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Vector of nonnegative integers (levels, resolutions, shifts, shapes).
class MultiIndex {
public:
    MultiIndex() = default;
    explicit MultiIndex(std::size_t n, int value = 0) : entries_(n, value) { check(); }
    MultiIndex(std::initializer_list<int> values) : entries_(values) { check(); }
    explicit MultiIndex(std::vector<int> values) : entries_(std::move(values)) { check(); }

    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    int operator[](std::size_t i) const { return entries_[i]; }

    void set(std::size_t i, int value) {
        if (value < 0) throw std::invalid_argument("MultiIndex: negative entry");
        entries_[i] = value;
    }

    int total() const noexcept { return std::accumulate(entries_.begin(), entries_.end(), 0); }

    /// Number of nonzero entries.
    int support_size() const noexcept {
        return static_cast<int>(std::count_if(entries_.begin(), entries_.end(), [](int v) { return v != 0; }));
    }

    MultiIndex slice(std::size_t first, std::size_t count) const {
        return MultiIndex(std::vector<int>(entries_.begin() + first, entries_.begin() + first + count));
    }

    std::span<const int> values() const noexcept { return entries_; }
    auto begin() const noexcept { return entries_.begin(); }
    auto end() const noexcept { return entries_.end(); }

    friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
    friend auto operator<=>(const MultiIndex& a, const MultiIndex& b) { return a.entries_ <=> b.entries_; }

    std::string to_string(char sep = ',') const {
        std::string out;
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            if (i) out += sep;
            out += std::to_string(entries_[i]);
        }
        return out;
    }

    friend std::ostream& operator<<(std::ostream& os, const MultiIndex& m) { return os << '(' << m.to_string() << ')'; }

private:
    void check() const {
        for (int v : entries_)
            if (v < 0) throw std::invalid_argument("MultiIndex: negative entry");
    }

    std::vector<int> entries_;
};

/// b^e as an unsigned integer; throws on overflow.
inline std::uint64_t ipow(std::uint64_t b, int e) {
    if (e < 0) throw std::invalid_argument("ipow: negative exponent");
    std::uint64_t r = 1;
    for (int i = 0; i < e; ++i) {
        if (r > std::numeric_limits<std::uint64_t>::max() / b) throw std::overflow_error("ipow: overflow");
        r *= b;
    }
    return r;
}

/// b^e in double precision, exact while the result fits in 53 bits.
inline double dpow(int b, int e) {
    double r = 1.0;
    for (int i = 0, n = std::abs(e); i < n; ++i) r *= static_cast<double>(b);
    return e >= 0 ? r : 1.0 / r;
}

inline std::int64_t binomial(int n, int k) {
    if (k < 0 || n < 0 || k > n) return 0;
    k = std::min(k, n - k);
    std::int64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

inline void check_base(int b) {
    if (b < 2) throw std::invalid_argument("base must be an integer >= 2");
}

/// Digit depth covering double-precision resolution: 32 for b = 2, ceil(52 / log2 b) otherwise.
inline int default_digit_depth(int b) {
    check_base(b);
    if (b == 2) return 32;
    return static_cast<int>(std::ceil(52.0 / std::log2(static_cast<double>(b))));
}

namespace detail {

// b-adic rationals are recognised (and snapped to) only at resolutions whose grid spacing is
// far above double rounding.
inline constexpr double kSnapLimit = 1099511627776.0;  // 2^40

inline bool snap_resolution(int b, int q) { return dpow(b, q) < kSnapLimit; }

inline bool near_integer(long double y, long double& nearest) {
    nearest = std::nearbyint(y);
    const long double tol = 4.0L * std::numeric_limits<double>::epsilon() * std::max<long double>(1.0L, y);
    return std::fabs(y - nearest) <= tol;
}

}  // namespace detail

/// floor(x * b^q) for x in [0,1), taking the terminating representation when x is within a few
/// ulps of a b-adic rational of resolution q.
inline std::uint64_t cell_index(double x, int b, int q) {
    if (q <= 0) return 0;
    const long double scale = static_cast<long double>(dpow(b, q));
    const long double y = static_cast<long double>(x) * scale;
    long double c = std::floor(y);
    long double nearest = 0.0L;
    if (detail::snap_resolution(b, q) && detail::near_integer(y, nearest)) c = nearest;
    return static_cast<std::uint64_t>(std::clamp(c, 0.0L, scale - 1.0L));
}

/// First `depth` base-b digits of x (most significant first). Exact for the double value of x,
/// except that x within a few ulps of a b-adic rational takes that rational's terminating digits.
inline std::vector<int> digits_of(double x, int b, int depth) {
    check_base(b);
    if (b > 256) throw UnsupportedParameters("digits_of: base above 256");
    if (!(x >= 0.0 && x < 1.0)) throw std::domain_error("digits_of: x must lie in [0,1)");
    if (depth < 0) throw std::invalid_argument("digits_of: negative depth");
    std::vector<int> digits(static_cast<std::size_t>(depth), 0);

    auto spell = [&](std::uint64_t k, int q) {
        for (int r = q - 1; r >= 0; --r) {
            digits[static_cast<std::size_t>(r)] = static_cast<int>(k % static_cast<std::uint64_t>(b));
            k /= static_cast<std::uint64_t>(b);
        }
    };

    for (int q = 0; q <= depth && detail::snap_resolution(b, q); ++q) {
        const long double y = static_cast<long double>(x) * static_cast<long double>(dpow(b, q));
        long double nearest = 0.0L;
        if (detail::near_integer(y, nearest) && nearest < static_cast<long double>(dpow(b, q))) {
            spell(static_cast<std::uint64_t>(nearest), q);
            return digits;
        }
    }

    // x = mantissa * 2^-shift exactly; multiply the fractional numerator by b digit by digit.
    int exponent = 0;
    const double frac = std::frexp(x, &exponent);  // x = frac * 2^exponent, frac in [0.5, 1)
    const auto mantissa = static_cast<std::uint64_t>(std::ldexp(frac, 53));
    const int shift = 53 - exponent;
    if (shift > 120) return digits;  // below every representable digit position
    using u128 = unsigned __int128;
    const u128 mask = (u128(1) << shift) - 1;
    u128 rem = mantissa;
    for (int r = 0; r < depth; ++r) {
        rem *= static_cast<u128>(b);
        digits[static_cast<std::size_t>(r)] = static_cast<int>(rem >> shift);
        rem &= mask;
    }
    return digits;
}

/// Value Σ digit_r b^{-r} + remainder b^{-P}, evaluated by Horner from the least significant digit.
inline double value_of(std::span<const int> digits, int b, double remainder = 0.0) {
    double v = remainder;
    for (auto it = digits.rbegin(); it != digits.rend(); ++it) v = (static_cast<double>(*it) + v) / b;
    if (v >= 1.0) v = std::nextafter(1.0, 0.0);
    return v;
}

/// Admissible shifts per resolution: |ϑ_j| = b^j for j >= 1, 1 for j in {-1, 0}.
inline std::uint64_t shift_count(int b, int j) { return j >= 1 ? ipow(static_cast<std::uint64_t>(b), j) : 1; }

/// Product of half-open b-adic intervals E^{j_t}_{k_t}; resolution -1 denotes [0,1).
struct ElementaryInterval {
    std::vector<int> resolution;
    std::vector<std::uint64_t> shift;
    int b = 2;

    ElementaryInterval() = default;
    ElementaryInterval(std::vector<int> j, std::vector<std::uint64_t> k, int base)
        : resolution(std::move(j)), shift(std::move(k)), b(base) {
        check_base(b);
        if (resolution.size() != shift.size()) throw std::invalid_argument("ElementaryInterval: size mismatch");
        for (std::size_t t = 0; t < resolution.size(); ++t) {
            if (resolution[t] < -1) throw std::invalid_argument("ElementaryInterval: resolution < -1");
            if (shift[t] >= shift_count(b, resolution[t]))
                throw std::invalid_argument("ElementaryInterval: shift outside admissible range");
        }
    }

    std::size_t dimension() const noexcept { return resolution.size(); }

    double volume() const {
        int e = 0;
        for (int j : resolution) e += std::max(j, 0);
        return 1.0 / dpow(b, e);
    }
};

inline bool interval_contains(const ElementaryInterval& box, std::span<const double> x) {
    if (x.size() != box.dimension()) throw std::invalid_argument("interval_contains: dimension mismatch");
    for (std::size_t t = 0; t < x.size(); ++t) {
        if (box.resolution[t] <= 0) {
            if (!(x[t] >= 0.0 && x[t] < 1.0)) return false;
            continue;
        }
        const double lo = static_cast<double>(box.shift[t]) / dpow(box.b, box.resolution[t]);
        const double hi = static_cast<double>(box.shift[t] + 1) / dpow(box.b, box.resolution[t]);
        if (!(x[t] >= lo && x[t] < hi)) return false;
    }
    return true;
}

/// All vectors with `parts` entries summing to `total`, entries >= min_per_part and <= caps[i]
/// when caps are given. Lexicographic order.
inline std::vector<MultiIndex> compositions(int total, int parts, int min_per_part = 0,
                                            const std::optional<MultiIndex>& caps = std::nullopt) {
    if (total < 0 || parts < 0 || min_per_part < 0) throw std::invalid_argument("compositions: negative argument");
    if (caps && static_cast<int>(caps->size()) != parts) throw std::invalid_argument("compositions: caps size");
    std::vector<MultiIndex> out;
    if (parts == 0) {
        if (total == 0) out.emplace_back();
        return out;
    }
    std::vector<int> current(static_cast<std::size_t>(parts), 0);
    auto cap = [&](int i) { return caps ? (*caps)[static_cast<std::size_t>(i)] : total; };
    // Remaining-capacity suffix sums prune infeasible branches early.
    std::vector<long> suffix_cap(static_cast<std::size_t>(parts) + 1, 0);
    for (int i = parts - 1; i >= 0; --i) suffix_cap[static_cast<std::size_t>(i)] = suffix_cap[static_cast<std::size_t>(i) + 1] + cap(i);

    auto rec = [&](auto&& self, int pos, int remaining) -> void {
        const int left_after = parts - pos - 1;
        if (left_after == 0) {
            if (remaining >= min_per_part && remaining <= cap(pos)) {
                current[static_cast<std::size_t>(pos)] = remaining;
                out.emplace_back(current);
            }
            return;
        }
        for (int v = min_per_part; v <= std::min(cap(pos), remaining - left_after * min_per_part); ++v) {
            if (remaining - v > suffix_cap[static_cast<std::size_t>(pos) + 1]) continue;
            current[static_cast<std::size_t>(pos)] = v;
            self(self, pos + 1, remaining - v);
        }
    };
    if (total >= parts * min_per_part) rec(rec, 0, total);
    return out;
}

}  // namespace rsmolyak
