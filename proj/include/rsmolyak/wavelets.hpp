#pragma once

// Haar wavelets in base b, admissible index enumeration, canonical coefficients of
// piecewise-constant functions, and the H_alpha norm.
//
//   psi^0_{0,0} = 1_[0,1)
//   psi^j_{i,k}(x) = b^{(j-2)/2} [ b 1{floor(b^j x) = bk + i} - 1{floor(b^{j-1} x) = k} ],  j >= 1
//
// with i in θ_j and k in ϑ_{j-1}. Support of psi^j_{i,k} is E^{j-1}_k.

#include <cmath>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "rsmolyak/core.hpp"

namespace rsmolyak {

struct WaveletIndex {
    MultiIndex j;
    MultiIndex i;
    MultiIndex k;

    std::size_t dimension() const noexcept { return j.size(); }

    friend bool operator==(const WaveletIndex&, const WaveletIndex&) = default;
    friend auto operator<=>(const WaveletIndex& a, const WaveletIndex& b) {
        if (auto c = a.j <=> b.j; c != 0) return c;
        if (auto c = a.k <=> b.k; c != 0) return c;
        return a.i <=> b.i;
    }

    /// Constant wavelet Ψ^{D,0}_{0,0}.
    static WaveletIndex constant(std::size_t dim) { return {MultiIndex(dim), MultiIndex(dim), MultiIndex(dim)}; }

    /// Sub-index for coordinates [first, first + count).
    WaveletIndex slice(std::size_t first, std::size_t count) const {
        return {j.slice(first, count), i.slice(first, count), k.slice(first, count)};
    }
};

inline bool is_admissible(int j, int i, std::uint64_t k, int b) {
    if (j < 0 || i < 0) return false;
    if (j == 0) return i == 0 && k == 0;
    return i < b && k < shift_count(b, j - 1);
}

inline void validate_index(const WaveletIndex& idx, int b) {
    check_base(b);
    if (idx.i.size() != idx.j.size() || idx.k.size() != idx.j.size())
        throw std::invalid_argument("WaveletIndex: j, i, k must have equal length");
    for (std::size_t t = 0; t < idx.j.size(); ++t)
        if (!is_admissible(idx.j[t], idx.i[t], static_cast<std::uint64_t>(idx.k[t]), b))
            throw std::invalid_argument("WaveletIndex: inadmissible (j,i,k) in coordinate " + std::to_string(t));
}

/// Value of the 1-D Haar wavelet psi^j_{i,k} at x.
inline double psi_eval_1d(int j, int i, std::uint64_t k, double x, int b) {
    if (!is_admissible(j, i, k, b)) throw std::invalid_argument("psi_eval_1d: inadmissible index");
    if (!(x >= 0.0 && x < 1.0)) throw std::domain_error("psi_eval_1d: x outside [0,1)");
    if (j == 0) return 1.0;
    if (cell_index(x, b, j - 1) != k) return 0.0;
    const double scale = std::pow(static_cast<double>(b), 0.5 * (j - 2));
    const bool hit = cell_index(x, b, j) == static_cast<std::uint64_t>(b) * k + static_cast<std::uint64_t>(i);
    return scale * ((hit ? b : 0) - 1);
}

/// Product Π_t psi^{j_t}_{i_t,k_t}(x_t); zero as soon as x leaves the support box.
inline double psi_eval_multi(const WaveletIndex& idx, std::span<const double> x, int b) {
    if (x.size() != idx.dimension()) throw std::invalid_argument("psi_eval_multi: dimension mismatch");
    double v = 1.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
        v *= psi_eval_1d(idx.j[t], idx.i[t], static_cast<std::uint64_t>(idx.k[t]), x[t], b);
        if (v == 0.0) return 0.0;
    }
    return v;
}

/// b^{-alpha |j|} Ψ, normalised scaling used for the randomized-error matrix.
inline double psi_eval_scaled(const WaveletIndex& idx, std::span<const double> x, int b, double alpha) {
    return std::pow(static_cast<double>(b), -alpha * idx.j.total()) * psi_eval_multi(idx, x, b);
}

inline double integral_of_wavelet(const WaveletIndex& idx) { return idx.j.total() == 0 ? 1.0 : 0.0; }

/// Ψ^{D,j} lies in V^{D,L} iff |j| <= L.
inline bool in_approximation_space(const WaveletIndex& idx, int L) { return idx.j.total() <= L; }

/// Calls fn(idx) for every admissible (i,k) at resolution vector j; k outer, i inner, both lexicographic.
template <class Fn>
void for_each_wavelet(const MultiIndex& j, int b, Fn&& fn) {
    check_base(b);
    const std::size_t D = j.size();
    std::vector<int> i(D, 0), k(D, 0);
    std::vector<std::uint64_t> k_count(D);
    for (std::size_t t = 0; t < D; ++t) k_count[t] = j[t] >= 1 ? shift_count(b, j[t] - 1) : 1;
    auto i_limit = [&](std::size_t t) { return j[t] >= 1 ? b : 1; };
    while (true) {
        std::fill(i.begin(), i.end(), 0);
        while (true) {
            fn(WaveletIndex{j, MultiIndex(i), MultiIndex(k)});
            std::size_t t = D;
            while (t-- > 0) {
                if (++i[t] < i_limit(t)) break;
                i[t] = 0;
            }
            if (t == static_cast<std::size_t>(-1)) break;
        }
        std::size_t t = D;
        while (t-- > 0) {
            if (static_cast<std::uint64_t>(++k[t]) < k_count[t]) break;
            k[t] = 0;
        }
        if (t == static_cast<std::size_t>(-1)) break;
    }
}

/// Admissible indices in dimension D with |j| == total (exact) or |j| <= total, optionally with
/// every j_t <= cap. Ordered by |j|, then j, k, i lexicographically.
inline std::vector<WaveletIndex> indices_of_resolution(int D, int b, int total, bool exact = true, int cap = -1) {
    if (D < 1 || total < 0) throw std::invalid_argument("indices_of_resolution: need D >= 1 and total >= 0");
    std::vector<WaveletIndex> out;
    for (int n = exact ? total : 0; n <= total; ++n) {
        const auto shapes = cap >= 0 ? compositions(n, D, 0, MultiIndex(static_cast<std::size_t>(D), cap)) : compositions(n, D, 0);
        for (const auto& j : shapes) for_each_wavelet(j, b, [&](WaveletIndex idx) { out.push_back(std::move(idx)); });
    }
    return out;
}

/// Canonical coefficients f^j_{i,k} = ∫ f Ψ^{D,j}_{i,k}, keyed by index; exact zeros are omitted.
using CoefficientMap = std::map<WaveletIndex, double>;

inline double coefficient(const CoefficientMap& c, const WaveletIndex& idx) {
    auto it = c.find(idx);
    return it == c.end() ? 0.0 : it->second;
}

namespace detail {

// psi^j_{i,k} on the resolution-R cell with index `cell` (j <= R, so the value is constant there).
inline double psi_on_cell(int j, int i, std::uint64_t k, std::uint64_t cell, int R, int b) {
    if (j == 0) return 1.0;
    const std::uint64_t coarse = cell / ipow(static_cast<std::uint64_t>(b), R - j + 1);
    if (coarse != k) return 0.0;
    const std::uint64_t fine = cell / ipow(static_cast<std::uint64_t>(b), R - j);
    const double scale = std::pow(static_cast<double>(b), 0.5 * (j - 2));
    return scale * ((fine == static_cast<std::uint64_t>(b) * k + static_cast<std::uint64_t>(i) ? b : 0) - 1);
}

}  // namespace detail

/// Coefficients of f given by its values on the b^{R D} cells of the uniform b-adic grid of
/// resolution R (row-major, coordinate 0 slowest). Indices with |j| <= j_max are computed; any
/// index with some j_t > R has coefficient 0. Exact cell sums, no sampling.
inline CoefficientMap canonical_coefficients(std::span<const double> cell_values, int D, int R, int b, int j_max) {
    check_base(b);
    if (D < 1 || R < 0 || j_max < 0) throw std::invalid_argument("canonical_coefficients: bad arguments");
    if (j_max > D * R) throw PreconditionError("canonical_coefficients: j_max exceeds D * R, the grid cannot resolve it");
    const std::uint64_t per_axis = ipow(static_cast<std::uint64_t>(b), R);
    const std::uint64_t cells = ipow(per_axis, D);
    if (cell_values.size() != cells) throw std::invalid_argument("canonical_coefficients: expected b^{R D} cell values");
    const double volume = 1.0 / static_cast<double>(cells);
    const auto dim = static_cast<std::size_t>(D);

    CoefficientMap out;
    for (const auto& idx : indices_of_resolution(D, b, j_max, false, R)) {
        std::vector<std::uint64_t> lo(dim), hi(dim), cur(dim);
        for (std::size_t t = 0; t < dim; ++t) {
            if (idx.j[t] == 0) {
                lo[t] = 0;
                hi[t] = per_axis;
            } else {
                const std::uint64_t width = ipow(static_cast<std::uint64_t>(b), R - idx.j[t] + 1);
                lo[t] = static_cast<std::uint64_t>(idx.k[t]) * width;
                hi[t] = lo[t] + width;
            }
        }
        cur = lo;
        double sum = 0.0;
        while (true) {
            std::uint64_t flat = 0;
            double v = 1.0;
            for (std::size_t t = 0; t < dim; ++t) {
                flat = flat * per_axis + cur[t];
                v *= detail::psi_on_cell(idx.j[t], idx.i[t], static_cast<std::uint64_t>(idx.k[t]), cur[t], R, b);
            }
            sum += v * cell_values[flat];
            std::size_t t = dim;
            while (t-- > 0) {
                if (++cur[t] < hi[t]) break;
                cur[t] = lo[t];
            }
            if (t == static_cast<std::size_t>(-1)) break;
        }
        if (sum != 0.0) out.emplace(idx, sum * volume);
    }
    return out;
}

/// sqrt(Σ b^{2 alpha |j|} c^2) over canonical coefficients.
inline double haar_alpha_norm(const CoefficientMap& c, double alpha, int b) {
    if (!(alpha > 0.5)) throw std::domain_error("haar_alpha_norm: alpha must exceed 1/2");
    double sum = 0.0;
    for (const auto& [idx, v] : c) sum += std::pow(static_cast<double>(b), 2.0 * alpha * idx.j.total()) * v * v;
    return std::sqrt(sum);
}

}  // namespace rsmolyak
