#pragma once

// Monte Carlo probes of the randomized Smolyak method on Haar wavelets: building-block moments,
// cross moments, covariance blocks Λ(j,k), the randomized-error estimate e = sqrt(sup ρ(Λ(j,k)))
// and convergence studies over a range of levels.

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <vector>

#include "rsmolyak/linalg.hpp"
#include "rsmolyak/parallel.hpp"
#include "rsmolyak/smolyak.hpp"
#include "rsmolyak/stats.hpp"

namespace rsmolyak {

/// |θ_j| = Π_t (b if j_t >= 1 else 1).
inline std::size_t theta_size(const MultiIndex& j, int b) {
    std::size_t n = 1;
    for (int v : j)
        if (v >= 1) n *= static_cast<std::size_t>(b);
    return n;
}

/// U Ψ_i for all i ∈ θ_j at fixed (j,k) (idx.i is ignored), i lexicographic with the first
/// coordinate slowest. One pass over the nodes.
inline void block_wavelet_values(const BuildingBlock& bb, const WaveletIndex& idx, int b, std::span<double> out) {
    const std::size_t s = idx.dimension();
    if (s != static_cast<std::size_t>(bb.params.s)) throw std::invalid_argument("block_wavelet_values: dimension mismatch");
    std::fill(out.begin(), out.end(), 0.0);
    std::vector<std::size_t> active;
    double scale = 1.0;
    for (std::size_t t = 0; t < s; ++t)
        if (idx.j[t] >= 1) {
            active.push_back(t);
            scale *= std::pow(static_cast<double>(b), 0.5 * (idx.j[t] - 2));
        }
    std::vector<int> digit(active.size());
    for (std::size_t v = 0; v < bb.size(); ++v) {
        const auto x = bb.node(v);
        bool inside = true;
        for (std::size_t a = 0; a < active.size() && inside; ++a) {
            const std::size_t t = active[a];
            const auto k = static_cast<std::uint64_t>(idx.k[t]);
            if (cell_index(x[t], b, idx.j[t] - 1) != k) inside = false;
            else digit[a] = static_cast<int>(cell_index(x[t], b, idx.j[t]) - static_cast<std::uint64_t>(b) * k);
        }
        if (!inside) continue;
        // Π_a (b 1{i_a = digit_a} - 1) over the odometer of i.
        for (std::size_t flat = 0; flat < out.size(); ++flat) {
            double p = scale;
            std::size_t rest = flat;
            for (std::size_t a = active.size(); a-- > 0;) {
                const auto ia = static_cast<int>(rest % static_cast<std::size_t>(b));
                rest /= static_cast<std::size_t>(b);
                p *= (ia == digit[a] ? b : 0) - 1;
            }
            out[flat] += p;
        }
    }
    for (double& o : out) o *= bb.weight;
}

/// (A(L,d) Ψ_i)_{i ∈ θ_j} for one realization, unscaled.
inline std::vector<double> smolyak_wavelet_values(const SmolyakRealization& r, const WaveletIndex& idx) {
    const SmolyakPlan& plan = *r.plan;
    if (idx.dimension() != static_cast<std::size_t>(plan.dimension())) throw std::invalid_argument("smolyak_wavelet_values: dimension mismatch");
    const auto s = static_cast<std::size_t>(plan.s);
    const auto d = static_cast<std::size_t>(plan.d);
    const auto levels = static_cast<std::size_t>(plan.max_level());
    std::vector<std::size_t> sizes(d);
    std::vector<std::vector<double>> table(d);  // table[n][(l-1) * sizes[n] + i_n]
    for (std::size_t n = 0; n < d; ++n) {
        const WaveletIndex part = idx.slice(n * s, s);
        sizes[n] = theta_size(part.j, plan.b);
        table[n].resize(levels * sizes[n]);
        for (std::size_t l = 1; l <= levels; ++l)
            block_wavelet_values(r.block(static_cast<int>(n), static_cast<int>(l)), part, plan.b,
                                 std::span<double>(table[n]).subspan((l - 1) * sizes[n], sizes[n]));
    }
    std::size_t total = 1;
    for (auto m : sizes) total *= m;
    std::vector<double> out(total, 0.0);
    std::vector<std::size_t> part_i(d);
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t rest = flat;
        for (std::size_t n = d; n-- > 0;) {
            part_i[n] = rest % sizes[n];
            rest /= sizes[n];
        }
        double sum = 0.0;
        for (const auto& term : plan.terms) {
            double v = static_cast<double>(term.coefficient);
            for (std::size_t n = 0; n < d && v != 0.0; ++n)
                v *= table[n][static_cast<std::size_t>(term.levels[n] - 1) * sizes[n] + part_i[n]];
            sum += v;
        }
        out[flat] = sum;
    }
    return out;
}

/// Flat position of idx.i inside θ_j (first coordinate slowest).
inline std::size_t theta_position(const WaveletIndex& idx, int b) {
    std::size_t pos = 0;
    for (std::size_t t = 0; t < idx.dimension(); ++t)
        if (idx.j[t] >= 1) pos = pos * static_cast<std::size_t>(b) + static_cast<std::size_t>(idx.i[t]);
    return pos;
}

/// R samples of U_l Ψ (block 0, one fresh scrambling per replication).
inline std::vector<double> building_block_samples(int l, const WaveletIndex& idx, int b, std::uint64_t R, std::uint64_t seed,
                                                  unsigned threads = 1, const NetGenerator& generator = default_net) {
    validate_index(idx, b);
    const int s = static_cast<int>(idx.dimension());
    const BlockFactory factory(b, s, l, generator);
    const std::size_t n = theta_size(idx.j, b);
    const std::size_t pos = theta_position(idx, b);
    std::vector<double> out(R);
    parallel_for(R, threads, [&](std::uint64_t r) {
        std::vector<double> vals(n);
        block_wavelet_values(factory.realize(0, l, seed, r), idx, b, vals);
        out[r] = vals[pos];
    });
    return out;
}

/// E[(U_l Ψ)^2] with its standard error in `second_moment` / `se_second`. Requires |j| >= l + s - 1.
inline MomentEstimate second_moment_bb(int l, const WaveletIndex& idx, int b, std::uint64_t R, std::uint64_t seed,
                                       unsigned threads = 1, const NetGenerator& generator = default_net) {
    const int s = static_cast<int>(idx.dimension());
    if (idx.j.total() < l + s - 1) throw PreconditionError("second_moment_bb: need |j| >= l + s - 1");
    const auto samples = building_block_samples(l, idx, b, R, seed, threads, generator);
    return estimate_moments(samples);
}

/// Bracket b^{2-2s} b^{-l} <= E[(U_l Ψ)^2] <= b^{1+s} b^{-l}.
inline Interval second_moment_bracket(int l, int s, int b) {
    return {dpow(b, 2 - 2 * s) * dpow(b, -l), dpow(b, 1 + s) * dpow(b, -l)};
}

inline void check_distinct_pair(const WaveletIndex& a, const WaveletIndex& c) {
    if (a.j == c.j && a.k == c.k) throw PreconditionError("cross moment: pair shares j and k, the zero-mean claim does not apply");
}

/// Products U_l Ψ · U_{l2} Ψ' of one block (the same scrambled net when l == l2).
inline MomentEstimate cross_moment_bb(int l, int l2, const WaveletIndex& idx, const WaveletIndex& idx2, int b, std::uint64_t R,
                                      std::uint64_t seed, unsigned threads = 1) {
    check_distinct_pair(idx, idx2);
    validate_index(idx, b);
    validate_index(idx2, b);
    if (idx.dimension() != idx2.dimension()) throw std::invalid_argument("cross_moment_bb: dimension mismatch");
    const int s = static_cast<int>(idx.dimension());
    const BlockFactory factory(b, s, std::max(l, l2));
    std::vector<double> prod(R);
    parallel_for(R, threads, [&](std::uint64_t r) {
        std::vector<double> v1(theta_size(idx.j, b)), v2(theta_size(idx2.j, b));
        const BuildingBlock u1 = factory.realize(0, l, seed, r);
        block_wavelet_values(u1, idx, b, v1);
        if (l2 == l) block_wavelet_values(u1, idx2, b, v2);
        else block_wavelet_values(factory.realize(0, l2, seed, r), idx2, b, v2);
        prod[r] = v1[theta_position(idx, b)] * v2[theta_position(idx2, b)];
    });
    return estimate_moments(prod);
}

/// R samples of A(L,d) Ψ for a single wavelet.
inline std::vector<double> smolyak_wavelet_samples(const SmolyakPlan& plan, const WaveletIndex& idx, std::uint64_t R,
                                                   std::uint64_t seed, unsigned threads = 1,
                                                   const NetGenerator& generator = default_net) {
    validate_index(idx, plan.b);
    const BlockFactory factory(plan.b, plan.s, plan.max_level(), generator);
    const std::size_t pos = theta_position(idx, plan.b);
    std::vector<double> out(R);
    parallel_for(R, threads, [&](std::uint64_t r) {
        const auto real = realize_blocks(plan, factory, seed, r);
        out[r] = smolyak_wavelet_values(real, idx)[pos];
    });
    return out;
}

/// Products A(L,d) Ψ · A(L,d) Ψ' under the same realization.
inline MomentEstimate cross_moment_smolyak(const SmolyakPlan& plan, const WaveletIndex& idx, const WaveletIndex& idx2,
                                           std::uint64_t R, std::uint64_t seed, unsigned threads = 1) {
    check_distinct_pair(idx, idx2);
    validate_index(idx, plan.b);
    validate_index(idx2, plan.b);
    const BlockFactory factory(plan.b, plan.s, plan.max_level());
    std::vector<double> prod(R);
    parallel_for(R, threads, [&](std::uint64_t r) {
        const auto real = realize_blocks(plan, factory, seed, r);
        prod[r] = smolyak_wavelet_values(real, idx)[theta_position(idx, plan.b)] *
                  smolyak_wavelet_values(real, idx2)[theta_position(idx2, plan.b)];
    });
    return estimate_moments(prod);
}

/// Empirical Λ(j,k) = E[(A Ψ^α_i)(A Ψ^α_i')] over i, i' ∈ θ_j, with the per-replication vectors kept.
struct LambdaBlock {
    MultiIndex j;
    MultiIndex k;
    Matrix matrix;
    std::uint64_t replications = 0;
    std::vector<double> samples;  // replications x matrix.n, row-major
};

inline Matrix second_moment_matrix(std::span<const double> samples, std::size_t n, std::uint64_t R) {
    Matrix m(n);
    std::vector<double> col(R);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t c = a; c < n; ++c) {
            for (std::uint64_t r = 0; r < R; ++r) col[r] = samples[r * n + a] * samples[r * n + c];
            m(a, c) = m(c, a) = pairwise_sum(col) / static_cast<double>(R);
        }
    return m;
}

inline LambdaBlock lambda_block(const SmolyakPlan& plan, const MultiIndex& j, const MultiIndex& k, double alpha, std::uint64_t R,
                                std::uint64_t seed, unsigned threads = 1) {
    if (!(alpha > 0.5)) throw std::domain_error("lambda_block: alpha must exceed 1/2");
    const WaveletIndex idx{j, MultiIndex(j.size()), k};
    validate_index(idx, plan.b);
    if (j.size() != static_cast<std::size_t>(plan.dimension())) throw std::invalid_argument("lambda_block: dimension mismatch");
    if (j.total() == 0) return {j, k, Matrix(1), R, std::vector<double>(R, 0.0)};
    const std::size_t n = theta_size(j, plan.b);
    const double scale = std::pow(static_cast<double>(plan.b), -alpha * j.total());
    const BlockFactory factory(plan.b, plan.s, plan.max_level());
    std::vector<double> samples(R * n);
    parallel_for(R, threads, [&](std::uint64_t r) {
        const auto real = realize_blocks(plan, factory, seed, r);
        const auto v = smolyak_wavelet_values(real, idx);
        for (std::size_t a = 0; a < n; ++a) samples[r * n + a] = scale * v[a];
    });
    return {j, k, second_moment_matrix(samples, n, R), R, std::move(samples)};
}

/// (⌊2L/d⌋, ..., ⌊2L/d⌋, 2L - (d-1)⌊2L/d⌋)
inline MultiIndex candidate_worst_index(int L, int d) {
    if (d < 1 || L < d) throw std::invalid_argument("candidate_worst_index: need L >= d >= 1");
    const int q = 2 * L / d;
    MultiIndex j(static_cast<std::size_t>(d), q);
    j.set(static_cast<std::size_t>(d - 1), 2 * L - (d - 1) * q);
    return j;
}

/// |{ l ∈ N^d : |l| = μ, l_n <= j_n }| with j the per-block resolutions.
inline std::size_t count_admissible_levels(const MultiIndex& j, int mu) {
    const int d = static_cast<int>(j.size());
    if (mu < d) throw std::invalid_argument("count_admissible_levels: need mu >= d");
    return compositions(mu, d, 1, j).size();
}

/// Spreads each block resolution evenly over its s coordinates (earlier coordinates get the remainder).
inline MultiIndex expand_block_resolution(const MultiIndex& block_j, int s) {
    std::vector<int> out;
    for (int total : block_j)
        for (int t = 0; t < s; ++t) out.push_back(total / s + (t < total % s ? 1 : 0));
    return MultiIndex(out);
}

struct CandidateResult {
    MultiIndex j;
    double rho = 0.0;
    double trace = 0.0;
};

struct ErrorEstimate {
    double error = 0.0;  // sqrt of the largest ρ(Λ(j,0))
    double se = 0.0;     // delta-method standard error of `error`
    double rho = 0.0;
    MultiIndex argmax_j;
    bool boundary = false;  // maximiser sits on the truncation boundary |j| = L + j_budget
    int j_budget = 0;
    std::vector<CandidateResult> candidates;
};

/// All j ∈ N_0^D with L-d < |j| <= L + j_budget, then the expanded lower-bound candidate.
inline std::vector<MultiIndex> error_candidates(const SmolyakPlan& plan, int j_budget) {
    std::vector<MultiIndex> out;
    std::set<MultiIndex> seen;
    for (int total = plan.L - plan.d + 1; total <= plan.L + j_budget; ++total)
        for (auto& j : compositions(total, plan.dimension(), 0))
            if (seen.insert(j).second) out.push_back(std::move(j));
    auto worst = expand_block_resolution(candidate_worst_index(plan.L, plan.d), plan.s);
    if (seen.insert(worst).second) out.push_back(std::move(worst));
    return out;
}

/// e^r ≈ max over candidates (j, k = 0) of sqrt ρ(Λ(j,0)); all candidates share each replication.
inline ErrorEstimate randomized_error_estimate(const SmolyakPlan& plan, double alpha, std::uint64_t R, std::uint64_t seed,
                                               int j_budget = -1, unsigned threads = 1) {
    if (!(alpha > 0.5)) throw std::domain_error("randomized_error_estimate: alpha must exceed 1/2");
    if (R < 2) throw std::invalid_argument("randomized_error_estimate: need at least 2 replications");
    if (j_budget < 0) j_budget = 2 * plan.d;
    const auto candidates = error_candidates(plan, j_budget);
    const std::size_t C = candidates.size();
    std::vector<WaveletIndex> idx(C);
    std::vector<std::size_t> n(C);
    std::vector<double> scale(C);
    for (std::size_t c = 0; c < C; ++c) {
        idx[c] = {candidates[c], MultiIndex(candidates[c].size()), MultiIndex(candidates[c].size())};
        n[c] = theta_size(candidates[c], plan.b);
        scale[c] = std::pow(static_cast<double>(plan.b), -alpha * candidates[c].total());
    }
    std::vector<std::vector<double>> samples(C);
    for (std::size_t c = 0; c < C; ++c) samples[c].resize(R * n[c]);

    const BlockFactory factory(plan.b, plan.s, plan.max_level());
    parallel_for(R, threads, [&](std::uint64_t r) {
        const auto real = realize_blocks(plan, factory, seed, r);
        for (std::size_t c = 0; c < C; ++c) {
            const auto v = smolyak_wavelet_values(real, idx[c]);
            for (std::size_t a = 0; a < n[c]; ++a) samples[c][r * n[c] + a] = scale[c] * v[a];
        }
    });

    ErrorEstimate est;
    est.j_budget = j_budget;
    std::size_t best = 0;
    std::optional<EigenSystem> best_eig;
    for (std::size_t c = 0; c < C; ++c) {
        const Matrix m = second_moment_matrix(samples[c], n[c], R);
        auto eig = jacobi_eigen(m);
        const double rho = std::max(std::fabs(eig.values.front()), std::fabs(eig.values.back()));
        est.candidates.push_back({candidates[c], rho, m.trace()});
        if (c == 0 || rho > est.rho) {
            est.rho = rho;
            best = c;
            best_eig = std::move(eig);
        }
    }
    est.error = std::sqrt(est.rho);
    est.argmax_j = candidates[best];
    est.boundary = candidates[best].total() >= plan.L + j_budget;

    // SE of ρ along the top eigenvector u: samples (u·v_r)^2.
    const std::size_t nb = n[best];
    const std::size_t top = std::fabs(best_eig->values.front()) > std::fabs(best_eig->values.back()) ? 0 : nb - 1;
    std::vector<double> proj(R);
    for (std::uint64_t r = 0; r < R; ++r) {
        double p = 0.0;
        for (std::size_t a = 0; a < nb; ++a) p += best_eig->vectors(a, top) * samples[best][r * nb + a];
        proj[r] = p * p;
    }
    const double se_rho = estimate_moments(proj).se;
    est.se = est.error > 0.0 ? se_rho / (2.0 * est.error) : se_rho;
    return est;
}

struct ConvergenceRecord {
    int L = 0;
    std::uint64_t N = 0;
    double error = 0.0;
    double se = 0.0;
    MultiIndex argmax_j;
    bool boundary = false;
};

struct RateFit {
    // log e = intercept + slope log N
    double slope = 0.0;
    double intercept = 0.0;
    // fixed exponents: log e + (α+½) log N - (d-1)(1+α) log log N = offset + residual
    double fixed_offset = 0.0;
    std::vector<double> fixed_residuals;
    // N-exponent fixed: log(e N^{α+½}) = c + beta log log N  (d >= 2)
    double log_exponent = 0.0;
    Interval log_exponent_ci;
    // both free: log e = c + gamma log N + beta log log N  (d >= 2; gamma = slope for d = 1)
    double free_n_exponent = 0.0;
    double free_log_exponent = 0.0;
    Interval free_n_exponent_ci;
    Interval free_log_exponent_ci;
    // e N^{α+½} / (log N)^{(d-1)(1+α)}
    std::vector<double> compensated;
    double compensated_band = 0.0;  // max / min
    // e(L+1)/e(L) against b^{-(α+½)} ((L+1)/L)^{(d-1)(1+α)}
    std::vector<double> step_ratio;
    std::vector<double> step_ratio_theory;
};

struct ConvergenceStudy {
    int d = 1, s = 1, b = 2;
    double alpha = 0.75;
    std::uint64_t replications = 0;
    std::uint64_t seed = 0;
    int j_budget = 0;
    std::vector<ConvergenceRecord> records;
    RateFit fit;
};

namespace detail {

// Percentile interval of coefficient `which` under a residual bootstrap.
inline Interval bootstrap_interval(const std::vector<double>& X, const LinearFit& fit, std::size_t p, std::size_t which,
                                   std::uint64_t seed, int resamples = 200) {
    const std::size_t n = fit.fitted.size();
    hashing::SplitMix rng(hashing::combine(seed, 0x626f6f74ULL));
    std::vector<double> coefs;
    coefs.reserve(static_cast<std::size_t>(resamples));
    std::vector<double> y(n);
    for (int rep = 0; rep < resamples; ++rep) {
        for (std::size_t r = 0; r < n; ++r) y[r] = fit.fitted[r] + fit.residuals[rng.bounded(n)];
        coefs.push_back(least_squares(X, y, p).coef[which]);
    }
    std::sort(coefs.begin(), coefs.end());
    auto at = [&](double q) { return coefs[static_cast<std::size_t>(std::floor(q * (resamples - 1)))]; };
    return {at(0.025), at(0.975)};
}

}  // namespace detail

inline RateFit fit_rates(const std::vector<ConvergenceRecord>& records, int d, double alpha, int b, std::uint64_t seed = 0) {
    if (records.size() < 3) throw std::invalid_argument("fit_rates: need at least 3 levels");
    const std::size_t n = records.size();
    const double a = alpha + 0.5;
    const double g = (d - 1) * (1.0 + alpha);
    std::vector<double> logN(n), loglogN(n), logE(n);
    for (std::size_t r = 0; r < n; ++r) {
        if (!(records[r].error > 0.0)) throw std::domain_error("fit_rates: error estimate must be positive");
        logN[r] = std::log(static_cast<double>(records[r].N));
        if (d >= 2 && records[r].N < 2) throw std::domain_error("fit_rates: log log N undefined, need N >= 2");
        loglogN[r] = d >= 2 ? std::log(logN[r]) : 0.0;
        logE[r] = std::log(records[r].error);
    }
    RateFit f;
    const auto line = fit_line(logN, logE);
    f.intercept = line.coef[0];
    f.slope = line.coef[1];

    std::vector<double> fixed(n);
    for (std::size_t r = 0; r < n; ++r) fixed[r] = logE[r] + a * logN[r] - g * loglogN[r];
    f.fixed_offset = pairwise_sum(fixed) / static_cast<double>(n);
    for (double v : fixed) f.fixed_residuals.push_back(v - f.fixed_offset);

    for (std::size_t r = 0; r < n; ++r) f.compensated.push_back(std::exp(fixed[r]));
    const auto [mn, mx] = std::minmax_element(f.compensated.begin(), f.compensated.end());
    f.compensated_band = *mx / *mn;

    for (std::size_t r = 0; r + 1 < n; ++r) {
        f.step_ratio.push_back(records[r + 1].error / records[r].error);
        const double L0 = records[r].L, L1 = records[r + 1].L;
        f.step_ratio_theory.push_back(std::pow(static_cast<double>(b), -a * (L1 - L0)) * std::pow(L1 / L0, g));
    }

    if (d >= 2) {
        std::vector<double> y(n), X;
        for (std::size_t r = 0; r < n; ++r) {
            y[r] = logE[r] + a * logN[r];
            X.push_back(1.0);
            X.push_back(loglogN[r]);
        }
        const auto fit1 = least_squares(X, y, 2);
        f.log_exponent = fit1.coef[1];
        f.log_exponent_ci = detail::bootstrap_interval(X, fit1, 2, 1, seed);

        std::vector<double> X3;
        for (std::size_t r = 0; r < n; ++r) {
            X3.push_back(1.0);
            X3.push_back(logN[r]);
            X3.push_back(loglogN[r]);
        }
        const auto fit2 = least_squares(X3, logE, 3);
        f.free_n_exponent = fit2.coef[1];
        f.free_log_exponent = fit2.coef[2];
        f.free_n_exponent_ci = detail::bootstrap_interval(X3, fit2, 3, 1, seed);
        f.free_log_exponent_ci = detail::bootstrap_interval(X3, fit2, 3, 2, seed);
    } else {
        std::vector<double> X;
        for (double v : logN) {
            X.push_back(1.0);
            X.push_back(v);
        }
        f.free_n_exponent = f.slope;
        f.free_n_exponent_ci = detail::bootstrap_interval(X, line, 2, 1, seed);
    }
    return f;
}

inline ConvergenceStudy convergence_study(int d, int s, int b, double alpha, int L_min, int L_max, std::uint64_t R,
                                          std::uint64_t seed, int j_budget = -1, unsigned threads = 1) {
    if (L_max - L_min + 1 < 3) throw std::invalid_argument("convergence_study: need at least 3 levels to fit a rate");
    if (L_min < d) throw std::invalid_argument("convergence_study: levels must satisfy L >= d");
    ConvergenceStudy st{d, s, b, alpha, R, seed, j_budget < 0 ? 2 * d : j_budget, {}, {}};
    for (int L = L_min; L <= L_max; ++L) {
        const auto plan = SmolyakPlan::make(b, s, d, L);
        const auto est = randomized_error_estimate(plan, alpha, R, seed, st.j_budget, threads);
        st.records.push_back({L, plan.nodes(), est.error, est.se, est.argmax_j, est.boundary});
    }
    st.fit = fit_rates(st.records, d, alpha, b, seed);
    return st;
}

}  // namespace rsmolyak
