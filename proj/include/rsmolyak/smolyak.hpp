#pragma once

// Randomized Smolyak quadrature A(L,d) on [0,1)^{d s} in combination form
//
//   A(L,d) = Σ_{L-d+1 <= |l| <= L} (-1)^{L-|l|} C(d-1, L-|l|) U^{(1)}_{l_1} ⊗ ... ⊗ U^{(d)}_{l_d}
//
// Each U^{(n)}_l is drawn once per replication and shared by every term that references it.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rsmolyak/scrambling.hpp"
#include "rsmolyak/stats.hpp"
#include "rsmolyak/wavelets.hpp"

namespace rsmolyak {

struct CombinationTerm {
    MultiIndex levels;
    std::int64_t coefficient = 0;

    friend bool operator==(const CombinationTerm&, const CombinationTerm&) = default;
};

/// Terms with L-d+1 <= |l| <= L, l_n >= 1; ordered by |l| descending, then lexicographically.
inline std::vector<CombinationTerm> combination_terms(int L, int d) {
    if (d < 1) throw std::invalid_argument("combination_terms: d must be >= 1");
    if (L < d) throw std::invalid_argument("combination_terms: level L must be >= d");
    std::vector<CombinationTerm> terms;
    for (int mu = L; mu >= std::max(d, L - d + 1); --mu) {
        const std::int64_t sign = ((L - mu) % 2 == 0) ? 1 : -1;
        const std::int64_t c = sign * binomial(d - 1, L - mu);
        for (auto& l : compositions(mu, d, 1)) terms.push_back({std::move(l), c});
    }
    return terms;
}

/// Σ_terms b^{|l|-d}: nodes used by A(L,d) (distinct almost surely).
inline std::uint64_t node_count(int L, int d, int s, int b) {
    (void)s;
    if (d < 1 || L < d) throw std::invalid_argument("node_count: need L >= d >= 1");
    std::uint64_t n = 0;
    for (int mu = std::max(d, L - d + 1); mu <= L; ++mu)
        n += static_cast<std::uint64_t>(binomial(mu - 1, d - 1)) * ipow(static_cast<std::uint64_t>(b), mu - d);
    return n;
}

struct SmolyakPlan {
    int b = 2;
    int s = 1;
    int d = 1;
    int L = 1;
    std::vector<CombinationTerm> terms;

    static SmolyakPlan make(int b, int s, int d, int L) {
        check_base(b);
        if (s < 1) throw std::invalid_argument("SmolyakPlan: s must be >= 1");
        return SmolyakPlan{b, s, d, L, combination_terms(L, d)};
    }

    int dimension() const noexcept { return d * s; }
    /// Highest building-block level referenced by any term.
    int max_level() const noexcept { return L - d + 1; }
    std::uint64_t nodes() const { return node_count(L, d, s, b); }
};

/// One draw of all building blocks referenced by a plan: blocks[n][l-1] = U^{(n)}_l.
struct SmolyakRealization {
    const SmolyakPlan* plan = nullptr;
    std::uint64_t master_seed = 0;
    std::uint64_t replication = 0;
    std::vector<std::vector<BuildingBlock>> blocks;

    const BuildingBlock& block(int n, int level) const {
        return blocks.at(static_cast<std::size_t>(n)).at(static_cast<std::size_t>(level - 1));
    }
};

/// Draws U^{(n)}_l for every block n and level 1..L-d+1. `key_blocks`, when given, renames the
/// block index used in the scrambling keys (block n uses key_blocks[n]).
inline SmolyakRealization realize_blocks(const SmolyakPlan& plan, const BlockFactory& factory, std::uint64_t master_seed,
                                         std::uint64_t replication, std::span<const int> key_blocks = {}) {
    if (factory.base() != plan.b || factory.dimension() != plan.s || factory.max_level() < plan.max_level())
        throw std::invalid_argument("realize_blocks: factory does not match plan");
    if (!key_blocks.empty() && key_blocks.size() != static_cast<std::size_t>(plan.d))
        throw std::invalid_argument("realize_blocks: one key block per block");
    SmolyakRealization r{&plan, master_seed, replication, {}};
    r.blocks.resize(static_cast<std::size_t>(plan.d));
    for (int n = 0; n < plan.d; ++n) {
        const int key_block = key_blocks.empty() ? n : key_blocks[static_cast<std::size_t>(n)];
        auto& row = r.blocks[static_cast<std::size_t>(n)];
        row.reserve(static_cast<std::size_t>(plan.max_level()));
        for (int l = 1; l <= plan.max_level(); ++l) row.push_back(factory.realize(key_block, l, master_seed, replication));
    }
    return r;
}

/// Explicit nodes and weights. Weight of a node of term l is coeff / b^{|l|-d}, formed from the
/// exact integer ratio and rounded once. Nodes are stored term by term.
inline RealizedQuadrature assemble(const SmolyakRealization& r) {
    const SmolyakPlan& plan = *r.plan;
    const auto D = static_cast<std::size_t>(plan.dimension());
    const auto s = static_cast<std::size_t>(plan.s);
    RealizedQuadrature q{D, {}, {}, r.master_seed, r.replication};
    q.nodes.reserve(plan.nodes() * D);
    q.weights.reserve(plan.nodes());
    const auto d = static_cast<std::size_t>(plan.d);
    std::vector<std::size_t> cur(d);
    for (const auto& term : plan.terms) {
        const double w = static_cast<double>(term.coefficient) / dpow(plan.b, term.levels.total() - plan.d);
        std::vector<const BuildingBlock*> parts(d);
        for (std::size_t n = 0; n < d; ++n) parts[n] = &r.block(static_cast<int>(n), term.levels[n]);
        std::fill(cur.begin(), cur.end(), 0);
        while (true) {
            for (std::size_t n = 0; n < d; ++n) {
                const auto x = parts[n]->node(cur[n]);
                q.nodes.insert(q.nodes.end(), x.begin(), x.begin() + static_cast<std::ptrdiff_t>(s));
            }
            q.weights.push_back(w);
            std::size_t n = d;
            while (n-- > 0) {
                if (++cur[n] < parts[n]->size()) break;
                cur[n] = 0;
            }
            if (n == static_cast<std::size_t>(-1)) break;
        }
    }
    return q;
}

/// One realization of A(L,d) as explicit nodes and weights.
inline RealizedQuadrature realize(const SmolyakPlan& plan, std::uint64_t master_seed, std::uint64_t replication,
                                  const NetGenerator& generator = default_net) {
    const BlockFactory factory(plan.b, plan.s, plan.max_level(), generator);
    return assemble(realize_blocks(plan, factory, master_seed, replication));
}

/// Integrand returned a non-finite value.
class EvaluationError : public std::runtime_error {
public:
    EvaluationError(std::size_t node, double value)
        : std::runtime_error("integrand returned " + std::to_string(value) + " at node " + std::to_string(node)), node_(node) {}
    std::size_t node() const noexcept { return node_; }

private:
    std::size_t node_;
};

/// Σ w_ν f(x_ν), each node evaluated once, pairwise-summed.
template <class F>
double apply(const RealizedQuadrature& q, F&& f) {
    std::vector<double> terms(q.size());
    for (std::size_t v = 0; v < q.size(); ++v) {
        const double y = f(q.node(v));
        if (!std::isfinite(y)) throw EvaluationError(v, y);
        terms[v] = q.weights[v] * y;
    }
    return pairwise_sum(terms);
}

/// A(L,d) applied to a tensor-product integrand given the per-block building-block values
/// table[n][l-1] = U^{(n)}_l g_n.
inline double apply_factored(const SmolyakPlan& plan, const std::vector<std::vector<double>>& table) {
    double sum = 0.0;
    for (const auto& term : plan.terms) {
        double v = static_cast<double>(term.coefficient);
        for (std::size_t n = 0; n < term.levels.size(); ++n) v *= table[n][static_cast<std::size_t>(term.levels[n] - 1)];
        sum += v;
    }
    return sum;
}

/// U^{(n)}_l Ψ_n for every block n and level l of a realization, Ψ a D-dimensional wavelet.
inline std::vector<std::vector<double>> wavelet_table(const SmolyakRealization& r, const WaveletIndex& idx) {
    const SmolyakPlan& plan = *r.plan;
    const auto s = static_cast<std::size_t>(plan.s);
    std::vector<std::vector<double>> table(static_cast<std::size_t>(plan.d));
    for (int n = 0; n < plan.d; ++n) {
        const WaveletIndex part = idx.slice(static_cast<std::size_t>(n) * s, s);
        auto& row = table[static_cast<std::size_t>(n)];
        for (int l = 1; l <= plan.max_level(); ++l)
            row.push_back(r.block(n, l).apply([&](std::span<const double> x) { return psi_eval_multi(part, x, plan.b); }));
    }
    return table;
}

/// A(L,d) Ψ for one realization via the tensor structure.
inline double apply_wavelet(const SmolyakRealization& r, const WaveletIndex& idx) {
    if (idx.dimension() != static_cast<std::size_t>(r.plan->dimension())) throw std::invalid_argument("apply_wavelet: dimension mismatch");
    return apply_factored(*r.plan, wavelet_table(r, idx));
}

/// Blocks n whose resolution sub-vector is not identically zero.
inline std::vector<int> active_blocks(const MultiIndex& j, int s) {
    std::vector<int> out;
    const int d = static_cast<int>(j.size()) / s;
    for (int n = 0; n < d; ++n)
        if (j.slice(static_cast<std::size_t>(n * s), static_cast<std::size_t>(s)).total() > 0) out.push_back(n);
    return out;
}

/// Samples of A(L,d) Ψ and of A(L-t,d-t) Ψ' (inactive blocks removed) over R replications.
/// With shared_keys the reduced algorithm reuses the scrambling keys of the active blocks, so the
/// two sides agree realization by realization; otherwise it runs on an independent seed.
struct DimensionReductionSamples {
    int inactive = 0;
    std::vector<double> full;
    std::vector<double> reduced;
};

inline DimensionReductionSamples dimension_reduction_check(const SmolyakPlan& plan, const WaveletIndex& idx, std::uint64_t seed,
                                                           std::uint64_t replications, bool shared_keys = true) {
    validate_index(idx, plan.b);
    const auto active = active_blocks(idx.j, plan.s);
    const int t = plan.d - static_cast<int>(active.size());
    if (t == 0) throw PreconditionError("dimension_reduction_check: every block is active, nothing to reduce");
    if (active.empty()) throw PreconditionError("dimension_reduction_check: constant wavelet has no active block");

    const SmolyakPlan reduced_plan = SmolyakPlan::make(plan.b, plan.s, plan.d - t, plan.L - t);
    const auto s = static_cast<std::size_t>(plan.s);
    WaveletIndex reduced_idx;
    {
        std::vector<int> j, i, k;
        for (int n : active)
            for (std::size_t c = 0; c < s; ++c) {
                const std::size_t pos = static_cast<std::size_t>(n) * s + c;
                j.push_back(idx.j[pos]);
                i.push_back(idx.i[pos]);
                k.push_back(idx.k[pos]);
            }
        reduced_idx = {MultiIndex(j), MultiIndex(i), MultiIndex(k)};
    }

    const BlockFactory factory(plan.b, plan.s, plan.max_level());
    const std::uint64_t reduced_seed = shared_keys ? seed : hashing::combine(seed, 0x6f74686572ULL);
    DimensionReductionSamples out{t, {}, {}};
    out.full.reserve(replications);
    out.reduced.reserve(replications);
    for (std::uint64_t rep = 0; rep < replications; ++rep) {
        const auto full = realize_blocks(plan, factory, seed, rep);
        const auto part = realize_blocks(reduced_plan, factory, reduced_seed, rep, active);
        out.full.push_back(apply_wavelet(full, idx));
        out.reduced.push_back(apply_wavelet(part, reduced_idx));
    }
    return out;
}

/// Named test integrands with known integrals over [0,1)^D.
struct Integrand {
    std::string name;
    std::function<double(std::span<const double>)> f;
    std::function<double(std::size_t)> exact;
};

inline Integrand builtin_integrand(const std::string& name) {
    if (name == "one") return {name, [](std::span<const double>) { return 1.0; }, [](std::size_t) { return 1.0; }};
    if (name == "product")
        return {name,
                [](std::span<const double> x) {
                    double p = 1.0;
                    for (double v : x) p *= v;
                    return p;
                },
                [](std::size_t D) { return std::pow(0.5, static_cast<double>(D)); }};
    if (name == "expprod")
        return {name,
                [](std::span<const double> x) {
                    double p = 1.0;
                    for (double v : x) p *= std::exp(v);
                    return p;
                },
                [](std::size_t D) { return std::pow(std::exp(1.0) - 1.0, static_cast<double>(D)); }};
    throw std::invalid_argument("unknown integrand '" + name + "' (expected one, product, expprod)");
}

}  // namespace rsmolyak
