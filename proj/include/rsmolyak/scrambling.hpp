#pragma once

// Random b-ary scrambling of depth l with uniform remainder terms, and the equal-weight
// building-block quadratures U_l on scrambled (0,l-1,s)-nets.
//
// Permutations are never materialised as a tree. The permutation applied to digit r of a
// coordinate is a pure function of (key, original digits x_1..x_{r-1}): a keyed hash of the
// prefix seeds a Fisher-Yates shuffle. Same key and prefix always give the same permutation.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "rsmolyak/nets.hpp"

namespace rsmolyak {

namespace hashing {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

inline constexpr std::uint64_t mix64(std::uint64_t z) {
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t combine(std::uint64_t h, std::uint64_t v) { return mix64(h ^ mix64(v)); }

/// SplitMix64 stream.
class SplitMix {
public:
    explicit constexpr SplitMix(std::uint64_t seed) : state_(seed) {}
    constexpr std::uint64_t next() {
        std::uint64_t z = (state_ += kGolden);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    /// Unbiased integer in [0, range) (Lemire's multiply-and-reject).
    std::uint64_t bounded(std::uint64_t range) {
        using u128 = unsigned __int128;
        u128 m = static_cast<u128>(next()) * range;
        auto low = static_cast<std::uint64_t>(m);
        if (low < range) {
            const std::uint64_t threshold = (0 - range) % range;
            while (low < threshold) {
                m = static_cast<u128>(next()) * range;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }
    /// Uniform double in [0,1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

inline constexpr std::uint64_t kPermutationTag = 0x7065726d75746174ULL;
inline constexpr std::uint64_t kRemainderTag = 0x72656d61696e6465ULL;

}  // namespace hashing

inline constexpr int kMaxScrambleBase = 64;

/// Seed material for one independent scrambling: coordinate t of block n at level l in one
/// replication. `identity` switches every permutation to the identity.
struct ScramblerKey {
    std::uint64_t master_seed = 0;
    int block = 0;
    int level = 0;
    int coordinate = 0;
    std::uint64_t replication = 0;
    bool identity = false;

    ScramblerKey with_coordinate(int t) const {
        ScramblerKey k = *this;
        k.coordinate = t;
        return k;
    }

    std::uint64_t hash() const {
        using hashing::combine;
        std::uint64_t h = hashing::mix64(master_seed);
        h = combine(h, static_cast<std::uint64_t>(block));
        h = combine(h, static_cast<std::uint64_t>(level));
        h = combine(h, static_cast<std::uint64_t>(coordinate));
        h = combine(h, replication);
        return h;
    }

    friend bool operator==(const ScramblerKey&, const ScramblerKey&) = default;
};

namespace detail {

inline void fill_permutation(std::uint64_t seed, int b, std::span<int> perm) {
    for (int i = 0; i < b; ++i) perm[static_cast<std::size_t>(i)] = i;
    hashing::SplitMix rng(seed);
    for (int i = b - 1; i > 0; --i) {
        const auto j = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(i) + 1));
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
}

/// Scrambles the first `depth` digits of one coordinate; out receives the new digits.
inline void scramble_digits(std::span<const int> digits, int depth, int b, std::uint64_t key_hash, bool identity,
                            std::span<int> out) {
    if (identity) {
        for (int r = 0; r < depth; ++r) out[static_cast<std::size_t>(r)] = digits[static_cast<std::size_t>(r)];
        return;
    }
    std::array<int, kMaxScrambleBase> perm{};
    std::uint64_t state = hashing::combine(key_hash, hashing::kPermutationTag);
    for (int r = 0; r < depth; ++r) {
        const int x = digits[static_cast<std::size_t>(r)];
        if (b == 2) {
            out[static_cast<std::size_t>(r)] = x ^ static_cast<int>(hashing::SplitMix(state).bounded(2));
        } else {
            fill_permutation(state, b, std::span<int>(perm.data(), static_cast<std::size_t>(b)));
            out[static_cast<std::size_t>(r)] = perm[static_cast<std::size_t>(x)];
        }
        state = hashing::combine(state, static_cast<std::uint64_t>(x));
    }
}

inline void check_scramble_base(int b) {
    check_base(b);
    if (b > kMaxScrambleBase) throw UnsupportedParameters("scrambling supports bases up to 64");
}

}  // namespace detail

/// Permutation of {0..b-1} applied to the digit following `prefix` (original digits
/// x_1..x_r of the coordinate) under `key`.
inline std::vector<int> permutation_for(std::span<const int> prefix, const ScramblerKey& key, int b) {
    detail::check_scramble_base(b);
    std::vector<int> perm(static_cast<std::size_t>(b));
    if (key.identity) {
        for (int i = 0; i < b; ++i) perm[static_cast<std::size_t>(i)] = i;
        return perm;
    }
    std::uint64_t state = hashing::combine(key.hash(), hashing::kPermutationTag);
    for (int x : prefix) state = hashing::combine(state, static_cast<std::uint64_t>(x));
    if (b == 2) {
        const int flip = static_cast<int>(hashing::SplitMix(state).bounded(2));
        perm[0] = flip;
        perm[1] = 1 - flip;
    } else {
        detail::fill_permutation(state, b, perm);
    }
    return perm;
}

/// Remainder term ξ in [0,1) for point `index` under `key` (coordinate taken from the key).
inline double remainder_for(const ScramblerKey& key, std::uint64_t index) {
    hashing::SplitMix rng(hashing::combine(hashing::combine(key.hash(), hashing::kRemainderTag), index));
    return rng.uniform();
}

/// σ(p) + b^{-depth} ξ: first `depth` digits of each coordinate pass through nested permutations,
/// deeper digits are zero and ξ_t = remainder[t] fills the rest. Coordinate t uses key.with_coordinate(t).
inline DigitPoint scramble_point(const DigitPoint& p, int depth, const ScramblerKey& key, std::span<const double> remainder,
                                 int b) {
    detail::check_scramble_base(b);
    if (depth < 0 || depth > p.depth()) throw PreconditionError("scramble_point: depth exceeds stored digits");
    if (remainder.size() != p.dimension()) throw std::invalid_argument("scramble_point: one remainder per coordinate");
    DigitPoint out(p.dimension(), depth);
    for (std::size_t t = 0; t < p.dimension(); ++t) {
        const ScramblerKey kt = key.with_coordinate(static_cast<int>(t));
        detail::scramble_digits(p.digits[t], depth, b, kt.hash(), kt.identity, out.digits[t]);
        if (!(remainder[t] >= 0.0 && remainder[t] < 1.0)) throw std::domain_error("scramble_point: remainder outside [0,1)");
        out.remainder[t] = remainder[t];
    }
    return out;
}

/// Image of a (0,m,s)-net under one vector of independent scramblings of depth >= m; point i,
/// coordinate t receives its own ξ_i^t.
struct ScrambledNet {
    NetParams params;
    int depth = 0;
    ScramblerKey key;
    std::vector<DigitPoint> points;

    std::vector<double> values() const {
        std::vector<double> out;
        out.reserve(points.size() * static_cast<std::size_t>(params.s));
        for (const auto& p : points)
            for (std::size_t t = 0; t < p.dimension(); ++t) out.push_back(p.value(t, params.b));
        return out;
    }
};

inline ScrambledNet scramble_net(const PointSet& net, int depth, const ScramblerKey& key) {
    const int b = net.params.b;
    detail::check_scramble_base(b);
    if (depth < net.params.m) throw PreconditionError("scramble_net: depth must be >= m");
    ScrambledNet out{net.params, depth, key, {}};
    out.points.reserve(net.size());
    const auto s = static_cast<std::size_t>(net.params.s);
    std::vector<double> xi(s);
    for (std::size_t i = 0; i < net.size(); ++i) {
        DigitPoint padded = net.points[i];
        for (auto& dg : padded.digits) dg.resize(static_cast<std::size_t>(std::max<int>(depth, static_cast<int>(dg.size()))), 0);
        for (std::size_t t = 0; t < s; ++t) xi[t] = remainder_for(key.with_coordinate(static_cast<int>(t)), i);
        out.points.push_back(scramble_point(padded, depth, key, xi, b));
    }
    return out;
}

/// Explicit nodes and weights of a quadrature on [0,1)^dim. Nodes are row-major.
struct RealizedQuadrature {
    std::size_t dimension = 0;
    std::vector<double> nodes;
    std::vector<double> weights;
    std::uint64_t master_seed = 0;
    std::uint64_t replication = 0;

    std::size_t size() const noexcept { return weights.size(); }
    std::span<const double> node(std::size_t i) const { return std::span<const double>(nodes).subspan(i * dimension, dimension); }
};

/// U_l^{(n)}: b^{-(l-1)} Σ f(Y_i) over a scrambled (0,l-1,s)-net of depth l-1. U_0 (the null
/// quadrature) is represented by level 0 with no nodes.
struct BuildingBlock {
    int block = 0;
    int level = 0;
    NetParams params;
    double weight = 0.0;
    std::vector<double> nodes;  // row-major, b^{l-1} x s

    std::size_t size() const noexcept { return params.s ? nodes.size() / static_cast<std::size_t>(params.s) : 0; }
    std::span<const double> node(std::size_t i) const {
        return std::span<const double>(nodes).subspan(i * static_cast<std::size_t>(params.s), static_cast<std::size_t>(params.s));
    }

    template <class F>
    double apply(F&& f) const {
        double sum = 0.0;
        for (std::size_t i = 0; i < size(); ++i) sum += f(node(i));
        return weight * sum;
    }

    RealizedQuadrature to_quadrature(std::uint64_t seed = 0, std::uint64_t rep = 0) const {
        return RealizedQuadrature{static_cast<std::size_t>(params.s), nodes, std::vector<double>(size(), weight), seed, rep};
    }
};

/// Scrambles `net` to depth net.params.m and keeps only node coordinates; same stream as scramble_net.
inline std::vector<double> scrambled_values(const PointSet& net, const ScramblerKey& key) {
    const int b = net.params.b;
    const int depth = net.params.m;
    const auto s = static_cast<std::size_t>(net.params.s);
    std::vector<double> out(net.size() * s);
    std::array<int, 64> buffer{};
    std::vector<int> digits(static_cast<std::size_t>(depth));
    if (depth > static_cast<int>(buffer.size())) throw UnsupportedParameters("scrambled_values: depth above 64");
    std::vector<std::uint64_t> coordinate_hash(s);
    for (std::size_t t = 0; t < s; ++t) coordinate_hash[t] = key.with_coordinate(static_cast<int>(t)).hash();
    for (std::size_t i = 0; i < net.size(); ++i) {
        for (std::size_t t = 0; t < s; ++t) {
            std::span<int> scrambled(buffer.data(), static_cast<std::size_t>(depth));
            detail::scramble_digits(net.points[i].digits[t], depth, b, coordinate_hash[t], key.identity, scrambled);
            hashing::SplitMix rng(hashing::combine(hashing::combine(coordinate_hash[t], hashing::kRemainderTag), i));
            out[i * s + t] = value_of(scrambled, b, rng.uniform());
        }
    }
    return out;
}

inline BuildingBlock make_building_block(const PointSet& net, int block, int level, const ScramblerKey& key) {
    if (net.params.m != level - 1) throw PreconditionError("building block of level l needs a (0,l-1,s)-net");
    detail::check_scramble_base(net.params.b);
    BuildingBlock bb{block, level, net.params, 1.0 / dpow(net.params.b, level - 1), {}};
    ScramblerKey k = key;
    k.block = block;
    k.level = level;
    bb.nodes = scrambled_values(net, k);
    return bb;
}

/// Equal-weight quadrature on a freshly scrambled (0,l-1,s)-net; scrambling depth l-1.
inline BuildingBlock realize_building_block(int block, int level, int s, int b, const ScramblerKey& key,
                                            const NetGenerator& generator = default_net) {
    if (level < 1) throw PreconditionError("realize_building_block: level must be >= 1");
    return make_building_block(generator(b, level - 1, s), block, level, key);
}

/// Base nets for levels 1..max_level, built once and shared read-only between replications.
class BlockFactory {
public:
    BlockFactory(int b, int s, int max_level, const NetGenerator& generator = default_net) : b_(b), s_(s) {
        detail::check_scramble_base(b);
        nets_.reserve(static_cast<std::size_t>(max_level));
        for (int l = 1; l <= max_level; ++l) nets_.push_back(generator(b, l - 1, s));
    }

    int base() const noexcept { return b_; }
    int dimension() const noexcept { return s_; }
    int max_level() const noexcept { return static_cast<int>(nets_.size()); }
    const PointSet& net(int level) const { return nets_.at(static_cast<std::size_t>(level - 1)); }

    BuildingBlock realize(int block, int level, std::uint64_t master_seed, std::uint64_t replication, bool identity = false) const {
        ScramblerKey key{master_seed, block, level, 0, replication, identity};
        return make_building_block(net(level), block, level, key);
    }

private:
    int b_;
    int s_;
    std::vector<PointSet> nets_;
};

}  // namespace rsmolyak
