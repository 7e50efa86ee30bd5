// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "rsmolyak/analysis.hpp"

using namespace rsmolyak;

namespace {

constexpr std::uint64_t kSeed = 20240601;

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[1024];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

unsigned threads() { return default_threads(); }

// Random admissible wavelet of dimension D with j_t in [0, j_hi].
WaveletIndex random_index(std::mt19937_64& rng, int D, int b, int j_hi) {
    std::vector<int> j(static_cast<std::size_t>(D)), i(j.size()), k(j.size());
    for (std::size_t t = 0; t < j.size(); ++t) {
        j[t] = std::uniform_int_distribution<int>(0, j_hi)(rng);
        if (j[t] >= 1) {
            i[t] = std::uniform_int_distribution<int>(0, b - 1)(rng);
            k[t] = static_cast<int>(std::uniform_int_distribution<std::uint64_t>(0, shift_count(b, j[t] - 1) - 1)(rng));
        }
    }
    return {MultiIndex(j), MultiIndex(i), MultiIndex(k)};
}

WaveletIndex random_pair_partner(std::mt19937_64& rng, const WaveletIndex& a, int b, int j_hi) {
    while (true) {
        auto c = random_index(rng, static_cast<int>(a.dimension()), b, j_hi);
        if (c.j != a.j || c.k != a.k) return c;
    }
}

Outcome c1_net_validity() {
    int configs = 0;
    for (int b : {2, 3, 5})
        for (int m = 0; m <= 5; ++m)
            for (int s = 1; s <= std::min(b, 3); ++s) {
                ++configs;
                const auto chk = is_net(faure_net(b, m, s), b, m, s);
                if (!chk) return {false, fmt("faure_net(b=%d,m=%d,s=%d) is not a net", b, m, s)};
            }
    return {true, fmt("%d configurations", configs)};
}

Outcome c2_scrambling_preserves() {
    int checked = 0;
    for (int b : {2, 3, 5})
        for (int m = 0; m <= 5; ++m)
            for (int s = 1; s <= std::min(b, 3); ++s) {
                const auto net = faure_net(b, m, s);
                for (std::uint64_t rep = 0; rep < 100; ++rep) {
                    const auto sn = scramble_net(net, m, ScramblerKey{kSeed, 0, m + 1, 0, rep, false});
                    ++checked;
                    if (!is_net(sn.values(), b, m, s))
                        return {false, fmt("scrambling %llu of (b=%d,m=%d,s=%d) broke the net", static_cast<unsigned long long>(rep), b, m, s)};
                }
            }
    return {true, fmt("%d scrambled nets", checked)};
}

Outcome c3_uniformity() {
    const std::uint64_t n = 100000;
    Outcome out;
    std::ostringstream os;
    for (int b : {2, 3}) {
        const auto net = faure_net(b, 3, 2);
        std::vector<std::vector<double>> coord(2, std::vector<double>(n));
        parallel_for(n, threads(), [&](std::uint64_t r) {
            const auto v = scrambled_values(net, ScramblerKey{kSeed, 0, 4, 0, r, false});
            // point 5 of the net
            coord[0][r] = v[10];
            coord[1][r] = v[11];
        });
        for (int t = 0; t < 2; ++t) {
            const double D = ks_uniform(coord[static_cast<std::size_t>(t)]);
            const double crit = ks_critical_1pct(n);
            os << fmt("b=%d x%d KS=%.5f/%.5f ", b, t + 1, D, crit);
            if (!(D < crit)) out.pass = false;
        }
    }
    out.detail = os.str();
    return out;
}

Outcome c4_weight_sum() {
    double worst = 0.0;
    int realizations = 0;
    for (int b : {2, 3})
        for (int d = 1; d <= 3; ++d)
            for (int L = d; L <= d + 6; ++L) {
                const auto plan = SmolyakPlan::make(b, 1, d, L);
                const BlockFactory factory(b, 1, plan.max_level());
                for (std::uint64_t rep = 0; rep < 20; ++rep) {
                    const auto q = assemble(realize_blocks(plan, factory, kSeed, rep));
                    const double sum = rsmolyak::apply(q, [](std::span<const double>) { return 1.0; });
                    worst = std::max(worst, std::fabs(sum - 1.0));
                    worst = std::max(worst, std::fabs(pairwise_sum(q.weights) - 1.0));
                    ++realizations;
                }
            }
    return {worst <= 1e-12, fmt("max |sum w - 1| = %.3g over %d realizations", worst, realizations)};
}

Outcome c5_exactness() {
    double worst = 0.0;
    std::size_t evaluations = 0;
    for (int d = 1; d <= 3; ++d)
        for (int L = d; L <= d + 4; ++L) {
            const auto plan = SmolyakPlan::make(2, 1, d, L);
            const BlockFactory factory(2, 1, plan.max_level());
            const auto indices = indices_of_resolution(d, 2, L - d, false);
            for (std::uint64_t rep = 0; rep < 10; ++rep) {
                const auto real = realize_blocks(plan, factory, kSeed, rep);
                for (const auto& idx : indices) {
                    worst = std::max(worst, std::fabs(apply_wavelet(real, idx) - integral_of_wavelet(idx)));
                    ++evaluations;
                }
            }
        }
    return {worst <= 1e-10, fmt("max |A psi - int psi| = %.3g over %zu evaluations", worst, evaluations)};
}

Outcome c6_unbiasedness() {
    struct Config {
        int d, s, b, L;
    };
    const Config configs[] = {{1, 1, 2, 4}, {2, 1, 2, 5}, {3, 1, 2, 6}, {4, 1, 2, 7}, {1, 2, 2, 4}, {2, 2, 2, 4}, {1, 3, 3, 3}, {1, 4, 5, 3}};
    const std::uint64_t R = 10000;
    const auto f = builtin_integrand("product");
    Outcome out;
    std::ostringstream os;
    for (const auto& c : configs) {
        const auto plan = SmolyakPlan::make(c.b, c.s, c.d, c.L);
        const BlockFactory factory(c.b, c.s, plan.max_level());
        std::vector<double> v(R);
        parallel_for(R, threads(), [&](std::uint64_t r) { v[r] = rsmolyak::apply(assemble(realize_blocks(plan, factory, kSeed, r)), f.f); });
        const auto m = estimate_moments(v);
        const double exact = f.exact(static_cast<std::size_t>(plan.dimension()));
        const double z = (m.mean - exact) / m.se;
        os << fmt("(d=%d,s=%d,b=%d,L=%d) z=%.2f ", c.d, c.s, c.b, c.L, z);
        if (!(std::fabs(m.mean - exact) <= 4.0 * m.se)) out.pass = false;
    }
    out.detail = os.str();
    return out;
}

Outcome c7_second_moment_bracket() {
    const std::uint64_t R = 4096;
    Outcome out;
    int checked = 0;
    double min_lo_z = 1e300, min_hi_z = 1e300;
    for (int s : {1, 2})
        for (int b : {2, 3})
            for (int l = 1; l <= 6; ++l) {
                const BlockFactory factory(b, s, l);
                const auto bracket = second_moment_bracket(l, s, b);
                for (const auto& j : compositions(l + s - 1, s, 0)) {
                    const WaveletIndex idx{j, MultiIndex(j.size()), MultiIndex(j.size())};
                    const std::size_t n = theta_size(j, b);
                    std::vector<double> samples(R * n);
                    parallel_for(R, threads(), [&](std::uint64_t r) {
                        block_wavelet_values(factory.realize(0, l, kSeed, r), idx, b, std::span<double>(samples).subspan(r * n, n));
                    });
                    for (std::size_t a = 0; a < n; ++a) {
                        std::vector<double> col(R);
                        for (std::uint64_t r = 0; r < R; ++r) col[r] = samples[r * n + a];
                        const auto m = estimate_moments(col);
                        const double se = m.se_second;
                        // rounding slack for cases where the moment equals a bracket end exactly
                        const double lo = bracket.lo * (1.0 - 1e-12), hi = bracket.hi * (1.0 + 1e-12);
                        ++checked;
                        if (se > 0) {
                            min_lo_z = std::min(min_lo_z, (m.second_moment - bracket.lo) / se);
                            min_hi_z = std::min(min_hi_z, (bracket.hi - m.second_moment) / se);
                        }
                        if (m.second_moment + 4.0 * se < lo || m.second_moment - 4.0 * se > hi) {
                            out.pass = false;
                            out.detail += fmt("[s=%d b=%d l=%d j=%s i#%zu: %.4g not in [%.4g, %.4g] se=%.2g] ", s, b, l, j.to_string().c_str(), a,
                                              m.second_moment, bracket.lo, bracket.hi, se);
                        }
                    }
                }
            }
    out.detail += fmt("%d wavelets, min (m-lo)/se = %.2f, min (hi-m)/se = %.2f", checked, min_lo_z, min_hi_z);
    return out;
}

Outcome c8_zero_cross_terms() {
    const std::uint64_t R = 10000;
    std::mt19937_64 rng(kSeed);
    Outcome out;
    double worst = 0.0;
    int pairs = 0;
    for (int s : {1, 2})
        for (int b : {2, 3})
            for (int p = 0; p < 20; ++p) {
                const int l = std::uniform_int_distribution<int>(1, 4)(rng);
                const int l2 = std::bernoulli_distribution(0.5)(rng) ? l : std::uniform_int_distribution<int>(1, 4)(rng);
                const auto a = random_index(rng, s, b, l + 1);
                const auto c = random_pair_partner(rng, a, b, l + 1);
                const auto m = cross_moment_bb(l, l2, a, c, b, R, kSeed + static_cast<std::uint64_t>(pairs), threads());
                ++pairs;
                if (m.se > 0) worst = std::max(worst, std::fabs(m.mean) / m.se);
                if (std::fabs(m.mean) > 4.0 * m.se) {
                    out.pass = false;
                    out.detail += fmt("[block s=%d b=%d l=%d,%d mean=%.3g se=%.3g] ", s, b, l, l2, m.mean, m.se);
                }
            }
    struct Config {
        int b, s, d, L;
    };
    for (const auto& cfg : {Config{2, 1, 2, 5}, Config{3, 1, 2, 4}, Config{2, 2, 2, 4}}) {
        const auto plan = SmolyakPlan::make(cfg.b, cfg.s, cfg.d, cfg.L);
        for (int p = 0; p < 20; ++p) {
            const auto a = random_index(rng, plan.dimension(), cfg.b, cfg.L);
            const auto c = random_pair_partner(rng, a, cfg.b, cfg.L);
            const auto m = cross_moment_smolyak(plan, a, c, R, kSeed + static_cast<std::uint64_t>(pairs), threads());
            ++pairs;
            if (m.se > 0) worst = std::max(worst, std::fabs(m.mean) / m.se);
            if (std::fabs(m.mean) > 4.0 * m.se) {
                out.pass = false;
                out.detail += fmt("[smolyak b=%d s=%d d=%d L=%d mean=%.3g se=%.3g] ", cfg.b, cfg.s, cfg.d, cfg.L, m.mean, m.se);
            }
        }
    }
    out.detail += fmt("%d pairs, max |mean|/se = %.2f", pairs, worst);
    return out;
}

Outcome c9_cardinality() {
    Outcome out;
    std::ostringstream os;
    for (int d = 1; d <= 3; ++d)
        for (int b : {2, 3}) {
            double lo = 1e300, hi = 0.0;
            for (int L = d; L <= d + 8; ++L) {
                const auto plan = SmolyakPlan::make(b, 1, d, L);
                std::uint64_t closed = 0;
                for (const auto& t : plan.terms) closed += ipow(static_cast<std::uint64_t>(b), t.levels.total() - d);
                const auto q = realize(plan, kSeed, 0);
                if (q.size() != closed || node_count(L, d, 1, b) != closed) {
                    out.pass = false;
                    os << fmt("[count mismatch d=%d b=%d L=%d] ", d, b, L);
                }
                const double ratio = static_cast<double>(closed) / (dpow(b, L) * std::pow(static_cast<double>(L), d - 1));
                lo = std::min(lo, ratio);
                hi = std::max(hi, ratio);
            }
            const double band = hi / lo;
            os << fmt("(d=%d,b=%d) band=%.3f ", d, b, band);
            if (band > 5.0) out.pass = false;
        }
    out.detail = os.str();
    return out;
}

Outcome c10_rate_d1() {
    const auto st = convergence_study(1, 1, 2, 0.75, 3, 9, 4096, kSeed, -1, threads());
    const double slope = st.fit.slope;
    return {std::fabs(slope + 1.25) <= 0.15,
            fmt("slope=%.4f (target -1.25 +- 0.15), bootstrap CI [%.3f, %.3f]", slope, st.fit.free_n_exponent_ci.lo, st.fit.free_n_exponent_ci.hi)};
}

Outcome c11_rate_d2() {
    const auto st = convergence_study(2, 1, 2, 0.75, 3, 9, 4096, kSeed, -1, threads());
    const auto& f = st.fit;
    const bool band_ok = f.compensated_band <= 10.0;
    const bool beta_ok = std::fabs(f.log_exponent - 1.75) <= 0.6;
    int on_boundary = 0;
    for (const auto& r : st.records) on_boundary += r.boundary;
    return {band_ok && beta_ok,
            fmt("compensated band=%.3f (<= 10); log exponent=%.3f (1.75 +- 0.6) CI [%.3f, %.3f]; free fit gamma=%.3f beta=%.3f; "
                "maximiser on truncation boundary at %d levels",
                f.compensated_band, f.log_exponent, f.log_exponent_ci.lo, f.log_exponent_ci.hi, f.free_n_exponent, f.free_log_exponent,
                on_boundary)};
}

Outcome c12_lower_bound() {
    const int d = 2, b = 2;
    const std::uint64_t R = 8192;
    std::vector<double> mean, se, g;
    for (int L = d + 2; L <= d + 6; ++L) {
        const auto plan = SmolyakPlan::make(b, 1, d, L);
        const MultiIndex j = candidate_worst_index(L, d);
        const WaveletIndex idx{j, MultiIndex(j.size()), MultiIndex(j.size())};
        const auto samples = smolyak_wavelet_samples(plan, idx, R, kSeed, threads());
        const auto m = estimate_moments(samples);
        mean.push_back(m.second_moment);
        se.push_back(m.se_second);
        g.push_back(std::pow(static_cast<double>(L), d - 1) * dpow(b, -L));
    }
    // c taken from the first level, at its 4-SE lower end
    const double c = (mean[0] - 4.0 * se[0]) / g[0];
    Outcome out{c > 0.0, fmt("c=%.4f; ", c)};
    for (std::size_t r = 0; r < mean.size(); ++r) {
        const bool ok = mean[r] + 4.0 * se[r] >= c * g[r];
        out.detail += fmt("L=%zu E/(L b^-L)=%.3f%s ", static_cast<std::size_t>(d + 2) + r, mean[r] / g[r], ok ? "" : "(below)");
        out.pass = out.pass && ok;
    }
    return out;
}

Outcome c13_oracles() {
    Outcome out;
    int term_sets = 0;
    for (int d = 1; d <= 4; ++d)
        for (int L = d; L <= d + 6; ++L) {
            ++term_sets;
            const auto ref = oracle::delta_telescoping(L, d);
            const auto terms = combination_terms(L, d);
            bool same = terms.size() == ref.size();
            for (const auto& t : terms) {
                const std::vector<int> l(t.levels.begin(), t.levels.end());
                same = same && ref.count(l) == 1 && ref.at(l) == t.coefficient;
            }
            if (!same) {
                out.pass = false;
                out.detail += fmt("[terms differ L=%d d=%d] ", L, d);
            }
        }

    std::mt19937_64 rng(kSeed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    double worst = 0.0;
    int matrices = 0;
    for (std::size_t n = 1; n <= 6; ++n)
        for (int rep = 0; rep < 10; ++rep) {
            Matrix m(n);
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t c = r; c < n; ++c) m(r, c) = m(c, r) = U(rng);
            const auto roots = oracle::eigenvalues_by_roots(m.a, n);
            if (roots.size() != n) {
                out.pass = false;
                out.detail += fmt("[oracle found %zu of %zu roots] ", roots.size(), n);
                continue;
            }
            double ref = 0.0;
            for (double x : roots) ref = std::max(ref, std::fabs(x));
            worst = std::max(worst, std::fabs(spectral_radius(m) - ref) / std::max(1.0, ref));
            ++matrices;
        }
    if (worst > 1e-9) out.pass = false;

    int level_checks = 0;
    for (int d = 1; d <= 3; ++d)
        oracle::for_each_box(d, 1, 5, [&](const oracle::Levels& jv) {
            for (int mu = d; mu <= 12; ++mu) {
                std::size_t brute = 0;
                oracle::for_each_box(d, 1, 5, [&](const oracle::Levels& l) {
                    if (oracle::sum(l) != mu) return;
                    for (int n = 0; n < d; ++n)
                        if (l[static_cast<std::size_t>(n)] > jv[static_cast<std::size_t>(n)]) return;
                    ++brute;
                });
                ++level_checks;
                if (count_admissible_levels(MultiIndex(jv), mu) != brute) {
                    out.pass = false;
                    out.detail += "[admissible level count differs] ";
                    return;
                }
            }
        });
    out.detail += fmt("%d term sets, %d matrices (max rel err %.2g), %d level counts", term_sets, matrices, worst, level_checks);
    return out;
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Outcome()> fn;
        double limit_seconds;
    };
    const Criterion criteria[] = {
        {"net validity", c1_net_validity, 60.0},
        {"scrambling preserves nets", c2_scrambling_preserves, 120.0},
        {"scrambled point uniformity", c3_uniformity, 0.0},
        {"weight sum", c4_weight_sum, 0.0},
        {"exactness on low resolutions", c5_exactness, 300.0},
        {"unbiasedness", c6_unbiasedness, 0.0},
        {"second moment bracket", c7_second_moment_bracket, 0.0},
        {"zero cross terms", c8_zero_cross_terms, 0.0},
        {"cardinality", c9_cardinality, 0.0},
        {"d=1 rate", c10_rate_d1, 900.0},
        {"d=2 compensated rate", c11_rate_d2, 0.0},
        {"lower bound probe", c12_lower_bound, 0.0},
        {"oracle equivalences", c13_oracles, 0.0},
    };
    int failures = 0;
    int id = 0;
    for (const auto& c : criteria) {
        ++id;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.limit_seconds > 0 && secs > c.limit_seconds) {
            o.pass = false;
            o.detail += fmt(" [runtime limit %.0f s exceeded]", c.limit_seconds);
        }
        failures += !o.pass;
        std::printf("%s  C%-2d %-30s %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, c.name, o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d of %d criteria passed\n", id - failures, id);
    return failures == 0 ? 0 : 1;
}
