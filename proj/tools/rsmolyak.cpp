// rsmolyak: command-line front end for nets, scrambling, randomized Smolyak quadrature and the
// Haar-wavelet error probes.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rsmolyak/analysis.hpp"

using json = nlohmann::ordered_json;
using namespace rsmolyak;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::uint64_t default_seed() {
    if (const char* env = std::getenv("RSMOLYAK_SEED")) return std::stoull(env, nullptr, 0);
    return 20240601;
}

// Output sink: a file when a path is given, stdout otherwise.
class Sink {
public:
    explicit Sink(const std::string& path) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw std::runtime_error("cannot open '" + path + "' for writing");
        }
    }
    std::ostream& out() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }
    void finish() {
        out().flush();
        if (!out()) throw std::runtime_error("write failed");
    }

private:
    std::ofstream file_;
};

void csv_header(std::ostream& os, const std::string& command, const json& config) {
    os << "# rsmolyak " << kVersion << " " << command << "\n";
    os << "# config " << config.dump() << "\n";
}

std::vector<std::vector<double>> read_rows(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        bool numeric = true;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
            } catch (const std::exception&) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (rows.empty()) continue;  // column header
            throw std::runtime_error("non-numeric row: " + line);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<std::vector<double>> read_input(const std::string& path) {
    if (path.empty() || path == "-") return read_rows(std::cin);
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return read_rows(in);
}

std::vector<int> parse_ints(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(std::stoi(cell));
    return out;
}

std::vector<double> parse_doubles(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
    return out;
}

void check_run_config(int b, int s, int d, int L, std::optional<double> alpha = std::nullopt) {
    if (b < 2) throw std::invalid_argument("--b must be >= 2");
    if (s < 1) throw std::invalid_argument("--s must be >= 1");
    if (d < 1) throw std::invalid_argument("--d must be >= 1");
    if (L < d) throw std::invalid_argument("--level must be >= --d (got L=" + std::to_string(L) + ", d=" + std::to_string(d) + ")");
    if (d * s > 20) throw std::invalid_argument("dimension d*s = " + std::to_string(d * s) + " exceeds the limit of 20");
    if (alpha && !(*alpha > 0.5)) throw std::invalid_argument("--alpha must exceed 1/2");
}

std::string column_names(const std::string& prefix, std::size_t n) {
    std::string out;
    for (std::size_t t = 0; t < n; ++t) out += (t ? "," : "") + prefix + std::to_string(t + 1);
    return out;
}

NetGenerator pick_generator(const std::string& name) {
    if (name == "default") return default_net;
    if (name == "faure") return faure_net;
    if (name == "grid") return [](int b, int m, int s) {
        if (s != 1) throw UnsupportedParameters("grid generator supports s = 1 only");
        return stratified_grid(b, m);
    };
    throw std::invalid_argument("unknown generator '" + name + "' (expected default, faure, grid)");
}

json moment_json(const MomentEstimate& m) {
    return json{{"mean", m.mean}, {"se", m.se}, {"second_moment", m.second_moment}, {"se_second", m.se_second}, {"reps", m.count}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Randomized Smolyak quadrature with scrambled (0,m,s)-net building blocks"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::uint64_t seed = default_seed();
    unsigned threads = default_threads();
    std::string out_path;
    int b = 2, m = 0, s = 1, d = 1, L = 1;
    std::uint64_t reps = 1;
    auto add_common = [&](CLI::App* c) {
        c->add_option("--out,-o", out_path, "Output file (default stdout)");
    };
    auto add_seed = [&](CLI::App* c) {
        c->add_option("--seed", seed, "Master seed (default from RSMOLYAK_SEED)")->capture_default_str();
        c->add_option("--threads", threads, "Worker threads; output does not depend on it")->capture_default_str();
    };

    // generate-net
    std::string generator = "default";
    auto* gen = app.add_subcommand("generate-net", "Emit a deterministic (0,m,s)-net as CSV");
    gen->add_option("--base,--b", b, "Base b (prime for s > 1)")->required();
    gen->add_option("--level,-m", m, "Level m (b^m points)")->required();
    gen->add_option("--dim,--s", s, "Dimension s")->capture_default_str();
    gen->add_option("--generator", generator, "default | faure | grid")->capture_default_str();
    add_common(gen);

    // check-net
    std::string in_path;
    auto* chk = app.add_subcommand("check-net", "Check the (0,m,s)-net property of CSV points; exit 1 on FAIL");
    chk->add_option("--base,--b", b, "Base b")->required();
    chk->add_option("--level,-m", m, "Level m")->required();
    chk->add_option("--in,-i", in_path, "CSV file with one point per row (default stdin)");
    add_common(chk);

    // scramble
    int depth = -1;
    auto* scr = app.add_subcommand("scramble", "Emit independently scrambled copies of a net as CSV");
    scr->add_option("--base,--b", b, "Base b")->required();
    scr->add_option("--level,-m", m, "Level m")->required();
    scr->add_option("--dim,--s", s, "Dimension s")->capture_default_str();
    scr->add_option("--reps", reps, "Number of scramblings")->capture_default_str();
    scr->add_option("--depth", depth, "Scrambling depth (default m)");
    add_seed(scr);
    add_common(scr);

    // smolyak-nodes
    std::uint64_t rep = 0;
    auto* nodes = app.add_subcommand("smolyak-nodes", "Dump nodes and weights of one realization of A(L,d)");
    nodes->add_option("--b,--base", b, "Base b")->capture_default_str();
    nodes->add_option("--s,--dim", s, "Block dimension s")->capture_default_str();
    nodes->add_option("--d", d, "Number of blocks d")->capture_default_str();
    nodes->add_option("--level,-L", L, "Level L >= d")->required();
    nodes->add_option("--rep", rep, "Replication id")->capture_default_str();
    add_seed(nodes);
    add_common(nodes);

    // integrate
    std::string fname = "product";
    auto* integ = app.add_subcommand("integrate", "Apply A(L,d) to a built-in integrand over R replications (JSON)");
    integ->add_option("--f", fname, "one | product | expprod")->capture_default_str();
    integ->add_option("--b,--base", b, "Base b")->capture_default_str();
    integ->add_option("--s,--dim", s, "Block dimension s")->capture_default_str();
    integ->add_option("--d", d, "Number of blocks d")->capture_default_str();
    integ->add_option("--level,-L", L, "Level L >= d")->required();
    integ->add_option("--reps", reps, "Replications R >= 2")->capture_default_str();
    add_seed(integ);
    add_common(integ);

    // wavelet-eval
    std::string j_text, i_text, k_text, x_text;
    auto* weval = app.add_subcommand("wavelet-eval", "Evaluate Ψ^{j}_{i,k} at points (CSV in, CSV out)");
    weval->add_option("--b,--base", b, "Base b")->capture_default_str();
    weval->add_option("--j", j_text, "Resolutions, comma separated")->required();
    weval->add_option("--i", i_text, "Shapes (default zeros)");
    weval->add_option("--k", k_text, "Shifts (default zeros)");
    weval->add_option("--x", x_text, "Single point, comma separated");
    weval->add_option("--in", in_path, "CSV file of points (default stdin when --x is absent)");
    add_common(weval);

    // wavelet-coeffs
    int D = 1, R_res = 1, j_max = 0;
    double alpha = 0.75;
    bool want_norm = false;
    auto* wco = app.add_subcommand("wavelet-coeffs", "Canonical Haar coefficients of a piecewise-constant function");
    wco->add_option("--b,--base", b, "Base b")->capture_default_str();
    wco->add_option("--dim,-D", D, "Dimension D")->capture_default_str();
    wco->add_option("--resolution,-R", R_res, "Grid resolution R (b^{R D} cells)")->required();
    wco->add_option("--jmax", j_max, "Largest |j| to compute")->required();
    wco->add_option("--in,-i", in_path, "Cell values, row-major, one per line (default stdin)");
    wco->add_option("--alpha", alpha, "Smoothness for the H_alpha norm")->capture_default_str();
    wco->add_flag("--norm", want_norm, "Append the H_alpha norm as a trailing comment line");
    add_common(wco);

    // moments
    std::string kind = "block";
    int l_level = 1;
    auto* mom = app.add_subcommand("moments", "Monte Carlo moments of U_l Ψ (block) or A(L,d) Ψ (smolyak), JSON");
    mom->add_option("--kind", kind, "block | smolyak")->capture_default_str();
    mom->add_option("--b,--base", b, "Base b")->capture_default_str();
    mom->add_option("--l", l_level, "Building-block level l (block kind)")->capture_default_str();
    mom->add_option("--d", d, "Number of blocks d (smolyak kind)")->capture_default_str();
    mom->add_option("--s", s, "Block dimension s (smolyak kind)")->capture_default_str();
    mom->add_option("--level,-L", L, "Level L (smolyak kind)")->capture_default_str();
    mom->add_option("--j", j_text, "Resolutions, comma separated")->required();
    mom->add_option("--i", i_text, "Shapes (default zeros)");
    mom->add_option("--k", k_text, "Shifts (default zeros)");
    mom->add_option("--reps", reps, "Replications R >= 2")->capture_default_str();
    add_seed(mom);
    add_common(mom);

    // experiment convergence
    std::string levels = "3..6";
    std::string plot_path;
    int j_budget = -1;
    auto* exp = app.add_subcommand("experiment", "Experiments");
    exp->require_subcommand(1);
    auto* conv = exp->add_subcommand("convergence", "Randomized-error estimates across levels with rate fits");
    conv->add_option("--d", d, "Number of blocks d")->capture_default_str();
    conv->add_option("--s", s, "Block dimension s")->capture_default_str();
    conv->add_option("--b,--base", b, "Base b")->capture_default_str();
    conv->add_option("--alpha", alpha, "Smoothness alpha > 1/2")->capture_default_str();
    conv->add_option("--levels", levels, "Level range Lmin..Lmax")->capture_default_str();
    conv->add_option("--reps", reps, "Replications per level")->capture_default_str();
    conv->add_option("--j-budget", j_budget, "Candidate truncation |j| <= L + budget (default 2d)");
    conv->add_option("--emit-plotdata", plot_path, "Write (log N, log e, compensated e) rows to this path");
    add_seed(conv);
    add_common(conv);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*gen) {
            const auto net = pick_generator(generator)(b, m, s);
            Sink sink(out_path);
            auto& os = sink.out();
            csv_header(os, "generate-net", json{{"b", b}, {"m", m}, {"s", s}, {"generator", generator}});
            os << column_names("x", static_cast<std::size_t>(s)) << "\n";
            for (std::size_t p = 0; p < net.size(); ++p) {
                const auto x = net.point_values(p);
                for (std::size_t t = 0; t < x.size(); ++t) os << (t ? "," : "") << fmt(x[t]);
                os << "\n";
            }
            sink.finish();
            return 0;
        }
        if (*chk) {
            const auto rows = read_input(in_path);
            if (rows.empty()) throw std::runtime_error("no points read");
            const std::size_t dim = rows.front().size();
            std::vector<double> coords;
            for (const auto& r : rows) {
                if (r.size() != dim) throw std::runtime_error("ragged rows in point file");
                coords.insert(coords.end(), r.begin(), r.end());
            }
            const auto verdict = is_net(coords, b, m, static_cast<int>(dim));
            Sink sink(out_path);
            auto& os = sink.out();
            if (verdict) {
                os << "PASS (0," << m << "," << dim << ")-net in base " << b << "\n";
                sink.finish();
                return 0;
            }
            const auto& w = *verdict.witness;
            os << "FAIL shape=" << w.shape << " cell=(";
            for (std::size_t t = 0; t < w.cell.size(); ++t) os << (t ? "," : "") << w.cell[t];
            os << ") count=" << w.count << "\n";
            sink.finish();
            return 1;
        }
        if (*scr) {
            const auto net = default_net(b, m, s);
            const int dp = depth < 0 ? m : depth;
            Sink sink(out_path);
            auto& os = sink.out();
            csv_header(os, "scramble", json{{"b", b}, {"m", m}, {"s", s}, {"depth", dp}, {"seed", seed}, {"reps", reps}});
            os << "rep,point," << column_names("x", static_cast<std::size_t>(s)) << "\n";
            for (std::uint64_t r = 0; r < reps; ++r) {
                const auto sn = scramble_net(net, dp, ScramblerKey{seed, 0, m + 1, 0, r, false});
                const auto v = sn.values();
                for (std::size_t p = 0; p < sn.points.size(); ++p) {
                    os << r << "," << p;
                    for (std::size_t t = 0; t < static_cast<std::size_t>(s); ++t) os << "," << fmt(v[p * static_cast<std::size_t>(s) + t]);
                    os << "\n";
                }
            }
            sink.finish();
            return 0;
        }
        if (*nodes) {
            check_run_config(b, s, d, L);
            const auto plan = SmolyakPlan::make(b, s, d, L);
            const auto q = realize(plan, seed, rep);
            Sink sink(out_path);
            auto& os = sink.out();
            csv_header(os, "smolyak-nodes", json{{"b", b}, {"s", s}, {"d", d}, {"L", L}, {"seed", seed}, {"rep", rep}, {"nodes", q.size()}});
            os << "weight," << column_names("x", q.dimension) << "\n";
            for (std::size_t v = 0; v < q.size(); ++v) {
                os << fmt(q.weights[v]);
                for (double x : q.node(v)) os << "," << fmt(x);
                os << "\n";
            }
            sink.finish();
            return 0;
        }
        if (*integ) {
            check_run_config(b, s, d, L);
            if (reps < 2) throw std::invalid_argument("--reps must be >= 2");
            const auto plan = SmolyakPlan::make(b, s, d, L);
            const auto f = builtin_integrand(fname);
            const BlockFactory factory(b, s, plan.max_level());
            std::vector<double> values(reps);
            parallel_for(reps, threads, [&](std::uint64_t r) { values[r] = rsmolyak::apply(assemble(realize_blocks(plan, factory, seed, r)), f.f); });
            const auto est = estimate_moments(values);
            const double exact = f.exact(static_cast<std::size_t>(plan.dimension()));
            json j{{"version", kVersion},
                   {"command", "integrate"},
                   {"config", {{"f", fname}, {"b", b}, {"s", s}, {"d", d}, {"L", L}, {"reps", reps}, {"seed", seed}}},
                   {"nodes", plan.nodes()},
                   {"value", values.front()},
                   {"mean", est.mean},
                   {"se", est.se},
                   {"exact", exact},
                   {"z", est.se > 0 ? (est.mean - exact) / est.se : 0.0},
                   {"second_moment", est.second_moment}};
            Sink sink(out_path);
            sink.out() << j.dump(2) << "\n";
            sink.finish();
            return 0;
        }
        if (*weval) {
            const MultiIndex jj(parse_ints(j_text));
            const MultiIndex ii = i_text.empty() ? MultiIndex(jj.size()) : MultiIndex(parse_ints(i_text));
            const MultiIndex kk = k_text.empty() ? MultiIndex(jj.size()) : MultiIndex(parse_ints(k_text));
            const WaveletIndex idx{jj, ii, kk};
            validate_index(idx, b);
            std::vector<std::vector<double>> pts;
            if (!x_text.empty()) pts.push_back(parse_doubles(x_text));
            else pts = read_input(in_path);
            Sink sink(out_path);
            auto& os = sink.out();
            csv_header(os, "wavelet-eval", json{{"b", b}, {"j", j_text}, {"i", ii.to_string()}, {"k", kk.to_string()}});
            os << column_names("x", jj.size()) << ",value\n";
            for (const auto& x : pts) {
                const double v = psi_eval_multi(idx, x, b);
                for (double c : x) os << fmt(c) << ",";
                os << fmt(v) << "\n";
            }
            sink.finish();
            return 0;
        }
        if (*wco) {
            const auto rows = read_input(in_path);
            std::vector<double> cells;
            for (const auto& r : rows) cells.insert(cells.end(), r.begin(), r.end());
            const auto coeffs = canonical_coefficients(cells, D, R_res, b, j_max);
            Sink sink(out_path);
            auto& os = sink.out();
            csv_header(os, "wavelet-coeffs", json{{"b", b}, {"D", D}, {"R", R_res}, {"jmax", j_max}});
            os << "j,i,k,coefficient\n";
            for (const auto& [idx, v] : coeffs)
                os << idx.j.to_string(' ') << "," << idx.i.to_string(' ') << "," << idx.k.to_string(' ') << "," << fmt(v) << "\n";
            if (want_norm) os << "# haar_alpha_norm alpha=" << fmt(alpha) << " value=" << fmt(haar_alpha_norm(coeffs, alpha, b)) << "\n";
            sink.finish();
            return 0;
        }
        if (*mom) {
            if (reps < 2) throw std::invalid_argument("--reps must be >= 2");
            const MultiIndex jj(parse_ints(j_text));
            const MultiIndex ii = i_text.empty() ? MultiIndex(jj.size()) : MultiIndex(parse_ints(i_text));
            const MultiIndex kk = k_text.empty() ? MultiIndex(jj.size()) : MultiIndex(parse_ints(k_text));
            const WaveletIndex idx{jj, ii, kk};
            validate_index(idx, b);
            json j{{"version", kVersion}, {"command", "moments"}};
            if (kind == "block") {
                const int sd = static_cast<int>(jj.size());
                std::vector<double> samples = building_block_samples(l_level, idx, b, reps, seed, threads);
                const auto est = estimate_moments(samples);
                j["config"] = {{"kind", kind}, {"b", b}, {"s", sd}, {"l", l_level}, {"j", jj.to_string()}, {"i", ii.to_string()},
                               {"k", kk.to_string()}, {"reps", reps}, {"seed", seed}};
                j["estimate"] = moment_json(est);
                if (jj.total() >= l_level + sd - 1) {
                    const auto br = second_moment_bracket(l_level, sd, b);
                    j["bracket"] = {{"lower", br.lo}, {"upper", br.hi}};
                }
            } else if (kind == "smolyak") {
                check_run_config(b, s, d, L);
                const auto plan = SmolyakPlan::make(b, s, d, L);
                const auto est = estimate_moments(smolyak_wavelet_samples(plan, idx, reps, seed, threads));
                j["config"] = {{"kind", kind}, {"b", b}, {"s", s}, {"d", d}, {"L", L}, {"j", jj.to_string()}, {"i", ii.to_string()},
                               {"k", kk.to_string()}, {"reps", reps}, {"seed", seed}};
                j["estimate"] = moment_json(est);
            } else {
                throw std::invalid_argument("--kind must be block or smolyak");
            }
            Sink sink(out_path);
            sink.out() << j.dump(2) << "\n";
            sink.finish();
            return 0;
        }
        if (*conv) {
            const auto dots = levels.find("..");
            if (dots == std::string::npos) throw std::invalid_argument("--levels must look like Lmin..Lmax");
            const int lo = std::stoi(levels.substr(0, dots));
            const int hi = std::stoi(levels.substr(dots + 2));
            check_run_config(b, s, d, lo, alpha);
            if (reps < 2) throw std::invalid_argument("--reps must be >= 2");
            const auto st = convergence_study(d, s, b, alpha, lo, hi, reps, seed, j_budget, threads);
            const json config{{"d", d}, {"s", s}, {"b", b}, {"alpha", alpha}, {"levels", levels}, {"reps", reps}, {"seed", seed}, {"j_budget", st.j_budget}};
            const auto& f = st.fit;
            Sink sink(out_path);
            auto& os = sink.out();
            csv_header(os, "experiment convergence", config);
            os << "# fit slope=" << fmt(f.slope) << " log_exponent=" << fmt(f.log_exponent) << " free_n_exponent=" << fmt(f.free_n_exponent)
               << " free_log_exponent=" << fmt(f.free_log_exponent) << " compensated_band=" << fmt(f.compensated_band) << "\n";
            os << "L,N,error,se,argmax_j,boundary\n";
            for (const auto& r : st.records)
                os << r.L << "," << r.N << "," << fmt(r.error) << "," << fmt(r.se) << "," << r.argmax_j.to_string(' ') << "," << (r.boundary ? 1 : 0) << "\n";
            sink.finish();
            if (!plot_path.empty()) {
                Sink plot(plot_path);
                auto& ps = plot.out();
                csv_header(ps, "experiment convergence plotdata", config);
                ps << "log_N,log_error,compensated\n";
                for (std::size_t r = 0; r < st.records.size(); ++r)
                    ps << fmt(std::log(static_cast<double>(st.records[r].N))) << "," << fmt(std::log(st.records[r].error)) << ","
                       << fmt(f.compensated[r]) << "\n";
                plot.finish();
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
