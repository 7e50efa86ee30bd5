#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace {

struct Run {
    int status = -1;
    std::string out;
};

Run run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " '" + std::string(RSMOLYAK_CLI) + "' " + args + " 2>/dev/null";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    char buf[4096];
    std::size_t n = 0;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    const int st = pclose(p);
    r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "rsmolyak_cli_test";
    std::filesystem::create_directories(dir);
    return dir / name;
}

std::vector<std::string> data_lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line))
        if (!line.empty() && line[0] != '#') out.push_back(line);
    return out;
}

}  // namespace

TEST_CASE("generated nets pass check-net", "[cli]") {
    const auto file = scratch("net.csv");
    REQUIRE(run("generate-net --b 3 -m 3 --s 3 -o " + file.string()).status == 0);
    const auto r = run("check-net --b 3 -m 3 -i " + file.string());
    CHECK(r.status == 0);
    CHECK(r.out.find("PASS") != std::string::npos);
}

TEST_CASE("a mutated net fails with a witness", "[cli]") {
    const auto file = scratch("bad.csv");
    {
        std::ofstream f(file);
        f << "x1\n0\n0.25\n";
    }
    const auto r = run("check-net --b 2 -m 1 -i " + file.string());
    CHECK(r.status == 1);
    CHECK(r.out.find("FAIL") != std::string::npos);
    CHECK(r.out.find("count=2") != std::string::npos);
}

TEST_CASE("wrong point count is an error", "[cli]") {
    const auto file = scratch("three.csv");
    {
        std::ofstream f(file);
        f << "0\n0.3\n0.6\n";
    }
    CHECK(run("check-net --b 2 -m 1 -i " + file.string()).status == 2);
}

TEST_CASE("scrambled output stays a net", "[cli]") {
    const auto file = scratch("scr.csv");
    const auto r = run("scramble --b 2 -m 3 --s 2 --reps 1 --seed 4");
    REQUIRE(r.status == 0);
    const auto lines = data_lines(r.out);
    REQUIRE(lines.front() == "rep,point,x1,x2");
    {
        // drop the rep and point columns
        std::ofstream f(file);
        for (std::size_t i = 1; i < lines.size(); ++i) {
            const auto cut = lines[i].find(',', lines[i].find(',') + 1);
            f << lines[i].substr(cut + 1) << "\n";
        }
    }
    CHECK(run("check-net --b 2 -m 3 -i " + file.string()).status == 0);
}

TEST_CASE("integrate is unbiased for the product integrand", "[cli]") {
    const auto r = run("integrate --f product --d 2 -L 5 --reps 2000 --seed 3");
    REQUIRE(r.status == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["exact"].get<double>() == 0.25);
    CHECK(std::fabs(j["mean"].get<double>() - 0.25) < 4.0 * j["se"].get<double>());
    CHECK(j["nodes"].get<int>() == 44);
}

TEST_CASE("reruns are byte-identical across thread counts", "[cli]") {
    const std::string args = "integrate --f expprod --d 2 --s 2 --b 3 -L 4 --reps 300 --seed 9";
    const auto a = run(args + " --threads 1");
    const auto b = run(args + " --threads 1");
    const auto c = run(args + " --threads 3");
    REQUIRE(a.status == 0);
    CHECK(a.out == b.out);
    CHECK(a.out == c.out);

    const std::string conv = "experiment convergence --d 2 --levels 2..4 --reps 64 --seed 2";
    CHECK(run(conv + " --threads 1").out == run(conv + " --threads 4").out);
    const std::string scr = "scramble --b 3 -m 2 --s 2 --reps 7 --seed 5";
    CHECK(run(scr + " --threads 1").out == run(scr + " --threads 2").out);
}

TEST_CASE("seed comes from the environment when not given", "[cli]") {
    const std::string args = "smolyak-nodes --d 2 -L 3";
    const auto a = run(args, "RSMOLYAK_SEED=77");
    const auto b = run(args + " --seed 77");
    const auto c = run(args + " --seed 78");
    REQUIRE(a.status == 0);
    CHECK(data_lines(a.out) == data_lines(b.out));
    CHECK(data_lines(a.out) != data_lines(c.out));
}

TEST_CASE("smolyak-nodes writes weights and coordinates", "[cli]") {
    const auto r = run("smolyak-nodes --b 2 --d 2 -L 4 --seed 1");
    REQUIRE(r.status == 0);
    const auto lines = data_lines(r.out);
    REQUIRE(lines.size() == 17);
    CHECK(lines[0] == "weight,x1,x2");
    double wsum = 0.0;
    for (std::size_t i = 1; i < lines.size(); ++i) wsum += std::stod(lines[i].substr(0, lines[i].find(',')));
    CHECK(wsum == Catch::Approx(1.0));
}

TEST_CASE("invalid parameters are rejected", "[cli]") {
    CHECK(run("integrate --d 3 -L 2 --reps 4").status != 0);
    CHECK(run("integrate --d 21 -L 21 --reps 4").status != 0);
    CHECK(run("integrate --d 1 -L 2 --reps 1").status != 0);
    CHECK(run("integrate --f nope -L 2 --reps 4").status != 0);
    CHECK(run("generate-net --b 4 -m 2 --s 2").status != 0);
    CHECK(run("experiment convergence --alpha 0.5 --levels 2..5 --reps 4").status != 0);
    CHECK(run("experiment convergence --levels 2..3 --reps 4").status != 0);
    CHECK(run("wavelet-eval --j 1 --i 2 --x 0.5").status != 0);
    CHECK(run("moments --kind tensor --j 1 --reps 4").status != 0);
    CHECK(run("moments --kind block --l 2 --j 1 --i 2 --reps 4").status != 0);
    CHECK(run("no-such-command").status != 0);
}

TEST_CASE("wavelet-eval and wavelet-coeffs", "[cli]") {
    const auto r = run("wavelet-eval --b 3 --j 2 --i 2 --k 1 --x 0.6");
    REQUIRE(r.status == 0);
    const auto lines = data_lines(r.out);
    REQUIRE(lines.size() == 2);
    CHECK(std::stod(lines[1].substr(lines[1].find(',') + 1)) == Catch::Approx(2.0));

    const auto file = scratch("cells.csv");
    {
        std::ofstream f(file);
        f << "1\n2\n3\n4\n";
    }
    const auto c = run("wavelet-coeffs --b 2 -D 1 -R 2 --jmax 2 --norm -i " + file.string());
    REQUIRE(c.status == 0);
    const auto cl = data_lines(c.out);
    REQUIRE(cl.size() == 8);
    CHECK(cl[1] == "0,0,0,2.5");
    CHECK(c.out.find("haar_alpha_norm") != std::string::npos);
}

TEST_CASE("convergence experiment output", "[cli]") {
    const auto plot = scratch("plot.csv");
    const auto r = run("experiment convergence --d 1 --levels 3..6 --reps 64 --emit-plotdata " + plot.string());
    REQUIRE(r.status == 0);
    CHECK(r.out.find("# fit slope=") != std::string::npos);
    const auto lines = data_lines(r.out);
    REQUIRE(lines.size() == 5);
    CHECK(lines[0] == "L,N,error,se,argmax_j,boundary");
    std::ifstream f(plot);
    std::stringstream ss;
    ss << f.rdbuf();
    const auto pl = data_lines(ss.str());
    REQUIRE(pl.size() == 5);
    CHECK(pl[0] == "log_N,log_error,compensated");
}

TEST_CASE("moments omits the bracket below its resolution", "[cli]") {
    const auto r = run("moments --kind block --b 2 --l 3 --j 1 --reps 50");
    REQUIRE(r.status == 0);
    CHECK_FALSE(nlohmann::json::parse(r.out).contains("bracket"));
}

TEST_CASE("moments reports the bracket", "[cli]") {
    const auto r = run("moments --kind block --b 2 --l 2 --j 3 --reps 500 --seed 1");
    REQUIRE(r.status == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["bracket"]["lower"].get<double>() == 0.25);
    const auto est = j["estimate"];
    CHECK(std::fabs(est["second_moment"].get<double>() - 0.25) < 4.0 * est["se_second"].get<double>());
}
