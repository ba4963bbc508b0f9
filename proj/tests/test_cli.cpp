#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "cli_app.hpp"

using namespace ctlstop;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "ctlstop");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = ctlstop::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
protected:
    fs::path dir;

    void SetUp() override {
        std::random_device rd;
        dir = fs::temp_directory_path() / ("ctlstop_cli_" + std::to_string(rd()));
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    std::string out() const { return dir.string(); }
    std::string file(const std::string& name) const { return (dir / name).string(); }

    static std::string slurp(const std::string& path) {
        std::ifstream in(path);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }
    static std::string first_line(const std::string& path) {
        std::ifstream in(path);
        std::string line;
        std::getline(in, line);
        return line;
    }
};

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> v;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);) v.push_back(l);
    return v;
}

}  // namespace

TEST_F(Cli, SolveKinkWritesGeneratorAndSamples) {
    const auto r = invoke({"solve", "--case", "kink", "--delta", "0.5", "--lambda", "1", "--out", out()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto doc = io::read_json(file("generator.json"));
    EXPECT_EQ(doc["regime"], "CaseA_NeverControl");
    EXPECT_NEAR(io::get_num(doc["residuals"]["alpha"]), std::sqrt(2.0) - 1.0, 1e-15);
    EXPECT_EQ(first_line(file("solve.csv")), "x,u,g,v");
    // stdout lists the artifacts and nothing else
    for (const auto& l : lines(r.out)) EXPECT_TRUE(fs::exists(l)) << l;
    EXPECT_EQ(lines(r.out).size(), 2u);
}

TEST_F(Cli, SolveQuadraticCaseOne) {
    const auto r = invoke({"solve", "--case", "quadratic", "--delta", "1", "--kappa", "1", "--lambda", "0.5", "--mu",
                        "0", "--out", out(), "--format", "json"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto doc = io::read_json(file("generator.json"));
    EXPECT_EQ(doc["regime"], "Case1_ControlDominant");
    EXPECT_NEAR(io::get_num(doc["residuals"]["beta"]), 1.1551949767221505, 1e-12);
    EXPECT_TRUE(fs::exists(file("solve.json")));
}

TEST_F(Cli, SolveKnifeEdge) {
    const auto r = invoke({"solve", "--case", "quadratic", "--delta", "2", "--kappa", "0.5", "--lambda", "0.28125",
                        "--out", out()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(io::read_json(file("generator.json"))["regime"], "Case4_Degenerate");
}

TEST_F(Cli, GeneratorRoundTrip) {
    ASSERT_EQ(invoke({"solve", "--case", "kink", "--delta", "0.5", "--lambda", "1.5", "--out", out()}).code, 0);
    const auto doc = io::generator_doc_from_json(io::read_json(file("generator.json")));
    const auto ref = classify_regime_II({0.5, 1.5}).generator;
    for (double x = -3.0; x <= 3.0; x += 0.01) EXPECT_NEAR(eval_u(doc.generator, x), eval_u(ref, x), 1e-12) << x;
}

TEST_F(Cli, VerifyPassFailAndCoarseGrid) {
    ASSERT_EQ(invoke({"solve", "--case", "quadratic", "--delta", "1", "--kappa", "1", "--lambda", "0.5", "--out",
                   out()})
                  .code,
              0);
    const auto gen = file("generator.json");
    auto r = invoke({"verify", "--generator", gen, "--grid-step", "1e-3", "--out", out()});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(io::read_json(file("report.json"))["verdict"], "pass");

    auto j = io::read_json(gen);
    j["pieces"][0]["A"] = io::get_num(j["pieces"][0]["A"]) + 1e-3;
    const auto bad = file("bad.json");
    io::write_json(bad, j);
    r = invoke({"verify", "--generator", bad, "--out", out()});
    EXPECT_EQ(r.code, 4);
    EXPECT_EQ(io::read_json(file("report.json"))["verdict"], "fail");
    EXPECT_FALSE(io::read_json(file("report.json"))["failures"].empty());

    r = invoke({"verify", "--generator", gen, "--grid-step", "0.5", "--out", out()});
    EXPECT_EQ(r.code, 2);
}

TEST_F(Cli, VerifySolvesOnTheFly) {
    const auto r = invoke({"verify", "--case", "kink", "--delta", "0.5", "--lambda", "10", "--out", out()});
    EXPECT_EQ(r.code, 0) << r.err;
}

TEST_F(Cli, ConfigFileAndOverrides) {
    const auto cfg = file("run.ini");
    io::write_text(cfg, "[model]\ncase = kink\ndelta = 0.5\nlambda = 1.0\n[output]\npath = " + out() + "\n");
    auto r = invoke({"solve", "--config", cfg, "--lambda", "10"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(io::read_json(file("generator.json"))["regime"], "CaseC_JumpFromZero");

    io::write_text(cfg, "[model]\ncase = kink\ncolour = blue\n");
    EXPECT_EQ(invoke({"solve", "--config", cfg, "--out", out()}).code, 2);
    io::write_text(cfg, "[model]\ncase = kink\ndelta = abc\n");
    EXPECT_EQ(invoke({"solve", "--config", cfg, "--out", out()}).code, 2);
    EXPECT_EQ(invoke({"solve", "--case", "kink", "--delta", "0.5", "--out", out()}).code, 2);
    EXPECT_EQ(invoke({"solve", "--case", "kink", "--delta", "-1", "--lambda", "1", "--out", out()}).code, 2);
    EXPECT_EQ(invoke({"solve", "--bogus"}).code, 2);
    EXPECT_EQ(invoke({}).code, 2);
}

TEST_F(Cli, SweepSinglePoint) {
    const auto r = invoke({"sweep", "--case", "quadratic", "--delta", "4", "--kappa", "0.1", "--lambda", "1", "--out",
                        out()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto ls = lines(slurp(file("sweep.csv")));
    ASSERT_EQ(ls.size(), 2u);
    EXPECT_EQ(ls[0], "delta,kappa,lambda,mu,regime,alpha,beta,residual");
    EXPECT_NE(ls[1].find("Case3_Bridged"), std::string::npos);
}

TEST_F(Cli, SweepKinkPartition) {
    const auto r = invoke({"sweep", "--case", "kink", "--delta", "0.5", "--lambda-min", "0.5", "--lambda-max", "3",
                        "--points", "101", "--threads", "3", "--out", out()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto ls = lines(slurp(file("sweep.csv")));
    ASSERT_EQ(ls.size(), 102u);
    EXPECT_EQ(ls[0], "delta,lambda,regime,alpha,beta,residual");
    int a = 0, b = 0, c = 0;
    for (std::size_t i = 1; i < ls.size(); ++i) {
        a += ls[i].find("CaseA") != std::string::npos;
        b += ls[i].find("CaseB") != std::string::npos;
        c += ls[i].find("CaseC") != std::string::npos;
    }
    EXPECT_EQ(a + b + c, 101);
    EXPECT_GT(a, 0);
    EXPECT_GT(b, 0);
    EXPECT_GT(c, 0);
}

TEST_F(Cli, SweepRandomQuadraticIsReproducible) {
    ASSERT_EQ(invoke({"sweep", "--case", "quadratic", "--samples", "200", "--seed", "4", "--out", out()}).code, 0);
    const auto first = slurp(file("sweep.csv"));
    ASSERT_EQ(invoke({"sweep", "--case", "quadratic", "--samples", "200", "--seed", "4", "--threads", "2", "--out",
                   out()})
                  .code,
              0);
    EXPECT_EQ(first, slurp(file("sweep.csv")));
    EXPECT_EQ(lines(first).size(), 201u);
}

TEST_F(Cli, SimulateStoppedStart) {
    const auto r = invoke({"simulate", "--case", "kink", "--delta", "0.5", "--lambda", "1", "--x0", "0.2", "--paths",
                        "1000", "--export-paths", "2", "--out", out()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = io::read_json(file("estimate.json"));
    EXPECT_DOUBLE_EQ(io::get_num(j["estimate"]["mean"]), 0.96);
    EXPECT_EQ(io::get_num(j["estimate"]["stderr"]), 0.0);
    EXPECT_EQ(first_line(file("path_0000.csv")), "t,X,xi_plus,xi_minus,jumps,Lambda");
    EXPECT_TRUE(fs::exists(file("path_0001.csv")));
    EXPECT_EQ(lines(r.out).size(), 3u);
}

TEST_F(Cli, SimulateStepTooLarge) {
    const auto r = invoke({"simulate", "--case", "kink", "--delta", "0.5", "--lambda", "1.5", "--x0", "1", "--dt", "0.5",
                        "--out", out()});
    EXPECT_EQ(r.code, 5);
    EXPECT_TRUE(r.out.empty());
}

TEST_F(Cli, SimulateNeedsStart) {
    EXPECT_EQ(invoke({"simulate", "--case", "kink", "--delta", "0.5", "--lambda", "1", "--out", out()}).code, 2);
}

TEST_F(Cli, GeneralCaseUsesTheGrid) {
    const auto r = invoke({"solve", "--case", "general", "--delta", "0.5", "--lambda", "1.5", "--payoff",
                        "truncated_parabola", "--extent", "4", "--nodes", "401", "--out", out()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(first_line(file("fd.csv")), "x,u,label,residual");
    EXPECT_TRUE(fs::exists(file("fd_regions.json")));
}

// delta lambda = kappa with mu = 0 is claimed by none of the four cases
TEST_F(Cli, SweepReportsRegimeGap) {
    const auto r = invoke({"sweep", "--case", "quadratic", "--delta", "1", "--kappa", "1", "--lambda", "1", "--mu", "0",
                           "--out", out()});
    EXPECT_EQ(r.code, 3);
    const auto ls = lines(slurp(file("sweep.csv")));
    ASSERT_EQ(ls.size(), 2u);
    EXPECT_NE(ls[1].find("RegimeGap"), std::string::npos);
}
