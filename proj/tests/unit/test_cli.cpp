#include "fixtures.hpp"

#include <cli.hpp>
#include <paramsynth/mc.hpp>
#include <paramsynth/quadratic.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace paramsynth;
using namespace paramsynth::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out, err;
};

Outcome invoke(std::vector<std::string> args) {
    std::ostringstream out, err;
    int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               (std::string("paramsynth_cli_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir_);
        leaky_ = write("leaky.pmdp", kLeakyChain);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string write(const std::string& name, const std::string& text) {
        auto p = (dir_ / name).string();
        std::ofstream(p) << text;
        return p;
    }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }
    static std::string slurp(const std::string& p) {
        std::ifstream in(p);
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
    }
    /// Value printed after `key: ` on stdout.
    static double field(const std::string& out, const std::string& key) {
        auto at = out.find(key + ": ");
        EXPECT_NE(at, std::string::npos) << out;
        return std::stod(out.substr(at + key.size() + 2));
    }

    fs::path dir_;
    std::string leaky_;
};

const char* const kSimplex = R"(@type pmc
@parameters p q
@initial a
@targets b
a b p
a c q
a d 1 - p - q
b b 1
c c 1
d d 1
)";

} // namespace

TEST_F(Cli, SynthCcpWritesCertifiedInstantiation) {
    auto r = invoke({"synth", "ccp", "--model", leaky_, "--spec", "P<=0.3", "--out", path("u.txt")});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("result: feasible"), std::string::npos);
    EXPECT_NE(r.out.find("\nv = "), std::string::npos);
    EXPECT_NE(r.out.find("iterations: "), std::string::npos);
    EXPECT_NE(r.out.find("solver-fraction: "), std::string::npos);
    EXPECT_TRUE(r.err.empty()) << r.err;
    auto m = leaky_chain();
    auto u = parse_instantiation(m, slurp(path("u.txt")));
    EXPECT_TRUE(check(m, u, parse_spec("P<=0.3")).holds);

    auto c = invoke({"check", "--model", leaky_, "--spec", "P<=0.3", "--valuation", path("u.txt")});
    EXPECT_EQ(c.code, 0);
}

TEST_F(Cli, SynthExhaustedIsTwo) {
    auto r = invoke({"synth", "ccp", "--model", leaky_, "--spec", "P>=0.2", "--out", path("u.txt")});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.out.find("result: exhausted"), std::string::npos);
    EXPECT_FALSE(fs::exists(path("u.txt")));
}

TEST_F(Cli, PsoOnSimplexIsNotSupported) {
    auto model = write("simplex.pmdp", kSimplex);
    auto r = invoke({"synth", "pso", "--model", model, "--spec", "P<=0.3"});
    EXPECT_EQ(r.code, 3);
    EXPECT_TRUE(r.out.empty());
    EXPECT_FALSE(r.err.empty());
}

TEST_F(Cli, ThresholdOutOfRangeIsOne) {
    auto r = invoke({"synth", "ccp", "--model", leaky_, "--spec", "P<=2"});
    EXPECT_EQ(r.code, 1);
    EXPECT_TRUE(r.out.empty());
    EXPECT_NE(r.err.find("[0,1]"), std::string::npos);
}

TEST_F(Cli, InputErrorsAreOne) {
    EXPECT_EQ(invoke({"synth", "ccp", "--model", path("missing"), "--spec", "P<=0.3"}).code, 1);
    auto broken = write("broken.pmdp", "@type pmc\n@initial\n");
    EXPECT_EQ(invoke({"synth", "ccp", "--model", broken, "--spec", "P<=0.3"}).code, 1);
    EXPECT_EQ(invoke({"synth", "ccp", "--model", leaky_, "--spec", "P<=0.3", "--tau0", "0"}).code, 1);
    EXPECT_EQ(invoke({"synth", "ccp", "--model", leaky_, "--spec", "P<=0.3", "--split", "cubic"}).code, 1);
    EXPECT_EQ(invoke({"synth", "ccp", "--model", leaky_, "--spec", "P<=0.3", "--eps-graph", "x"}).code, 1);
    EXPECT_EQ(invoke({"synth", "ccp", "--model", leaky_}).code, 1);
    EXPECT_EQ(invoke({"frobnicate"}).code, 1);
    EXPECT_EQ(invoke({}).code, 1);
}

TEST_F(Cli, HelpIsZero) {
    auto r = invoke({"--help"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("synth"), std::string::npos);
}

TEST_F(Cli, CheckExamples) {
    auto low = write("low.txt", "v = 0.1\n");
    auto r = invoke({"check", "--model", leaky_, "--spec", "P<=0.1", "--valuation", low});
    EXPECT_EQ(r.code, 0);
    EXPECT_NEAR(field(r.out, "value"), 0.009, 1e-12);

    auto half = write("half.txt", "v = 0.5\n");
    r = invoke({"check", "--model", leaky_, "--spec", "P<=0.1", "--valuation", half});
    EXPECT_EQ(r.code, 2);
    EXPECT_NEAR(field(r.out, "value"), 0.125, 1e-12);

    auto zero = write("zero.txt", "v = 0\n");
    r = invoke({"check", "--model", leaky_, "--spec", "P<=0.1", "--valuation", zero});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("eps_graph"), std::string::npos);
    EXPECT_TRUE(r.out.empty());
}

TEST_F(Cli, GenGrid) {
    auto r = invoke({"gen", "grid", "--size", "4", "--params", "8", "--seed", "0"});
    ASSERT_EQ(r.code, 0);
    auto m = parse_model(r.out);
    EXPECT_NO_THROW(m.validate());
    EXPECT_EQ(m.num_states(), 16u);
    EXPECT_EQ(m.num_parameters(), 8u);
}

TEST_F(Cli, GenChainValue) {
    auto r = invoke({"gen", "chain", "--size", "5", "--params", "2", "--out", path("chain.pmdp")});
    ASSERT_EQ(r.code, 0);
    auto m = parse_model(slurp(path("chain.pmdp")));
    EXPECT_EQ(m.num_states(), 7u);
    // steps use v0 v1 v0 v1 v0
    auto u = valuation(m, {Rational(1, 2), Rational(3, 4)});
    EXPECT_NEAR(check(m, u, parse_spec("P<=1")).value, 0.125 * 0.5625, 1e-12);
}

TEST_F(Cli, GenMazeHasAChoice) {
    auto r = invoke({"gen", "maze", "--size", "3"});
    ASSERT_EQ(r.code, 0);
    auto m = parse_model(r.out);
    bool two = false;
    for (const auto& cs : m.choices)
        two = two || cs.size() == 2;
    EXPECT_TRUE(two);
    r = invoke({"gen", "maze", "--size", "3", "--pmc"});
    EXPECT_EQ(parse_model(r.out).kind, ModelKind::pmc);
}

TEST_F(Cli, EncodeListingRoundTrips) {
    auto r = invoke({"encode", "--model", leaky_, "--spec", "P<=0.3"});
    ASSERT_EQ(r.code, 0);
    std::istringstream in(r.out);
    auto program = read_listing(in);
    std::ostringstream again;
    write_listing(again, program);
    EXPECT_EQ(again.str(), r.out);

    auto s = invoke({"synth", "ccp", "--model", leaky_, "--spec", "P<=0.3", "--dump-qcqp", path("q.txt")});
    EXPECT_EQ(s.code, 0);
    EXPECT_EQ(slurp(path("q.txt")), r.out);
}

TEST_F(Cli, ProgressFile) {
    auto r = invoke({"synth", "ccp", "--model", leaky_, "--spec", "P>=0.14", "--progress", path("log.txt")});
    EXPECT_EQ(r.code, 0);
    auto log = slurp(path("log.txt"));
    EXPECT_EQ(log.rfind("iter=1 restart=0 tau=0.05 ", 0), 0u) << log;
}

TEST_F(Cli, ResultFilesAreReproducible) {
    auto maze = path("maze.pmdp");
    ASSERT_EQ(invoke({"gen", "maze", "--size", "4", "--seed", "2", "--out", maze}).code, 0);
    for (const char* method : {"ccp", "pso"}) {
        std::vector<std::string> base{"synth", method, "--model", maze, "--spec", "E<=40", "--seed", "7"};
        auto a = base, b = base;
        a.insert(a.end(), {"--out", path("a.txt")});
        b.insert(b.end(), {"--out", path("b.txt")});
        ASSERT_EQ(invoke(a).code, 0) << method;
        ASSERT_EQ(invoke(b).code, 0) << method;
        EXPECT_EQ(slurp(path("a.txt")), slurp(path("b.txt"))) << method;
    }
}
