#include "fixtures.hpp"

#include <paramsynth/ccp.hpp>
#include <paramsynth/mc.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace paramsynth;
using namespace paramsynth::testing;

namespace {

const Rational kEps(1, 100000);

double value_of(const Instantiation& u) { return u.to_doubles(1)[0]; }

void expect_sound(const Pmdp& m, const Specification& spec, const SynthesisResult& r) {
    ASSERT_EQ(r.status, SynthesisStatus::feasible);
    ASSERT_TRUE(r.instantiation);
    EXPECT_TRUE(check_well_defined(m, *r.instantiation, kEps).ok);
    auto c = check(m, *r.instantiation, spec);
    EXPECT_TRUE(c.holds) << "value " << c.value;
    ASSERT_TRUE(r.certified_value);
    EXPECT_NEAR(*r.certified_value, c.value, 1e-9);
}

double centre_value(const Pmdp& m, const Specification& spec) {
    ParametricChecker ck(m, spec);
    std::vector<double> mid;
    for (const auto& p : m.parameters)
        mid.push_back(0.5 * (to_double(*p.bounds.lo) + to_double(*p.bounds.hi)));
    ck.set_valuation(mid);
    return ck.initial_value(ck.solve());
}

} // namespace

TEST(InitialAnchor, LeakyChain) {
    auto m = leaky_chain();
    auto spec = parse_spec("P<=0.3");
    auto q = nlp_to_qcqp(build_nlp(m, spec, analyze(m, spec), kEps), m);
    auto a = initial_anchor(q, spec);
    EXPECT_DOUBLE_EQ(a[q.vars.parameter_variable(0)], 0.5);
    for (const char* s : {"s0", "s1", "s2"})
        EXPECT_DOUBLE_EQ(a[*q.vars.state_variable[*m.find_state(s)]], 0.3) << s;
}

TEST(InitialAnchor, SymmetricBoxGivesZero) {
    auto m = parse_model(R"(@type pmc
@parameters w [-1, 1]
@initial a
@targets b
a b 1/2 + 1/4*w
a c 1/2 - 1/4*w
b b 1
c c 1
)");
    auto spec = parse_spec("P<=0.4");
    auto q = nlp_to_qcqp(build_nlp(m, spec, analyze(m, spec), kEps), m);
    EXPECT_EQ(initial_anchor(q, spec)[q.vars.parameter_variable(0)], 0.0);
}

TEST(Synthesize, LeakyChainAtMost) {
    auto m = leaky_chain();
    auto spec = parse_spec("P<=0.3");
    auto r = synthesize(m, spec);
    expect_sound(m, spec, r);
    EXPECT_LE(r.iterations, 20);
    double v = value_of(*r.instantiation);
    EXPECT_LE(leaky_chain_value(v), 0.3 + 1e-12);
    EXPECT_GT(v, 1e-5);
    EXPECT_LT(v, 1 - 1e-5);
}

TEST(Synthesize, TrivialThresholdAtFirstIteration) {
    auto m = leaky_chain();
    auto spec = parse_spec("P<=1");
    auto r = synthesize(m, spec);
    expect_sound(m, spec, r);
    EXPECT_EQ(r.iterations, 1);
}

TEST(Synthesize, UnreachableLowerBoundIsExhausted) {
    auto m = leaky_chain();
    auto r = synthesize(m, parse_spec("P>=0.2"));
    EXPECT_EQ(r.status, SynthesisStatus::exhausted);
    EXPECT_FALSE(r.instantiation);
    ASSERT_TRUE(r.best_value);
    EXPECT_LE(*r.best_value, 4.0 / 27 + 1e-9);
}

TEST(Synthesize, AttainableLowerBound) {
    auto m = leaky_chain();
    auto spec = parse_spec("P>=0.14");
    for (bool feedback : {true, false}) {
        CcpConfig cfg;
        cfg.mc_feedback = feedback;
        auto r = synthesize(m, spec, cfg);
        expect_sound(m, spec, r);
    }
}

TEST(Synthesize, TinyConstantEntryIsInfeasibleInstance) {
    auto m = parse_model(R"(@type pmc
@parameters v
@initial a
@targets b
a b 1/1000000
a c 999999/1000000
b b 1
c c 1
)");
    auto r = synthesize(m, parse_spec("P<=0.5"));
    EXPECT_EQ(r.status, SynthesisStatus::infeasible_instance);
}

TEST(Synthesize, ParameterFreeViolationIsInfeasibleInstance) {
    auto m = parse_model(R"(@type pmc
@parameters v
@initial a
@targets b
a b 1/2
a c 1/2
b b 1
c c 1
)");
    auto r = synthesize(m, parse_spec("P<=0.25"));
    EXPECT_EQ(r.status, SynthesisStatus::infeasible_instance);
}

TEST(Synthesize, TauIsNondecreasingAndCapped) {
    auto m = leaky_chain();
    CcpConfig cfg;
    cfg.tau_max = 0.4;
    cfg.max_iterations = 30;
    cfg.restarts = 1;
    auto r = synthesize(m, parse_spec("P>=0.2"), cfg);
    ASSERT_FALSE(r.trace.empty());
    for (std::size_t i = 0; i < r.trace.size(); ++i) {
        EXPECT_LE(r.trace[i].tau, cfg.tau_max);
        EXPECT_GT(r.trace[i].tau, 0);
        if (i > 0 && r.trace[i].restart == r.trace[i - 1].restart)
            EXPECT_GE(r.trace[i].tau, r.trace[i - 1].tau);
    }
    EXPECT_DOUBLE_EQ(r.trace.back().tau, cfg.tau_max);
}

TEST(Synthesize, MultiplicativeScheduleGrowsGeometrically) {
    auto m = leaky_chain();
    CcpConfig cfg;
    cfg.schedule = TauSchedule::multiplicative;
    cfg.tau_factor = 2;
    cfg.max_iterations = 5;
    cfg.restarts = 0;
    auto r = synthesize(m, parse_spec("P>=0.2"), cfg);
    ASSERT_GE(r.trace.size(), 2u);
    EXPECT_DOUBLE_EQ(r.trace[1].tau, 2 * r.trace[0].tau);
}

TEST(Synthesize, ProgressLines) {
    auto m = leaky_chain();
    std::ostringstream log;
    CcpConfig cfg;
    cfg.progress = &log;
    auto r = synthesize(m, parse_spec("P<=0.3"), cfg);
    std::istringstream in(log.str());
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) {
        ++lines;
        EXPECT_EQ(line.rfind("iter=", 0), 0u) << line;
        EXPECT_NE(line.find(" tau="), std::string::npos);
        EXPECT_NE(line.find(" penalty="), std::string::npos);
        EXPECT_NE(line.find(" value="), std::string::npos);
    }
    EXPECT_EQ(lines, r.iterations);
}

TEST(Synthesize, Deterministic) {
    auto m = maze_model({5, 3, false});
    auto spec = parse_spec("E<=" + format_decimal(0.85 * centre_value(m, parse_spec("E<=1"))));
    CcpConfig cfg;
    cfg.seed = 11;
    auto a = synthesize(m, spec, cfg);
    auto b = synthesize(m, spec, cfg);
    EXPECT_EQ(a.status, b.status);
    EXPECT_EQ(a.instantiation, b.instantiation);
    ASSERT_EQ(a.trace.size(), b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
        EXPECT_EQ(a.trace[i].penalty, b.trace[i].penalty);
        EXPECT_EQ(a.trace[i].value, b.trace[i].value);
    }
}

TEST(Synthesize, RebuildAgreesWithRefresh) {
    auto m = maze_model({4, 2, true});
    auto spec = parse_spec("E<=" + format_decimal(0.9 * centre_value(m, parse_spec("E<=1"))));
    CcpConfig cfg;
    auto a = synthesize(m, spec, cfg);
    cfg.incremental = false;
    auto b = synthesize(m, spec, cfg);
    expect_sound(m, spec, a);
    expect_sound(m, spec, b);
}

TEST(Synthesize, RejectsBadConfig) {
    auto m = leaky_chain();
    auto spec = parse_spec("P<=0.3");
    CcpConfig cfg;
    cfg.tau0 = 0;
    EXPECT_THROW(synthesize(m, spec, cfg), std::invalid_argument);
    cfg = {};
    cfg.tau0 = 10;
    cfg.tau_max = 1;
    EXPECT_THROW(synthesize(m, spec, cfg), std::invalid_argument);
    cfg = {};
    cfg.eps_graph = 0;
    EXPECT_THROW(synthesize(m, spec, cfg), std::invalid_argument);
}

// Every feasible verdict must survive an independent exact check, with and
// without model-checking feedback.
TEST(Synthesize, FeasibleVerdictsAreCertified) {
    int feasible[2] = {0, 0};
    int runs = 0;
    for (std::uint64_t seed = 0; seed < 120; ++seed) {
        RandomModelOptions o;
        o.states = 4 + seed % 7;
        o.max_actions = 1 + seed % 3;
        o.parameters = 1 + seed % 3;
        o.costs = seed % 4 == 0;
        auto m = random_model(o, seed);
        const double centre = centre_value(m, parse_spec(o.costs ? "E<=1" : "P<=1"));
        std::string text;
        if (o.costs)
            text = "E<=" + format_decimal(0.9 * centre);
        else if (seed % 2 || centre > 0.9)
            text = "P<=" + format_decimal(0.8 * centre);
        else
            text = "P>=" + format_decimal(std::min(1.0, 1.1 * centre + 0.01));
        auto spec = parse_spec(text);
        for (int fb = 0; fb < 2; ++fb) {
            CcpConfig cfg;
            cfg.mc_feedback = fb == 1;
            cfg.max_iterations = 40;
            cfg.restarts = 1;
            cfg.seed = seed;
            SynthesisResult r;
            try {
                r = synthesize(m, spec, cfg);
            } catch (const InfeasibleCost&) {
                continue;
            }
            ++runs;
            if (r.status == SynthesisStatus::feasible) {
                ++feasible[fb];
                SCOPED_TRACE(::testing::Message() << "seed " << seed << " spec " << text << " feedback " << fb);
                expect_sound(m, spec, r);
            }
        }
    }
    EXPECT_GE(runs, 200);
    EXPECT_GT(feasible[0], 20);
    EXPECT_GT(feasible[1], 40);
}
