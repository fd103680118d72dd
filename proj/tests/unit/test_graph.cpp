#include "fixtures.hpp"

#include <paramsynth/graph.hpp>
#include <paramsynth/mc.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace paramsynth;
using namespace paramsynth::testing;

namespace {

StateSet only(std::size_t n, std::initializer_list<StateId> states) {
    StateSet s(n, false);
    for (auto x : states)
        s[x] = true;
    return s;
}

const Specification kAtMost{SpecKind::reach_probability, Direction::at_most, Rational(1, 2)};
const Specification kAtLeast{SpecKind::reach_probability, Direction::at_least, Rational(1, 2)};

} // namespace

TEST(Analyze, LeakyChain) {
    auto m = leaky_chain();
    auto a = analyze(m, kAtMost);
    EXPECT_EQ(a.prob0, only(5, {*m.find_state("s4")}));
    EXPECT_EQ(a.prob1, only(5, {*m.find_state("s3")}));
    EXPECT_EQ(a.reachable, StateSet(5, true));
}

TEST(Analyze, AllTargets) {
    auto m = leaky_chain();
    m.targets.assign(5, true);
    auto a = analyze(m, kAtMost);
    EXPECT_EQ(a.prob1, StateSet(5, true));
    EXPECT_EQ(a.prob0, StateSet(5, false));
}

TEST(Analyze, AbsorbingInitialWithoutTarget) {
    auto m = parse_model("@type pmc\n@initial a\n@targets b\na a 1\nb b 1\n");
    for (const auto& spec : {kAtMost, kAtLeast}) {
        auto a = analyze(m, spec);
        EXPECT_TRUE(a.prob0[0]);
        EXPECT_FALSE(a.prob1[0]);
    }
}

TEST(Analyze, DirectionChangesProb0) {
    // state 0 may loop forever (a) or move to the target (b)
    auto m = parse_model("@type pmdp\n@initial s\n@targets t\ns a s 1\ns b t 1\nt x t 1\n");
    EXPECT_FALSE(analyze(m, kAtMost).prob0[0]);
    EXPECT_TRUE(analyze(m, kAtLeast).prob0[0]);
    EXPECT_FALSE(analyze(m, kAtLeast).prob1[0]);
}

TEST(Analyze, CostNeedsAlmostSureGoal) {
    const Specification cost{SpecKind::expected_cost, Direction::at_most, Rational(5)};
    auto m = leaky_chain();
    EXPECT_THROW(analyze(m, cost), InfeasibleCost);

    RandomModelOptions o;
    o.costs = true;
    o.states = 10;
    EXPECT_NO_THROW(analyze(random_model(o, 4), cost));
}

TEST(Analyze, ValuesMatchModelChecking) {
    std::mt19937_64 rng(1);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        RandomModelOptions o;
        o.states = 12;
        o.max_actions = 2;
        auto m = random_model(o, seed);
        for (const auto& spec : {kAtMost, kAtLeast}) {
            auto a = analyze(m, spec);
            auto opt = adversary(spec);
            for (int i = 0; i < 10; ++i) {
                auto r = extremal_reach(instantiate(m, random_valuation(m, rng)), m.targets, opt);
                for (StateId s = 0; s < m.num_states(); ++s) {
                    if (a.prob0[s])
                        EXPECT_EQ(r.values[s], 0.0);
                    if (a.prob1[s])
                        EXPECT_NEAR(r.values[s], 1.0, 1e-8);
                    EXPECT_FALSE(a.prob0[s] && a.prob1[s]);
                }
            }
        }
    }
}

TEST(Analyze, IndependentOfValuation) {
    std::mt19937_64 rng(2);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        RandomModelOptions o;
        o.states = 9;
        o.max_actions = 3;
        auto m = random_model(o, seed);
        auto g1 = SupportGraph::of(instantiate(m, random_valuation(m, rng)));
        auto g2 = SupportGraph::of(instantiate(m, random_valuation(m, rng)));
        for (auto f : {prob0_max, prob0_min, prob1_all})
            EXPECT_EQ(f(g1, m.targets), f(g2, m.targets));
        EXPECT_EQ(prob0_max(g1, m.targets), analyze(m, kAtMost).prob0);
    }
}
