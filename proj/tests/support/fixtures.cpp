#include "fixtures.hpp"

namespace paramsynth::testing {

const char* const kLeakyChain = R"(# chain with one parameter
@type pmc
@parameters v
@initial s0
@targets s3
s0 s1 v
s0 s4 1 - v
s1 s2 1 - v
s1 s4 v
s2 s3 v
s2 s4 1 - v
s3 s3 1
s4 s4 1
)";

Pmdp leaky_chain() { return parse_model(kLeakyChain); }

Instantiation valuation(const Pmdp& m, std::initializer_list<Rational> values) {
    Instantiation u;
    ParamId id = 0;
    for (const auto& v : values)
        u.set(id++, v);
    (void)m;
    return u;
}

Instantiation random_valuation(const Pmdp& m, std::mt19937_64& rng) {
    Instantiation u;
    for (ParamId i = 0; i < m.num_parameters(); ++i)
        u.set(i, Rational(1 + static_cast<long>(rng() % 63), 64));
    return u;
}

ConcreteMdp random_concrete(std::size_t states, std::size_t max_actions, bool costs, std::uint64_t seed,
                            StateSet* targets) {
    RandomModelOptions o;
    o.states = states;
    o.max_actions = max_actions;
    o.parameters = 2;
    o.costs = costs;
    auto m = random_model(o, seed);
    std::mt19937_64 rng(seed ^ 0x5eed);
    if (targets)
        *targets = m.targets;
    return instantiate(m, random_valuation(m, rng));
}

double leaky_chain_value(double v) { return v * v * (1 - v); }

} // namespace paramsynth::testing
