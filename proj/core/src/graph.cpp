#include "paramsynth/graph.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <deque>

namespace paramsynth {

namespace {

void build_predecessors(SupportGraph& g) {
    const auto n = g.num_states();
    const auto choices = g.choice_begin.size() - 1;
    std::vector<std::size_t> counts(n + 1, 0);
    for (std::size_t c = 0; c < choices; ++c) {
        // a choice is listed once per distinct successor
        for (auto e = g.choice_begin[c]; e < g.choice_begin[c + 1]; ++e)
            ++counts[g.successor[e] + 1];
    }
    for (std::size_t s = 0; s < n; ++s)
        counts[s + 1] += counts[s];
    g.pred_begin = counts;
    g.pred_choice.assign(counts[n], 0);
    auto fill = counts;
    for (std::size_t c = 0; c < choices; ++c)
        for (auto e = g.choice_begin[c]; e < g.choice_begin[c + 1]; ++e)
            g.pred_choice[fill[g.successor[e]]++] = c;
}

} // namespace

SupportGraph SupportGraph::of(const Pmdp& m) {
    SupportGraph g;
    g.state_begin.push_back(0);
    g.choice_begin.push_back(0);
    for (StateId s = 0; s < m.num_states(); ++s) {
        for (const auto& c : m.choices[s]) {
            for (const auto& t : c.transitions)
                g.successor.push_back(t.target);
            g.choice_begin.push_back(g.successor.size());
            g.choice_state.push_back(s);
        }
        g.state_begin.push_back(g.choice_begin.size() - 1);
    }
    build_predecessors(g);
    return g;
}

SupportGraph SupportGraph::of(const ConcreteMdp& mdp) {
    SupportGraph g;
    g.state_begin = mdp.state_begin;
    g.choice_begin.push_back(0);
    for (StateId s = 0; s < mdp.num_states(); ++s)
        for (auto c = mdp.state_begin[s]; c < mdp.state_begin[s + 1]; ++c) {
            for (auto e = mdp.choice_begin[c]; e < mdp.choice_begin[c + 1]; ++e)
                if (mdp.probability[e] > 0)
                    g.successor.push_back(mdp.column[e]);
            g.choice_begin.push_back(g.successor.size());
            g.choice_state.push_back(s);
        }
    build_predecessors(g);
    return g;
}

StateSet reachable_from(const SupportGraph& g, StateId initial) {
    StateSet seen(g.num_states(), false);
    std::vector<StateId> stack{initial};
    seen[initial] = true;
    while (!stack.empty()) {
        auto s = stack.back();
        stack.pop_back();
        for (auto c = g.state_begin[s]; c < g.state_begin[s + 1]; ++c)
            for (auto e = g.choice_begin[c]; e < g.choice_begin[c + 1]; ++e)
                if (!seen[g.successor[e]]) {
                    seen[g.successor[e]] = true;
                    stack.push_back(g.successor[e]);
                }
    }
    return seen;
}

StateSet prob0_max(const SupportGraph& g, const StateSet& targets) {
    const auto n = g.num_states();
    StateSet reaches = targets;
    std::deque<StateId> work;
    for (StateId s = 0; s < n; ++s)
        if (targets[s])
            work.push_back(s);
    while (!work.empty()) {
        auto t = work.front();
        work.pop_front();
        for (auto p = g.pred_begin[t]; p < g.pred_begin[t + 1]; ++p) {
            auto s = g.choice_state[g.pred_choice[p]];
            if (!reaches[s]) {
                reaches[s] = true;
                work.push_back(static_cast<StateId>(s));
            }
        }
    }
    reaches.flip();
    return reaches;
}

StateSet prob0_min(const SupportGraph& g, const StateSet& targets) {
    // least fixed point: targets, plus states all of whose choices can move into the set
    const auto n = g.num_states();
    StateSet in = targets;
    std::vector<bool> choice_hit(g.choice_begin.size() - 1, false);
    std::vector<std::size_t> hits(n, 0);
    std::deque<StateId> work;
    for (StateId s = 0; s < n; ++s)
        if (targets[s])
            work.push_back(s);
    while (!work.empty()) {
        auto t = work.front();
        work.pop_front();
        for (auto p = g.pred_begin[t]; p < g.pred_begin[t + 1]; ++p) {
            auto c = g.pred_choice[p];
            if (choice_hit[c])
                continue;
            choice_hit[c] = true;
            auto s = g.choice_state[c];
            if (!in[s] && ++hits[s] == g.state_begin[s + 1] - g.state_begin[s]) {
                in[s] = true;
                work.push_back(static_cast<StateId>(s));
            }
        }
    }
    in.flip();
    return in;
}

StateSet prob1_all(const SupportGraph& g, const StateSet& targets) {
    // complement of the states that can reach a min-prob-0 state while avoiding targets
    const auto n = g.num_states();
    StateSet escape = prob0_min(g, targets);
    std::deque<StateId> work;
    for (StateId s = 0; s < n; ++s)
        if (escape[s])
            work.push_back(s);
    while (!work.empty()) {
        auto t = work.front();
        work.pop_front();
        for (auto p = g.pred_begin[t]; p < g.pred_begin[t + 1]; ++p) {
            auto s = g.choice_state[g.pred_choice[p]];
            if (!escape[s] && !targets[s]) {
                escape[s] = true;
                work.push_back(static_cast<StateId>(s));
            }
        }
    }
    escape.flip();
    return escape;
}

GraphAnalysis analyze(const Pmdp& m, const Specification& spec) {
    const auto g = SupportGraph::of(m);
    GraphAnalysis a;
    a.reachable = reachable_from(g, m.initial);
    if (spec.is_reachability()) {
        if (count(m.targets) == 0)
            throw ModelError("reachability specification needs a nonempty target set");
        a.prob0 = spec.upper_bound() ? prob0_max(g, m.targets) : prob0_min(g, m.targets);
        a.prob1 = prob1_all(g, m.targets);
        return a;
    }
    a.prob1 = prob1_all(g, m.targets);
    a.prob0 = prob0_max(g, m.targets);
    for (StateId s = 0; s < m.num_states(); ++s)
        if (a.reachable[s] && !a.prob1[s])
            throw InfeasibleCost(fmt::format(
                "goal set is not reached almost surely from state '{}': expected cost is infinite",
                m.state_names[s]));
    return a;
}

std::size_t count(const StateSet& set) { return static_cast<std::size_t>(std::count(set.begin(), set.end(), true)); }

} // namespace paramsynth
