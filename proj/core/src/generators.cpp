#include "paramsynth/generators.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <deque>
#include <random>
#include <stdexcept>

namespace paramsynth {

namespace {

const Rational kEps{1, 100000};

/// Portable draws from mt19937_64 (std distributions differ between libraries).
class Draw {
public:
    explicit Draw(std::uint64_t seed) : rng_(seed) {}
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }
    double unit() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
    bool chance(double p) { return unit() < p; }

private:
    std::mt19937_64 rng_;
};

void add_parameters(Pmdp& m, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i)
        m.parameters.push_back({fmt::format("v{}", i), default_box(kEps)});
}

AffineExpr param(ParamId id) { return AffineExpr::parameter(id); }
AffineExpr constant(Rational r) { return AffineExpr(std::move(r)); }
AffineExpr one_minus(const AffineExpr& e) { return constant(1) - e; }

Choice absorbing(StateId s, const std::string& action = "") {
    return Choice{action, {{s, constant(1)}}, std::nullopt};
}

} // namespace

Pmdp chain_model(std::size_t n, std::size_t params) {
    if (n == 0 || params == 0)
        throw std::invalid_argument("chain needs at least one step and one parameter");
    Pmdp m;
    m.kind = ModelKind::pmc;
    add_parameters(m, params);
    for (std::size_t i = 0; i < n; ++i)
        m.state_names.push_back(fmt::format("s{}", i));
    m.state_names.push_back("goal");
    m.state_names.push_back("fail");
    const auto goal = static_cast<StateId>(n), fail = static_cast<StateId>(n + 1);
    m.choices.resize(n + 2);
    for (std::size_t i = 0; i < n; ++i) {
        auto v = param(static_cast<ParamId>(i % params));
        auto next = i + 1 < n ? static_cast<StateId>(i + 1) : goal;
        m.choices[i].push_back(Choice{"", {{next, v}, {fail, one_minus(v)}}, std::nullopt});
    }
    m.choices[goal].push_back(absorbing(goal));
    m.choices[fail].push_back(absorbing(fail));
    m.initial = 0;
    m.targets.assign(n + 2, false);
    m.targets[goal] = true;
    return m;
}

Pmdp grid_model(std::size_t size, std::size_t params, std::uint64_t seed) {
    if (size == 0 || params == 0)
        throw std::invalid_argument("grid needs a positive size and parameter count");
    Draw draw(seed);
    Pmdp m;
    m.kind = ModelKind::pmc;
    add_parameters(m, params);
    const auto cells = size * size;
    auto id = [size](std::size_t r, std::size_t c) { return static_cast<StateId>(r * size + c); };
    for (std::size_t r = 0; r < size; ++r)
        for (std::size_t c = 0; c < size; ++c)
            m.state_names.push_back(fmt::format("c{}_{}", r, c));
    const StateId goal = id(size - 1, size - 1);

    std::vector<bool> trap(cells, false);
    for (std::size_t k = 0; k < cells / 6; ++k) {
        auto cell = draw.below(cells);
        if (cell != 0 && cell != goal)
            trap[cell] = true;
    }
    m.choices.resize(cells);
    for (std::size_t r = 0; r < size; ++r)
        for (std::size_t c = 0; c < size; ++c) {
            auto s = id(r, c);
            if (s == goal || trap[s]) {
                m.choices[s].push_back(absorbing(s));
                continue;
            }
            auto east = id(r, std::min(c + 1, size - 1));
            auto south = id(std::min(r + 1, size - 1), c);
            auto v = param(static_cast<ParamId>(draw.below(params)));
            auto p_east = constant(Rational(1, 10)) + v * Rational(4, 5);
            m.choices[s].push_back(Choice{"", {{east, p_east}, {south, one_minus(p_east)}}, std::nullopt});
        }
    m.initial = 0;
    m.targets.assign(cells, false);
    m.targets[goal] = true;
    return m;
}

Pmdp maze_model(const MazeOptions& options) {
    const auto size = options.size;
    if (size < 2)
        throw std::invalid_argument("maze size must be at least 2");
    Draw draw(options.seed);
    const auto cells = size * size;
    const auto params = std::max<std::size_t>(1, cells / 2);
    Pmdp m;
    m.kind = options.pmc ? ModelKind::pmc : ModelKind::pmdp;
    add_parameters(m, params);
    for (std::size_t r = 0; r < size; ++r)
        for (std::size_t c = 0; c < size; ++c)
            m.state_names.push_back(fmt::format("m{}_{}", r, c));

    auto neighbours = [size](std::size_t cell) {
        std::vector<std::size_t> out;
        auto r = cell / size, c = cell % size;
        if (r > 0)
            out.push_back(cell - size);
        if (r + 1 < size)
            out.push_back(cell + size);
        if (c > 0)
            out.push_back(cell - 1);
        if (c + 1 < size)
            out.push_back(cell + 1);
        return out;
    };

    // randomized breadth-first spanning tree from the goal
    const std::size_t goal = cells - 1;
    std::vector<std::size_t> parent(cells, cells);
    parent[goal] = goal;
    std::deque<std::size_t> queue{goal};
    while (!queue.empty()) {
        auto u = queue.front();
        queue.pop_front();
        auto next = neighbours(u);
        for (std::size_t i = next.size(); i > 1; --i)
            std::swap(next[i - 1], next[draw.below(i)]);
        for (auto v : next)
            if (parent[v] == cells) {
                parent[v] = u;
                queue.push_back(v);
            }
    }

    // shuffled pairing of cells onto parameters
    std::vector<std::size_t> slot(cells);
    for (std::size_t i = 0; i < cells; ++i)
        slot[i] = i;
    for (std::size_t i = cells; i > 1; --i)
        std::swap(slot[i - 1], slot[draw.below(i)]);

    m.choices.resize(cells);
    bool any_choice = false;
    const Rational one(1);
    for (std::size_t s = 0; s < cells; ++s) {
        if (s == goal) {
            m.choices[s].push_back(Choice{options.pmc ? "" : "stay", {{static_cast<StateId>(s), constant(1)}}, one});
            continue;
        }
        auto v = param(static_cast<ParamId>(slot[s] % params));
        bool flipped = draw.chance(0.5);
        auto forward = flipped ? constant(Rational(19, 20)) - v * Rational(2, 5)
                               : constant(Rational(11, 20)) + v * Rational(2, 5);
        auto others = neighbours(s);
        std::erase(others, parent[s]);
        auto slip = others.empty() ? s : others[draw.below(others.size())];
        auto to = static_cast<StateId>(parent[s]);
        m.choices[s].push_back(Choice{options.pmc ? "" : "go",
                                      {{to, forward}, {static_cast<StateId>(slip), one_minus(forward)}}, one});
        bool second = !options.pmc && (draw.chance(0.25) || (s == 0 && !any_choice));
        if (second) {
            // half as likely to make progress, otherwise waits in place
            auto slow = forward * Rational(1, 2);
            if (slip == s)
                m.choices[s].push_back(Choice{"w", {{to, slow}, {static_cast<StateId>(s), one_minus(slow)}}, one});
            else
                m.choices[s].push_back(Choice{"w",
                                              {{to, slow},
                                               {static_cast<StateId>(slip), one_minus(forward) * Rational(1, 2)},
                                               {static_cast<StateId>(s), constant(Rational(1, 2))}},
                                              one});
            any_choice = true;
        }
    }
    m.initial = 0;
    m.targets.assign(cells, false);
    m.targets[goal] = true;
    return m;
}

Pmdp random_model(const RandomModelOptions& o, std::uint64_t seed) {
    const bool cost = o.costs;
    const std::size_t n = o.states;
    if (n < (cost ? 2u : 3u) || o.max_actions == 0)
        throw std::invalid_argument("random model needs more states and at least one action");
    Draw draw(seed);
    Pmdp m;
    m.kind = o.max_actions == 1 ? ModelKind::pmc : ModelKind::pmdp;
    add_parameters(m, o.parameters);
    for (std::size_t i = 0; i < n; ++i)
        m.state_names.push_back(fmt::format("s{}", i));
    const auto target = static_cast<StateId>(n - 1);
    const auto sink = static_cast<StateId>(n - 2);
    m.choices.resize(n);
    m.targets.assign(n, false);
    m.targets[target] = true;

    auto action_name = [&](std::size_t a) { return m.kind == ModelKind::pmc ? std::string() : fmt::format("a{}", a); };

    for (StateId s = 0; s < n; ++s) {
        if (s == target || (!cost && s == sink)) {
            m.choices[s].push_back(absorbing(s, action_name(0)));
            if (cost)
                m.choices[s].back().cost = Rational(0);
            continue;
        }
        const auto actions = 1 + draw.below(o.max_actions);
        for (std::size_t a = 0; a < actions; ++a) {
            // successors: for cost models the first one is strictly above s
            std::vector<StateId> succ;
            if (cost)
                succ.push_back(static_cast<StateId>(s + 1 + draw.below(n - 1 - s)));
            const auto want = 1 + draw.below(3);
            for (std::size_t tries = 0; succ.size() < want && tries < 16; ++tries) {
                auto t = static_cast<StateId>(draw.below(n));
                if (std::find(succ.begin(), succ.end(), t) == succ.end())
                    succ.push_back(t);
            }

            Choice c;
            c.action = action_name(a);
            const bool parametric = o.parameters > 0 && succ.size() >= 2 && draw.chance(o.parametric_share);
            if (parametric) {
                auto v = param(static_cast<ParamId>(draw.below(o.parameters)));
                AffineExpr first;
                const auto shape = draw.below(4);
                if (shape == 0) {
                    first = v;
                } else if (shape == 1 && o.parameters > 1) {
                    auto w = param(static_cast<ParamId>(draw.below(o.parameters)));
                    first = constant(Rational(1, 10)) + v * Rational(2, 5) + w * Rational(2, 5);
                } else {
                    Rational lo(1 + draw.below(2), 10), width(5 + draw.below(3), 10);
                    first = draw.chance(0.5) ? constant(lo) + v * width : constant(lo + width) - v * width;
                }
                if (succ.size() == 2) {
                    c.transitions = {{succ[0], first}, {succ[1], one_minus(first)}};
                } else {
                    Rational share(1 + draw.below(3), 5); // constant mass to the third successor
                    Rational rest = Rational(1) - share;
                    c.transitions = {{succ[0], first * rest}, {succ[1], one_minus(first) * rest}, {succ[2], constant(share)}};
                    if (shape == 0) {
                        // v * rest can drop below eps near the box edge; keep the shape safe
                        auto safe = constant(Rational(1, 10)) + v * Rational(4, 5);
                        c.transitions = {{succ[0], safe * rest}, {succ[1], one_minus(safe) * rest}, {succ[2], constant(share)}};
                    }
                }
            } else {
                std::vector<long> weights;
                long total = 0;
                for (std::size_t i = 0; i < succ.size(); ++i) {
                    weights.push_back(1 + static_cast<long>(draw.below(9)));
                    total += weights.back();
                }
                for (std::size_t i = 0; i < succ.size(); ++i)
                    c.transitions.push_back({succ[i], constant(Rational(weights[i], total))});
            }
            if (cost)
                c.cost = Rational(static_cast<long>(draw.below(6)));
            m.choices[s].push_back(std::move(c));
        }
    }
    m.initial = 0;
    m.validate();
    return m;
}

} // namespace paramsynth
