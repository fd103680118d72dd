#include "paramsynth/mc.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace paramsynth {

namespace {

constexpr int kMaxPolicySteps = 10'000;
constexpr double kInfinity = std::numeric_limits<double>::infinity();

bool better(Optimize opt, double candidate, double incumbent) {
    return opt == Optimize::maximize ? candidate > incumbent : candidate < incumbent;
}

double choice_value(const ConcreteMdp& mdp, std::size_t c, const std::vector<double>& x, bool with_cost) {
    double sum = with_cost ? mdp.cost[c] : 0.0;
    for (auto e = mdp.choice_begin[c]; e < mdp.choice_begin[c + 1]; ++e)
        sum += mdp.probability[e] * x[mdp.column[e]];
    return sum;
}

/// Choice value with the self-loop at `s` solved out; same fixed point, but
/// a loop of weight close to 1 no longer stalls the sweep.
double solved_choice_value(const ConcreteMdp& mdp, StateId s, std::size_t c, const std::vector<double>& x,
                           bool with_cost) {
    double sum = with_cost ? mdp.cost[c] : 0.0, loop = 0;
    for (auto e = mdp.choice_begin[c]; e < mdp.choice_begin[c + 1]; ++e) {
        if (mdp.column[e] == s)
            loop += mdp.probability[e];
        else
            sum += mdp.probability[e] * x[mdp.column[e]];
    }
    if (loop >= 1 - 1e-12)
        return sum + loop * x[s];
    const double v = sum / (1 - loop);
    return with_cost ? v : std::min(v, 1.0);
}

/// Shared Gauss-Seidel loop; `fixed` states keep their initial value.
McResult gauss_seidel(const ConcreteMdp& mdp, std::vector<double> x, const StateSet& fixed, Optimize opt,
                      double tol, bool with_cost, int max_sweeps) {
    const auto n = mdp.num_states();
    McResult r;
    double delta = 0, previous = 0;
    auto converged = [&] {
        if (delta >= tol)
            return false;
        // geometric tail estimate from the contraction seen in the last two sweeps
        double rate = previous > 0 ? delta / previous : 0.0;
        return rate < 1 && delta * rate / (1 - rate) < tol;
    };
    do {
        previous = delta;
        delta = 0;
        for (StateId s = 0; s < n; ++s) {
            if (fixed[s])
                continue;
            double best = 0;
            bool first = true;
            for (auto c = mdp.state_begin[s]; c < mdp.state_begin[s + 1]; ++c) {
                double v = solved_choice_value(mdp, s, c, x, with_cost);
                if (first || better(opt, v, best)) {
                    best = v;
                    first = false;
                }
            }
            delta = std::max(delta, std::abs(best - x[s]));
            x[s] = best;
        }
        ++r.iterations;
    } while (!converged() && r.iterations < max_sweeps);
    r.residual = delta;
    r.converged = converged();

    r.strategy.assign(n, 0);
    for (StateId s = 0; s < n; ++s) {
        if (fixed[s])
            continue;
        double best = 0;
        for (auto c = mdp.state_begin[s]; c < mdp.state_begin[s + 1]; ++c) {
            double v = solved_choice_value(mdp, s, c, x, with_cost);
            if (c == mdp.state_begin[s] || better(opt, v, best)) {
                best = v;
                r.strategy[s] = static_cast<std::uint32_t>(c - mdp.state_begin[s]);
            }
        }
    }
    r.values = std::move(x);
    return r;
}

void require_finite_cost(const ConcreteMdp& mdp, const McSeeds& seeds) {
    auto reach = reachable_from(SupportGraph::of(mdp), mdp.initial);
    for (StateId s = 0; s < mdp.num_states(); ++s)
        if (reach[s] && seeds.infinite[s])
            throw InfeasibleCost(fmt::format("state {} does not reach the goal set almost surely", s));
}

/// States that reach `one` in the chain induced by `strategy`, restricted to `candidates`.
StateSet reaches_under(const ConcreteMdp& mdp, const std::vector<std::uint32_t>& strategy, const StateSet& one,
                       const StateSet& candidates) {
    const auto n = mdp.num_states();
    std::vector<std::vector<StateId>> pred(n);
    for (StateId s = 0; s < n; ++s) {
        if (!candidates[s])
            continue;
        auto c = mdp.state_begin[s] + strategy[s];
        for (auto e = mdp.choice_begin[c]; e < mdp.choice_begin[c + 1]; ++e)
            if (mdp.probability[e] > 0)
                pred[mdp.column[e]].push_back(s);
    }
    StateSet mark = one;
    std::vector<StateId> stack;
    for (StateId s = 0; s < n; ++s)
        if (one[s])
            stack.push_back(s);
    while (!stack.empty()) {
        auto t = stack.back();
        stack.pop_back();
        for (auto s : pred[t])
            if (!mark[s]) {
                mark[s] = true;
                stack.push_back(s);
            }
    }
    return mark;
}

/// Solves x = P_sigma x + b on `unknown` states; other states keep `x`.
void solve_induced(const ConcreteMdp& mdp, const std::vector<std::uint32_t>& strategy, const StateSet& unknown,
                   std::vector<double>& x, bool with_cost) {
    const auto n = mdp.num_states();
    std::vector<int> index(n, -1);
    int k = 0;
    for (StateId s = 0; s < n; ++s)
        if (unknown[s])
            index[s] = k++;
    if (k == 0)
        return;
    std::vector<Eigen::Triplet<double>> triplets;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
    for (StateId s = 0; s < n; ++s) {
        if (index[s] < 0)
            continue;
        triplets.emplace_back(index[s], index[s], 1.0);
        auto c = mdp.state_begin[s] + strategy[s];
        if (with_cost)
            rhs[index[s]] += mdp.cost[c];
        for (auto e = mdp.choice_begin[c]; e < mdp.choice_begin[c + 1]; ++e) {
            auto t = mdp.column[e];
            if (index[t] >= 0)
                triplets.emplace_back(index[s], index[t], -mdp.probability[e]);
            else
                rhs[index[s]] += mdp.probability[e] * x[t];
        }
    }
    Eigen::SparseMatrix<double> a(k, k);
    a.setFromTriplets(triplets.begin(), triplets.end());
    a.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success)
        throw std::runtime_error("induced chain system is singular");
    Eigen::VectorXd sol = lu.solve(rhs);
    for (StateId s = 0; s < n; ++s)
        if (index[s] >= 0)
            x[s] = sol[index[s]];
}

McResult policy_iteration(const ConcreteMdp& mdp, const McSeeds& seeds, Optimize opt,
                          std::span<const std::uint32_t> hint, bool with_cost) {
    const auto n = mdp.num_states();
    StateSet fixed(n, false);
    std::vector<double> x(n, 0.0);
    for (StateId s = 0; s < n; ++s) {
        if (seeds.zero[s]) {
            fixed[s] = true;
        } else if (!seeds.one.empty() && seeds.one[s]) {
            fixed[s] = true;
            x[s] = 1.0;
        } else if (!seeds.infinite.empty() && seeds.infinite[s]) {
            fixed[s] = true;
            x[s] = kInfinity;
        }
    }
    StateSet free(n);
    for (StateId s = 0; s < n; ++s)
        free[s] = !fixed[s];

    std::vector<std::uint32_t> strategy(n, 0);
    if (hint.size() == n)
        std::copy(hint.begin(), hint.end(), strategy.begin());

    McResult r;
    for (; r.iterations < kMaxPolicySteps; ++r.iterations) {
        StateSet unknown = free;
        if (!with_cost) {
            // free states that cannot reach value-1 states under the policy have value 0
            StateSet reach = reaches_under(mdp, strategy, seeds.one, free);
            for (StateId s = 0; s < n; ++s)
                if (free[s] && !reach[s]) {
                    unknown[s] = false;
                    x[s] = 0.0;
                }
        }
        solve_induced(mdp, strategy, unknown, x, with_cost);

        bool changed = false;
        double residual = 0;
        for (StateId s = 0; s < n; ++s) {
            if (!free[s])
                continue;
            double current = x[s];
            double best = current;
            std::uint32_t best_choice = strategy[s];
            for (auto c = mdp.state_begin[s]; c < mdp.state_begin[s + 1]; ++c) {
                double v = choice_value(mdp, c, x, with_cost);
                double margin = 1e-12 * std::max(1.0, std::abs(current));
                if (better(opt, v, best) && std::abs(v - current) > margin) {
                    best = v;
                    best_choice = static_cast<std::uint32_t>(c - mdp.state_begin[s]);
                }
            }
            residual = std::max(residual, std::abs(best - current));
            if (best_choice != strategy[s]) {
                strategy[s] = best_choice;
                changed = true;
            }
        }
        r.residual = residual;
        if (!changed)
            break;
    }
    r.values = std::move(x);
    r.strategy = std::move(strategy);
    return r;
}

using RationalMatrix = std::vector<std::vector<Rational>>;

/// Gaussian elimination; the system is nonsingular by construction.
std::vector<Rational> solve_exact(RationalMatrix a, std::vector<Rational> b) {
    const auto k = b.size();
    for (std::size_t col = 0; col < k; ++col) {
        std::size_t pivot = col;
        while (pivot < k && a[pivot][col] == 0)
            ++pivot;
        if (pivot == k)
            throw std::runtime_error("singular system in exact solve");
        std::swap(a[pivot], a[col]);
        std::swap(b[pivot], b[col]);
        for (std::size_t row = 0; row < k; ++row) {
            if (row == col || a[row][col] == 0)
                continue;
            Rational f = a[row][col] / a[col][col];
            for (std::size_t j = col; j < k; ++j)
                a[row][j] -= f * a[col][j];
            b[row] -= f * b[col];
        }
    }
    for (std::size_t i = 0; i < k; ++i)
        b[i] /= a[i][i];
    return b;
}

} // namespace

McSeeds reach_seeds(const SupportGraph& g, const StateSet& targets, Optimize opt) {
    McSeeds seeds;
    seeds.zero = opt == Optimize::maximize ? prob0_max(g, targets) : prob0_min(g, targets);
    seeds.one = prob1_all(g, targets);
    return seeds;
}

McSeeds cost_seeds(const SupportGraph& g, const StateSet& goal) {
    McSeeds seeds;
    seeds.zero = goal;
    seeds.infinite = prob1_all(g, goal);
    seeds.infinite.flip();
    return seeds;
}

McResult extremal_reach(const ConcreteMdp& mdp, const StateSet& targets, Optimize opt, double tol) {
    return extremal_reach(mdp, reach_seeds(SupportGraph::of(mdp), targets, opt), opt, tol);
}

McResult extremal_reach(const ConcreteMdp& mdp, const McSeeds& seeds, Optimize opt, double tol, int max_sweeps) {
    const auto n = mdp.num_states();
    std::vector<double> x(n, 0.0);
    StateSet fixed(n, false);
    for (StateId s = 0; s < n; ++s) {
        if (seeds.one[s]) {
            x[s] = 1.0;
            fixed[s] = true;
        } else if (seeds.zero[s]) {
            fixed[s] = true;
        }
    }
    return gauss_seidel(mdp, std::move(x), fixed, opt, tol, false, max_sweeps);
}

McResult extremal_cost(const ConcreteMdp& mdp, const StateSet& goal, Optimize opt, double tol) {
    auto seeds = cost_seeds(SupportGraph::of(mdp), goal);
    require_finite_cost(mdp, seeds);
    return extremal_cost(mdp, seeds, opt, tol);
}

McResult extremal_cost(const ConcreteMdp& mdp, const McSeeds& seeds, Optimize opt, double tol, int max_sweeps) {
    const auto n = mdp.num_states();
    std::vector<double> x(n, 0.0);
    StateSet fixed(n, false);
    for (StateId s = 0; s < n; ++s) {
        if (seeds.zero[s]) {
            fixed[s] = true;
        } else if (seeds.infinite[s]) {
            x[s] = kInfinity;
            fixed[s] = true;
        }
    }
    return gauss_seidel(mdp, std::move(x), fixed, opt, tol, true, max_sweeps);
}

McResult certify_reach(const ConcreteMdp& mdp, const McSeeds& seeds, Optimize opt,
                       std::span<const std::uint32_t> hint) {
    return policy_iteration(mdp, seeds, opt, hint, false);
}

McResult certify_cost(const ConcreteMdp& mdp, const McSeeds& seeds, Optimize opt,
                      std::span<const std::uint32_t> hint) {
    return policy_iteration(mdp, seeds, opt, hint, true);
}

std::vector<std::optional<Rational>> brute_force_oracle(const ConcreteMdp& mdp, const StateSet& targets,
                                                        const Specification& spec) {
    const auto n = mdp.num_states();
    const bool cost = !spec.is_reachability();
    const Optimize opt = adversary(spec);

    double strategies = 1;
    for (StateId s = 0; s < n; ++s)
        strategies *= static_cast<double>(mdp.choices_of(s));
    if (strategies > double(1 << 20))
        throw InstanceTooLarge(fmt::format("{} strategies exceed the enumeration limit", strategies));

    std::vector<Rational> prob(mdp.probability.size());
    for (std::size_t e = 0; e < prob.size(); ++e)
        prob[e] = Rational(mdp.probability[e]);

    std::vector<std::optional<Rational>> best(n);
    std::vector<bool> seen(n, false);
    std::vector<std::uint32_t> sigma(n, 0);
    StateSet all(n, true);

    for (;;) {
        // states reaching the targets in the induced chain
        StateSet reach = reaches_under(mdp, sigma, targets, all);
        StateSet surely(n, false); // cost: reaches goal with probability one
        if (cost) {
            // in a finite chain, a state reaches the goal a.s. iff it cannot reach a
            // state that cannot reach the goal
            StateSet bad(n);
            for (StateId s = 0; s < n; ++s)
                bad[s] = !reach[s];
            StateSet to_bad = reaches_under(mdp, sigma, bad, all);
            for (StateId s = 0; s < n; ++s)
                surely[s] = !to_bad[s];
        }

        std::vector<int> index(n, -1);
        int k = 0;
        for (StateId s = 0; s < n; ++s) {
            bool unknown = cost ? (surely[s] && !targets[s]) : (reach[s] && !targets[s]);
            if (unknown)
                index[s] = k++;
        }
        RationalMatrix a(k, std::vector<Rational>(k, Rational(0)));
        std::vector<Rational> b(k, Rational(0));
        for (StateId s = 0; s < n; ++s) {
            if (index[s] < 0)
                continue;
            a[index[s]][index[s]] += 1;
            auto c = mdp.state_begin[s] + sigma[s];
            if (cost)
                b[index[s]] += Rational(mdp.cost[c]);
            for (auto e = mdp.choice_begin[c]; e < mdp.choice_begin[c + 1]; ++e) {
                auto t = mdp.column[e];
                if (index[t] >= 0)
                    a[index[s]][index[t]] -= prob[e];
                else if (!cost && targets[t])
                    b[index[s]] += prob[e];
            }
        }
        auto sol = solve_exact(std::move(a), std::move(b));

        for (StateId s = 0; s < n; ++s) {
            std::optional<Rational> v;
            if (index[s] >= 0)
                v = sol[index[s]];
            else if (targets[s])
                v = cost ? Rational(0) : Rational(1);
            else if (!cost)
                v = Rational(0);
            // cost states without almost-sure goal reachability stay infinite
            if (!seen[s]) {
                best[s] = v;
                seen[s] = true;
                continue;
            }
            const auto& cur = best[s];
            bool replace;
            if (opt == Optimize::maximize)
                replace = cur && (!v || *v > *cur);
            else
                replace = v && (!cur || *v < *cur);
            if (replace)
                best[s] = v;
        }

        // next strategy, odometer order
        StateId s = 0;
        for (; s < n; ++s) {
            if (++sigma[s] < mdp.choices_of(s))
                break;
            sigma[s] = 0;
        }
        if (s == n)
            break;
    }
    return best;
}

Optimize adversary(const Specification& spec) {
    return spec.upper_bound() ? Optimize::maximize : Optimize::minimize;
}

bool satisfies(const Specification& spec, double value, double slack) {
    double threshold = to_double(spec.threshold);
    return spec.upper_bound() ? value <= threshold + slack : value >= threshold - slack;
}

CheckResult check(const Pmdp& m, const Instantiation& u, const Specification& spec, double slack) {
    ParametricChecker checker(m, spec);
    auto params = u.to_doubles(m.num_parameters());
    checker.set_valuation(params);
    auto fast = checker.solve();
    auto exact = checker.certify(&fast);
    double value = checker.initial_value(exact);
    return {satisfies(spec, value, slack), value};
}

ParametricChecker::ParametricChecker(const Pmdp& m, const Specification& spec)
    : spec_(spec), opt_(adversary(spec)) {
    std::vector<double> zeros(m.num_parameters(), 0.0);
    mdp_.initial = m.initial;
    mdp_.state_begin.push_back(0);
    mdp_.choice_begin.push_back(0);
    for (const auto& cs : m.choices) {
        for (const auto& c : cs) {
            for (const auto& t : c.transitions) {
                if (!t.probability.is_constant()) {
                    Dependent d{mdp_.column.size(), to_double(t.probability.constant()), {}};
                    for (const auto& [id, coef] : t.probability.coefficients())
                        d.terms.emplace_back(id, to_double(coef));
                    dependent_.push_back(std::move(d));
                }
                mdp_.column.push_back(t.target);
                mdp_.probability.push_back(t.probability.evaluate(zeros));
            }
            mdp_.choice_begin.push_back(mdp_.column.size());
            mdp_.cost.push_back(c.cost ? to_double(*c.cost) : 0.0);
        }
        mdp_.state_begin.push_back(mdp_.choice_begin.size() - 1);
    }

    // the support is parameter-independent for graph-preserving valuations
    auto g = SupportGraph::of(m);
    if (spec.is_reachability()) {
        seeds_ = reach_seeds(g, m.targets, opt_);
    } else {
        seeds_ = cost_seeds(g, m.targets);
        auto reach = reachable_from(g, m.initial);
        for (StateId s = 0; s < m.num_states(); ++s)
            if (reach[s] && seeds_.infinite[s])
                throw InfeasibleCost(fmt::format("goal set is not reached almost surely from state '{}'",
                                                 m.state_names[s]));
    }
}

void ParametricChecker::set_valuation(std::span<const double> params) {
    for (const auto& d : dependent_) {
        double v = d.constant;
        for (const auto& [id, coef] : d.terms)
            v += coef * params[id];
        mdp_.probability[d.entry] = v;
    }
}

McResult ParametricChecker::solve(double tol) const {
    constexpr int kBudget = 2000;
    auto r = spec_.is_reachability() ? extremal_reach(mdp_, seeds_, opt_, tol, kBudget)
                                     : extremal_cost(mdp_, seeds_, opt_, tol, kBudget);
    return r.converged ? r : certify(&r);
}

McResult ParametricChecker::certify(const McResult* hint) const {
    std::span<const std::uint32_t> h;
    if (hint)
        h = hint->strategy;
    return spec_.is_reachability() ? certify_reach(mdp_, seeds_, opt_, h) : certify_cost(mdp_, seeds_, opt_, h);
}

} // namespace paramsynth
