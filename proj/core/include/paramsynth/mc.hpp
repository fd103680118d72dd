#pragma once

#include "paramsynth/graph.hpp"
#include "paramsynth/model.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace paramsynth {

enum class Optimize { maximize, minimize };

/// Absolute slack used when comparing a certified value with a threshold.
inline constexpr double kCertificationSlack = 1e-6;
inline constexpr double kDefaultMcTolerance = 1e-8;
inline constexpr int kMaxSweeps = 1'000'000;

class InstanceTooLarge : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct McResult {
    std::vector<double> values;
    std::vector<std::uint32_t> strategy; ///< local choice index per state
    double residual = 0;
    int iterations = 0;
    bool converged = true; ///< false when the sweep budget ran out
};

/// Values that are fixed before iterating, derived from the support graph.
struct McSeeds {
    StateSet zero;     ///< value exactly 0
    StateSet one;      ///< value exactly 1 (reachability only)
    StateSet infinite; ///< expected cost +inf (cost only)
};

McSeeds reach_seeds(const SupportGraph& g, const StateSet& targets, Optimize opt);
McSeeds cost_seeds(const SupportGraph& g, const StateSet& goal);

/// Gauss-Seidel value iteration from the seeded vector until the sup-norm
/// change drops below `tol` and the geometric estimate of the remaining
/// error does too. Ties in the strategy go to the lowest choice.
McResult extremal_reach(const ConcreteMdp& mdp, const StateSet& targets, Optimize opt,
                        double tol = kDefaultMcTolerance);
McResult extremal_reach(const ConcreteMdp& mdp, const McSeeds& seeds, Optimize opt, double tol,
                        int max_sweeps = kMaxSweeps);

/// Expected total cost to reach `goal`; goal states have value 0. Throws
/// InfeasibleCost when some state reachable from the initial state does not
/// reach the goal almost surely under every strategy.
McResult extremal_cost(const ConcreteMdp& mdp, const StateSet& goal, Optimize opt,
                       double tol = kDefaultMcTolerance);
McResult extremal_cost(const ConcreteMdp& mdp, const McSeeds& seeds, Optimize opt, double tol,
                       int max_sweeps = kMaxSweeps);

/// Policy iteration where each induced chain is solved by a direct sparse LU
/// factorization. `hint` (e.g. the value-iteration strategy) seeds the policy.
McResult certify_reach(const ConcreteMdp& mdp, const McSeeds& seeds, Optimize opt,
                       std::span<const std::uint32_t> hint = {});
McResult certify_cost(const ConcreteMdp& mdp, const McSeeds& seeds, Optimize opt,
                      std::span<const std::uint32_t> hint = {});

/// Exact extremal value per state by enumerating all memoryless deterministic
/// strategies and solving each induced chain in rational arithmetic.
/// nullopt stands for an infinite expected cost. Throws InstanceTooLarge
/// beyond 2^20 strategies.
std::vector<std::optional<Rational>> brute_force_oracle(const ConcreteMdp& mdp, const StateSet& targets,
                                                        const Specification& spec);

/// Adversary the specification must hold against: maximizing for upper bounds.
Optimize adversary(const Specification& spec);

/// Threshold comparison with absolute slack.
bool satisfies(const Specification& spec, double value, double slack = kCertificationSlack);

struct CheckResult {
    bool holds = false;
    double value = 0;
};

/// Certified model check of M[u]; requires u to be well-defined.
CheckResult check(const Pmdp& m, const Instantiation& u, const Specification& spec,
                  double slack = kCertificationSlack);

/// Model checker for repeated instantiations of one pMDP. The numeric matrix is
/// built once; set_valuation only rewrites the parameter-dependent entries.
/// Not thread-safe; use one instance per thread.
class ParametricChecker {
public:
    ParametricChecker(const Pmdp& m, const Specification& spec);

    void set_valuation(std::span<const double> params);

    /// Fast value-iteration check; switches to policy iteration when the
    /// sweeps stall on slowly mixing cycles.
    McResult solve(double tol = kDefaultMcTolerance) const;
    /// Certified values via direct solves, seeded with `hint`'s strategy.
    McResult certify(const McResult* hint = nullptr) const;

    double initial_value(const McResult& r) const { return r.values[mdp_.initial]; }
    bool holds(double value, double slack = kCertificationSlack) const { return satisfies(spec_, value, slack); }

    const ConcreteMdp& mdp() const { return mdp_; }
    const McSeeds& seeds() const { return seeds_; }
    Optimize optimize() const { return opt_; }
    const Specification& spec() const { return spec_; }

private:
    struct Dependent {
        std::size_t entry;
        double constant;
        std::vector<std::pair<ParamId, double>> terms;
    };

    Specification spec_;
    Optimize opt_;
    ConcreteMdp mdp_;
    McSeeds seeds_;
    std::vector<Dependent> dependent_;
};

} // namespace paramsynth
