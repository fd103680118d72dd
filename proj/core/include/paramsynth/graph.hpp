#pragma once

#include "paramsynth/model.hpp"

#include <stdexcept>

namespace paramsynth {

/// Expected-cost specification whose goal set is not reached almost surely.
class InfeasibleCost : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Successor structure of a model, ignoring probabilities.
struct SupportGraph {
    std::vector<std::size_t> state_begin;  ///< indexes choices
    std::vector<std::size_t> choice_begin; ///< indexes successors
    std::vector<StateId> successor;
    std::vector<std::size_t> choice_state;

    /// Reverse edges at choice granularity: pred_begin[t]..pred_begin[t+1]
    /// indexes pred_choice, the choices having t as successor.
    std::vector<std::size_t> pred_begin;
    std::vector<std::size_t> pred_choice;

    static SupportGraph of(const Pmdp& m);
    /// Entries with probability > 0 only.
    static SupportGraph of(const ConcreteMdp& mdp);

    std::size_t num_states() const { return state_begin.size() - 1; }
};

StateSet reachable_from(const SupportGraph& g, StateId initial);
/// States whose maximal probability of reaching `targets` is 0.
StateSet prob0_max(const SupportGraph& g, const StateSet& targets);
/// States whose minimal probability of reaching `targets` is 0.
StateSet prob0_min(const SupportGraph& g, const StateSet& targets);
/// States that reach `targets` with probability 1 under every strategy.
StateSet prob1_all(const SupportGraph& g, const StateSet& targets);

struct GraphAnalysis {
    StateSet prob0;
    StateSet prob1;
    StateSet reachable;
};

/// Parameter-independent preprocessing; valid because instantiations are
/// graph-preserving. For at-most reachability prob0 uses the maximizing
/// adversary, for at-least the minimizing one; prob1 always means "value 1
/// under all strategies". For expected cost, throws InfeasibleCost unless every
/// reachable state reaches the goal set almost surely.
GraphAnalysis analyze(const Pmdp& m, const Specification& spec);

std::size_t count(const StateSet& set);

} // namespace paramsynth
