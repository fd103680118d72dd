#pragma once

#include "paramsynth/encode.hpp"
#include "paramsynth/mc.hpp"
#include "paramsynth/model.hpp"
#include "paramsynth/qp.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace paramsynth {

enum class TauSchedule { additive, multiplicative };

struct CcpConfig {
    /// Unset means 0.05 for reachability and 5 for expected cost.
    std::optional<double> tau0;
    double tau_max = 1e4;
    TauSchedule schedule = TauSchedule::additive;
    /// Growth factor for the multiplicative schedule.
    double tau_factor = 1.5;
    Rational eps_graph{1, 100000};
    int max_iterations = 100;
    double penalty_tol = 1e-8;
    int restarts = 3;
    SplitMethod split = SplitMethod::bilinear;
    double mc_tol = kDefaultMcTolerance;
    /// Re-anchor p at the model-checked values and stop as soon as the
    /// candidate checks. Without it only a zero penalty ends the loop.
    bool mc_feedback = true;
    /// Refresh the convex program in place and warm start the solver;
    /// otherwise rebuild and cold start every iteration.
    bool incremental = true;
    std::uint64_t seed = 0;
    SolverOptions solver;
    /// One line per iteration when set.
    std::ostream* progress = nullptr;

    /// Throws std::invalid_argument on a bad combination.
    void validate() const;
    double initial_tau(const Specification& spec) const;
};

enum class SynthesisStatus { feasible, exhausted, infeasible_instance };

std::string to_string(SynthesisStatus status);

struct IterationRecord {
    int restart = 0;
    int iteration = 0; ///< within the restart, 1-based
    double tau = 0;
    double penalty = 0;
    double value = 0; ///< model-checked value at the candidate
    SolveStatus solve = SolveStatus::optimal;
    int solver_iterations = 0;
};

struct SynthesisResult {
    SynthesisStatus status = SynthesisStatus::exhausted;
    std::optional<Instantiation> instantiation;
    std::optional<double> certified_value;
    /// Best (closest to the threshold) model-checked value seen.
    std::optional<double> best_value;
    std::optional<Instantiation> best_instantiation;
    int iterations = 0;
    int restarts = 0;
    double solver_seconds = 0;
    double encode_seconds = 0; ///< building or refreshing convex programs
    double total_seconds = 0;
    std::vector<IterationRecord> trace;
    std::string note;

    double solver_fraction() const { return total_seconds > 0 ? solver_seconds / total_seconds : 0.0; }
};

/// Centre of the box for the parameters and the threshold for every free
/// value variable, laid out like the encoded program.
std::vector<double> initial_anchor(const QcqpProblem& qcqp, const Specification& spec);

/// Penalty convex-concave procedure with model checking in the loop.
/// Throws InfeasibleCost from the graph analysis and std::invalid_argument
/// for a bad configuration.
SynthesisResult synthesize(const Pmdp& m, const Specification& spec, const CcpConfig& config = {});

} // namespace paramsynth
