#pragma once

#include "paramsynth/quadratic.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace paramsynth {

enum class SolveStatus { optimal, max_iter, numerical_failure, infeasible };

std::string to_string(SolveStatus status);

struct SolverOptions {
    double feasibility_tol = 1e-8;
    double gap_tol = 1e-8;
    int max_iterations = 200;
    int restarts = 2; ///< perturbed restarts after a numerical failure
    double step_fraction = 0.99;
    /// Lower limit on slacks and multipliers taken from a warm start.
    double warm_floor = 1e-4;
};

struct SolveReport {
    SolveStatus status = SolveStatus::numerical_failure;
    std::vector<double> x;
    double objective = 0;
    int iterations = 0;
    double primal_residual = 0;
    double dual_residual = 0;
    double gap = 0;

    /// Interior-point state, reused by warm starts. Inequalities are the
    /// program's `<=` rows followed by finite bounds (lower, then upper, per variable).
    std::vector<double> slack;
    std::vector<double> multiplier;
    std::vector<double> equality_multiplier;
};

/// Backend seam for convex programs with a linear objective.
class ConvexSolver {
public:
    virtual ~ConvexSolver() = default;
    /// `warm` may carry only `x` (a starting point) or a full previous state.
    virtual SolveReport solve(const QuadProgram& program, const SolveReport* warm = nullptr) = 0;
};

/// Primal-dual interior point method with Mehrotra correction. The KKT
/// system is assembled as a quasi-definite matrix and factorized with a
/// sparse LDL'; its symbolic analysis is kept while the problem structure
/// does not change. Every `<=` row must be convex; `==` rows must be affine.
class InteriorPointSolver final : public ConvexSolver {
public:
    explicit InteriorPointSolver(SolverOptions options = {});
    ~InteriorPointSolver() override;
    InteriorPointSolver(InteriorPointSolver&&) noexcept;
    InteriorPointSolver& operator=(InteriorPointSolver&&) noexcept;

    SolveReport solve(const QuadProgram& program, const SolveReport* warm = nullptr) override;

    const SolverOptions& options() const { return options_; }
    /// Number of symbolic factorizations done so far.
    int analyses() const;

private:
    struct Workspace;
    SolverOptions options_;
    std::unique_ptr<Workspace> work_;
};

} // namespace paramsynth
