#pragma once

#include "paramsynth/graph.hpp"
#include "paramsynth/model.hpp"
#include "paramsynth/quadratic.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace paramsynth {

enum class VarKind { probability, parameter, penalty };

struct VariableInfo {
    VarKind kind = VarKind::probability;
    std::uint32_t source = 0; ///< state, parameter or row id
    double lower = 0;
    double upper = 0;
};

/// Layout: free-state value variables, then parameters, then (after
/// convexification) one penalty per Bellman row.
struct VariableSpace {
    std::vector<VariableInfo> vars;
    std::vector<std::optional<std::uint32_t>> state_variable; ///< nullopt for fixed states
    std::vector<double> fixed_value;                          ///< value of fixed states
    std::uint32_t parameter_offset = 0;

    std::size_t size() const { return vars.size(); }
    std::size_t num_parameters() const { return vars.size() - parameter_offset; }
    std::uint32_t parameter_variable(ParamId id) const { return parameter_offset + id; }
};

/// P(s,a,t) times either a variable or a known value.
struct SuccessorTerm {
    AffineExpr probability;
    std::optional<std::uint32_t> variable;
    Rational fixed_value{0};
};

struct BellmanRow {
    StateId state = 0;
    std::uint32_t choice = 0;
    std::uint32_t variable = 0; ///< value variable of `state`
    Rational cost{0};
    std::vector<SuccessorTerm> successors;
};

/// Symbolic synthesis program before lowering. Every affine entry in
/// `well_defined` must stay >= eps_graph.
struct Nlp {
    Specification spec;
    VariableSpace vars;
    Rational eps_graph{0};
    std::optional<std::uint32_t> initial_variable;
    Rational initial_value{0}; ///< when the initial state is fixed
    std::vector<BellmanRow> bellman;
    std::vector<AffineExpr> well_defined;
};

/// Parameter-independent facts gathered while encoding.
Nlp build_nlp(const Pmdp& m, const Specification& spec, const GraphAnalysis& analysis, const Rational& eps_graph);

enum class RowKind { bellman, well_defined, threshold };

struct RowOrigin {
    RowKind kind = RowKind::bellman;
    StateId state = 0;
    std::uint32_t choice = 0;
};

/// Standard-form program: objective is p_init (at-most) or -p_init (at-least).
struct QcqpProblem {
    Specification spec;
    VariableSpace vars;
    QuadProgram program;
    std::vector<RowOrigin> origins; ///< parallel to program.constraints
};

QcqpProblem nlp_to_qcqp(const Nlp& nlp, const Pmdp& m);

enum class SplitMethod { bilinear, eigen };

/// Concave part g(x) = sum weight * x_var^2 (diagonal in both splits).
struct ConcaveTerm {
    std::uint32_t var = 0;
    double weight = 0;
    bool operator==(const ConcaveTerm&) const = default;
};

/// original(x) = convex(x) - g(x)
struct DcConstraint {
    QuadConstraint convex;
    std::vector<ConcaveTerm> concave; ///< sorted by var
    bool penalized = false;
};

struct DcProblem {
    QcqpProblem qcqp; ///< source program, with the original constraints
    SplitMethod method = SplitMethod::bilinear;
    std::vector<DcConstraint> constraints;

    double original_value(std::size_t i, std::span<const double> x) const {
        return qcqp.program.constraints[i].value(x);
    }
    double split_value(std::size_t i, std::span<const double> x) const;
};

/// Largest absolute row sum of P restricted to its support.
double gershgorin_bound(const QuadConstraint& c);

/// P+ = P + tI on the support of P, P- = tI. `shift` overrides the
/// Gershgorin choice of t.
DcProblem dc_split_eigen(const QcqpProblem& qcqp, std::optional<double> shift = std::nullopt);
/// Each 2c*y*z becomes c(y+z)^2 - c(y^2+z^2) for c > 0 and
/// |c|(y-z)^2 - |c|(y^2+z^2) for c < 0.
DcProblem dc_split_bilinear(const QcqpProblem& qcqp);
DcProblem dc_split(const QcqpProblem& qcqp, SplitMethod method);

/// Convex program with the concave parts replaced by their tangents at
/// `anchor`, one penalty variable per Bellman row and objective
/// +-p_init + tau * sum k.
struct ConvexifiedProgram {
    QuadProgram program;
    std::vector<double> anchor;
    double tau = 0;
    std::vector<std::uint32_t> penalty_variables;

    struct Slot {
        std::uint32_t constraint;
        std::uint32_t position; ///< index into constraint.linear
        std::uint32_t var;
        double base;   ///< q entry before linearization
        double weight; ///< concave weight d
    };
    std::vector<Slot> slots;
    std::vector<double> base_constant; ///< r per constraint before linearization
    std::vector<std::uint32_t> objective_penalty_position;

    double penalty_sum(std::span<const double> x) const;
};

ConvexifiedProgram convexify(const DcProblem& dc, std::span<const double> anchor, double tau);
/// Rewrites the tangent coefficients and tau in place. Throws
/// std::invalid_argument on an anchor of the wrong size.
void refresh(ConvexifiedProgram& prog, std::span<const double> anchor, double tau);

} // namespace paramsynth
