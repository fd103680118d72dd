#pragma once

#include "paramsynth/rational.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace paramsynth {

using StateId = std::uint32_t;
using ParamId = std::uint32_t;

/// Per-state membership flags.
using StateSet = std::vector<bool>;

class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UnboundParameter : public std::runtime_error {
public:
    explicit UnboundParameter(ParamId id);
    ParamId parameter;
};

/// Assignment of rational values to parameters.
class Instantiation {
public:
    Instantiation() = default;
    explicit Instantiation(std::map<ParamId, Rational> values) : values_(std::move(values)) {}

    void set(ParamId id, Rational value) { values_[id] = std::move(value); }
    const Rational* find(ParamId id) const;
    const Rational& at(ParamId id) const;
    bool contains(ParamId id) const { return values_.count(id) != 0; }
    std::size_t size() const { return values_.size(); }
    const std::map<ParamId, Rational>& values() const { return values_; }

    /// Double-precision view indexed by parameter id; throws if not total on [0, count).
    std::vector<double> to_doubles(std::size_t count) const;

    bool operator==(const Instantiation&) const = default;

private:
    std::map<ParamId, Rational> values_;
};

/// constant + sum_i coef_i * param_i, kept canonical (no zero coefficients).
class AffineExpr {
public:
    AffineExpr() = default;
    explicit AffineExpr(Rational constant) : constant_(std::move(constant)) {}
    static AffineExpr parameter(ParamId id, const Rational& coefficient = 1);

    const Rational& constant() const { return constant_; }
    const std::map<ParamId, Rational>& coefficients() const { return coefficients_; }
    Rational coefficient(ParamId id) const;

    bool is_constant() const { return coefficients_.empty(); }
    bool is_zero() const { return coefficients_.empty() && constant_ == 0; }
    bool is_one() const { return coefficients_.empty() && constant_ == 1; }

    /// Exact value; throws UnboundParameter if a parameter is missing.
    Rational evaluate(const Instantiation& u) const;
    /// Floating-point value; `params` indexed by parameter id.
    double evaluate(std::span<const double> params) const;

    AffineExpr& operator+=(const AffineExpr& other);
    AffineExpr& operator-=(const AffineExpr& other);
    AffineExpr& operator*=(const Rational& factor);
    friend AffineExpr operator+(AffineExpr a, const AffineExpr& b) { return a += b; }
    friend AffineExpr operator-(AffineExpr a, const AffineExpr& b) { return a -= b; }
    friend AffineExpr operator*(AffineExpr a, const Rational& k) { return a *= k; }
    friend AffineExpr operator*(const Rational& k, AffineExpr a) { return a *= k; }

    bool operator==(const AffineExpr&) const = default;
    /// Arbitrary total order, used for deduplication.
    bool operator<(const AffineExpr& other) const;

private:
    void add_coefficient(ParamId id, const Rational& value);

    Rational constant_{0};
    std::map<ParamId, Rational> coefficients_;
};

Rational evaluate_affine(const AffineExpr& expr, const Instantiation& u);

/// Closed interval; a missing end is unbounded.
struct Interval {
    std::optional<Rational> lo;
    std::optional<Rational> hi;

    bool bounded() const { return lo.has_value() && hi.has_value(); }
    bool contains(const Rational& x) const { return (!lo || *lo <= x) && (!hi || x <= *hi); }
    bool operator==(const Interval&) const = default;
};

struct Parameter {
    std::string name;
    Interval bounds;
    bool operator==(const Parameter&) const = default;
};

struct Transition {
    StateId target = 0;
    AffineExpr probability;
    bool operator==(const Transition&) const = default;
};

/// One enabled action of a state: its distribution row and optional cost.
struct Choice {
    std::string action;
    std::vector<Transition> transitions;
    std::optional<Rational> cost;
    bool operator==(const Choice&) const = default;
};

enum class ModelKind { pmc, pmdp };

/// Affine parametric MDP. Build it, call validate(), then treat as immutable.
struct Pmdp {
    ModelKind kind = ModelKind::pmdp;
    std::vector<std::string> state_names;
    std::vector<Parameter> parameters;
    std::vector<std::vector<Choice>> choices; ///< indexed by state
    StateId initial = 0;
    StateSet targets;

    std::size_t num_states() const { return state_names.size(); }
    std::size_t num_parameters() const { return parameters.size(); }
    std::size_t num_choices() const;
    std::size_t num_transitions() const;
    bool has_costs() const;

    std::optional<StateId> find_state(std::string_view name) const;
    std::optional<ParamId> find_parameter(std::string_view name) const;

    /// Throws ModelError listing the first violated structural invariant:
    /// nonempty action sets, symbolic row sums identically one, known
    /// parameters and states, nonnegative costs, well-formed boxes.
    void validate() const;

    bool operator==(const Pmdp&) const = default;
};

/// Numeric MDP in compressed row form: state -> choices -> entries.
struct ConcreteMdp {
    std::vector<std::size_t> state_begin;  ///< size num_states + 1, indexes choices
    std::vector<std::size_t> choice_begin; ///< size num_choices + 1, indexes entries
    std::vector<StateId> column;
    std::vector<double> probability;
    std::vector<double> cost; ///< per choice, zero when absent
    StateId initial = 0;

    std::size_t num_states() const { return state_begin.empty() ? 0 : state_begin.size() - 1; }
    std::size_t num_choices() const { return choice_begin.empty() ? 0 : choice_begin.size() - 1; }
    std::size_t choices_of(StateId s) const { return state_begin[s + 1] - state_begin[s]; }
};

/// Numeric MDP for a total instantiation. Rows keep their order; costs are copied.
ConcreteMdp instantiate(const Pmdp& m, const Instantiation& u);

struct Violation {
    StateId state = 0;
    std::uint32_t choice = 0;
    std::optional<StateId> target; ///< nullopt for a row-sum violation
    Rational value;
};

struct WellDefinedness {
    bool ok = true;
    std::vector<Violation> violations;
};

/// Exact check that every instantiated entry is >= eps_graph and every row sums to one.
WellDefinedness check_well_defined(const Pmdp& m, const Instantiation& u, const Rational& eps_graph);

/// Minimum of an affine expression over the parameter box, coordinate-wise.
/// Throws ModelError if a parameter the expression uses is unbounded.
Rational box_minimum(const AffineExpr& expr, std::span<const Parameter> params);

/// True iff every transition entry stays >= eps_graph on the whole parameter box.
bool well_definedness_is_universal(const Pmdp& m, const Rational& eps_graph);

std::string describe(const Pmdp& m, const Violation& v);

enum class SpecKind { reach_probability, expected_cost };
enum class Direction { at_most, at_least };

/// `P<=x`, `P>=x`, `E<=x` or `E>=x`, referring to the model's target set.
struct Specification {
    SpecKind kind = SpecKind::reach_probability;
    Direction direction = Direction::at_most;
    Rational threshold{0};

    bool is_reachability() const { return kind == SpecKind::reach_probability; }
    bool upper_bound() const { return direction == Direction::at_most; }
    std::string to_string() const;
    bool operator==(const Specification&) const = default;
};

/// Default box used when a model omits bounds: [eps, 1 - eps].
Interval default_box(const Rational& eps_graph);

} // namespace paramsynth
