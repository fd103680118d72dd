#include "paramsynth/model.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <unordered_map>

namespace paramsynth {

UnboundParameter::UnboundParameter(ParamId id)
    : std::runtime_error(fmt::format("parameter #{} has no value", id)), parameter(id) {}

const Rational* Instantiation::find(ParamId id) const {
    auto it = values_.find(id);
    return it == values_.end() ? nullptr : &it->second;
}

const Rational& Instantiation::at(ParamId id) const {
    if (auto* v = find(id))
        return *v;
    throw UnboundParameter(id);
}

std::vector<double> Instantiation::to_doubles(std::size_t count) const {
    std::vector<double> out(count);
    for (ParamId i = 0; i < count; ++i)
        out[i] = to_double(at(i));
    return out;
}

AffineExpr AffineExpr::parameter(ParamId id, const Rational& coefficient) {
    AffineExpr e;
    e.add_coefficient(id, coefficient);
    return e;
}

Rational AffineExpr::coefficient(ParamId id) const {
    auto it = coefficients_.find(id);
    return it == coefficients_.end() ? Rational(0) : it->second;
}

void AffineExpr::add_coefficient(ParamId id, const Rational& value) {
    if (value == 0)
        return;
    auto [it, inserted] = coefficients_.emplace(id, value);
    if (!inserted) {
        it->second += value;
        if (it->second == 0)
            coefficients_.erase(it);
    }
}

Rational AffineExpr::evaluate(const Instantiation& u) const {
    Rational sum = constant_;
    for (const auto& [id, coef] : coefficients_)
        sum += coef * u.at(id);
    return sum;
}

double AffineExpr::evaluate(std::span<const double> params) const {
    double sum = to_double(constant_);
    for (const auto& [id, coef] : coefficients_)
        sum += to_double(coef) * params[id];
    return sum;
}

AffineExpr& AffineExpr::operator+=(const AffineExpr& other) {
    constant_ += other.constant_;
    for (const auto& [id, coef] : other.coefficients_)
        add_coefficient(id, coef);
    return *this;
}

AffineExpr& AffineExpr::operator-=(const AffineExpr& other) {
    constant_ -= other.constant_;
    for (const auto& [id, coef] : other.coefficients_)
        add_coefficient(id, -coef);
    return *this;
}

AffineExpr& AffineExpr::operator*=(const Rational& factor) {
    if (factor == 0) {
        constant_ = 0;
        coefficients_.clear();
        return *this;
    }
    constant_ *= factor;
    for (auto& [id, coef] : coefficients_)
        coef *= factor;
    return *this;
}

bool AffineExpr::operator<(const AffineExpr& other) const {
    if (constant_ != other.constant_)
        return constant_ < other.constant_;
    return coefficients_ < other.coefficients_;
}

Rational evaluate_affine(const AffineExpr& expr, const Instantiation& u) { return expr.evaluate(u); }

std::size_t Pmdp::num_choices() const {
    std::size_t n = 0;
    for (const auto& cs : choices)
        n += cs.size();
    return n;
}

std::size_t Pmdp::num_transitions() const {
    std::size_t n = 0;
    for (const auto& cs : choices)
        for (const auto& c : cs)
            n += c.transitions.size();
    return n;
}

bool Pmdp::has_costs() const {
    for (const auto& cs : choices)
        for (const auto& c : cs)
            if (c.cost)
                return true;
    return false;
}

std::optional<StateId> Pmdp::find_state(std::string_view name) const {
    auto it = std::find(state_names.begin(), state_names.end(), name);
    if (it == state_names.end())
        return std::nullopt;
    return static_cast<StateId>(it - state_names.begin());
}

std::optional<ParamId> Pmdp::find_parameter(std::string_view name) const {
    for (ParamId i = 0; i < parameters.size(); ++i)
        if (parameters[i].name == name)
            return i;
    return std::nullopt;
}

void Pmdp::validate() const {
    const auto n = num_states();
    if (n == 0)
        throw ModelError("model has no states");
    if (choices.size() != n || targets.size() != n)
        throw ModelError("per-state tables do not match the number of states");
    if (initial >= n)
        throw ModelError("initial state out of range");

    std::unordered_map<std::string_view, int> seen;
    for (const auto& p : parameters) {
        if (p.name.empty())
            throw ModelError("parameter with empty name");
        if (seen[p.name]++)
            throw ModelError(fmt::format("parameter '{}' declared twice", p.name));
        if (p.bounds.lo && p.bounds.hi && *p.bounds.lo > *p.bounds.hi)
            throw ModelError(fmt::format("parameter '{}' has an empty box", p.name));
    }

    for (StateId s = 0; s < n; ++s) {
        if (choices[s].empty())
            throw ModelError(fmt::format("state '{}' has no enabled actions", state_names[s]));
        if (kind == ModelKind::pmc && choices[s].size() != 1)
            throw ModelError(fmt::format("pMC state '{}' has {} actions", state_names[s], choices[s].size()));
        for (const auto& c : choices[s]) {
            if (c.transitions.empty())
                throw ModelError(fmt::format("action '{}' of state '{}' has no transitions", c.action,
                                             state_names[s]));
            AffineExpr sum;
            std::vector<StateId> succ;
            for (const auto& t : c.transitions) {
                if (t.target >= n)
                    throw ModelError(fmt::format("transition from '{}' to unknown state", state_names[s]));
                for (const auto& [id, coef] : t.probability.coefficients())
                    if (id >= parameters.size())
                        throw ModelError(fmt::format("transition from '{}' uses undeclared parameter #{}",
                                                     state_names[s], id));
                if (t.probability.is_zero())
                    throw ModelError(fmt::format("transition {} -> {} is identically zero", state_names[s],
                                                 state_names[t.target]));
                sum += t.probability;
                succ.push_back(t.target);
            }
            std::sort(succ.begin(), succ.end());
            if (std::adjacent_find(succ.begin(), succ.end()) != succ.end())
                throw ModelError(fmt::format("duplicate successor in action '{}' of state '{}'", c.action,
                                             state_names[s]));
            if (!sum.is_one())
                throw ModelError(fmt::format("row of state '{}' action '{}' does not sum to 1 identically",
                                             state_names[s], c.action));
            if (c.cost && *c.cost < 0)
                throw ModelError(fmt::format("negative cost at state '{}'", state_names[s]));
        }
    }
}

ConcreteMdp instantiate(const Pmdp& m, const Instantiation& u) {
    ConcreteMdp out;
    out.initial = m.initial;
    out.state_begin.reserve(m.num_states() + 1);
    out.state_begin.push_back(0);
    out.choice_begin.push_back(0);
    for (const auto& cs : m.choices) {
        for (const auto& c : cs) {
            for (const auto& t : c.transitions) {
                out.column.push_back(t.target);
                out.probability.push_back(to_double(t.probability.evaluate(u)));
            }
            out.choice_begin.push_back(out.column.size());
            out.cost.push_back(c.cost ? to_double(*c.cost) : 0.0);
        }
        out.state_begin.push_back(out.choice_begin.size() - 1);
    }
    return out;
}

WellDefinedness check_well_defined(const Pmdp& m, const Instantiation& u, const Rational& eps_graph) {
    WellDefinedness result;
    for (StateId s = 0; s < m.num_states(); ++s) {
        for (std::uint32_t a = 0; a < m.choices[s].size(); ++a) {
            Rational sum = 0;
            for (const auto& t : m.choices[s][a].transitions) {
                Rational value = t.probability.evaluate(u);
                sum += value;
                if (value < eps_graph)
                    result.violations.push_back({s, a, t.target, value});
            }
            if (sum != 1)
                result.violations.push_back({s, a, std::nullopt, sum});
        }
    }
    result.ok = result.violations.empty();
    return result;
}

Rational box_minimum(const AffineExpr& expr, std::span<const Parameter> params) {
    Rational total = expr.constant();
    for (const auto& [id, coef] : expr.coefficients()) {
        const auto& box = params[id].bounds;
        if (!box.bounded())
            throw ModelError(fmt::format("parameter '{}' has an unbounded box", params[id].name));
        total += std::min(coef * *box.lo, coef * *box.hi);
    }
    return total;
}

bool well_definedness_is_universal(const Pmdp& m, const Rational& eps_graph) {
    for (const auto& p : m.parameters)
        if (!p.bounds.bounded())
            throw ModelError(fmt::format("parameter '{}' has an unbounded box", p.name));
    for (const auto& cs : m.choices)
        for (const auto& c : cs)
            for (const auto& t : c.transitions)
                if (box_minimum(t.probability, m.parameters) < eps_graph)
                    return false;
    return true;
}

std::string describe(const Pmdp& m, const Violation& v) {
    const auto& c = m.choices[v.state][v.choice];
    auto where = c.action.empty() ? m.state_names[v.state] : fmt::format("{}, {}", m.state_names[v.state], c.action);
    if (v.target)
        return fmt::format("P({}, {}) = {} is below eps_graph", where, m.state_names[*v.target], to_string(v.value));
    return fmt::format("row ({}) sums to {}", where, to_string(v.value));
}

std::string Specification::to_string() const {
    return fmt::format("{}{}{}", kind == SpecKind::reach_probability ? "P" : "E",
                       direction == Direction::at_most ? "<=" : ">=", paramsynth::to_string(threshold));
}

Interval default_box(const Rational& eps_graph) { return Interval{eps_graph, Rational(1) - eps_graph}; }

} // namespace paramsynth
