#include "paramsynth/encode.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace paramsynth {

namespace {

constexpr double kUnbounded = std::numeric_limits<double>::infinity();

/// Nearest double not below `x`.
double round_up(const Rational& x) {
    double d = to_double(x);
    if (Rational(d) < x)
        d = std::nextafter(d, kUnbounded);
    return d;
}

/// Nearest double not above `x`.
double round_down(const Rational& x) {
    double d = to_double(x);
    if (Rational(d) > x)
        d = std::nextafter(d, -kUnbounded);
    return d;
}

bool universal_or_unknown(const Pmdp& m, const Rational& eps) {
    try {
        return well_definedness_is_universal(m, eps);
    } catch (const ModelError&) {
        return false; // unbounded boxes: keep the explicit rows
    }
}

void merge_concave(std::vector<ConcaveTerm>& terms) {
    std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) { return a.var < b.var; });
    std::vector<ConcaveTerm> merged;
    for (const auto& t : terms) {
        if (!merged.empty() && merged.back().var == t.var)
            merged.back().weight += t.weight;
        else
            merged.push_back(t);
    }
    std::erase_if(merged, [](const auto& t) { return t.weight == 0; });
    terms = std::move(merged);
}

} // namespace

Nlp build_nlp(const Pmdp& m, const Specification& spec, const GraphAnalysis& analysis, const Rational& eps_graph) {
    Nlp nlp;
    nlp.spec = spec;
    nlp.eps_graph = eps_graph;
    const auto n = m.num_states();
    const bool reach = spec.is_reachability();
    auto& vs = nlp.vars;
    vs.state_variable.assign(n, std::nullopt);
    vs.fixed_value.assign(n, 0.0);

    double p_upper = 1.0;
    if (!reach)
        p_upper = spec.upper_bound() ? kUnbounded : std::max(10 * to_double(spec.threshold), 100.0);

    for (StateId s = 0; s < n; ++s) {
        bool fixed = !analysis.reachable[s] || m.targets[s];
        if (reach)
            fixed = fixed || analysis.prob0[s] || analysis.prob1[s];
        if (fixed) {
            vs.fixed_value[s] = reach && analysis.prob1[s] ? 1.0 : 0.0;
            continue;
        }
        vs.state_variable[s] = static_cast<std::uint32_t>(vs.vars.size());
        vs.vars.push_back({VarKind::probability, s, 0.0, p_upper});
    }
    vs.parameter_offset = static_cast<std::uint32_t>(vs.vars.size());
    for (ParamId i = 0; i < m.num_parameters(); ++i) {
        const auto& box = m.parameters[i].bounds;
        vs.vars.push_back({VarKind::parameter, i, box.lo ? round_up(*box.lo) : -kUnbounded,
                           box.hi ? round_down(*box.hi) : kUnbounded});
    }

    nlp.initial_variable = vs.state_variable[m.initial];
    nlp.initial_value = Rational(vs.fixed_value[m.initial]);

    if (!universal_or_unknown(m, eps_graph)) {
        std::set<AffineExpr> rows;
        for (const auto& cs : m.choices)
            for (const auto& c : cs)
                for (const auto& t : c.transitions)
                    if (!t.probability.is_constant())
                        rows.insert(t.probability);
        for (const auto& e : rows) {
            if (e.coefficients().size() != 1) {
                nlp.well_defined.push_back(e);
                continue;
            }
            // a*v + b >= eps becomes a bound on v
            const auto& [id, a] = *e.coefficients().begin();
            Rational bound = (eps_graph - e.constant()) / a;
            auto& var = vs.vars[vs.parameter_variable(id)];
            if (a > 0)
                var.lower = std::max(var.lower, round_up(bound));
            else
                var.upper = std::min(var.upper, round_down(bound));
        }
    }

    for (StateId s = 0; s < n; ++s) {
        if (!vs.state_variable[s])
            continue;
        for (std::uint32_t a = 0; a < m.choices[s].size(); ++a) {
            const auto& choice = m.choices[s][a];
            BellmanRow row;
            row.state = s;
            row.choice = a;
            row.variable = *vs.state_variable[s];
            if (!reach && choice.cost)
                row.cost = *choice.cost;
            for (const auto& t : choice.transitions) {
                SuccessorTerm term;
                term.probability = t.probability;
                term.variable = vs.state_variable[t.target];
                if (!term.variable)
                    term.fixed_value = Rational(vs.fixed_value[t.target]);
                row.successors.push_back(std::move(term));
            }
            nlp.bellman.push_back(std::move(row));
        }
    }
    return nlp;
}

QcqpProblem nlp_to_qcqp(const Nlp& nlp, const Pmdp& m) {
    QcqpProblem out;
    out.spec = nlp.spec;
    out.vars = nlp.vars;
    const auto& vs = nlp.vars;
    auto& prog = out.program;
    const double sign = nlp.spec.upper_bound() ? 1.0 : -1.0;

    for (const auto& v : vs.vars) {
        prog.lower.push_back(v.lower);
        prog.upper.push_back(v.upper);
        prog.names.push_back(v.kind == VarKind::parameter ? m.parameters[v.source].name
                                                          : "p_" + m.state_names[v.source]);
    }

    if (nlp.initial_variable)
        prog.objective.push_back({*nlp.initial_variable, sign});
    else
        prog.objective_constant = sign * to_double(nlp.initial_value);

    // sign * (cost + sum P(s,a,t) * x_t - p_s) <= 0
    for (const auto& row : nlp.bellman) {
        QuadConstraint c;
        AffineExpr affine(row.cost); // parameter-linear and constant part
        std::map<std::uint32_t, Rational> linear;
        for (const auto& t : row.successors) {
            if (!t.variable) {
                affine += t.probability * t.fixed_value;
                continue;
            }
            linear[*t.variable] += t.probability.constant();
            for (const auto& [id, coef] : t.probability.coefficients())
                add_product(c, vs.parameter_variable(id), *t.variable, sign * to_double(coef));
        }
        linear[row.variable] -= 1;
        for (const auto& [var, coef] : linear)
            add_linear(c, var, sign * to_double(coef));
        for (const auto& [id, coef] : affine.coefficients())
            add_linear(c, vs.parameter_variable(id), sign * to_double(coef));
        c.constant = sign * to_double(affine.constant());
        canonicalize(c);
        prog.constraints.push_back(std::move(c));
        out.origins.push_back({RowKind::bellman, row.state, row.choice});
    }

    // eps - f(v) <= 0
    for (const auto& e : nlp.well_defined) {
        QuadConstraint c;
        for (const auto& [id, coef] : e.coefficients())
            add_linear(c, vs.parameter_variable(id), -to_double(coef));
        c.constant = to_double(nlp.eps_graph - e.constant());
        canonicalize(c);
        prog.constraints.push_back(std::move(c));
        out.origins.push_back({RowKind::well_defined, 0, 0});
    }

    if (nlp.initial_variable) {
        QuadConstraint c;
        add_linear(c, *nlp.initial_variable, sign);
        c.constant = -sign * to_double(nlp.spec.threshold);
        prog.constraints.push_back(std::move(c));
        out.origins.push_back({RowKind::threshold, m.initial, 0});
    }
    return out;
}

double DcProblem::split_value(std::size_t i, std::span<const double> x) const {
    const auto& c = constraints[i];
    double v = c.convex.value(x);
    for (const auto& t : c.concave)
        v -= t.weight * x[t.var] * x[t.var];
    return v;
}

double gershgorin_bound(const QuadConstraint& c) {
    double best = 0, row_sum = 0;
    std::optional<std::uint32_t> row;
    for (const auto& t : c.quad) { // sorted by row
        if (row != t.row) {
            best = std::max(best, row_sum);
            row_sum = 0;
            row = t.row;
        }
        row_sum += std::abs(t.value);
    }
    return std::max(best, row_sum);
}

namespace {

DcProblem split_frame(const QcqpProblem& qcqp, SplitMethod method) {
    DcProblem dc;
    dc.qcqp = qcqp;
    dc.method = method;
    dc.constraints.reserve(qcqp.program.constraints.size());
    for (std::size_t i = 0; i < qcqp.program.constraints.size(); ++i) {
        DcConstraint d;
        d.convex.linear = qcqp.program.constraints[i].linear;
        d.convex.constant = qcqp.program.constraints[i].constant;
        d.convex.sense = qcqp.program.constraints[i].sense;
        d.penalized = qcqp.origins[i].kind == RowKind::bellman;
        dc.constraints.push_back(std::move(d));
    }
    return dc;
}

} // namespace

DcProblem dc_split_eigen(const QcqpProblem& qcqp, std::optional<double> shift) {
    auto dc = split_frame(qcqp, SplitMethod::eigen);
    for (std::size_t i = 0; i < dc.constraints.size(); ++i) {
        const auto& original = qcqp.program.constraints[i];
        auto& d = dc.constraints[i];
        if (original.quad.empty())
            continue;
        const double t = shift ? *shift : gershgorin_bound(original);
        d.convex.quad = original.quad;
        for (auto var : original.support()) {
            bool in_p = std::any_of(original.quad.begin(), original.quad.end(),
                                    [var](const QuadTerm& q) { return q.row == var; });
            if (!in_p)
                continue;
            d.convex.quad.push_back({var, var, t});
            d.concave.push_back({var, t});
        }
        auto linear = d.convex.linear;
        canonicalize(d.convex);
        d.convex.linear = std::move(linear);
        merge_concave(d.concave);
    }
    return dc;
}

DcProblem dc_split_bilinear(const QcqpProblem& qcqp) {
    auto dc = split_frame(qcqp, SplitMethod::bilinear);
    for (std::size_t i = 0; i < dc.constraints.size(); ++i) {
        const auto& original = qcqp.program.constraints[i];
        auto& d = dc.constraints[i];
        for (const auto& q : original.quad) {
            if (q.row == q.col) {
                if (q.value > 0)
                    d.convex.quad.push_back(q);
                else
                    d.concave.push_back({q.row, -q.value});
                continue;
            }
            if (q.row > q.col)
                continue; // mirrored cell, handled with its twin
            // 2c*y*z with c = q.value
            const double c = q.value, w = std::abs(c);
            d.convex.quad.push_back({q.row, q.row, w});
            d.convex.quad.push_back({q.col, q.col, w});
            d.convex.quad.push_back({q.row, q.col, c});
            d.convex.quad.push_back({q.col, q.row, c});
            d.concave.push_back({q.row, w});
            d.concave.push_back({q.col, w});
        }
        auto linear = d.convex.linear;
        canonicalize(d.convex);
        d.convex.linear = std::move(linear);
        merge_concave(d.concave);
    }
    return dc;
}

DcProblem dc_split(const QcqpProblem& qcqp, SplitMethod method) {
    return method == SplitMethod::eigen ? dc_split_eigen(qcqp) : dc_split_bilinear(qcqp);
}

double ConvexifiedProgram::penalty_sum(std::span<const double> x) const {
    double total = 0;
    for (auto k : penalty_variables)
        total += x[k];
    return total;
}

ConvexifiedProgram convexify(const DcProblem& dc, std::span<const double> anchor, double tau) {
    ConvexifiedProgram out;
    auto& prog = out.program;
    const auto& base = dc.qcqp.program;
    prog.lower = base.lower;
    prog.upper = base.upper;
    prog.names = base.names;
    prog.objective = base.objective;
    prog.objective_constant = base.objective_constant;

    for (std::uint32_t i = 0; i < dc.constraints.size(); ++i) {
        const auto& d = dc.constraints[i];
        QuadConstraint c;
        c.quad = d.convex.quad;
        c.sense = d.convex.sense;
        c.linear = d.convex.linear;
        for (const auto& t : d.concave) {
            auto it = std::find_if(c.linear.begin(), c.linear.end(), [&](const auto& l) { return l.var == t.var; });
            if (it == c.linear.end())
                c.linear.push_back({t.var, 0.0}); // slot kept even when the tangent term vanishes
        }
        if (d.penalized) {
            auto k = static_cast<std::uint32_t>(prog.lower.size());
            prog.lower.push_back(0.0);
            prog.upper.push_back(kUnbounded);
            const auto& origin = dc.qcqp.origins[i];
            prog.names.push_back(fmt::format("k_{}_{}", origin.state, origin.choice));
            out.penalty_variables.push_back(k);
            c.linear.push_back({k, -1.0});
        }
        std::sort(c.linear.begin(), c.linear.end(), [](const auto& a, const auto& b) { return a.var < b.var; });
        for (const auto& t : d.concave) {
            auto it = std::lower_bound(c.linear.begin(), c.linear.end(), t.var,
                                       [](const LinearTerm& l, std::uint32_t v) { return l.var < v; });
            auto original = std::find_if(d.convex.linear.begin(), d.convex.linear.end(),
                                         [&](const auto& l) { return l.var == t.var; });
            double q = original == d.convex.linear.end() ? 0.0 : original->coef;
            out.slots.push_back({i, static_cast<std::uint32_t>(it - c.linear.begin()), t.var, q, t.weight});
        }
        out.base_constant.push_back(d.convex.constant);
        prog.constraints.push_back(std::move(c));
    }
    for (auto k : out.penalty_variables) {
        out.objective_penalty_position.push_back(static_cast<std::uint32_t>(prog.objective.size()));
        prog.objective.push_back({k, 0.0});
    }
    refresh(out, anchor, tau);
    return out;
}

void refresh(ConvexifiedProgram& prog, std::span<const double> anchor, double tau) {
    const auto expected = prog.program.num_variables() - prog.penalty_variables.size();
    if (anchor.size() != expected)
        throw std::invalid_argument(
            fmt::format("anchor has {} entries, program expects {}", anchor.size(), expected));
    prog.anchor.assign(anchor.begin(), anchor.end());
    prog.tau = tau;
    auto& cons = prog.program.constraints;
    for (std::size_t i = 0; i < cons.size(); ++i)
        cons[i].constant = prog.base_constant[i];
    // g(x^) + grad g(x^)(x - x^) = sum d (2 x^ x - x^^2)
    for (const auto& s : prog.slots) {
        const double a = anchor[s.var];
        cons[s.constraint].linear[s.position].coef = s.base - 2 * s.weight * a;
        cons[s.constraint].constant += s.weight * a * a;
    }
    for (auto pos : prog.objective_penalty_position)
        prog.program.objective[pos].coef = tau;
}

} // namespace paramsynth
