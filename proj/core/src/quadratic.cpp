#include "paramsynth/quadratic.hpp"

#include "paramsynth/rational.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace paramsynth {

double QuadConstraint::value(std::span<const double> x) const {
    double v = constant;
    for (const auto& t : quad)
        v += t.value * x[t.row] * x[t.col];
    for (const auto& t : linear)
        v += t.coef * x[t.var];
    return v;
}

void QuadConstraint::add_gradient(std::span<const double> x, double weight, std::span<double> grad) const {
    for (const auto& t : quad) {
        grad[t.row] += weight * t.value * x[t.col];
        grad[t.col] += weight * t.value * x[t.row];
    }
    for (const auto& t : linear)
        grad[t.var] += weight * t.coef;
}

std::vector<std::uint32_t> QuadConstraint::support() const {
    std::vector<std::uint32_t> vars;
    vars.reserve(quad.size() + linear.size());
    for (const auto& t : quad)
        vars.push_back(t.row);
    for (const auto& t : linear)
        vars.push_back(t.var);
    std::sort(vars.begin(), vars.end());
    vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
    return vars;
}

void add_product(QuadConstraint& c, std::uint32_t a, std::uint32_t b, double coef) {
    if (a == b) {
        c.quad.push_back({a, a, coef});
        return;
    }
    c.quad.push_back({a, b, coef / 2});
    c.quad.push_back({b, a, coef / 2});
}

void add_linear(QuadConstraint& c, std::uint32_t var, double coef) { c.linear.push_back({var, coef}); }

void canonicalize(QuadConstraint& c) {
    std::sort(c.quad.begin(), c.quad.end(),
              [](const QuadTerm& a, const QuadTerm& b) { return std::tie(a.row, a.col) < std::tie(b.row, b.col); });
    std::vector<QuadTerm> quad;
    for (const auto& t : c.quad) {
        if (!quad.empty() && quad.back().row == t.row && quad.back().col == t.col)
            quad.back().value += t.value;
        else
            quad.push_back(t);
    }
    std::erase_if(quad, [](const QuadTerm& t) { return t.value == 0; });
    c.quad = std::move(quad);

    std::sort(c.linear.begin(), c.linear.end(), [](const LinearTerm& a, const LinearTerm& b) { return a.var < b.var; });
    std::vector<LinearTerm> linear;
    for (const auto& t : c.linear) {
        if (!linear.empty() && linear.back().var == t.var)
            linear.back().coef += t.coef;
        else
            linear.push_back(t);
    }
    std::erase_if(linear, [](const LinearTerm& t) { return t.coef == 0; });
    c.linear = std::move(linear);
}

double QuadProgram::objective_value(std::span<const double> x) const {
    double v = objective_constant;
    for (const auto& t : objective)
        v += t.coef * x[t.var];
    return v;
}

double QuadProgram::max_violation(std::span<const double> x) const {
    double worst = 0;
    for (const auto& c : constraints) {
        double v = c.value(x);
        worst = std::max(worst, c.sense == Sense::equal ? std::abs(v) : v);
    }
    for (std::size_t i = 0; i < lower.size(); ++i)
        worst = std::max({worst, lower[i] - x[i], x[i] - upper[i]});
    return worst;
}

namespace {

std::string number(double v) {
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    return format_decimal(v);
}

double parse_number(const std::string& text, std::size_t line) {
    if (text == "inf")
        return std::numeric_limits<double>::infinity();
    if (text == "-inf")
        return -std::numeric_limits<double>::infinity();
    double v = 0;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || end != text.data() + text.size())
        throw ListingError(fmt::format("line {}: bad number '{}'", line, text));
    return v;
}

std::uint32_t parse_index(const std::string& text, std::size_t bound, std::size_t line) {
    std::uint32_t v = 0;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || end != text.data() + text.size() || v >= bound)
        throw ListingError(fmt::format("line {}: bad variable index '{}'", line, text));
    return v;
}

} // namespace

void write_listing(std::ostream& out, const QuadProgram& program) {
    const auto n = program.num_variables();
    out << "qcqp " << n << ' ' << program.constraints.size() << '\n';
    for (std::size_t i = 0; i < n; ++i) {
        out << "var " << i << ' ' << number(program.lower[i]) << ' ' << number(program.upper[i]);
        if (i < program.names.size() && !program.names[i].empty())
            out << ' ' << program.names[i];
        out << '\n';
    }
    out << "objective\n";
    for (const auto& t : program.objective)
        out << "q " << t.var << ' ' << number(t.coef) << '\n';
    out << "r " << number(program.objective_constant) << '\n';
    for (std::size_t k = 0; k < program.constraints.size(); ++k) {
        const auto& c = program.constraints[k];
        out << "constraint " << k << (c.sense == Sense::equal ? " eq" : " le") << '\n';
        for (const auto& t : c.quad)
            out << "P " << t.row << ' ' << t.col << ' ' << number(t.value) << '\n';
        for (const auto& t : c.linear)
            out << "q " << t.var << ' ' << number(t.coef) << '\n';
        out << "r " << number(c.constant) << '\n';
    }
    out << "end\n";
}

QuadProgram read_listing(std::istream& in) {
    QuadProgram p;
    std::string line;
    std::size_t lineno = 0;
    std::size_t n = 0, m = 0;
    bool header = false, done = false, named = false;
    std::vector<LinearTerm>* linear = nullptr;
    std::vector<QuadTerm>* quad = nullptr;
    double* constant = nullptr;

    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream fields(line);
        std::string key;
        if (!(fields >> key))
            continue;
        std::vector<std::string> args;
        for (std::string a; fields >> a;)
            args.push_back(a);
        auto need = [&](std::size_t count) {
            if (args.size() != count)
                throw ListingError(fmt::format("line {}: '{}' expects {} fields", lineno, key, count));
        };

        if (done)
            throw ListingError(fmt::format("line {}: content after 'end'", lineno));
        if (!header) {
            if (key != "qcqp")
                throw ListingError(fmt::format("line {}: expected 'qcqp' header", lineno));
            need(2);
            n = parse_index(args[0], std::numeric_limits<std::uint32_t>::max(), lineno);
            m = parse_index(args[1], std::numeric_limits<std::uint32_t>::max(), lineno);
            p.lower.resize(n);
            p.upper.resize(n);
            p.names.resize(n);
            header = true;
        } else if (key == "var") {
            if (args.size() != 3 && args.size() != 4)
                throw ListingError(fmt::format("line {}: 'var' expects 3 or 4 fields", lineno));
            auto i = parse_index(args[0], n, lineno);
            p.lower[i] = parse_number(args[1], lineno);
            p.upper[i] = parse_number(args[2], lineno);
            if (args.size() == 4) {
                p.names[i] = args[3];
                named = true;
            }
        } else if (key == "objective") {
            need(0);
            linear = &p.objective;
            quad = nullptr;
            constant = &p.objective_constant;
        } else if (key == "constraint") {
            need(2);
            if (parse_index(args[0], m, lineno) != p.constraints.size())
                throw ListingError(fmt::format("line {}: constraints out of order", lineno));
            if (args[1] != "le" && args[1] != "eq")
                throw ListingError(fmt::format("line {}: unknown sense '{}'", lineno, args[1]));
            auto& c = p.constraints.emplace_back();
            c.sense = args[1] == "eq" ? Sense::equal : Sense::less_equal;
            linear = &c.linear;
            quad = &c.quad;
            constant = &c.constant;
        } else if (key == "P") {
            need(3);
            if (!quad)
                throw ListingError(fmt::format("line {}: 'P' outside a constraint", lineno));
            quad->push_back({parse_index(args[0], n, lineno), parse_index(args[1], n, lineno),
                             parse_number(args[2], lineno)});
        } else if (key == "q") {
            need(2);
            if (!linear)
                throw ListingError(fmt::format("line {}: 'q' outside a block", lineno));
            linear->push_back({parse_index(args[0], n, lineno), parse_number(args[1], lineno)});
        } else if (key == "r") {
            need(1);
            if (!constant)
                throw ListingError(fmt::format("line {}: 'r' outside a block", lineno));
            *constant = parse_number(args[0], lineno);
        } else if (key == "end") {
            need(0);
            done = true;
        } else {
            throw ListingError(fmt::format("line {}: unknown record '{}'", lineno, key));
        }
    }
    if (!done)
        throw ListingError("listing is truncated: missing 'end'");
    if (p.constraints.size() != m)
        throw ListingError(fmt::format("expected {} constraints, found {}", m, p.constraints.size()));
    if (!named)
        p.names.clear();
    return p;
}

} // namespace paramsynth
