#include "paramsynth/parser.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <unordered_map>

namespace paramsynth {

ParseError::ParseError(std::size_t line_, std::size_t column_, const std::string& message)
    : std::runtime_error(fmt::format("{}:{}: {}", line_, column_, message)), line(line_), column(column_),
      detail(message) {}

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }
bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

/// Whitespace tokenizer over one line that remembers columns.
class LineScanner {
public:
    LineScanner(std::string_view line, std::size_t line_no) : line_(line), line_no_(line_no) {}

    void skip_space() {
        while (pos_ < line_.size() && is_space(line_[pos_]))
            ++pos_;
    }
    bool done() {
        skip_space();
        return pos_ >= line_.size();
    }
    SourceSpan here() const { return {line_no_, pos_ + 1}; }

    Token word() {
        skip_space();
        auto start = pos_;
        while (pos_ < line_.size() && !is_space(line_[pos_]))
            ++pos_;
        return {std::string(line_.substr(start, pos_ - start)), {line_no_, start + 1}};
    }

    /// Word that stops before `[`, used for `name[lo,hi]` without a space.
    Token name() {
        skip_space();
        auto start = pos_;
        while (pos_ < line_.size() && !is_space(line_[pos_]) && line_[pos_] != '[')
            ++pos_;
        return {std::string(line_.substr(start, pos_ - start)), {line_no_, start + 1}};
    }

    bool peek(char c) {
        skip_space();
        return pos_ < line_.size() && line_[pos_] == c;
    }

    /// Everything up to the end of the line, trimmed.
    Token rest() {
        skip_space();
        auto start = pos_;
        auto end = line_.size();
        while (end > start && is_space(line_[end - 1]))
            --end;
        pos_ = line_.size();
        return {std::string(line_.substr(start, end - start)), {line_no_, start + 1}};
    }

    /// Parses `[lo,hi]` starting at the current position.
    std::pair<Token, Token> bracket() {
        skip_space();
        auto open = pos_;
        auto close = line_.find(']', open);
        if (close == std::string_view::npos)
            throw ParseError(line_no_, open + 1, "unterminated parameter bounds, expected ']'");
        auto inner = line_.substr(open + 1, close - open - 1);
        auto comma = inner.find(',');
        if (comma == std::string_view::npos)
            throw ParseError(line_no_, open + 1, "parameter bounds must be written [lo,hi]");
        auto trim = [&](std::size_t from, std::size_t to) {
            while (from < to && is_space(line_[from]))
                ++from;
            while (to > from && is_space(line_[to - 1]))
                --to;
            return Token{std::string(line_.substr(from, to - from)), {line_no_, from + 1}};
        };
        auto lo = trim(open + 1, open + 1 + comma);
        auto hi = trim(open + 2 + comma, close);
        pos_ = close + 1;
        return {lo, hi};
    }

private:
    std::string_view line_;
    std::size_t line_no_;
    std::size_t pos_ = 0;
};

std::string_view strip_comment(std::string_view line) {
    auto hash = line.find('#');
    return hash == std::string_view::npos ? line : line.substr(0, hash);
}

Rational require_rational(const Token& t, std::string_view what) {
    auto r = parse_rational(t.text);
    if (!r)
        throw ParseError(t.where.line, t.where.column, fmt::format("malformed {} '{}'", what, t.text));
    return *r;
}

std::optional<Rational> parse_bound(const Token& t, bool lower) {
    std::string_view s = t.text;
    if ((lower && (s == "-inf" || s == "-infinity")) || (!lower && (s == "inf" || s == "+inf" || s == "infinity")))
        return std::nullopt;
    return require_rational(t, "parameter bound");
}

/// Exact decimal for rationals whose denominator is 2^a * 5^b.
std::optional<std::string> exact_decimal(const Rational& value) {
    using boost::multiprecision::cpp_int;
    cpp_int den = denominator(value);
    unsigned twos = 0, fives = 0;
    while (den % 2 == 0) {
        den /= 2;
        ++twos;
    }
    while (den % 5 == 0) {
        den /= 5;
        ++fives;
    }
    if (den != 1)
        return std::nullopt;
    unsigned digits = std::max(twos, fives);
    cpp_int scale = 1;
    for (unsigned i = 0; i < digits; ++i)
        scale *= 10;
    cpp_int scaled = numerator(value) * scale / denominator(value);
    bool negative = scaled < 0;
    std::string text = (negative ? cpp_int(-scaled) : scaled).str();
    if (digits > 0) {
        if (text.size() <= digits)
            text.insert(0, digits - text.size() + 1, '0');
        text.insert(text.size() - digits, ".");
    }
    return negative ? "-" + text : text;
}

} // namespace

ModelDocument read_document(std::string_view text) {
    ModelDocument doc;
    enum class Section { transitions, costs } section = Section::transitions;

    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos)
            end = text.size();
        ++line_no;
        std::string_view raw = strip_comment(text.substr(start, end - start));
        start = end + 1;

        LineScanner scan(raw, line_no);
        if (scan.done()) {
            if (end == text.size())
                break;
            continue;
        }

        if (scan.peek('@')) {
            auto directive = scan.word();
            const auto& d = directive.text;
            if (d == "@type") {
                if (doc.type)
                    throw ParseError(line_no, directive.where.column, "duplicate @type directive");
                doc.type = scan.word();
                if (doc.type->text != "pmdp" && doc.type->text != "pmc")
                    throw ParseError(line_no, doc.type->where.column,
                                     fmt::format("unknown model type '{}', expected pmdp or pmc", doc.type->text));
            } else if (d == "@parameters") {
                while (!scan.done()) {
                    ModelDocument::ParamDecl decl;
                    decl.name = scan.name();
                    if (!is_ident_start(decl.name.text.front()) ||
                        !std::all_of(decl.name.text.begin(), decl.name.text.end(), is_ident_char))
                        throw ParseError(line_no, decl.name.where.column,
                                         fmt::format("invalid parameter name '{}'", decl.name.text));
                    if (scan.peek('[')) {
                        auto [lo, hi] = scan.bracket();
                        decl.lo = lo;
                        decl.hi = hi;
                    }
                    doc.parameters.push_back(std::move(decl));
                }
            } else if (d == "@states") {
                while (!scan.done()) {
                    auto t = scan.word();
                    doc.declared_states.push_back(t);
                    doc.state_mentions.push_back(t);
                }
            } else if (d == "@initial") {
                if (scan.done())
                    throw ParseError(line_no, directive.where.column, "@initial needs a state");
                auto t = scan.word();
                doc.initial.push_back(t);
                doc.state_mentions.push_back(t);
                if (!scan.done())
                    throw ParseError(line_no, scan.here().column, "@initial takes exactly one state");
            } else if (d == "@targets") {
                while (!scan.done()) {
                    auto t = scan.word();
                    doc.targets.push_back(t);
                    doc.state_mentions.push_back(t);
                }
            } else if (d == "@costs") {
                section = Section::costs;
            } else if (d == "@transitions") {
                section = Section::transitions;
            } else {
                throw ParseError(line_no, directive.where.column, fmt::format("unknown directive '{}'", d));
            }
            if (!scan.done())
                throw ParseError(line_no, scan.here().column, "unexpected trailing input");
            continue;
        }

        const bool pmc = doc.type && doc.type->text == "pmc";
        if (section == Section::costs) {
            std::vector<Token> words;
            while (!scan.done())
                words.push_back(scan.word());
            if (words.size() == 3) {
                doc.costs.push_back({words[0], words[1], words[2]});
            } else if (words.size() == 2 && pmc) {
                doc.costs.push_back({words[0], std::nullopt, words[1]});
            } else {
                throw ParseError(line_no, words.front().where.column,
                                 pmc ? "cost line must be '<state> <rational>'"
                                     : "cost line must be '<state> <action> <rational>'");
            }
            doc.state_mentions.push_back(doc.costs.back().state);
            continue;
        }

        ModelDocument::TransitionRecord rec;
        rec.source = scan.word();
        if (!pmc)
            rec.action = scan.word();
        rec.target = scan.word();
        rec.expression = scan.rest();
        if (rec.target.text.empty() || rec.expression.text.empty() || (rec.action && rec.action->text.empty()))
            throw ParseError(line_no, rec.source.where.column,
                             pmc ? "transition line must be '<state> <state'> <expr>'"
                                 : "transition line must be '<state> <action> <state'> <expr>'");
        doc.state_mentions.push_back(rec.source);
        doc.state_mentions.push_back(rec.target);
        doc.transitions.push_back(std::move(rec));
    }
    return doc;
}

AffineExpr parse_affine(std::string_view text, const ParameterLookup& lookup, SourceSpan where) {
    std::size_t pos = 0;
    auto error = [&](const std::string& msg) -> ParseError {
        return ParseError(where.line, where.column + pos, msg);
    };
    auto skip = [&] {
        while (pos < text.size() && is_space(text[pos]))
            ++pos;
    };
    auto scan_number = [&]() -> std::optional<Rational> {
        auto begin = pos;
        auto digits = [&] {
            auto s = pos;
            while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos])))
                ++pos;
            return pos > s;
        };
        bool any = digits();
        if (pos < text.size() && text[pos] == '.') {
            ++pos;
            any = digits() || any;
        }
        if (!any) {
            pos = begin;
            return std::nullopt;
        }
        if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
            auto save = pos++;
            if (pos < text.size() && (text[pos] == '+' || text[pos] == '-'))
                ++pos;
            if (!digits())
                pos = save;
        }
        if (pos < text.size() && text[pos] == '/') {
            ++pos;
            if (!digits())
                throw error("expected denominator after '/'");
        }
        auto value = parse_rational(text.substr(begin, pos - begin));
        if (!value) {
            pos = begin;
            throw error("malformed rational");
        }
        return value;
    };
    auto scan_ident = [&]() -> AffineExpr {
        auto begin = pos;
        if (pos >= text.size() || !is_ident_start(text[pos]))
            throw error("expected a number or parameter name");
        while (pos < text.size() && is_ident_char(text[pos]))
            ++pos;
        auto name = text.substr(begin, pos - begin);
        auto id = lookup(name);
        if (!id) {
            pos = begin;
            throw error(fmt::format("undeclared parameter '{}'", name));
        }
        return AffineExpr::parameter(*id);
    };
    auto term = [&]() -> AffineExpr {
        skip();
        if (auto number = scan_number()) {
            skip();
            if (pos < text.size() && text[pos] == '*') {
                ++pos;
                skip();
                return scan_ident() * *number;
            }
            return AffineExpr(*number);
        }
        return scan_ident();
    };

    AffineExpr result;
    skip();
    Rational sign = 1;
    if (pos < text.size() && (text[pos] == '-' || text[pos] == '+')) {
        sign = text[pos] == '-' ? -1 : 1;
        ++pos;
    }
    result += term() * sign;
    for (;;) {
        skip();
        if (pos >= text.size())
            break;
        char op = text[pos];
        if (op != '+' && op != '-')
            throw error(fmt::format("unexpected '{}' in expression", op));
        ++pos;
        auto t = term();
        if (op == '+')
            result += t;
        else
            result -= t;
    }
    return result;
}

Pmdp build_model(const ModelDocument& doc, const ParseOptions& options) {
    Pmdp m;
    m.kind = doc.type && doc.type->text == "pmc" ? ModelKind::pmc : ModelKind::pmdp;

    for (const auto& decl : doc.parameters) {
        Parameter p;
        p.name = decl.name.text;
        if (decl.lo) {
            p.bounds.lo = parse_bound(*decl.lo, true);
            p.bounds.hi = parse_bound(*decl.hi, false);
        } else {
            p.bounds = default_box(options.eps_graph);
        }
        if (m.find_parameter(p.name))
            throw ParseError(decl.name.where.line, decl.name.where.column,
                             fmt::format("parameter '{}' declared twice", p.name));
        if (p.bounds.lo && p.bounds.hi && *p.bounds.lo > *p.bounds.hi)
            throw ParseError(decl.name.where.line, decl.name.where.column,
                             fmt::format("parameter '{}' has an empty box", p.name));
        m.parameters.push_back(std::move(p));
    }

    std::unordered_map<std::string, StateId> index;
    std::vector<SourceSpan> first_seen;
    for (const auto& t : doc.declared_states)
        if (index.count(t.text))
            throw ParseError(t.where.line, t.where.column, fmt::format("state '{}' declared twice", t.text));
        else {
            index.emplace(t.text, static_cast<StateId>(m.state_names.size()));
            m.state_names.push_back(t.text);
            first_seen.push_back(t.where);
        }
    for (const auto& t : doc.state_mentions) {
        if (!index.count(t.text)) {
            index.emplace(t.text, static_cast<StateId>(m.state_names.size()));
            m.state_names.push_back(t.text);
            first_seen.push_back(t.where);
        }
    }
    const auto n = m.state_names.size();
    if (n == 0)
        throw ParseError(1, 1, "model has no states");

    if (doc.initial.empty())
        throw ParseError(1, 1, "missing @initial directive");
    if (doc.initial.size() > 1)
        throw ParseError(doc.initial[1].where.line, doc.initial[1].where.column, "more than one @initial directive");
    m.initial = index.at(doc.initial.front().text);

    m.targets.assign(n, false);
    for (const auto& t : doc.targets)
        m.targets[index.at(t.text)] = true;

    m.choices.assign(n, {});
    std::vector<std::vector<SourceSpan>> row_where(n);
    std::set<std::tuple<StateId, std::uint32_t, StateId>> seen;
    auto lookup = [&m](std::string_view name) { return m.find_parameter(name); };

    for (const auto& rec : doc.transitions) {
        StateId s = index.at(rec.source.text);
        StateId t = index.at(rec.target.text);
        std::string action = rec.action ? rec.action->text : std::string();
        auto& cs = m.choices[s];
        auto it = std::find_if(cs.begin(), cs.end(), [&](const Choice& c) { return c.action == action; });
        if (it == cs.end()) {
            cs.push_back(Choice{action, {}, std::nullopt});
            row_where[s].push_back(rec.source.where);
            it = cs.end() - 1;
        }
        auto a = static_cast<std::uint32_t>(it - cs.begin());
        if (!seen.emplace(s, a, t).second)
            throw ParseError(rec.source.where.line, rec.source.where.column,
                             fmt::format("duplicate transition {} {} {}", rec.source.text, action, rec.target.text));
        AffineExpr prob = parse_affine(rec.expression.text, lookup, rec.expression.where);
        if (prob.is_zero())
            throw ParseError(rec.expression.where.line, rec.expression.where.column,
                             "transition probability is identically zero");
        it->transitions.push_back(Transition{t, std::move(prob)});
    }

    for (const auto& rec : doc.costs) {
        auto s_it = index.find(rec.state.text);
        StateId s = s_it->second;
        std::string action = rec.action ? rec.action->text : std::string();
        auto& cs = m.choices[s];
        auto it = std::find_if(cs.begin(), cs.end(), [&](const Choice& c) { return c.action == action; });
        if (it == cs.end())
            throw ParseError(rec.state.where.line, rec.state.where.column,
                             fmt::format("cost for unknown action '{}' of state '{}'", action, rec.state.text));
        if (it->cost)
            throw ParseError(rec.state.where.line, rec.state.where.column,
                             fmt::format("duplicate cost for state '{}'", rec.state.text));
        Rational value = require_rational(rec.value, "cost");
        if (value < 0)
            throw ParseError(rec.value.where.line, rec.value.where.column, "costs must be nonnegative");
        it->cost = value;
    }

    for (StateId s = 0; s < n; ++s) {
        if (m.choices[s].empty())
            throw ParseError(first_seen[s].line, first_seen[s].column,
                             fmt::format("state '{}' has no enabled actions", m.state_names[s]));
        for (std::size_t a = 0; a < m.choices[s].size(); ++a) {
            AffineExpr sum;
            for (const auto& tr : m.choices[s][a].transitions)
                sum += tr.probability;
            if (!sum.is_one())
                throw ParseError(row_where[s][a].line, row_where[s][a].column,
                                 fmt::format("row of state '{}'{} sums to {}, not 1", m.state_names[s],
                                             m.kind == ModelKind::pmdp ? " action '" + m.choices[s][a].action + "'"
                                                                       : std::string(),
                                             format_affine(sum, m)));
        }
    }

    try {
        m.validate();
    } catch (const ModelError& e) {
        throw ParseError(1, 1, e.what());
    }
    return m;
}

Pmdp parse_model(std::string_view text, const ParseOptions& options) {
    return build_model(read_document(text), options);
}

Specification parse_spec(std::string_view text) {
    std::size_t pos = 0;
    auto skip = [&] {
        while (pos < text.size() && (is_space(text[pos]) || text[pos] == '\n'))
            ++pos;
    };
    skip();
    Specification spec;
    if (pos >= text.size() || (text[pos] != 'P' && text[pos] != 'E'))
        throw ParseError(1, pos + 1, "specification must start with 'P' or 'E'");
    spec.kind = text[pos] == 'P' ? SpecKind::reach_probability : SpecKind::expected_cost;
    ++pos;
    skip();
    auto op = text.substr(pos, 2);
    if (op == "<=")
        spec.direction = Direction::at_most;
    else if (op == ">=")
        spec.direction = Direction::at_least;
    else
        throw ParseError(1, pos + 1, "expected '<=' or '>='");
    pos += 2;
    skip();
    auto end = text.size();
    while (end > pos && (is_space(text[end - 1]) || text[end - 1] == '\n'))
        --end;
    auto value = parse_rational(text.substr(pos, end - pos));
    if (!value)
        throw ParseError(1, pos + 1, fmt::format("malformed threshold '{}'", text.substr(pos, end - pos)));
    spec.threshold = *value;
    if (spec.kind == SpecKind::reach_probability && (spec.threshold < 0 || spec.threshold > 1))
        throw ParseError(1, pos + 1, "probability threshold must lie in [0,1]");
    if (spec.kind == SpecKind::expected_cost && spec.threshold < 0)
        throw ParseError(1, pos + 1, "cost threshold must be nonnegative");
    return spec;
}

std::string format_affine(const AffineExpr& expr, const Pmdp& m) {
    std::string out;
    bool first = true;
    if (expr.constant() != 0 || expr.is_constant()) {
        out = to_string(expr.constant());
        first = false;
    }
    for (const auto& [id, coef] : expr.coefficients()) {
        Rational magnitude = coef < 0 ? Rational(-coef) : coef;
        const auto& name = m.parameters[id].name;
        std::string term = magnitude == 1 ? name : to_string(magnitude) + "*" + name;
        if (first) {
            out = coef < 0 ? "0 - " + term : term;
            first = false;
        } else {
            out += (coef < 0 ? " - " : " + ") + term;
        }
    }
    return out;
}

std::string serialize_model(const Pmdp& m) {
    std::string out;
    const bool pmc = m.kind == ModelKind::pmc;
    out += fmt::format("@type {}\n", pmc ? "pmc" : "pmdp");
    if (!m.parameters.empty()) {
        out += "@parameters";
        for (const auto& p : m.parameters)
            out += fmt::format(" {} [{},{}]", p.name, p.bounds.lo ? to_string(*p.bounds.lo) : "-inf",
                               p.bounds.hi ? to_string(*p.bounds.hi) : "inf");
        out += "\n";
    }
    out += "@states";
    for (const auto& s : m.state_names)
        out += " " + s;
    out += "\n";
    out += fmt::format("@initial {}\n", m.state_names[m.initial]);
    out += "@targets";
    for (StateId s = 0; s < m.num_states(); ++s)
        if (m.targets[s])
            out += " " + m.state_names[s];
    out += "\n";
    for (StateId s = 0; s < m.num_states(); ++s)
        for (const auto& c : m.choices[s])
            for (const auto& t : c.transitions) {
                if (pmc)
                    out += fmt::format("{} {} {}\n", m.state_names[s], m.state_names[t.target],
                                       format_affine(t.probability, m));
                else
                    out += fmt::format("{} {} {} {}\n", m.state_names[s], c.action, m.state_names[t.target],
                                       format_affine(t.probability, m));
            }
    if (m.has_costs()) {
        out += "@costs\n";
        for (StateId s = 0; s < m.num_states(); ++s)
            for (const auto& c : m.choices[s])
                if (c.cost) {
                    if (pmc)
                        out += fmt::format("{} {}\n", m.state_names[s], to_string(*c.cost));
                    else
                        out += fmt::format("{} {} {}\n", m.state_names[s], c.action, to_string(*c.cost));
                }
    }
    return out;
}

std::string format_instantiation(const Pmdp& m, const Instantiation& u) {
    std::string out;
    for (ParamId i = 0; i < m.num_parameters(); ++i) {
        const auto& value = u.at(i);
        auto text = exact_decimal(value);
        out += fmt::format("{} = {}\n", m.parameters[i].name, text ? *text : to_string(value));
    }
    return out;
}

Instantiation parse_instantiation(const Pmdp& m, std::string_view text) {
    Instantiation u;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos)
            end = text.size();
        ++line_no;
        std::string_view raw = strip_comment(text.substr(start, end - start));
        start = end + 1;
        LineScanner scan(raw, line_no);
        if (scan.done())
            continue;
        auto name = scan.word();
        auto eq = scan.word();
        auto value = scan.word();
        if (eq.text != "=" || value.text.empty() || !scan.done())
            throw ParseError(line_no, name.where.column, "valuation line must be '<id> = <decimal>'");
        auto id = m.find_parameter(name.text);
        if (!id)
            throw ParseError(line_no, name.where.column, fmt::format("unknown parameter '{}'", name.text));
        if (u.contains(*id))
            throw ParseError(line_no, name.where.column, fmt::format("parameter '{}' assigned twice", name.text));
        u.set(*id, require_rational(value, "value"));
    }
    for (ParamId i = 0; i < m.num_parameters(); ++i)
        if (!u.contains(i))
            throw ParseError(line_no == 0 ? 1 : line_no, 1,
                             fmt::format("parameter '{}' has no value", m.parameters[i].name));
    return u;
}

} // namespace paramsynth
