#pragma once

#include "paramsynth/model.hpp"

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace paramsynth {

/// Syntax or semantic error with a 1-based source location.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, std::size_t column, const std::string& message);
    std::size_t line;
    std::size_t column;
    std::string detail;
};

struct SourceSpan {
    std::size_t line = 0;
    std::size_t column = 0;
};

/// A name with the place it was written.
struct Token {
    std::string text;
    SourceSpan where;
};

/// Raw, unchecked content of a model file.
///
/// Format (line-oriented, `#` starts a comment):
///
///     @type pmdp|pmc
///     @parameters <id> [lo,hi] <id> ...      bounds optional
///     @states <state>...                     optional, fixes state order
///     @initial <state>
///     @targets <state>...
///     <state> <action> <state'> <affine-expr>   (pMC: no action)
///     @costs                                 following lines: <state> <action> <rational>
///     @transitions                           switch back to transition lines
///
/// Affine expressions: `expr := term (('+'|'-') term)*`,
/// `term := rational | rational '*' ident | ident`, with an optional leading sign.
/// Rationals are `a/b` or decimal literals, converted exactly.
struct ModelDocument {
    struct ParamDecl {
        Token name;
        std::optional<Token> lo, hi;
    };
    struct TransitionRecord {
        Token source;
        std::optional<Token> action;
        Token target;
        Token expression;
    };
    struct CostRecord {
        Token state;
        std::optional<Token> action;
        Token value;
    };

    std::optional<Token> type;
    std::vector<ParamDecl> parameters;
    std::vector<Token> declared_states;
    std::vector<Token> initial; ///< every @initial occurrence
    std::vector<Token> targets;
    std::vector<TransitionRecord> transitions;
    std::vector<CostRecord> costs;
    /// Every state mention in file order, for implicit state introduction.
    std::vector<Token> state_mentions;
};

struct ParseOptions {
    /// Used for the default box [eps, 1 - eps] of parameters without bounds.
    Rational eps_graph{1, 100000};
};

ModelDocument read_document(std::string_view text);
Pmdp build_model(const ModelDocument& doc, const ParseOptions& options = {});
Pmdp parse_model(std::string_view text, const ParseOptions& options = {});

using ParameterLookup = std::function<std::optional<ParamId>(std::string_view)>;

/// Parses an affine expression; `where` locates `text` for diagnostics.
AffineExpr parse_affine(std::string_view text, const ParameterLookup& lookup, SourceSpan where = {1, 1});

/// `P<=x`, `P>=x`, `E<=x`, `E>=x` (whitespace allowed around the operator).
Specification parse_spec(std::string_view text);

std::string format_affine(const AffineExpr& expr, const Pmdp& m);
std::string serialize_model(const Pmdp& m);

/// Result file: one `<id> = <decimal>` line per parameter, in parameter order.
std::string format_instantiation(const Pmdp& m, const Instantiation& u);
Instantiation parse_instantiation(const Pmdp& m, std::string_view text);

} // namespace paramsynth
