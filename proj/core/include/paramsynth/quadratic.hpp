#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace paramsynth {

struct LinearTerm {
    std::uint32_t var = 0;
    double coef = 0;
    bool operator==(const LinearTerm&) const = default;
};

/// One cell of a symmetric matrix. Off-diagonal cells are stored twice,
/// once as (i, j) and once as (j, i), so x'Px = sum of value * x_row * x_col.
struct QuadTerm {
    std::uint32_t row = 0;
    std::uint32_t col = 0;
    double value = 0;
    bool operator==(const QuadTerm&) const = default;
};

enum class Sense { less_equal, equal };

/// x'Px + q'x + r  (<= 0 | == 0)
struct QuadConstraint {
    std::vector<QuadTerm> quad;     ///< sorted by (row, col), no duplicates
    std::vector<LinearTerm> linear; ///< sorted by var, no duplicates
    double constant = 0;
    Sense sense = Sense::less_equal;

    bool is_affine() const { return quad.empty(); }
    double value(std::span<const double> x) const;
    /// grad += weight * gradient at x
    void add_gradient(std::span<const double> x, double weight, std::span<double> grad) const;
    /// Variables with a nonzero entry in P or q, ascending.
    std::vector<std::uint32_t> support() const;

    bool operator==(const QuadConstraint&) const = default;
};

/// Adds coef * x_a * x_b, spread as coef/2 over the two mirrored cells.
void add_product(QuadConstraint& c, std::uint32_t a, std::uint32_t b, double coef);
void add_linear(QuadConstraint& c, std::uint32_t var, double coef);
/// Sorts, merges duplicates and drops zero entries.
void canonicalize(QuadConstraint& c);

/// min objective'x + objective_constant  s.t. constraints, lower <= x <= upper.
/// Bounds may be infinite.
struct QuadProgram {
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<std::string> names; ///< optional, for listings
    std::vector<LinearTerm> objective;
    double objective_constant = 0;
    std::vector<QuadConstraint> constraints;

    std::size_t num_variables() const { return lower.size(); }
    double objective_value(std::span<const double> x) const;
    /// Largest violation over constraints and bounds.
    double max_violation(std::span<const double> x) const;

    bool operator==(const QuadProgram&) const = default;
};

class ListingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Text listing, one block per constraint: `P i j v` triplets, `q i v` pairs,
/// `r v`. Numbers use the shortest round-trip form, so reading the listing
/// back yields an identical program.
void write_listing(std::ostream& out, const QuadProgram& program);
QuadProgram read_listing(std::istream& in);

} // namespace paramsynth
