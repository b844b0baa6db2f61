#pragma once

#include "nnv/rational.hpp"

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <utility>
#include <string_view>
#include <vector>

namespace nnv {

enum class Relation : std::uint8_t { LE, LT, EQ };

std::string_view relation_name(Relation r);
Relation parse_relation(std::string_view text);

/// coeffs . x  rel  rhs
struct LinRow {
    RatVector coeffs;
    Relation rel = Relation::LE;
    Rational rhs;

    bool satisfied_by(std::span<const Rational> x) const;
    friend bool operator==(const LinRow&, const LinRow&) = default;
};

/// Conjunction of linear rows over `dim` variables. No rows means "true".
struct LinSpec {
    std::size_t dim = 0;
    std::vector<LinRow> rows;

    LinSpec() = default;
    explicit LinSpec(std::size_t d) : dim(d) {}
    LinSpec(std::size_t d, std::vector<LinRow> r);

    void add(LinRow row);
    /// Convenience: sum coeffs*x rel rhs from a sparse list of (var, coeff).
    void add(std::initializer_list<std::pair<std::size_t, Rational>> terms, Relation rel, Rational rhs);

    /// Exact row-by-row check. Throws std::invalid_argument on dimension mismatch.
    bool satisfied_by(std::span<const Rational> x) const;

    /// Copy with `extra` zero columns appended to every row.
    LinSpec widened(std::size_t extra) const;

    friend bool operator==(const LinSpec&, const LinSpec&) = default;
};

/// Metric ball as a linear spec.
///
/// Linf: 2n rows over x. L1: n auxiliary variables u appended after x with
/// u_i >= +-(x_i - c_i) and sum u_i <= eps. eps = inf yields no rows.
struct BallSpec {
    LinSpec spec;
    std::size_t aux_count = 0;

    /// Membership of a point of the original space, checked directly.
    bool contains(std::span<const Rational> x) const;
    /// Lifts x to a point of spec's variable space (filling the L1 auxiliaries).
    RatVector lift(std::span<const Rational> x) const;

    Metric metric = Metric::Linf;
    RatVector center;
    ExtRational eps;
};

BallSpec ball_spec(Metric metric, std::span<const Rational> center, const ExtRational& eps);

/// Branches whose disjunction is the complement of `row`:
/// LE -> one LT, LT -> one LE, EQ -> two LT.
std::vector<LinRow> negate_row(const LinRow& row);

}  // namespace nnv
