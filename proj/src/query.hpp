#pragma once

// Internal encoding shared by the decision procedures: every problem is turned
// into a search for a point of `domain` and an activation pattern of `net`
// such that one of the branches holds on the network's outputs.

#include "nnv/linspec.hpp"
#include "nnv/network.hpp"
#include "nnv/verifier.hpp"

#include <optional>
#include <string>
#include <vector>

namespace nnv::detail {

/// Rows over (base variables, network outputs).
struct Branch {
    std::vector<LinRow> rows;
    std::string label;
};

struct Query {
    Network net;
    /// LP variables shared by all rows: the network inputs first, then auxiliaries.
    std::size_t base_dim = 0;
    LinSpec domain;
    /// Optional per-variable bounds implied by `domain` (search acceleration only).
    std::vector<std::optional<Rational>> lo, hi;
    std::vector<Branch> branches;
};

struct SearchHit {
    std::size_t branch = 0;
    ActivationPattern pattern;
    RatVector point;  // base variables
};

struct SearchResult {
    std::optional<SearchHit> hit;
    SearchStats stats;
};

Query make_query(Network net, std::size_t aux, LinSpec domain);

/// Accumulates an affine expression over (base variables, outputs) and turns
/// it into "expr rel 0".
class RowBuilder {
public:
    RowBuilder(std::size_t base_dim, std::size_t out_dim) : coeffs_(base_dim + out_dim), base_dim_(base_dim) {}
    RowBuilder& var(std::size_t i, const Rational& c) { coeffs_.at(i) += c; return *this; }
    RowBuilder& out(std::size_t i, const Rational& c) { coeffs_.at(base_dim_ + i) += c; return *this; }
    RowBuilder& constant(const Rational& c) { constant_ += c; return *this; }
    LinRow build(Relation rel) const { return LinRow{coeffs_, rel, -constant_}; }

private:
    RatVector coeffs_;
    Rational constant_;
    std::size_t base_dim_;
};

/// Searches for a (pattern, branch) whose LP is feasible.
SearchResult search(const Query& query, const SearchOptions& opts);

struct MinimumResult {
    bool unbounded = false;
    /// Empty when the domain is empty or the objective is unbounded.
    std::optional<Rational> value;
    RatVector point;  // base variables of a minimiser
    ActivationPattern pattern;
};

/// Exact minimum of objective . (base variables, outputs) over the domain.
/// `seed`, a point of the domain, provides the initial incumbent. With
/// `stop_below` the search ends early at the first value under that bound.
MinimumResult minimize(const Query& query, const RatVector& objective, SearchStats* stats = nullptr,
                       const RatVector* seed = nullptr, const Rational* stop_below = nullptr);

/// The single LP of a fixed pattern (in Network::relu_nodes() order) and branch.
/// Returns the feasible point, if any.
std::optional<RatVector> solve_pattern(const Query& query, const ActivationPattern& pattern, std::size_t branch);

}  // namespace nnv::detail
