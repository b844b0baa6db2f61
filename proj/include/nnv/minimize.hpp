#pragma once

#include "nnv/verifier.hpp"

#include <set>
#include <utility>
#include <vector>

namespace nnv {

/// Y is necessary iff deleting it changes the computed function. holds=true
/// means necessary; the witness is an input where the two functions differ.
/// Throws std::invalid_argument for an empty Y or non-hidden references.
Verdict decide_nece(const Network& net, const std::set<NodeRef>& doomed, const SearchOptions& opts = {});

struct AneceOptions {
    /// Refuse networks with more hidden nodes than this.
    std::size_t max_hidden = 16;
    SearchOptions search;
};

struct AneceResult {
    /// Every nonempty subset of hidden nodes is necessary.
    bool holds = false;
    /// On failure: an unnecessary subset of minimum cardinality.
    std::vector<NodeRef> unnecessary;
    std::size_t subsets_checked = 0;
    SearchStats stats;
};

/// Exhaustive check over all nonempty hidden subsets, smallest first; stops at the
/// first unnecessary one. Throws std::invalid_argument above opts.max_hidden.
AneceResult decide_anece(const Network& net, const AneceOptions& opts = {});

/// Network P and hidden node y with: y necessary in P iff net1 and net2 differ.
/// P computes id(y), y = net1 - net2 (m = 1) or sum_i |net1_i - net2_i|.
std::pair<Network, NodeRef> ne_to_nece(const Network& net1, const Network& net2);

/// Network whose hidden nodes are all necessary iff net1 and net2 are equivalent.
///
/// The stacked pair feeds the ReLU parts p_i = ReLU(d_i), q_i = ReLU(-d_i) of
/// d = net1 - net2, each twice, and outputs p_i - p_i' and q_i - q_i'. Constantly
/// zero hidden nodes are removed (decided exactly), and every remaining stacked
/// node reaches its own output through a chain of id nodes. A surviving pair
/// {p_i, p_i'} is unnecessary, and without one every deletion silences a chain.
Network ne_to_anece(const Network& net1, const Network& net2, const SearchOptions& opts = {});

}  // namespace nnv
