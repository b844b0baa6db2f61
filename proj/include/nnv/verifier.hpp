#pragma once

#include "nnv/problems.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace nnv {

/// Checkable "no" answer: the activation pattern of the (combined) subject
/// network plus the violated branch. Validated by a single LP.
struct Certificate {
    ActivationPattern pattern;
    std::size_t branch = 0;
    /// Human-readable description of the branch, e.g. "not row 2" or "out 1 > ref".
    std::string branch_label;

    friend bool operator==(const Certificate&, const Certificate&) = default;
};

struct SearchStats {
    std::size_t lp_count = 0;
    std::size_t patterns_explored = 0;
    std::size_t nodes_visited = 0;
};

/// Outcome of a decision procedure.
///
/// For universal properties holds=false comes with a witness (input space;
/// the pair (x, y) concatenated for GSR/GLR) and a certificate. For NNR the
/// witness accompanies holds=true instead: it is the reaching input.
struct Verdict {
    bool holds = false;
    std::optional<RatVector> witness;
    std::optional<Certificate> certificate;
    /// aCR failures: one counterexample per label, in label order.
    std::vector<RatVector> label_witnesses;
    SearchStats stats;
};

enum class SearchMode : std::uint8_t {
    Dfs,        ///< depth-first pattern search with LP pruning
    Enumerate,  ///< all 2^R patterns, no pruning (reference oracle)
};

struct SearchOptions {
    SearchMode mode = SearchMode::Dfs;
    /// Worker threads for branch exploration; 1 keeps the search deterministic.
    unsigned threads = 1;
    /// Refuse instances whose enumeration would exceed this many ReLU nodes.
    std::size_t max_enumerate_relus = 24;
    /// Random points tried before the DFS search (0 disables the pre-pass).
    std::size_t sample_trials = 64;
    std::uint64_t seed = 1;
};

Verdict decide_nnr(const NnrInstance& inst, const SearchOptions& opts = {});
Verdict decide_vip(const VipInstance& inst, const SearchOptions& opts = {});
Verdict decide_ne(const NeInstance& inst, const SearchOptions& opts = {});
Verdict decide_sr(const SrInstance& inst, const SearchOptions& opts = {});
Verdict decide_cr(const CrInstance& inst, const SearchOptions& opts = {});
Verdict decide_acr(const AcrInstance& inst, const SearchOptions& opts = {});
/// Throws std::invalid_argument for the L1 metric.
Verdict decide_lr(const LrInstance& inst, const SearchOptions& opts = {});
/// Throws std::invalid_argument for the L1 metric.
Verdict decide_gsr(const GsrInstance& inst, const SearchOptions& opts = {});
/// Throws std::invalid_argument for the L1 metric.
Verdict decide_glr(const GlrInstance& inst, const SearchOptions& opts = {});

Verdict decide(const ProblemInstance& inst, const SearchOptions& opts = {});

/// True iff the certificate's pattern/branch LP is feasible, i.e. it really
/// exhibits a violation. Throws std::invalid_argument on shape mismatch and for
/// aCR (which has no single-LP certificate).
bool check_certificate(const ProblemInstance& inst, const Certificate& cert);

/// Randomized falsification: draws exact rational points in the relevant region
/// and checks the property directly. Returns the first violating point.
std::optional<RatVector> sample_falsify(const ProblemInstance& inst, std::size_t trials, std::uint64_t seed);

}  // namespace nnv
