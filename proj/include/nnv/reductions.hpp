#pragma once

#include "nnv/problems.hpp"

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace nnv {

struct ReduceOptions {
    /// Replace hidden id nodes of emitted networks by ReLU pairs.
    bool pure_relu = false;
};

/// Two copies on the doubled input (x_ref, x); the first copy is pinned to the
/// center by the input spec. Requires the linf metric.
VipInstance sr_to_vip(const SrInstance& inst, const ReduceOptions& opts = {});
/// Same network, eps-box input spec, comparison rows as output spec. Requires linf.
VipInstance cr_to_vip(const CrInstance& inst, const ReduceOptions& opts = {});
/// Output layer (N(x) - N(c), N(c) - N(x), delta) with label 2m+1. Requires linf.
CrInstance sr_to_cr(const SrInstance& inst, const ReduceOptions& opts = {});
/// SR instance with delta = 0 on the merged (beta, ReLU(beta - f)) network.
/// Weak maximality only.
SrInstance cr_to_sr(const CrInstance& inst, const ReduceOptions& opts = {});
/// One CR instance per label; aCR holds iff one of them does.
std::vector<CrInstance> acr_to_cr(const AcrInstance& inst);
/// Three-output network h = (0, g - 2/d ReLU(x1 - c1), g - 2/d ReLU(c1 - x1)) with d = eps/2.
/// Requires eps > 0, input dimension >= 1 and weak maximality.
AcrInstance cr_to_acr(const CrInstance& inst, const ReduceOptions& opts = {});
/// Difference network with a constant-zero last output, eps = inf, label 2m+1.
CrInstance ne_to_cr(const NeInstance& inst, const ReduceOptions& opts = {});
/// Pair (N', zero) on 2n inputs: N' is zero everywhere iff GSR holds. Requires linf.
NeInstance gsr_to_ne(const GsrInstance& inst, const ReduceOptions& opts = {});

/// 3-CNF formula; literals are +-v with 1-based variables.
struct Cnf {
    std::size_t num_vars = 0;
    std::vector<std::array<int, 3>> clauses;

    friend bool operator==(const Cnf&, const Cnf&) = default;
};

/// DIMACS "p cnf V C" with exactly three literals per clause.
Cnf parse_dimacs(std::string_view text);
std::string to_dimacs(const Cnf& cnf);

/// Network with one input per variable whose output reaches the clause count
/// exactly at satisfying 0/1 assignments and is 0 at the all-1/2 point.
Network sat3_network(const Cnf& cnf);
/// (N, inf, n - 1/2) with n the clause count.
GsrInstance sat3_to_gsr(const Cnf& cnf);
/// (N, 1/2, 2n - 1, (1/2, ..., 1/2)).
LrInstance sat3_to_lr(const Cnf& cnf);
/// (N, 1/2, 2n - 1).
GlrInstance sat3_to_glr(const Cnf& cnf);

enum class RetractionMode {
    Symmetric,  ///< negative side mirrors the positive side
    Legacy,     ///< negative side as printed: -(ReLU(-x) + ReLU(-x + S - eps))
};

/// Map T with T(x) = x on the eps-ball of `source` around `center` and T(R^n)
/// inside that ball (Legacy mode: not inside for points far below the center).
Network retraction_network(Metric source, const RatVector& center, const Rational& eps,
                           RetractionMode mode = RetractionMode::Symmetric);

/// net o T. With `for_sr` the output becomes sum_i |net(T(x))_i - net(center)_i|,
/// so that any output metric measures the source metric's deviation.
Network metric_retraction(const Network& net, Metric source, const RatVector& center, const ExtRational& eps,
                          RetractionMode mode = RetractionMode::Symmetric, bool for_sr = false);

}  // namespace nnv
