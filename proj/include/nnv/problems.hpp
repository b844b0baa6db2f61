#pragma once

#include "nnv/linspec.hpp"
#include "nnv/network.hpp"

#include <string_view>
#include <variant>

namespace nnv {

/// Exists x with inspec(x) and outspec(net(x)).
struct NnrInstance {
    Network net;
    LinSpec inspec;
    LinSpec outspec;
};

/// For all x with inspec(x): outspec(net(x)).
struct VipInstance {
    Network net;
    LinSpec inspec;
    LinSpec outspec;
};

/// net1 and net2 compute the same function on all of R^n.
struct NeInstance {
    Network net1;
    Network net2;
};

/// d(x, center) <= eps  =>  d(net(center), net(x)) <= delta.
struct SrInstance {
    Network net;
    Metric metric = Metric::Linf;
    ExtRational eps;
    ExtRational delta;
    RatVector center;
};

/// Every x in the eps-ball has output `label` (1-based) maximal.
///
/// Maximality is weak (N_label >= N_i) unless strict_argmax is set, in which
/// case ties with another output count as violations.
struct CrInstance {
    Network net;
    Metric metric = Metric::Linf;
    ExtRational eps;
    RatVector center;
    std::size_t label = 1;
    bool strict_argmax = false;
};

/// Some label is robust in the sense of CrInstance.
struct AcrInstance {
    Network net;
    Metric metric = Metric::Linf;
    ExtRational eps;
    RatVector center;
    bool strict_argmax = false;
};

/// d(x, center) <= eps  =>  d(net(center), net(x)) <= lip * d(center, x).
struct LrInstance {
    Network net;
    Metric metric = Metric::Linf;
    ExtRational eps;
    Rational lip;
    RatVector center;
};

/// Standard robustness at every point: d(x, y) <= eps => d(net(x), net(y)) <= delta.
struct GsrInstance {
    Network net;
    Metric metric = Metric::Linf;
    ExtRational eps;
    ExtRational delta;
};

/// Lipschitz robustness at every point within distance eps.
struct GlrInstance {
    Network net;
    Metric metric = Metric::Linf;
    ExtRational eps;
    Rational lip;
};

using ProblemInstance = std::variant<NnrInstance, VipInstance, NeInstance, SrInstance, CrInstance, AcrInstance,
                                     LrInstance, GsrInstance, GlrInstance>;

/// "nnr", "vip", "ne", "sr", "cr", "acr", "lr", "gsr" or "glr".
std::string_view problem_name(const ProblemInstance& inst);

/// Throws std::invalid_argument when dimensions, labels or radii are inconsistent.
void validate(const ProblemInstance& inst);

/// Input dimension of the points the property quantifies over
/// (2n for the global problems, which take the pair (x, y) concatenated).
std::size_t witness_dim(const ProblemInstance& inst);

/// Direct evaluation of the defining property at a single point.
///
/// For the universal problems, true iff `point` is a counterexample. For NNR,
/// true iff `point` reaches the output spec (a "yes" witness). For aCR a single
/// point cannot refute the property; `point` is then checked against label 1.
bool violates(const ProblemInstance& inst, std::span<const Rational> point);

/// Violation of CR for a specific 1-based label at a point.
bool violates_label(const AcrInstance& inst, std::size_t label, std::span<const Rational> point);

}  // namespace nnv
