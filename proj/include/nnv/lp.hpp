#pragma once

#include "nnv/linspec.hpp"

#include <cstddef>
#include <optional>

namespace nnv {

struct Feasibility {
    bool feasible = false;
    /// Exact point satisfying every row (strict ones included) when feasible.
    RatVector witness;
};

/// Decides a conjunction of <=, < and = rows over free real variables exactly.
///
/// Strict rows share one slack t: maximize t subject to t <= 1 and a.x + t <= b
/// for every strict row. The system is feasible iff the relaxed LP is feasible
/// with t* > 0. The simplex uses Bland's rule throughout.
Feasibility feasible(const LinSpec& spec);

/// Optimum t* of the strict-slack LP above; nullopt when even the non-strict
/// part is infeasible. With no strict rows t* = 1 whenever feasible.
std::optional<Rational> max_slack(const LinSpec& spec);

/// Independent verdict by Fourier-Motzkin elimination with strictness tracking.
/// Throws std::invalid_argument when spec.dim exceeds `max_dim`.
bool fm_feasible(const LinSpec& spec, std::size_t max_dim = 6);

/// Cumulative number of simplex solves in this thread (statistics only).
std::size_t lp_solve_count();

}  // namespace nnv
