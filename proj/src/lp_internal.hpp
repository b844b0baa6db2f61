#pragma once

// Optimisation entry point used by the search; not part of the public API.

#include "nnv/linspec.hpp"

namespace nnv {

struct Optimum {
    enum Status { Infeasible, Unbounded, Optimal } status = Infeasible;
    Rational value;
    RatVector point;
};

/// Minimises cost . x over the closure of `spec` (strict rows read as <=).
Optimum minimize_closure(const LinSpec& spec, const RatVector& cost);

}  // namespace nnv
