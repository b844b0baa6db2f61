#pragma once

// Random problem instances for the property and acceptance suites.

#include "nnv/problems.hpp"
#include "test_util.hpp"

namespace nnv::testing {

enum class Kind { Nnr, Vip, Ne, Sr, Cr, Acr, Lr, Gsr, Glr };

inline constexpr Kind kAllKinds[] = {Kind::Nnr, Kind::Vip, Kind::Ne,  Kind::Sr, Kind::Cr,
                                     Kind::Acr, Kind::Lr,  Kind::Gsr, Kind::Glr};

inline const char* kind_name(Kind k) {
    static const char* names[] = {"nnr", "vip", "ne", "sr", "cr", "acr", "lr", "gsr", "glr"};
    return names[static_cast<int>(k)];
}

inline std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

/// Network with at most `max_relu` ReLU nodes spread over one or two hidden layers.
inline Network small_network(std::mt19937_64& rng, std::size_t n, std::size_t m, std::size_t max_relu) {
    NetShape shape;
    shape.input_dim = n;
    shape.output_dim = m;
    shape.id_fraction = 0.2;
    std::size_t total = pick(rng, 1, std::max<std::size_t>(1, max_relu));
    if (total >= 4 && pick(rng, 0, 1) == 1) {
        std::size_t first = pick(rng, 1, total - 1);
        shape.hidden = {first, total - first};
    } else {
        shape.hidden = {total};
    }
    return random_network(rng, shape);
}

inline ExtRational random_radius(std::mt19937_64& rng, bool allow_inf) {
    if (allow_inf && pick(rng, 0, 7) == 0) return ExtRational::infinity();
    return ExtRational(Rational(static_cast<long>(pick(rng, 0, 8)), 4));
}

inline Metric random_metric(std::mt19937_64& rng) { return pick(rng, 0, 1) ? Metric::L1 : Metric::Linf; }

inline LinRow random_row(std::mt19937_64& rng, std::size_t dim, bool allow_eq) {
    LinRow row{random_vector(rng, dim, 2, 2), Relation::LE, random_rational(rng, 2, 2)};
    std::size_t r = pick(rng, 0, allow_eq ? 5 : 3);
    row.rel = r < 2 ? Relation::LE : (r < 4 ? Relation::LT : Relation::EQ);
    return row;
}

/// Box [-b, b]^n plus an optional extra row.
inline LinSpec random_inspec(std::mt19937_64& rng, std::size_t n) {
    LinSpec spec(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rational b(static_cast<long>(pick(rng, 1, 4)), 2);
        spec.add({{i, Rational(1)}}, Relation::LE, b);
        spec.add({{i, Rational(-1)}}, Relation::LE, b);
    }
    if (pick(rng, 0, 1)) spec.add(random_row(rng, n, false));
    return spec;
}

inline LinSpec random_outspec(std::mt19937_64& rng, std::size_t m) {
    LinSpec spec(m);
    std::size_t rows = pick(rng, 1, 2);
    for (std::size_t r = 0; r < rows; ++r) spec.add(random_row(rng, m, true));
    return spec;
}

/// `max_relu` bounds the ReLU count of the searched network (both copies for NE/GSR/GLR).
inline ProblemInstance random_instance(std::mt19937_64& rng, Kind kind, std::size_t max_relu = 10) {
    std::size_t n = pick(rng, 1, 3);
    std::size_t m = pick(rng, 1, 2);
    switch (kind) {
        case Kind::Nnr: {
            Network net = small_network(rng, n, m, max_relu);
            return NnrInstance{net, random_inspec(rng, n), random_outspec(rng, m)};
        }
        case Kind::Vip: {
            Network net = small_network(rng, n, m, max_relu);
            return VipInstance{net, random_inspec(rng, n), random_outspec(rng, m)};
        }
        case Kind::Ne: {
            Network a = small_network(rng, n, m, max_relu / 2);
            // Half the time compare against a perturbed copy, which is often equivalent.
            Network b = a;
            if (pick(rng, 0, 1)) {
                b = small_network(rng, n, m, max_relu / 2);
            } else {
                auto layers = a.computation_layers();
                auto& node = layers.back()[pick(rng, 0, m - 1)];
                if (pick(rng, 0, 1)) node.bias += Rational(1, 4);
                b = Network(n, std::move(layers));
                if (pick(rng, 0, 1)) b = id_to_relu(a).relu_count() <= max_relu / 2 ? id_to_relu(a) : a;
            }
            return NeInstance{a, b};
        }
        case Kind::Sr: {
            Metric metric = random_metric(rng);
            std::size_t budget = metric == Metric::L1 ? max_relu - 2 * m : max_relu;
            Network net = small_network(rng, n, m, budget);
            return SrInstance{net, metric, random_radius(rng, true), random_radius(rng, false), random_vector(rng, n)};
        }
        case Kind::Cr: {
            m = pick(rng, 2, 3);
            Network net = small_network(rng, n, m, max_relu);
            return CrInstance{net, random_metric(rng), random_radius(rng, true), random_vector(rng, n), pick(rng, 1, m),
                              pick(rng, 0, 3) == 0};
        }
        case Kind::Acr: {
            m = pick(rng, 2, 3);
            Network net = small_network(rng, n, m, max_relu);
            return AcrInstance{net, random_metric(rng), random_radius(rng, true), random_vector(rng, n), false};
        }
        case Kind::Lr: {
            Network net = small_network(rng, n, m, max_relu);
            return LrInstance{net, Metric::Linf, random_radius(rng, true), Rational(static_cast<long>(pick(rng, 0, 12)), 4),
                              random_vector(rng, n)};
        }
        case Kind::Gsr: {
            Network net = small_network(rng, n, m, max_relu / 2);
            return GsrInstance{net, Metric::Linf, random_radius(rng, true), random_radius(rng, false)};
        }
        case Kind::Glr: {
            Network net = small_network(rng, n, m, max_relu / 2);
            return GlrInstance{net, Metric::Linf, random_radius(rng, true), Rational(static_cast<long>(pick(rng, 0, 12)), 4)};
        }
    }
    throw std::logic_error("unknown kind");
}

}  // namespace nnv::testing
