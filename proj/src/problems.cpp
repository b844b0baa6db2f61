#include "nnv/problems.hpp"

#include <stdexcept>
#include <string>

namespace nnv {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument(what); }

void check_radius(const ExtRational& r, const char* name) {
    if (!r.is_infinite() && r.value().sign() < 0) fail(std::string(name) + " must be non-negative");
}

void check_center(const Network& net, const RatVector& center) {
    if (center.size() != net.input_dim())
        fail("center has dimension " + std::to_string(center.size()) + ", network input dimension is " +
             std::to_string(net.input_dim()));
}

void check_specs(const Network& net, const LinSpec& in, const LinSpec& out) {
    if (in.dim != net.input_dim()) fail("input spec dimension does not match network input dimension");
    if (out.dim != net.output_dim()) fail("output spec dimension does not match network output dimension");
}

bool in_ball(Metric m, std::span<const Rational> x, std::span<const Rational> c, const ExtRational& eps) {
    return dist(m, x, c) <= eps;
}

bool exceeds(const Rational& d, const ExtRational& bound) { return !(d <= bound); }

bool cr_violated(const RatVector& y, std::size_t label, bool strict) {
    std::size_t j = label - 1;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (i == j) continue;
        if (strict ? y[i] >= y[j] : y[i] > y[j]) return true;
    }
    return false;
}

}  // namespace

std::string_view problem_name(const ProblemInstance& inst) {
    static constexpr std::string_view names[] = {"nnr", "vip", "ne", "sr", "cr", "acr", "lr", "gsr", "glr"};
    return names[inst.index()];
}

void validate(const ProblemInstance& inst) {
    std::visit(overloaded{
                   [](const NnrInstance& p) { check_specs(p.net, p.inspec, p.outspec); },
                   [](const VipInstance& p) { check_specs(p.net, p.inspec, p.outspec); },
                   [](const NeInstance& p) {
                       if (p.net1.input_dim() != p.net2.input_dim()) fail("ne: input dimensions differ");
                       if (p.net1.output_dim() != p.net2.output_dim()) fail("ne: output dimensions differ");
                   },
                   [](const SrInstance& p) {
                       check_center(p.net, p.center);
                       check_radius(p.eps, "eps");
                       check_radius(p.delta, "delta");
                   },
                   [](const CrInstance& p) {
                       check_center(p.net, p.center);
                       check_radius(p.eps, "eps");
                       if (p.label < 1 || p.label > p.net.output_dim())
                           fail("label must lie in 1.." + std::to_string(p.net.output_dim()));
                   },
                   [](const AcrInstance& p) {
                       check_center(p.net, p.center);
                       check_radius(p.eps, "eps");
                       if (p.net.output_dim() == 0) fail("acr needs at least one output");
                   },
                   [](const LrInstance& p) {
                       check_center(p.net, p.center);
                       check_radius(p.eps, "eps");
                       if (p.lip.sign() < 0) fail("lip must be non-negative");
                   },
                   [](const GsrInstance& p) {
                       check_radius(p.eps, "eps");
                       check_radius(p.delta, "delta");
                   },
                   [](const GlrInstance& p) {
                       check_radius(p.eps, "eps");
                       if (p.lip.sign() < 0) fail("lip must be non-negative");
                   },
               },
               inst);
}

std::size_t witness_dim(const ProblemInstance& inst) {
    return std::visit(overloaded{
                          [](const NeInstance& p) { return p.net1.input_dim(); },
                          [](const GsrInstance& p) { return 2 * p.net.input_dim(); },
                          [](const GlrInstance& p) { return 2 * p.net.input_dim(); },
                          [](const auto& p) { return p.net.input_dim(); },
                      },
                      inst);
}

bool violates_label(const AcrInstance& p, std::size_t label, std::span<const Rational> x) {
    return in_ball(p.metric, x, p.center, p.eps) && cr_violated(evaluate(p.net, x), label, p.strict_argmax);
}

bool violates(const ProblemInstance& inst, std::span<const Rational> point) {
    if (point.size() != witness_dim(inst)) fail("witness has the wrong dimension");
    return std::visit(
        overloaded{
            [&](const NnrInstance& p) {
                return p.inspec.satisfied_by(point) && p.outspec.satisfied_by(evaluate(p.net, point));
            },
            [&](const VipInstance& p) {
                return p.inspec.satisfied_by(point) && !p.outspec.satisfied_by(evaluate(p.net, point));
            },
            [&](const NeInstance& p) { return evaluate(p.net1, point) != evaluate(p.net2, point); },
            [&](const SrInstance& p) {
                if (!in_ball(p.metric, point, p.center, p.eps)) return false;
                return exceeds(dist(p.metric, evaluate(p.net, p.center), evaluate(p.net, point)), p.delta);
            },
            [&](const CrInstance& p) {
                return in_ball(p.metric, point, p.center, p.eps) &&
                       cr_violated(evaluate(p.net, point), p.label, p.strict_argmax);
            },
            [&](const AcrInstance& p) { return violates_label(p, 1, point); },
            [&](const LrInstance& p) {
                if (!in_ball(p.metric, point, p.center, p.eps)) return false;
                Rational out = dist(p.metric, evaluate(p.net, p.center), evaluate(p.net, point));
                return out > p.lip * dist(p.metric, p.center, point);
            },
            [&](const GsrInstance& p) {
                std::size_t n = p.net.input_dim();
                auto x = point.subspan(0, n);
                auto y = point.subspan(n);
                if (!in_ball(p.metric, x, y, p.eps)) return false;
                return exceeds(dist(p.metric, evaluate(p.net, x), evaluate(p.net, y)), p.delta);
            },
            [&](const GlrInstance& p) {
                std::size_t n = p.net.input_dim();
                auto x = point.subspan(0, n);
                auto y = point.subspan(n);
                if (!in_ball(p.metric, x, y, p.eps)) return false;
                return dist(p.metric, evaluate(p.net, x), evaluate(p.net, y)) > p.lip * dist(p.metric, x, y);
            },
        },
        inst);
}

}  // namespace nnv
