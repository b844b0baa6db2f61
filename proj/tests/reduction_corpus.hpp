#pragma once

// Random verdict-preservation checks for the eight instance reductions.

#include "instance_gen.hpp"
#include "nnv/reductions.hpp"
#include "nnv/verifier.hpp"

#include <array>
#include <string_view>

namespace nnv::testing {

inline constexpr std::array<std::string_view, 8> kReductions = {"sr2vip", "cr2vip", "sr2cr",  "cr2sr",
                                                                 "acr2cr", "cr2acr", "ne2cr", "gsr2ne"};

struct ReductionOutcome {
    bool source = false;
    bool target = false;
};

/// Draws one source instance suited to `name`, decides it directly and through
/// the reduction. `max_relu` bounds the source network.
inline ReductionOutcome run_reduction(std::string_view name, std::mt19937_64& rng, const ReduceOptions& opts,
                                      std::size_t max_relu = 6) {
    auto draw = [&](Kind kind) { return random_instance(rng, kind, max_relu); };
    if (name == "sr2vip" || name == "sr2cr") {
        auto inst = std::get<SrInstance>(draw(Kind::Sr));
        inst.metric = Metric::Linf;
        bool target = name == "sr2vip" ? decide_vip(sr_to_vip(inst, opts)).holds : decide_cr(sr_to_cr(inst, opts)).holds;
        return {decide_sr(inst).holds, target};
    }
    if (name == "cr2vip") {
        auto inst = std::get<CrInstance>(draw(Kind::Cr));
        inst.metric = Metric::Linf;
        return {decide_cr(inst).holds, decide_vip(cr_to_vip(inst, opts)).holds};
    }
    if (name == "cr2sr") {
        auto inst = std::get<CrInstance>(draw(Kind::Cr));
        inst.strict_argmax = false;
        return {decide_cr(inst).holds, decide_sr(cr_to_sr(inst, opts)).holds};
    }
    if (name == "acr2cr") {
        auto inst = std::get<AcrInstance>(draw(Kind::Acr));
        bool any = false;
        for (const auto& cr : acr_to_cr(inst)) any = any || decide_cr(cr).holds;
        return {decide_acr(inst).holds, any};
    }
    if (name == "cr2acr") {
        auto inst = std::get<CrInstance>(draw(Kind::Cr));
        inst.strict_argmax = false;
        if (!inst.eps.is_infinite() && inst.eps.value().is_zero()) inst.eps = ExtRational(Rational(1, 4));
        return {decide_cr(inst).holds, decide_acr(cr_to_acr(inst, opts)).holds};
    }
    if (name == "ne2cr") {
        auto inst = std::get<NeInstance>(draw(Kind::Ne));
        return {decide_ne(inst).holds, decide_cr(ne_to_cr(inst, opts)).holds};
    }
    if (name == "gsr2ne") {
        auto inst = std::get<GsrInstance>(draw(Kind::Gsr));
        inst.metric = Metric::Linf;
        return {decide_gsr(inst).holds, decide_ne(gsr_to_ne(inst, opts)).holds};
    }
    throw std::invalid_argument("unknown reduction");
}

}  // namespace nnv::testing
