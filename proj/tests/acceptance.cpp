// Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails. Limits are pinned below.

#include "cnf_enum.hpp"
#include "instance_gen.hpp"
#include "nnv/lp.hpp"
#include "nnv/minimize.hpp"
#include "reduction_corpus.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

using namespace nnv;
using namespace nnv::testing;

namespace {

constexpr std::size_t kInstancesPerProblem = 200;
constexpr std::size_t kMaxRelu = 12;
constexpr double kSolverLimitSeconds = 600;
constexpr std::size_t kFalsifyTrials = 1000;
constexpr std::size_t kReductionRuns = 100;
constexpr double kGadgetLimitSeconds = 900;
constexpr std::size_t kChainMaxClauses = 3;
constexpr std::size_t kVipRuns = 200;
constexpr std::size_t kFlips = 50;
constexpr std::size_t kLpSystems = 500;
constexpr std::size_t kIdentityWidth = 4;
constexpr std::size_t kIdentityLayers = 25;  // computation layers: 4 x 25 = 100 nodes
constexpr double kIdentityLimitSeconds = 1;
constexpr std::size_t kIdNets = 50;
constexpr std::size_t kIdPoints = 100;

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
    std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Criteria 1 and 2 share the instance corpus.
void solver_and_witnesses() {
    SearchOptions enumerate;
    enumerate.mode = SearchMode::Enumerate;
    std::size_t mismatches = 0, bad_witness = 0, falsified = 0, refuted = 0, held = 0;
    double solve_seconds = 0;
    for (Kind kind : kAllKinds) {
        std::mt19937_64 rng(9000 + static_cast<int>(kind));
        for (std::size_t t = 0; t < kInstancesPerProblem; ++t) {
            ProblemInstance inst = random_instance(rng, kind, kMaxRelu);
            auto t0 = Clock::now();
            Verdict dfs = decide(inst);
            Verdict all = decide(inst, enumerate);
            solve_seconds += since(t0);
            if (dfs.holds != all.holds) {
                ++mismatches;
                std::printf("  mismatch: %s instance %zu\n", kind_name(kind), t);
            }
            // The "property violated" side: holds=false, except NNR where reaching is the witness side.
            bool existential = kind == Kind::Nnr;
            bool violated = existential ? dfs.holds : !dfs.holds;
            if (violated) {
                ++refuted;
                bool ok = dfs.witness && violates(inst, *dfs.witness);
                if (kind == Kind::Acr) {
                    const auto& acr = std::get<AcrInstance>(inst);
                    ok = dfs.label_witnesses.size() == acr.net.output_dim();
                    for (std::size_t j = 0; ok && j < dfs.label_witnesses.size(); ++j)
                        ok = violates_label(acr, j + 1, dfs.label_witnesses[j]);
                }
                if (!ok) ++bad_witness;
            } else {
                ++held;
                if (sample_falsify(inst, kFalsifyTrials, 5000 + t)) {
                    ++falsified;
                    std::printf("  falsified: %s instance %zu\n", kind_name(kind), t);
                }
            }
        }
    }
    report(1, mismatches == 0 && solve_seconds < kSolverLimitSeconds,
           fmt("%zu instances, %zu DFS/enumeration mismatches, %.1f s (limit %.0f s)",
               kInstancesPerProblem * std::size(kAllKinds), mismatches, solve_seconds, kSolverLimitSeconds));
    report(2, bad_witness == 0 && falsified == 0,
           fmt("%zu violations with %zu bad witnesses; %zu holding verdicts, %zu falsified by %zu samples", refuted,
               bad_witness, held, falsified, kFalsifyTrials));
}

void reductions() {
    ReduceOptions opts;
    std::size_t broken = 0, total = 0;
    for (std::size_t r = 0; r < kReductions.size(); ++r) {
        std::mt19937_64 rng(700 + r);
        for (std::size_t t = 0; t < kReductionRuns; ++t) {
            ReduceOptions o = opts;
            o.pure_relu = t % 4 == 3;
            auto out = run_reduction(kReductions[r], rng, o);
            ++total;
            if (out.source != out.target) {
                ++broken;
                std::printf("  %s run %zu: source %d target %d\n", std::string(kReductions[r]).c_str(), t, out.source,
                            out.target);
            }
        }
    }
    report(3, broken == 0, fmt("%zu reduction runs over %zu reductions, %zu verdicts changed", total,
                               kReductions.size(), broken));
}

void gadgets() {
    auto formulas = canonical_formulas(4, 4);
    auto t0 = Clock::now();
    std::size_t gsr_wrong = 0, lr_wrong = 0, unsat = 0;
    for (const auto& phi : formulas) {
        bool expected = !satisfiable(phi);
        unsat += expected;
        if (decide_gsr(sat3_to_gsr(phi)).holds != expected) ++gsr_wrong;
        if (decide_lr(sat3_to_lr(phi)).holds != expected) ++lr_wrong;
    }
    double seconds = since(t0);
    report(4, gsr_wrong == 0 && lr_wrong == 0 && seconds < kGadgetLimitSeconds,
           fmt("%zu formulas (%zu unsat), gsr wrong %zu, lr wrong %zu, %.1f s (limit %.0f s)", formulas.size(), unsat,
               gsr_wrong, lr_wrong, seconds, kGadgetLimitSeconds));
}

void chain() {
    auto formulas = canonical_formulas(3, kChainMaxClauses);
    auto t0 = Clock::now();
    std::size_t wrong = 0, unsat = 0;
    for (const auto& phi : formulas) {
        bool expected = !satisfiable(phi);
        unsat += expected;
        VipInstance vip = sr_to_vip(cr_to_sr(ne_to_cr(gsr_to_ne(sat3_to_gsr(phi)))));
        if (decide_vip(vip).holds != expected) {
            ++wrong;
            std::printf("  wrong:\n%s", to_dimacs(phi).c_str());
        }
    }
    report(5, wrong == 0, fmt("%zu formulas over <= 3 variables with <= %zu clauses (%zu unsat), %zu wrong, %.1f s",
                              formulas.size(), kChainMaxClauses, unsat, wrong, since(t0)));
}

// Pre-activation of every ReLU at x, in canonical order.
RatVector relu_pre(const Network& net, std::span<const Rational> x) {
    auto values = evaluate_all(net, x);
    RatVector pre;
    const auto& layers = net.computation_layers();
    for (std::size_t l = 0; l < layers.size(); ++l)
        for (const Node& node : layers[l])
            if (node.act == Activation::ReLU) {
                Rational s = node.bias;
                for (std::size_t i = 0; i < node.weights.size(); ++i) s += node.weights[i] * values[l][i];
                pre.push_back(s);
            }
    return pre;
}

// Box around an interior witness small enough that no ReLU changes phase
// inside it. Each pre-activation is affine on the cell of w; its gradient is
// read off by a difference step that stays in the cell.
std::optional<LinSpec> phase_locked_box(const Network& net, const RatVector& w) {
    RatVector pre = relu_pre(net, w);
    Rational margin;
    for (const auto& p : pre) {
        if (p.is_zero()) return std::nullopt;
        if (margin.is_zero() || p.abs() < margin) margin = p.abs();
    }
    auto pattern = pattern_of(net, w);
    std::size_t n = w.size();
    std::vector<Rational> slope_sum(pre.size());
    for (std::size_t i = 0; i < n; ++i) {
        Rational h(1);
        RatVector x = w;
        for (int tries = 0;; ++tries) {
            x[i] = w[i] + h;
            if (pattern_of(net, x) == pattern) break;
            if (tries > 60) return std::nullopt;
            h /= 2;
        }
        RatVector moved = relu_pre(net, x);
        for (std::size_t k = 0; k < pre.size(); ++k) slope_sum[k] += ((moved[k] - pre[k]) / h).abs();
    }
    Rational worst(1);
    for (const auto& s : slope_sum)
        if (s > worst) worst = s;
    Rational r = margin / (worst * 2);
    LinSpec box(n);
    for (std::size_t i = 0; i < n; ++i) {
        box.add({{i, Rational(1)}}, Relation::LE, w[i] + r);
        box.add({{i, Rational(-1)}}, Relation::LE, -(w[i] - r));
    }
    return box;
}

void certificates() {
    std::mt19937_64 rng(4242);
    std::size_t failing = 0, accepted = 0, flips = 0, rejected = 0;
    for (std::size_t t = 0; t < kVipRuns; ++t) {
        auto inst = std::get<VipInstance>(random_instance(rng, Kind::Vip, 8));
        Verdict v = decide_vip(inst);
        if (v.holds) continue;
        ++failing;
        if (v.certificate && check_certificate(inst, *v.certificate)) ++accepted;
    }
    // Flip each phase of certificates whose witness box cannot change phase.
    std::mt19937_64 rng2(4343);
    for (std::size_t t = 0; t < 10000 && flips < kFlips; ++t) {
        auto inst = std::get<VipInstance>(random_instance(rng2, Kind::Vip, 8));
        if (inst.net.relu_count() == 0) continue;
        Verdict v = decide_vip(inst);
        if (v.holds) continue;
        auto box = phase_locked_box(inst.net, *v.witness);
        if (!box) continue;
        for (const auto& row : inst.inspec.rows) box->add(row);
        VipInstance local{inst.net, *box, inst.outspec};
        Verdict lv = decide_vip(local);
        if (lv.holds || !lv.certificate || !check_certificate(local, *lv.certificate)) continue;
        for (std::size_t k = 0; k < lv.certificate->pattern.size() && flips < kFlips; ++k) {
            Certificate flipped = *lv.certificate;
            flipped.pattern[k] = flipped.pattern[k] == Phase::Active ? Phase::Inactive : Phase::Active;
            ++flips;
            if (!check_certificate(local, flipped)) ++rejected;
        }
    }
    report(6, failing > 0 && accepted == failing && flips == kFlips && rejected == flips,
           fmt("%zu failing VIP runs, %zu certificates accepted; %zu flipped certificates, %zu rejected", failing,
               accepted, flips, rejected));
}

void lp() {
    std::mt19937_64 rng(17017);
    std::size_t disagree = 0, feasible_count = 0;
    for (std::size_t t = 0; t < kLpSystems; ++t) {
        std::size_t n = 1 + rng() % 4;
        std::size_t rows = 1 + rng() % 7;
        LinSpec s(n);
        for (std::size_t r = 0; r < rows; ++r) {
            auto rel = static_cast<Relation>(rng() % 5 == 0 ? 2 : rng() % 2);
            s.add(LinRow{random_vector(rng, n, 3, 2), rel, random_rational(rng, 3, 2)});
        }
        auto f = feasible(s);
        if (f.feasible != fm_feasible(s) || (f.feasible && !s.satisfied_by(f.witness))) ++disagree;
        feasible_count += f.feasible;
    }
    // Degenerate corpus: Beale's cycling system plus random systems tight at the origin.
    std::size_t degenerate = 0, degenerate_bad = 0;
    LinSpec beale(4);
    beale.add({{0, Rational(1, 4)}, {1, -8}, {2, -1}, {3, 9}}, Relation::LE, 0);
    beale.add({{0, Rational(1, 2)}, {1, -12}, {2, Rational(-1, 2)}, {3, 3}}, Relation::LE, 0);
    beale.add({{2, 1}}, Relation::LE, 1);
    for (std::size_t j = 0; j < 4; ++j) beale.add({{j, -1}}, Relation::LE, 0);
    beale.add({{0, Rational(-3, 4)}, {1, 20}, {2, Rational(-1, 2)}, {3, 6}}, Relation::LT, 0);
    std::vector<LinSpec> corpus{beale};
    for (int t = 0; t < 100; ++t) {
        LinSpec s(3);
        for (int r = 0; r < 8; ++r) s.add(LinRow{random_vector(rng, 3, 2, 1), r % 3 ? Relation::LE : Relation::LT, 0});
        corpus.push_back(s);
    }
    for (const auto& s : corpus) {
        ++degenerate;
        if (feasible(s).feasible != fm_feasible(s)) ++degenerate_bad;
    }
    report(7, disagree == 0 && degenerate_bad == 0,
           fmt("%zu systems (%zu feasible), %zu disagreements with elimination; %zu degenerate systems terminated, "
               "%zu wrong",
               kLpSystems, feasible_count, disagree, degenerate, degenerate_bad));
}

void identity() {
    Network net = pad_layers(identity_network(kIdentityWidth), kIdentityLayers + 1);
    RatVector center(kIdentityWidth, Rational(1, 2));
    center[0] = Rational(1);
    LinSpec in(kIdentityWidth), out(kIdentityWidth);
    for (std::size_t i = 0; i < kIdentityWidth; ++i) {
        in.add({{i, Rational(1)}}, Relation::LE, 1);
        in.add({{i, Rational(-1)}}, Relation::LE, 1);
        out.add({{i, Rational(1)}}, Relation::LE, 2);
    }
    auto t0 = Clock::now();
    std::vector<std::pair<const char*, Verdict>> runs{
        {"vip", decide_vip({net, in, out})},
        {"ne", decide_ne({net, identity_network(kIdentityWidth)})},
        {"sr", decide_sr({net, Metric::Linf, Rational(1), Rational(1), center})},
        {"cr", decide_cr({net, Metric::Linf, Rational(1, 4), center, 1, false})},
        {"lr", decide_lr({net, Metric::Linf, Rational(1), Rational(1), center})},
    };
    double seconds = since(t0);
    bool ok = seconds < kIdentityLimitSeconds;
    std::string detail = fmt("%zu nodes;", net.node_count() - kIdentityWidth);
    for (const auto& [name, v] : runs) {
        ok = ok && v.holds && v.stats.patterns_explored == 1;
        detail += fmt(" %s holds=%d patterns=%zu;", name, v.holds, v.stats.patterns_explored);
    }
    report(8, ok, detail + fmt(" %.3f s (limit %.0f s)", seconds, kIdentityLimitSeconds));
}

void examples() {
    Verdict ne = decide_ne({example_n(), example_m()});
    Verdict nece_n = decide_nece(example_n(), {NodeRef{1, 0}});
    bool witness_ok = nece_n.witness && (*nece_n.witness)[0] > Rational(0);
    Verdict nece_k = decide_nece(example_k(), {NodeRef{1, 0}, NodeRef{1, 1}});
    AneceResult anece_n = decide_anece(example_n());
    AneceResult anece_k = decide_anece(example_k());
    bool ok = ne.holds && nece_n.holds && witness_ok && !nece_k.holds && anece_n.holds && !anece_k.holds;
    report(9, ok,
           fmt("NE(N,M)=%d NECE(N,{y11})=%d witness x=%s NECE(K,{y11,y12})=%d ANECE(N)=%d ANECE(K)=%d", ne.holds,
               nece_n.holds, nece_n.witness ? (*nece_n.witness)[0].str().c_str() : "none", nece_k.holds,
               anece_n.holds, anece_k.holds));
}

void id_elimination() {
    std::mt19937_64 rng(1010);
    std::size_t differ = 0, points = 0;
    for (std::size_t t = 0; t < kIdNets; ++t) {
        NetShape shape;
        shape.input_dim = 1 + rng() % 3;
        shape.output_dim = 1 + rng() % 2;
        shape.hidden = {1 + rng() % 4, 1 + rng() % 4};
        shape.id_fraction = 0.5;
        Network net = random_network(rng, shape);
        Network converted = id_to_relu(net);
        if (converted.has_hidden_id()) ++differ;
        for (std::size_t p = 0; p < kIdPoints; ++p) {
            RatVector x = random_vector(rng, shape.input_dim, 6, 5);
            ++points;
            if (evaluate(net, x) != evaluate(converted, x)) ++differ;
        }
    }
    report(10, differ == 0, fmt("%zu nets, %zu points, %zu differences", kIdNets, points, differ));
}

}  // namespace

int main() {
    const std::vector<std::pair<int, std::function<void()>>> criteria{
        {1, solver_and_witnesses}, {3, reductions}, {4, gadgets},        {5, chain},        {6, certificates},
        {7, lp},                   {8, identity},   {9, examples},       {10, id_elimination},
    };
    for (const auto& [id, run] : criteria) {
        try {
            run();
        } catch (const std::exception& e) {
            report(id, false, std::string("exception: ") + e.what());
        }
    }
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
