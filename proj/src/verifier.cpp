#include "nnv/verifier.hpp"

#include "query.hpp"

#include "nnv/lp.hpp"

#include <random>
#include <stdexcept>
#include <string>

namespace nnv {

using detail::Branch;
using detail::Query;
using detail::RowBuilder;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

const Rational kZero(0);

/// A query plus the number of leading base variables that form the witness.
struct Encoded {
    Query query;
    std::size_t witness_dim = 0;
    /// True when the property holds without any search (e.g. delta = inf).
    bool trivially_holds = false;
};

Query ball_query(Network net, const BallSpec& ball) {
    std::size_t n = net.input_dim();
    Query q = detail::make_query(std::move(net), ball.aux_count, ball.spec);
    if (!ball.eps.is_infinite() && ball.metric == Metric::L1) {
        const Rational& e = ball.eps.value();
        for (std::size_t i = 0; i < n; ++i) {
            q.lo[i] = ball.center[i] - e;
            q.hi[i] = ball.center[i] + e;
            q.lo[n + i] = Rational(0);
            q.hi[n + i] = e;
        }
    }
    return q;
}

/// Rows |a_k - b_k| <= eps for two blocks of variables of the same query.
LinSpec linked_domain(std::size_t n, const ExtRational& eps) {
    LinSpec spec(2 * n);
    if (eps.is_infinite()) return spec;
    for (std::size_t k = 0; k < n; ++k) {
        spec.add({{k, Rational(1)}, {n + k, Rational(-1)}}, Relation::LE, eps.value());
        spec.add({{k, Rational(-1)}, {n + k, Rational(1)}}, Relation::LE, eps.value());
    }
    return spec;
}

std::string sign_char(int s) { return s > 0 ? "+" : "-"; }

void require_linf(Metric m, const char* problem) {
    if (m != Metric::Linf) throw std::invalid_argument(std::string(problem) + " supports only the linf metric");
}

/// Branches "sigma * (N(x) - ref)_i > rhs" for every output i and sign sigma.
/// `ref` is either a constant vector or, when `ref_offset` is set, a second block of outputs.
void add_deviation_branches(Query& q, std::size_t out_dim, std::size_t m, const RatVector* ref,
                            std::optional<std::size_t> ref_offset, const Rational& rhs) {
    for (std::size_t i = 0; i < m; ++i) {
        for (int s : {1, -1}) {
            RowBuilder rb(q.base_dim, out_dim);
            Rational sigma(s);
            // -(sigma * (o_i - ref_i)) + rhs < 0
            rb.out(i, -sigma);
            if (ref_offset) rb.out(*ref_offset + i, sigma);
            else rb.constant(sigma * (*ref)[i]);
            rb.constant(rhs);
            q.branches.push_back(Branch{{rb.build(Relation::LT)}, "out " + std::to_string(i + 1) + " " + sign_char(s)});
        }
    }
}

/// Lipschitz branches: input coordinate j with sign sigma is the max deviation
/// s = sigma * (x_j - c_j); output i with sign tau exceeds lip * s.
/// Input deviation is x - center (constant) or x - y (second block at x_offset).
void add_lipschitz_branches(Query& q, std::size_t out_dim, std::size_t n, std::size_t m, const RatVector* center,
                            const RatVector* ref, std::optional<std::size_t> second, const Rational& lip) {
    auto deviation = [&](RowBuilder& rb, std::size_t k, const Rational& c) {
        rb.var(k, c);
        if (second) rb.var(*second + k, -c);
        else rb.constant(-c * (*center)[k]);
    };
    for (std::size_t j = 0; j < n; ++j) {
        for (int sj : {1, -1}) {
            Rational sigma(sj);
            std::vector<LinRow> rows;
            for (std::size_t k = 0; k < n; ++k) {
                for (int sk : {1, -1}) {
                    // sk * dev_k - sigma * dev_j <= 0
                    RowBuilder rb(q.base_dim, out_dim);
                    deviation(rb, k, Rational(sk));
                    deviation(rb, j, -sigma);
                    rows.push_back(rb.build(Relation::LE));
                }
            }
            for (std::size_t i = 0; i < m; ++i) {
                for (int si : {1, -1}) {
                    Rational tau(si);
                    // -(tau * (o_i - ref_i)) + lip * sigma * dev_j < 0
                    RowBuilder rb(q.base_dim, out_dim);
                    rb.out(i, -tau);
                    if (second) rb.out(m + i, tau);
                    else rb.constant(tau * (*ref)[i]);
                    deviation(rb, j, lip * sigma);
                    auto branch_rows = rows;
                    branch_rows.push_back(rb.build(Relation::LT));
                    q.branches.push_back(Branch{std::move(branch_rows), "in " + std::to_string(j + 1) + sign_char(sj) +
                                                                            " out " + std::to_string(i + 1) +
                                                                            sign_char(si)});
                }
            }
        }
    }
}

Encoded encode_cr(const Network& net, Metric metric, const ExtRational& eps, const RatVector& center,
                  std::size_t label, bool strict) {
    BallSpec ball = ball_spec(metric, center, eps);
    Encoded e{ball_query(net, ball), net.input_dim()};
    std::size_t m = net.output_dim();
    for (std::size_t i = 0; i < m; ++i) {
        if (i == label - 1) continue;
        // o_i - o_j > 0 (weak) or >= 0 (strict argmax)
        RowBuilder rb(e.query.base_dim, m);
        rb.out(label - 1, 1).out(i, -1);
        e.query.branches.push_back(
            Branch{{rb.build(strict ? Relation::LE : Relation::LT)}, "out " + std::to_string(i + 1) + " beats label"});
    }
    return e;
}

Encoded encode(const ProblemInstance& inst) {
    return std::visit(
        overloaded{
            [](const NnrInstance& p) {
                Encoded e{detail::make_query(p.net, 0, p.inspec), p.net.input_dim()};
                Branch b{{}, "outspec"};
                for (const auto& row : p.outspec.rows) {
                    LinRow r{RatVector(p.net.input_dim()), row.rel, row.rhs};
                    r.coeffs.insert(r.coeffs.end(), row.coeffs.begin(), row.coeffs.end());
                    b.rows.push_back(std::move(r));
                }
                e.query.branches.push_back(std::move(b));
                return e;
            },
            [](const VipInstance& p) {
                Encoded e{detail::make_query(p.net, 0, p.inspec), p.net.input_dim()};
                for (std::size_t r = 0; r < p.outspec.rows.size(); ++r) {
                    auto negs = negate_row(p.outspec.rows[r]);
                    for (std::size_t k = 0; k < negs.size(); ++k) {
                        LinRow row{RatVector(p.net.input_dim()), negs[k].rel, negs[k].rhs};
                        row.coeffs.insert(row.coeffs.end(), negs[k].coeffs.begin(), negs[k].coeffs.end());
                        std::string label = "not row " + std::to_string(r + 1);
                        if (negs.size() > 1) label += k == 0 ? " (below)" : " (above)";
                        e.query.branches.push_back(Branch{{std::move(row)}, std::move(label)});
                    }
                }
                return e;
            },
            [](const NeInstance& p) {
                std::size_t n = p.net1.input_dim();
                std::size_t m = p.net1.output_dim();
                Encoded e{detail::make_query(stack_parallel(p.net1, p.net2, true), 0, LinSpec(n)), n};
                add_deviation_branches(e.query, 2 * m, m, nullptr, m, kZero);
                return e;
            },
            [](const SrInstance& p) {
                std::size_t m = p.net.output_dim();
                RatVector ref = evaluate(p.net, p.center);
                BallSpec ball = ball_spec(p.metric, p.center, p.eps);
                if (p.delta.is_infinite()) {
                    Encoded e{ball_query(p.net, ball), p.net.input_dim()};
                    e.trivially_holds = true;
                    return e;
                }
                const Rational& delta = p.delta.value();
                if (p.metric == Metric::Linf) {
                    Encoded e{ball_query(p.net, ball), p.net.input_dim()};
                    add_deviation_branches(e.query, m, m, &ref, std::nullopt, delta);
                    return e;
                }
                // L1: sum_i |N(x)_i - N(c)_i| > delta through an abs-sum gadget.
                Layer shift;
                for (std::size_t i = 0; i < m; ++i) {
                    RatVector w(m);
                    w[i] = 1;
                    shift.push_back(Node{Activation::Id, -ref[i], std::move(w)});
                }
                Network gadget = append_abs_sum(append_layer(p.net, std::move(shift)));
                Encoded e{ball_query(std::move(gadget), ball), p.net.input_dim()};
                RowBuilder rb(e.query.base_dim, 1);
                rb.out(0, -1).constant(delta);
                e.query.branches.push_back(Branch{{rb.build(Relation::LT)}, "l1 deviation"});
                return e;
            },
            [](const CrInstance& p) {
                return encode_cr(p.net, p.metric, p.eps, p.center, p.label, p.strict_argmax);
            },
            [](const AcrInstance&) -> Encoded {
                throw std::invalid_argument("acr has no single-query encoding; use decide_acr");
            },
            [](const LrInstance& p) {
                require_linf(p.metric, "lr");
                std::size_t n = p.net.input_dim();
                std::size_t m = p.net.output_dim();
                RatVector ref = evaluate(p.net, p.center);
                Encoded e{ball_query(p.net, ball_spec(p.metric, p.center, p.eps)), n};
                add_lipschitz_branches(e.query, m, n, m, &p.center, &ref, std::nullopt, p.lip);
                return e;
            },
            [](const GsrInstance& p) {
                require_linf(p.metric, "gsr");
                std::size_t n = p.net.input_dim();
                std::size_t m = p.net.output_dim();
                Encoded e{detail::make_query(stack_parallel(p.net, p.net, false), 0, linked_domain(n, p.eps)), 2 * n};
                if (p.delta.is_infinite()) e.trivially_holds = true;
                else add_deviation_branches(e.query, 2 * m, m, nullptr, m, p.delta.value());
                return e;
            },
            [](const GlrInstance& p) {
                require_linf(p.metric, "glr");
                std::size_t n = p.net.input_dim();
                std::size_t m = p.net.output_dim();
                Encoded e{detail::make_query(stack_parallel(p.net, p.net, false), 0, linked_domain(n, p.eps)), 2 * n};
                add_lipschitz_branches(e.query, 2 * m, n, m, nullptr, nullptr, n, p.lip);
                return e;
            },
        },
        inst);
}

RatVector around(std::mt19937_64& rng, std::span<const Rational> center, Metric metric, const ExtRational& eps);

/// Runs the search. For NNR a hit means the property holds; otherwise it is a counterexample.
Verdict run(const ProblemInstance& inst, const SearchOptions& opts) {
    validate(inst);
    Encoded e = encode(inst);
    Verdict v;
    bool existential = std::holds_alternative<NnrInstance>(inst);
    if (e.trivially_holds) {
        v.holds = true;
        return v;
    }
    if (opts.mode == SearchMode::Dfs && opts.sample_trials > 0) {
        if (auto w = sample_falsify(inst, opts.sample_trials, opts.seed)) {
            ActivationPattern pattern =
                pattern_of(e.query.net, std::span<const Rational>(w->data(), e.query.net.input_dim()));
            v.stats.patterns_explored = 1;
            // Without auxiliary variables the branch can be read off the point itself.
            std::vector<std::size_t> candidates;
            if (e.query.base_dim == w->size()) {
                RatVector full = *w;
                RatVector out = evaluate(e.query.net, std::span<const Rational>(w->data(), e.query.net.input_dim()));
                full.insert(full.end(), out.begin(), out.end());
                for (std::size_t b = 0; b < e.query.branches.size(); ++b) {
                    LinSpec rows(full.size());
                    rows.rows = e.query.branches[b].rows;
                    if (rows.satisfied_by(full)) {
                        candidates.push_back(b);
                        break;
                    }
                }
            } else {
                for (std::size_t b = 0; b < e.query.branches.size(); ++b) candidates.push_back(b);
            }
            for (std::size_t b : candidates) {
                ++v.stats.lp_count;
                if (!detail::solve_pattern(e.query, pattern, b)) continue;
                v.holds = existential;
                v.witness = std::move(*w);
                if (!existential) v.certificate = Certificate{std::move(pattern), b, e.query.branches[b].label};
                return v;
            }
            throw std::logic_error("internal error: sampled counterexample lies in no branch of its pattern");
        }
    }
    auto result = detail::search(e.query, opts);
    v.stats = result.stats;
    if (!result.hit) {
        v.holds = !existential;
        return v;
    }
    auto& hit = *result.hit;
    RatVector w(hit.point.begin(), hit.point.begin() + static_cast<std::ptrdiff_t>(e.witness_dim));
    if (!violates(inst, w))
        throw std::logic_error("internal error: search produced a point that does not exhibit the property");
    v.holds = existential;
    v.witness = std::move(w);
    if (!existential)
        v.certificate = Certificate{std::move(hit.pattern), hit.branch, e.query.branches[hit.branch].label};
    return v;
}

}  // namespace

Verdict decide_nnr(const NnrInstance& inst, const SearchOptions& opts) { return run(inst, opts); }
Verdict decide_vip(const VipInstance& inst, const SearchOptions& opts) { return run(inst, opts); }
Verdict decide_ne(const NeInstance& inst, const SearchOptions& opts) { return run(inst, opts); }
Verdict decide_sr(const SrInstance& inst, const SearchOptions& opts) { return run(inst, opts); }
Verdict decide_cr(const CrInstance& inst, const SearchOptions& opts) { return run(inst, opts); }
Verdict decide_lr(const LrInstance& inst, const SearchOptions& opts) { return run(inst, opts); }
Verdict decide_gsr(const GsrInstance& inst, const SearchOptions& opts) {
    if (opts.mode != SearchMode::Dfs || !inst.eps.is_infinite() || inst.delta.is_infinite()) return run(inst, opts);
    validate(inst);
    require_linf(inst.metric, "gsr");
    // With unlinked copies the property says N_i(x) <= inf N_i + delta everywhere, per output.
    const std::size_t n = inst.net.input_dim();
    const std::size_t m = inst.net.output_dim();
    const Rational& delta = inst.delta.value();
    Query single = detail::make_query(inst.net, 0, LinSpec(n));
    std::mt19937_64 rng(opts.seed);
    std::vector<RatVector> samples{RatVector(n)};
    for (std::size_t t = 0; t < opts.sample_trials; ++t)
        samples.push_back(around(rng, samples.front(), Metric::Linf, ExtRational(Rational(t % 2 ? 16 : 2))));
    std::vector<RatVector> values;
    for (const auto& x : samples) values.push_back(evaluate(inst.net, x));

    Verdict v;
    // A pair (x, y) with N_i(x) - N_i(y) > delta, if output i has one.
    auto violation = [&](std::size_t i) -> std::optional<std::pair<RatVector, RatVector>> {
        std::size_t arg_hi = 0, arg_lo = 0;
        for (std::size_t t = 1; t < samples.size(); ++t) {
            if (values[t][i] > values[arg_hi][i]) arg_hi = t;
            if (values[t][i] < values[arg_lo][i]) arg_lo = t;
        }
        if (values[arg_hi][i] - values[arg_lo][i] > delta) return std::pair{samples[arg_hi], samples[arg_lo]};
        RatVector down(n + m);
        down[n + i] = 1;
        Rational target = values[arg_hi][i] - delta;
        auto lo = detail::minimize(single, down, &v.stats, &samples[arg_lo], &target);
        if (!lo.unbounded && values[arg_hi][i] - *lo.value > delta) return std::pair{samples[arg_hi], lo.point};
        // The minimum is exact here. Search above it, or below the best sample when unbounded.
        Query far = single;
        RowBuilder rb(n, m);
        int s = lo.unbounded ? -1 : 1;
        Rational ref = lo.unbounded ? values[arg_hi][i] : *lo.value;
        rb.out(i, Rational(-s)).constant(Rational(s) * ref + delta);
        far.branches.push_back(Branch{{rb.build(Relation::LT)}, "far"});
        auto r = detail::search(far, opts);
        v.stats.lp_count += r.stats.lp_count;
        v.stats.nodes_visited += r.stats.nodes_visited;
        v.stats.patterns_explored += r.stats.patterns_explored;
        if (!r.hit) {
            if (lo.unbounded) throw std::logic_error("internal error: unbounded output without a distant point");
            return std::nullopt;
        }
        if (lo.unbounded) return std::pair{samples[arg_hi], r.hit->point};
        return std::pair{r.hit->point, lo.point};
    };
    for (std::size_t i = 0; i < m; ++i) {
        auto pair = violation(i);
        if (!pair) continue;
        RatVector w = pair->first;
        w.insert(w.end(), pair->second.begin(), pair->second.end());
        if (!violates(inst, w))
            throw std::logic_error("internal error: search produced a point that does not exhibit the property");
        Encoded e = encode(inst);
        Certificate cert{pattern_of(e.query.net, w), 2 * i, e.query.branches[2 * i].label};
        ++v.stats.lp_count;
        if (!detail::solve_pattern(e.query, cert.pattern, cert.branch))
            throw std::logic_error("internal error: certificate of a separable witness does not check");
        v.holds = false;
        v.witness = std::move(w);
        v.certificate = std::move(cert);
        return v;
    }
    v.holds = true;
    return v;
}

Verdict decide_glr(const GlrInstance& inst, const SearchOptions& opts) { return run(inst, opts); }

Verdict decide_acr(const AcrInstance& inst, const SearchOptions& opts) {
    validate(inst);
    Verdict v;
    for (std::size_t j = 1; j <= inst.net.output_dim(); ++j) {
        CrInstance cr{inst.net, inst.metric, inst.eps, inst.center, j, inst.strict_argmax};
        Verdict c = decide_cr(cr, opts);
        v.stats.lp_count += c.stats.lp_count;
        v.stats.patterns_explored += c.stats.patterns_explored;
        v.stats.nodes_visited += c.stats.nodes_visited;
        if (c.holds) {
            v.holds = true;
            v.label_witnesses.clear();
            return v;
        }
        v.label_witnesses.push_back(std::move(*c.witness));
    }
    v.holds = false;
    v.witness = v.label_witnesses.front();
    return v;
}

Verdict decide(const ProblemInstance& inst, const SearchOptions& opts) {
    if (auto* acr = std::get_if<AcrInstance>(&inst)) return decide_acr(*acr, opts);
    return run(inst, opts);
}

bool check_certificate(const ProblemInstance& inst, const Certificate& cert) {
    if (std::holds_alternative<AcrInstance>(inst))
        throw std::invalid_argument("acr failures are certified per label; check the cr certificates instead");
    validate(inst);
    Encoded e = encode(inst);
    return detail::solve_pattern(e.query, cert.pattern, cert.branch).has_value();
}

namespace {

Rational random_unit(std::mt19937_64& rng) {
    // Uniform-ish rational in [-1, 1] with a random denominator; endpoints included.
    std::uniform_int_distribution<long> den_dist(1, 64);
    long den = den_dist(rng);
    std::uniform_int_distribution<long> num_dist(-den, den);
    return Rational(num_dist(rng), den);
}

RatVector around(std::mt19937_64& rng, std::span<const Rational> center, Metric metric, const ExtRational& eps) {
    std::size_t n = center.size();
    Rational radius = eps.is_infinite() ? Rational(16) : eps.value();
    RatVector x(center.begin(), center.end());
    if (n == 0) return x;
    std::bernoulli_distribution corner(0.2);
    if (metric == Metric::Linf) {
        for (std::size_t i = 0; i < n; ++i) {
            Rational u = corner(rng) ? Rational(random_unit(rng).sign() >= 0 ? 1 : -1) : random_unit(rng);
            x[i] += radius * u;
        }
        return x;
    }
    // L1: random weights normalised to total at most 1.
    RatVector u(n);
    Rational total(0);
    for (auto& v : u) {
        v = random_unit(rng);
        total += v.abs();
    }
    if (total.is_zero()) return x;
    Rational scale = corner(rng) ? Rational(1) : random_unit(rng).abs();
    for (std::size_t i = 0; i < n; ++i) x[i] += radius * scale * u[i] / total;
    return x;
}

/// Bounding box of a spec from its single-variable rows, defaulting to [-16, 16].
std::pair<RatVector, RatVector> spec_box(const LinSpec& spec) {
    RatVector lo(spec.dim, Rational(-16)), hi(spec.dim, Rational(16));
    std::vector<bool> has_lo(spec.dim), has_hi(spec.dim);
    for (const auto& row : spec.rows) {
        std::size_t var = spec.dim, count = 0;
        for (std::size_t i = 0; i < spec.dim; ++i)
            if (!row.coeffs[i].is_zero()) var = i, ++count;
        if (count != 1) continue;
        Rational v = row.rhs / row.coeffs[var];
        bool upper = row.coeffs[var].sign() > 0;
        if (row.rel == Relation::EQ || upper) {
            if (!has_hi[var] || v < hi[var]) hi[var] = v;
            has_hi[var] = true;
        }
        if (row.rel == Relation::EQ || !upper) {
            if (!has_lo[var] || v > lo[var]) lo[var] = v;
            has_lo[var] = true;
        }
    }
    for (std::size_t i = 0; i < spec.dim; ++i) {
        if (has_lo[i] && !has_hi[i]) hi[i] = lo[i] + 32;
        if (has_hi[i] && !has_lo[i]) lo[i] = hi[i] - 32;
    }
    return {lo, hi};
}

RatVector in_box(std::mt19937_64& rng, const RatVector& lo, const RatVector& hi) {
    RatVector x(lo.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        Rational t = (random_unit(rng) + 1) / 2;
        x[i] = lo[i] + t * (hi[i] - lo[i]);
    }
    return x;
}

}  // namespace

std::optional<RatVector> sample_falsify(const ProblemInstance& inst, std::size_t trials, std::uint64_t seed) {
    validate(inst);
    std::mt19937_64 rng(seed);
    return std::visit(
        overloaded{
            [&](const AcrInstance& p) -> std::optional<RatVector> {
                // Fails only if every label has a violating sample.
                std::size_t m = p.net.output_dim();
                std::vector<std::optional<RatVector>> found(m);
                for (std::size_t t = 0; t < trials; ++t) {
                    RatVector x = t == 0 ? p.center : around(rng, p.center, p.metric, p.eps);
                    for (std::size_t j = 0; j < m; ++j)
                        if (!found[j] && violates_label(p, j + 1, x)) found[j] = x;
                }
                for (const auto& f : found)
                    if (!f) return std::nullopt;
                return found.front();
            },
            [&](const auto& p) -> std::optional<RatVector> {
                using T = std::decay_t<decltype(p)>;
                std::optional<RatVector> anchor;
                std::pair<RatVector, RatVector> box;
                if constexpr (std::is_same_v<T, NnrInstance> || std::is_same_v<T, VipInstance>) {
                    box = spec_box(p.inspec);
                    auto f = feasible(p.inspec);
                    if (f.feasible) anchor = f.witness;
                }
                for (std::size_t t = 0; t < trials; ++t) {
                    RatVector x;
                    if constexpr (std::is_same_v<T, NnrInstance> || std::is_same_v<T, VipInstance>) {
                        x = in_box(rng, box.first, box.second);
                        if (anchor && t % 2 == 1) {
                            // Mix towards a known feasible point to land inside thin polytopes.
                            Rational a = (random_unit(rng) + 1) / 2;
                            for (std::size_t i = 0; i < x.size(); ++i) x[i] = a * x[i] + (1 - a) * (*anchor)[i];
                        }
                        if (anchor && t == 0) x = *anchor;
                    } else if constexpr (std::is_same_v<T, NeInstance>) {
                        x = around(rng, RatVector(p.net1.input_dim()), Metric::Linf, ExtRational::infinity());
                    } else if constexpr (std::is_same_v<T, GsrInstance> || std::is_same_v<T, GlrInstance>) {
                        std::size_t n = p.net.input_dim();
                        RatVector a = around(rng, RatVector(n), Metric::Linf, ExtRational::infinity());
                        RatVector b = around(rng, a, p.metric, p.eps);
                        x = a;
                        x.insert(x.end(), b.begin(), b.end());
                    } else {
                        x = around(rng, p.center, p.metric, p.eps);
                    }
                    if (violates(inst, x)) return x;
                }
                return std::nullopt;
            },
        },
        inst);
}

}  // namespace nnv
