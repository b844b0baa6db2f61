#include "nnv/reductions.hpp"

#include <charconv>
#include <sstream>
#include <stdexcept>

namespace nnv {

namespace {

Node id_node(RatVector weights, Rational bias = Rational(0)) { return Node{Activation::Id, std::move(bias), std::move(weights)}; }
Node relu_node(RatVector weights, Rational bias = Rational(0)) {
    return Node{Activation::ReLU, std::move(bias), std::move(weights)};
}

RatVector unit(std::size_t width, std::size_t i, const Rational& c = Rational(1)) {
    RatVector w(width);
    w[i] = c;
    return w;
}

Network finish(Network net, const ReduceOptions& opts) { return opts.pure_relu ? id_to_relu(net) : net; }

void require_linf(Metric m, const char* what) {
    if (m != Metric::Linf) throw std::invalid_argument(std::string(what) + " requires the linf metric");
}

/// (N(x), x) on shared input x.
Network with_input_copy(const Network& net) { return stack_parallel(net, identity_network(net.input_dim()), true); }

}  // namespace

VipInstance sr_to_vip(const SrInstance& inst, const ReduceOptions& opts) {
    validate(inst);
    require_linf(inst.metric, "sr2vip");
    std::size_t n = inst.net.input_dim();
    std::size_t m = inst.net.output_dim();
    Network doubled = finish(stack_parallel(inst.net, inst.net, false), opts);
    LinSpec in(2 * n);
    for (std::size_t k = 0; k < n; ++k) {
        in.add({{k, Rational(1)}}, Relation::EQ, inst.center[k]);
        if (!inst.eps.is_infinite()) {
            in.add({{k, Rational(1)}, {n + k, Rational(-1)}}, Relation::LE, inst.eps.value());
            in.add({{k, Rational(-1)}, {n + k, Rational(1)}}, Relation::LE, inst.eps.value());
        }
    }
    LinSpec out(2 * m);
    if (!inst.delta.is_infinite()) {
        for (std::size_t i = 0; i < m; ++i) {
            out.add({{i, Rational(1)}, {m + i, Rational(-1)}}, Relation::LE, inst.delta.value());
            out.add({{i, Rational(-1)}, {m + i, Rational(1)}}, Relation::LE, inst.delta.value());
        }
    }
    return VipInstance{std::move(doubled), std::move(in), std::move(out)};
}

VipInstance cr_to_vip(const CrInstance& inst, const ReduceOptions& opts) {
    validate(inst);
    require_linf(inst.metric, "cr2vip");
    std::size_t n = inst.net.input_dim();
    std::size_t m = inst.net.output_dim();
    LinSpec in(n);
    if (!inst.eps.is_infinite()) {
        for (std::size_t k = 0; k < n; ++k) {
            in.add({{k, Rational(1)}}, Relation::LE, inst.center[k] + inst.eps.value());
            in.add({{k, Rational(-1)}}, Relation::LE, -(inst.center[k] - inst.eps.value()));
        }
    }
    LinSpec out(m);
    std::size_t j = inst.label - 1;
    for (std::size_t i = 0; i < m; ++i) {
        if (i == j) continue;
        out.add({{i, Rational(1)}, {j, Rational(-1)}}, inst.strict_argmax ? Relation::LT : Relation::LE, 0);
    }
    return VipInstance{finish(inst.net, opts), std::move(in), std::move(out)};
}

CrInstance sr_to_cr(const SrInstance& inst, const ReduceOptions& opts) {
    validate(inst);
    require_linf(inst.metric, "sr2cr");
    std::size_t n = inst.net.input_dim();
    std::size_t m = inst.net.output_dim();
    if (inst.delta.is_infinite())
        return CrInstance{zero_network(n, 2 * m + 1), inst.metric, inst.eps, inst.center, 2 * m + 1};
    Network both = stack_parallel(inst.net, freeze_input(inst.net, inst.center), true);
    Layer out;
    for (std::size_t i = 0; i < m; ++i) {
        RatVector w(2 * m);
        w[i] = 1;
        w[m + i] = -1;
        out.push_back(id_node(w));
    }
    for (std::size_t i = 0; i < m; ++i) {
        RatVector w(2 * m);
        w[i] = -1;
        w[m + i] = 1;
        out.push_back(id_node(w));
    }
    out.push_back(id_node({}, inst.delta.value()));
    Network net = finish(append_layer(both, std::move(out)), opts);
    return CrInstance{std::move(net), inst.metric, inst.eps, inst.center, 2 * m + 1};
}

SrInstance cr_to_sr(const CrInstance& inst, const ReduceOptions& opts) {
    validate(inst);
    if (inst.strict_argmax) throw std::invalid_argument("cr2sr supports weak maximality only");
    std::size_t n = inst.net.input_dim();
    std::size_t m = inst.net.output_dim();
    std::size_t j = inst.label - 1;
    if (!inst.eps.is_infinite() && inst.eps.value().is_zero()) {
        // A radius-0 ball is a single point, so every SR instance on it holds;
        // decide CR at the center and emit a fixed instance with that verdict.
        RatVector y = evaluate(inst.net, inst.center);
        bool holds = true;
        for (std::size_t i = 0; i < m; ++i) holds = holds && y[i] <= y[j];
        if (holds) return SrInstance{zero_network(n, 1), inst.metric, inst.eps, Rational(0), inst.center};
        std::size_t dim = std::max<std::size_t>(n, 1);
        Network first(dim, {Layer{id_node(unit(dim, 0))}});
        return SrInstance{std::move(first), inst.metric, Rational(1), Rational(0), RatVector(dim)};
    }
    Network base = with_input_copy(inst.net);  // (N(x), x)
    std::size_t w0 = m + n;
    Layer a;
    for (std::size_t i = 0; i < m; ++i) {
        if (i == j) continue;
        RatVector w(w0);
        w[i] = 1;
        w[j] = -1;
        a.push_back(relu_node(std::move(w)));
    }
    std::size_t alphas = a.size();
    for (std::size_t k = 0; k < n; ++k) {
        a.push_back(relu_node(unit(w0, m + k), -inst.center[k]));
        a.push_back(relu_node(unit(w0, m + k, Rational(-1)), inst.center[k]));
    }
    std::size_t w1 = a.size();
    RatVector beta_w(w1), f_w(w1);
    for (std::size_t i = 0; i < alphas; ++i) beta_w[i] = 1;
    for (std::size_t i = alphas; i < w1; ++i) f_w[i] = 1;
    Layer b{relu_node(beta_w), relu_node(f_w)};
    Layer out{id_node({1, 0}), relu_node({1, -1})};
    Network net = append_layer(append_layer(append_layer(base, std::move(a)), std::move(b)), std::move(out));
    return SrInstance{finish(std::move(net), opts), inst.metric, inst.eps, Rational(0), inst.center};
}

std::vector<CrInstance> acr_to_cr(const AcrInstance& inst) {
    validate(inst);
    std::vector<CrInstance> out;
    for (std::size_t j = 1; j <= inst.net.output_dim(); ++j)
        out.push_back(CrInstance{inst.net, inst.metric, inst.eps, inst.center, j, inst.strict_argmax});
    return out;
}

AcrInstance cr_to_acr(const CrInstance& inst, const ReduceOptions& opts) {
    validate(inst);
    if (inst.strict_argmax) throw std::invalid_argument("cr2acr supports weak maximality only");
    if (!inst.eps.is_infinite() && inst.eps.value().is_zero())
        throw std::invalid_argument("cr2acr needs eps > 0 (no 0 < d < eps exists)");
    std::size_t n = inst.net.input_dim();
    if (n == 0) throw std::invalid_argument("cr2acr needs at least one input");
    std::size_t m = inst.net.output_dim();
    std::size_t j = inst.label - 1;
    Rational d = inst.eps.is_infinite() ? Rational(1) : inst.eps.value() / 2;

    Network base = with_input_copy(inst.net);  // (N(x), x)
    std::size_t w0 = m + n;
    Layer a;
    for (std::size_t i = 0; i < m; ++i) {
        if (i == j) continue;
        RatVector w(w0);
        w[i] = 1;
        w[j] = -1;
        a.push_back(relu_node(std::move(w)));
    }
    std::size_t alphas = a.size();
    a.push_back(relu_node(unit(w0, m), -inst.center[0]));
    a.push_back(relu_node(unit(w0, m, Rational(-1)), inst.center[0]));
    std::size_t w1 = a.size();
    RatVector sum(w1);
    for (std::size_t i = 0; i < alphas; ++i) sum[i] = 1;
    // f, ReLU(f - 1), and the two one-sided distances carried forward.
    Layer b{relu_node(sum), relu_node(sum, Rational(-1)), relu_node(unit(w1, alphas)), relu_node(unit(w1, alphas + 1))};
    Rational k = Rational(2) / d;
    Layer out{id_node({}), id_node({1, -1, -k, 0}), id_node({1, -1, 0, -k})};
    Network net = append_layer(append_layer(append_layer(base, std::move(a)), std::move(b)), std::move(out));
    return AcrInstance{finish(std::move(net), opts), inst.metric, inst.eps, inst.center, false};
}

CrInstance ne_to_cr(const NeInstance& inst, const ReduceOptions& opts) {
    validate(inst);
    std::size_t n = inst.net1.input_dim();
    std::size_t m = inst.net1.output_dim();
    Network both = stack_parallel(inst.net1, inst.net2, true);
    Layer out;
    for (int s : {1, -1}) {
        for (std::size_t i = 0; i < m; ++i) {
            RatVector w(2 * m);
            w[i] = s;
            w[m + i] = -s;
            out.push_back(id_node(std::move(w)));
        }
    }
    out.push_back(id_node({}));
    Network net = finish(append_layer(both, std::move(out)), opts);
    return CrInstance{std::move(net), Metric::Linf, ExtRational::infinity(), RatVector(n), 2 * m + 1};
}

NeInstance gsr_to_ne(const GsrInstance& inst, const ReduceOptions& opts) {
    validate(inst);
    require_linf(inst.metric, "gsr2ne");
    std::size_t n = inst.net.input_dim();
    std::size_t m = inst.net.output_dim();
    Network zero = zero_network(2 * n, 2 * m);
    if (inst.delta.is_infinite()) return NeInstance{zero, zero};

    Network pair = stack_parallel(inst.net, inst.net, false);  // (N(x), N(second half))
    if (!inst.eps.is_infinite()) {
        // second half := x + f(y) with f(y) = 2 eps (Psi(y) - 1/2) covering [-eps, eps].
        const Rational& e = inst.eps.value();
        Layer hidden;
        for (std::size_t k = 0; k < n; ++k) hidden.push_back(id_node(unit(2 * n, k)));
        for (std::size_t k = 0; k < n; ++k) {
            hidden.push_back(relu_node(unit(2 * n, n + k)));
            hidden.push_back(relu_node(unit(2 * n, n + k), Rational(-1)));
        }
        Layer shifted;
        for (std::size_t k = 0; k < n; ++k) shifted.push_back(id_node(unit(3 * n, k)));
        for (std::size_t k = 0; k < n; ++k) {
            RatVector w(3 * n);
            w[k] = 1;
            w[n + 2 * k] = 2 * e;
            w[n + 2 * k + 1] = -2 * e;
            shifted.push_back(id_node(std::move(w), -e));
        }
        Network squash(2 * n, {std::move(hidden), std::move(shifted)});
        pair = compose(pair, squash);
    }
    const Rational& delta = inst.delta.value();
    Layer out;
    for (std::size_t i = 0; i < m; ++i) {
        RatVector w(2 * m);
        w[m + i] = 1;
        w[i] = -1;
        out.push_back(relu_node(w, -delta));
        for (auto& c : w) c = -c;
        out.push_back(relu_node(std::move(w), -delta));
    }
    return NeInstance{finish(append_layer(pair, std::move(out)), opts), zero};
}

Cnf parse_dimacs(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    Cnf cnf;
    bool header = false;
    std::size_t declared = 0;
    std::vector<int> current;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) continue;
        if (tok == "c" || tok[0] == 'c' || tok == "%") continue;
        if (tok == "p") {
            std::string fmt;
            long v = -1, c = -1;
            if (header || !(ls >> fmt >> v >> c) || fmt != "cnf" || v < 0 || c < 0)
                throw std::invalid_argument("malformed DIMACS header: " + line);
            cnf.num_vars = static_cast<std::size_t>(v);
            declared = static_cast<std::size_t>(c);
            header = true;
            continue;
        }
        if (!header) throw std::invalid_argument("DIMACS clause before the 'p cnf' header");
        do {
            int lit = 0;
            auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), lit);
            if (ec != std::errc() || ptr != tok.data() + tok.size())
                throw std::invalid_argument("malformed DIMACS literal '" + tok + "'");
            if (lit == 0) {
                if (current.size() != 3)
                    throw std::invalid_argument("clause " + std::to_string(cnf.clauses.size() + 1) + " has " +
                                                std::to_string(current.size()) + " literals, expected 3");
                cnf.clauses.push_back({current[0], current[1], current[2]});
                current.clear();
                continue;
            }
            if (static_cast<std::size_t>(lit < 0 ? -static_cast<long>(lit) : lit) > cnf.num_vars)
                throw std::invalid_argument("literal " + tok + " exceeds the declared variable count");
            current.push_back(lit);
        } while (ls >> tok);
    }
    if (!header) throw std::invalid_argument("missing DIMACS 'p cnf' header");
    if (!current.empty()) throw std::invalid_argument("last clause is not terminated by 0");
    if (cnf.clauses.size() != declared)
        throw std::invalid_argument("header declares " + std::to_string(declared) + " clauses, found " +
                                    std::to_string(cnf.clauses.size()));
    if (cnf.clauses.empty()) throw std::invalid_argument("empty formula");
    return cnf;
}

std::string to_dimacs(const Cnf& cnf) {
    std::ostringstream out;
    out << "p cnf " << cnf.num_vars << ' ' << cnf.clauses.size() << '\n';
    for (const auto& c : cnf.clauses) out << c[0] << ' ' << c[1] << ' ' << c[2] << " 0\n";
    return out.str();
}

Network sat3_network(const Cnf& cnf) {
    std::size_t v = cnf.num_vars;
    std::size_t n = cnf.clauses.size();
    if (n == 0) throw std::invalid_argument("empty formula");
    for (const auto& c : cnf.clauses)
        for (int lit : c)
            if (lit == 0 || static_cast<std::size_t>(lit < 0 ? -lit : lit) > v)
                throw std::invalid_argument("literal out of range");
    std::vector<Layer> layers(7);
    // 1-2: alpha2 = Psi(alpha1)
    for (std::size_t k = 0; k < v; ++k) {
        layers[0].push_back(relu_node(unit(v, k)));
        layers[0].push_back(relu_node(unit(v, k), Rational(-1)));
        RatVector w(2 * v);
        w[2 * k] = 1;
        w[2 * k + 1] = -1;
        layers[1].push_back(relu_node(std::move(w)));
    }
    // 3: alpha2 and 1 - alpha2; 4: 2 ReLU(t - 1/2) for both
    for (std::size_t k = 0; k < v; ++k) {
        layers[2].push_back(relu_node(unit(v, k)));
        layers[2].push_back(relu_node(unit(v, k, Rational(-1)), Rational(1)));
        layers[3].push_back(relu_node(unit(2 * v, 2 * k, Rational(2)), Rational(-1)));
        layers[3].push_back(relu_node(unit(2 * v, 2 * k + 1, Rational(2)), Rational(-1)));
    }
    // 5-6: Psi(a + b + c) per clause; 7: sum
    for (std::size_t c = 0; c < n; ++c) {
        RatVector w(2 * v);
        for (int lit : cnf.clauses[c]) {
            std::size_t var = static_cast<std::size_t>(lit < 0 ? -lit : lit) - 1;
            w[2 * var + (lit < 0 ? 1 : 0)] += 1;
        }
        layers[4].push_back(relu_node(w));
        layers[4].push_back(relu_node(std::move(w), Rational(-1)));
        RatVector p(2 * n);
        p[2 * c] = 1;
        p[2 * c + 1] = -1;
        layers[5].push_back(relu_node(std::move(p)));
    }
    layers[6].push_back(id_node(RatVector(n, Rational(1))));
    return Network(v, std::move(layers));
}

GsrInstance sat3_to_gsr(const Cnf& cnf) {
    Rational n(static_cast<long>(cnf.clauses.size()));
    return GsrInstance{sat3_network(cnf), Metric::Linf, ExtRational::infinity(), n - Rational(1, 2)};
}

LrInstance sat3_to_lr(const Cnf& cnf) {
    Rational n(static_cast<long>(cnf.clauses.size()));
    return LrInstance{sat3_network(cnf), Metric::Linf, Rational(1, 2), 2 * n - 1, RatVector(cnf.num_vars, Rational(1, 2))};
}

GlrInstance sat3_to_glr(const Cnf& cnf) {
    Rational n(static_cast<long>(cnf.clauses.size()));
    return GlrInstance{sat3_network(cnf), Metric::Linf, Rational(1, 2), 2 * n - 1};
}

namespace {

/// Affine expression over the nodes of the previous layer.
struct Expr {
    RatVector w;
    Rational b;
};

Expr operator+(Expr a, const Expr& c) {
    for (std::size_t i = 0; i < a.w.size(); ++i) a.w[i] += c.w[i];
    a.b += c.b;
    return a;
}

Expr operator*(const Rational& k, Expr a) {
    for (auto& x : a.w) x *= k;
    a.b *= k;
    return a;
}

Expr node_expr(std::size_t width, std::size_t i) { return Expr{unit(width, i), Rational(0)}; }

}  // namespace

Network retraction_network(Metric source, const RatVector& center, const Rational& eps, RetractionMode mode) {
    if (eps.sign() < 0) throw std::invalid_argument("retraction radius must be non-negative");
    std::size_t n = center.size();
    const Rational minus(-1);
    if (source == Metric::Linf) {
        // Coordinate-wise clamp to [c - eps, c + eps].
        Layer clamp, out;
        for (std::size_t k = 0; k < n; ++k) {
            Expr u{unit(n, k), -center[k]};
            clamp.push_back(relu_node(u.w, u.b));
            clamp.push_back(relu_node(u.w, u.b - eps));
            clamp.push_back(relu_node((minus * u).w, -u.b));
            clamp.push_back(relu_node((minus * u).w, -u.b - eps));
            RatVector w(4 * n);
            w[4 * k] = 1;
            w[4 * k + 1] = -1;
            w[4 * k + 2] = -1;
            w[4 * k + 3] = 1;
            out.push_back(id_node(std::move(w), center[k]));
        }
        return Network(n, {std::move(clamp), std::move(out)});
    }

    if (n == 0) throw std::invalid_argument("retraction needs at least one input");
    // L1: coordinate i may use what is left of the budget after coordinates < i.
    std::vector<Expr> u(n), t;
    for (std::size_t k = 0; k < n; ++k) u[k] = Expr{unit(n, k), -center[k]};
    Expr s{RatVector(n), Rational(0)};
    std::vector<Layer> layers;
    for (std::size_t i = 0; i < n; ++i) {
        Layer layer;
        Expr neg = minus * u[i];
        Expr budget = s + Expr{RatVector(s.w.size()), -eps};
        layer.push_back(relu_node(u[i].w, u[i].b));
        Expr ub = u[i] + budget;
        layer.push_back(relu_node(ub.w, ub.b));
        layer.push_back(relu_node(neg.w, neg.b));
        Expr nb = neg + budget;
        layer.push_back(relu_node(nb.w, nb.b));
        for (std::size_t k = i + 1; k < n; ++k) layer.push_back(id_node(u[k].w, u[k].b));
        for (const auto& e : t) layer.push_back(id_node(e.w, e.b));
        layer.push_back(id_node(s.w, s.b));
        std::size_t width = layer.size();
        layers.push_back(std::move(layer));

        Expr a = node_expr(width, 0), b = node_expr(width, 1), c = node_expr(width, 2), d = node_expr(width, 3);
        Expr pos = a + minus * b;
        Expr negpart = mode == RetractionMode::Symmetric ? c + minus * d : c + d;
        std::size_t idx = 4;
        for (std::size_t k = i + 1; k < n; ++k) u[k] = node_expr(width, idx++);
        for (auto& e : t) e = node_expr(width, idx++);
        Expr s_node = node_expr(width, idx++);
        t.push_back(pos + minus * negpart);
        s = s_node + pos + negpart;
    }
    Layer out;
    for (std::size_t k = 0; k < n; ++k) out.push_back(id_node(t[k].w, t[k].b + center[k]));
    layers.push_back(std::move(out));
    return Network(n, std::move(layers));
}

Network metric_retraction(const Network& net, Metric source, const RatVector& center, const ExtRational& eps,
                          RetractionMode mode, bool for_sr) {
    if (eps.is_infinite()) throw std::invalid_argument("retraction needs a finite eps");
    if (center.size() != net.input_dim()) throw std::invalid_argument("center dimension does not match the network");
    Network composed = compose(net, retraction_network(source, center, eps.value(), mode));
    if (!for_sr) return composed;
    RatVector ref = evaluate(net, center);
    Layer shift;
    for (std::size_t i = 0; i < ref.size(); ++i) shift.push_back(id_node(unit(ref.size(), i), -ref[i]));
    return append_abs_sum(append_layer(composed, std::move(shift)));
}

}  // namespace nnv
