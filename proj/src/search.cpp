#include "query.hpp"

#include "lp_internal.hpp"
#include "nnv/lp.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <unordered_set>

namespace nnv::detail {

Query make_query(Network net, std::size_t aux, LinSpec domain) {
    Query q;
    q.base_dim = net.input_dim() + aux;
    if (domain.dim != q.base_dim) throw std::logic_error("query domain has the wrong dimension");
    q.net = std::move(net);
    q.domain = std::move(domain);
    q.lo.assign(q.base_dim, std::nullopt);
    q.hi.assign(q.base_dim, std::nullopt);
    return q;
}

namespace {

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

struct Bound {
    std::optional<Rational> lo, hi;
};

Bound add(const Bound& a, const Bound& b) {
    Bound r;
    if (a.lo && b.lo) r.lo = *a.lo + *b.lo;
    if (a.hi && b.hi) r.hi = *a.hi + *b.hi;
    return r;
}

Bound scale(const Bound& a, const Rational& w) {
    if (w.is_zero()) return Bound{Rational(0), Rational(0)};
    Bound r;
    if (w.sign() > 0) {
        if (a.lo) r.lo = w * *a.lo;
        if (a.hi) r.hi = w * *a.hi;
    } else {
        if (a.hi) r.lo = w * *a.hi;
        if (a.lo) r.hi = w * *a.lo;
    }
    return r;
}

Bound relu(const Bound& a) {
    Bound r;
    r.lo = a.lo ? max(*a.lo, Rational(0)) : Rational(0);
    if (a.hi) r.hi = max(*a.hi, Rational(0));
    return r;
}

/// True when no value of `b` can satisfy "value rel rhs".
bool refutes(const Bound& b, Relation rel, const Rational& rhs) {
    switch (rel) {
        case Relation::LE: return b.lo && *b.lo > rhs;
        case Relation::LT: return b.lo && *b.lo >= rhs;
        case Relation::EQ: return (b.lo && *b.lo > rhs) || (b.hi && *b.hi < rhs);
    }
    return false;
}

/// Affine form over the base variables.
struct Form {
    RatVector coef;
    Rational c;
};

struct Source {
    std::size_t src;  // < input_dim: input variable; otherwise input_dim + flat index
    Rational w;
};

struct Flat {
    Activation act;
    Rational bias;
    std::vector<Source> in;
    std::size_t relu = kNone;  // position in Network::relu_nodes()
};

/// ReLUs p, q with identical incoming weights and bias(p) - bias(q) = d >= 0,
/// so 0 <= y_p - y_q <= d everywhere.
struct ReluPair {
    std::size_t p, q;
    Rational d;
};

/// A node reading w * (y_p - y_q) for a pair; ip and iq index its inputs.
struct PairTerm {
    std::size_t pair, ip, iq;
};

/// Flattened view of the network: nodes in (layer, index) order.
struct Graph {
    std::size_t n = 0;
    std::vector<Flat> nodes;
    std::vector<std::size_t> outputs;
    std::vector<std::size_t> relus;  // flat index of each ReLU, canonical order
    std::vector<std::size_t> comp;
    std::vector<std::size_t> alias;  // earliest node computing the same value
    std::vector<ReluPair> pairs;
    std::vector<std::vector<PairTerm>> pair_terms;
    /// ReLUs p, q with opposite pre-activations, so y_p - y_q = pre_p.
    std::vector<std::pair<std::size_t, std::size_t>> antipairs;

    explicit Graph(const Network& net) : n(net.input_dim()) {
        // Nodes with equal activation, bias and (merged) inputs compute the same
        // value; readers are redirected to the first of them. A reader taking
        // w (y_p - y_q) from ReLUs with opposite pre-activations reads w pre_p
        // instead, since ReLU(t) - ReLU(-t) = t.
        std::map<std::string, std::size_t> seen;
        std::vector<std::size_t> anti_of;
        std::size_t prev_first = 0;  // flat index of the first node of the previous layer
        for (std::size_t l = 1; l < net.num_layers(); ++l) {
            std::size_t first = nodes.size();
            for (const auto& node : net.layer(l)) {
                std::map<std::size_t, Rational> merged;
                for (std::size_t j = 0; j < node.weights.size(); ++j) {
                    if (node.weights[j].is_zero()) continue;
                    std::size_t src = l == 1 ? j : n + alias[prev_first + j];
                    merged[src] += node.weights[j];
                }
                Rational bias = node.bias;
                for (bool again = true; again;) {
                    again = false;
                    for (const auto& [src, w] : merged) {
                        if (src < n || w.is_zero() || anti_of[src - n] == kNone) continue;
                        auto q = merged.find(n + anti_of[src - n]);
                        if (q == merged.end() || q->second != -w) continue;
                        std::size_t p = src - n;
                        Rational scale = w;
                        q->second = 0;
                        merged[src] = 0;
                        bias += scale * nodes[p].bias;
                        for (const auto& s : nodes[p].in) merged[s.src] += scale * s.w;
                        again = true;
                        break;
                    }
                }
                Flat f{node.act, bias, {}, kNone};
                std::string in_key;
                for (auto& [src, w] : merged) {
                    if (w.is_zero()) continue;
                    in_key += ';' + std::to_string(src) + ':' + w.str();
                    f.in.push_back({src, std::move(w)});
                }
                std::string key = (node.act == Activation::ReLU ? "r" : "i") + f.bias.str() + in_key;
                auto [it, fresh] = seen.emplace(std::move(key), nodes.size());
                alias.push_back(it->second);
                anti_of.push_back(kNone);
                if (fresh && f.act == Activation::ReLU && !f.in.empty()) {
                    std::string neg = "r" + (-f.bias).str();
                    for (const auto& s : f.in) neg += ';' + std::to_string(s.src) + ':' + (-s.w).str();
                    if (auto m = seen.find(neg); m != seen.end() && anti_of[m->second] == kNone) {
                        anti_of.back() = m->second;
                        anti_of[m->second] = nodes.size();
                    }
                }
                if (f.act == Activation::ReLU) {
                    f.relu = relus.size();
                    relus.push_back(nodes.size());
                }
                nodes.push_back(std::move(f));
            }
            prev_first = first;
            if (l + 1 == net.num_layers())
                for (std::size_t i = first; i < nodes.size(); ++i) outputs.push_back(i);
        }
        std::vector<std::size_t> parent(nodes.size());
        std::iota(parent.begin(), parent.end(), 0);
        std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
            while (parent[x] != x) x = parent[x] = parent[parent[x]];
            return x;
        };
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            parent[find(alias[k])] = find(k);
            for (const auto& s : nodes[k].in)
                if (s.src >= n) parent[find(s.src - n)] = find(k);
        }
        comp.resize(nodes.size());
        for (std::size_t k = 0; k < nodes.size(); ++k) comp[k] = find(k);
        find_pairs();
    }

    void find_pairs() {
        std::map<std::string, std::vector<std::size_t>> groups;
        std::map<std::string, std::size_t> full;
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            if (nodes[k].act != Activation::ReLU || nodes[k].in.empty() || alias[k] != k) continue;
            std::string key, neg;
            for (const auto& s : nodes[k].in) {
                key += std::to_string(s.src) + ':' + s.w.str() + ';';
                neg += std::to_string(s.src) + ':' + (-s.w).str() + ';';
            }
            if (auto it = full.find(neg + (-nodes[k].bias).str()); it != full.end()) antipairs.push_back({it->second, k});
            full.emplace(key + nodes[k].bias.str(), k);
            groups[key].push_back(k);
        }
        std::vector<std::vector<std::size_t>> by_node(nodes.size());
        for (const auto& [key, members] : groups) {
            for (std::size_t a = 0; a < members.size(); ++a) {
                for (std::size_t b = a + 1; b < members.size(); ++b) {
                    std::size_t p = members[a], q = members[b];
                    if (nodes[p].bias < nodes[q].bias) std::swap(p, q);
                    by_node[p].push_back(pairs.size());
                    by_node[q].push_back(pairs.size());
                    pairs.push_back({p, q, nodes[p].bias - nodes[q].bias});
                }
            }
        }
        pair_terms.resize(nodes.size());
        if (pairs.empty()) return;
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            const auto& in = nodes[k].in;
            std::vector<bool> used(in.size(), false);
            for (std::size_t i = 0; i < in.size(); ++i) {
                if (used[i] || in[i].src < n) continue;
                for (std::size_t idx : by_node[in[i].src - n]) {
                    const ReluPair& pr = pairs[idx];
                    if (pr.p != in[i].src - n) continue;
                    for (std::size_t j = 0; j < in.size(); ++j) {
                        if (used[j] || j == i || in[j].src != n + pr.q || in[j].w != -in[i].w) continue;
                        used[i] = used[j] = true;
                        pair_terms[k].push_back({idx, i, j});
                        break;
                    }
                    if (used[i]) break;
                }
            }
        }
    }

    /// Topological order that finishes whole components first, those whose
    /// outputs appear with negative coefficients in the branch going first.
    std::vector<std::size_t> order_for(const Branch& branch, std::size_t base_dim) const {
        std::vector<long> score(nodes.size(), 0);
        for (const auto& row : branch.rows)
            for (std::size_t i = 0; i < outputs.size(); ++i)
                if (row.coeffs[base_dim + i].sign() < 0) ++score[comp[outputs[i]]];
        std::vector<std::size_t> roots;
        for (std::size_t k = 0; k < nodes.size(); ++k)
            if (comp[k] == k) roots.push_back(k);
        std::vector<std::size_t> first(nodes.size(), kNone);
        for (std::size_t k = 0; k < nodes.size(); ++k)
            if (first[comp[k]] == kNone) first[comp[k]] = k;
        std::stable_sort(roots.begin(), roots.end(), [&](std::size_t a, std::size_t b) {
            if (score[a] != score[b]) return score[a] > score[b];
            return first[a] < first[b];
        });
        std::vector<std::size_t> rank(nodes.size());
        for (std::size_t r = 0; r < roots.size(); ++r) rank[roots[r]] = r;
        std::vector<std::size_t> order(nodes.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return rank[comp[a]] < rank[comp[b]]; });
        return order;
    }
};

Form unit_form(std::size_t dim, std::size_t i) {
    Form f{RatVector(dim), Rational(0)};
    f.coef[i] = 1;
    return f;
}

LinRow padded(const LinRow& row, std::size_t dim) {
    LinRow r = row;
    r.coeffs.resize(dim);
    return r;
}

class Searcher {
public:
    Searcher(const Query& q, const Graph& g, const Branch& branch, std::size_t branch_index, SearchStats& stats,
             std::unordered_set<std::string>& leaves, const std::atomic<bool>& stop,
             const RatVector* objective = nullptr)
        : q_(q), g_(g), branch_(branch), branch_index_(branch_index), stats_(stats), leaves_(leaves), stop_(stop),
          objective_(objective), forms_(g.nodes.size()), phase_(g.nodes.size(), Phase::Undecided),
          processed_(g.nodes.size(), false) {}

    void stop_below(const Rational& v) { stop_below_ = v; }

    void seed(Rational value, RatVector point, ActivationPattern pattern) {
        best_ = Incumbent{std::move(value), std::move(point), std::move(pattern)};
    }

    /// Minimisation mode: runs branch and bound over closed regions.
    MinimumResult minimize() {
        run();
        MinimumResult r;
        r.unbounded = unbounded_;
        if (!unbounded_ && best_) {
            r.value = best_->value;
            r.point = std::move(best_->point);
            r.pattern = std::move(best_->pattern);
        }
        return r;
    }

    std::optional<SearchHit> run() {
        order_ = g_.order_for(branch_, q_.base_dim);
        mark_relevant();
        std::vector<Bound> box(q_.base_dim);
        for (std::size_t i = 0; i < q_.base_dim; ++i) box[i] = Bound{q_.lo[i], q_.hi[i]};
        for (const auto& row : q_.domain.rows) tighten(box, row);
        if (!box_nonempty(box)) return std::nullopt;
        dfs(0, box);
        return std::move(hit_);
    }

private:
    const Query& q_;
    const Graph& g_;
    const Branch& branch_;
    std::size_t branch_index_;
    SearchStats& stats_;
    std::unordered_set<std::string>& leaves_;
    const std::atomic<bool>& stop_;
    const RatVector* objective_;
    std::vector<std::size_t> order_;
    std::vector<Form> forms_;
    std::vector<Phase> phase_;
    std::vector<bool> processed_;
    std::vector<bool> relevant_;
    std::vector<LinRow> region_;
    std::optional<SearchHit> hit_;
    struct Incumbent {
        Rational value;
        RatVector point;
        ActivationPattern pattern;
    };
    std::optional<Incumbent> best_;
    bool unbounded_ = false;

    std::optional<Rational> stop_below_;
    RatVector hint_;  // base part of the latest relaxation optimum

    /// Nodes some used output depends on. The others need no phase during
    /// the search; a hit completes its pattern from the witness. Minimisation
    /// keeps every node, because its regions are closed.
    void mark_relevant() {
        relevant_.assign(g_.nodes.size(), objective_ != nullptr);
        if (objective_) return;
        for (const auto& row : branch_.rows)
            for (std::size_t i = 0; i < g_.outputs.size(); ++i)
                if (!row.coeffs[q_.base_dim + i].is_zero()) relevant_[g_.outputs[i]] = true;
        for (std::size_t k = g_.nodes.size(); k-- > 0;) {
            if (!relevant_[k]) continue;
            relevant_[g_.alias[k]] = true;
            for (const auto& s : g_.nodes[k].in)
                if (s.src >= g_.n) relevant_[s.src - g_.n] = true;
        }
    }

    /// Nodes the DFS passes without branching.
    bool deterministic(std::size_t k) const {
        return g_.nodes[k].act == Activation::Id || g_.alias[k] != k || !relevant_[k];
    }

    bool done() const {
        return hit_ || unbounded_ || (best_ && stop_below_ && best_->value < *stop_below_) ||
               stop_.load(std::memory_order_relaxed);
    }

    /// Objective as (coefficients over dim variables, constant) via the given output forms.
    template <typename FormOf>
    std::pair<RatVector, Rational> objective_over(std::size_t dim, FormOf&& form_of) const {
        LinRow r = substitute(LinRow{*objective_, Relation::LE, Rational(0)}, dim, form_of);
        return {std::move(r.coeffs), -r.rhs};
    }

    bool dominated(const Rational& bound) const { return best_ && bound >= best_->value; }

    Form source_form(const Source& s) const {
        if (s.src < g_.n) return unit_form(q_.base_dim, s.src);
        return forms_[s.src - g_.n];
    }

    Form pre_form(std::size_t k) const {
        const Flat& f = g_.nodes[k];
        Form pre{RatVector(q_.base_dim), f.bias};
        for (const auto& s : f.in) {
            if (s.src < g_.n) {
                pre.coef[s.src] += s.w;
                continue;
            }
            const Form& src = forms_[s.src - g_.n];
            for (std::size_t i = 0; i < q_.base_dim; ++i)
                if (!src.coef[i].is_zero()) pre.coef[i] += s.w * src.coef[i];
            if (!src.c.is_zero()) pre.c += s.w * src.c;
        }
        return pre;
    }

    static Bound eval(const Form& f, const std::vector<Bound>& box) {
        Bound b{f.c, f.c};
        for (std::size_t i = 0; i < f.coef.size() && (b.lo || b.hi); ++i)
            if (!f.coef[i].is_zero()) b = add(b, scale(box[i], f.coef[i]));
        return b;
    }

    static void tighten(std::vector<Bound>& box, const LinRow& row) {
        std::size_t var = kNone;
        for (std::size_t i = 0; i < box.size(); ++i) {
            if (row.coeffs[i].is_zero()) continue;
            if (var != kNone) return;
            var = i;
        }
        if (var == kNone) return;
        Rational v = row.rhs / row.coeffs[var];
        bool upper = row.coeffs[var].sign() > 0;
        if (row.rel == Relation::EQ || upper)
            if (!box[var].hi || v < *box[var].hi) box[var].hi = v;
        if (row.rel == Relation::EQ || !upper)
            if (!box[var].lo || v > *box[var].lo) box[var].lo = v;
    }

    static bool box_nonempty(const std::vector<Bound>& box) {
        for (const auto& b : box)
            if (b.lo && b.hi && *b.lo > *b.hi) return false;
        return true;
    }

    /// Interval of the pre-activation of node k from the input and node intervals.
    Bound pre_interval(std::size_t k, const std::vector<Bound>& box, const std::vector<Bound>& nb) const {
        const Flat& f = g_.nodes[k];
        Bound pre{f.bias, f.bias};
        const auto& terms = g_.pair_terms[k];
        for (const auto& t : terms) {
            const ReluPair& pr = g_.pairs[t.pair];
            Bound diff = add(nb[pr.p], scale(nb[pr.q], Rational(-1)));
            if (!diff.lo || diff.lo->sign() < 0) diff.lo = Rational(0);
            if (!diff.hi || *diff.hi > pr.d) diff.hi = pr.d;
            pre = add(pre, scale(diff, f.in[t.ip].w));
        }
        for (std::size_t i = 0; i < f.in.size(); ++i) {
            if (!terms.empty() && std::any_of(terms.begin(), terms.end(),
                                              [&](const PairTerm& t) { return t.ip == i || t.iq == i; }))
                continue;
            const Source& s = f.in[i];
            pre = add(pre, scale(s.src < g_.n ? box[s.src] : nb[s.src - g_.n], s.w));
        }
        return pre;
    }

    /// Interval of every node given the box; processed nodes use their exact form.
    std::vector<Bound> node_bounds(const std::vector<Bound>& box) const {
        std::vector<Bound> nb(g_.nodes.size());
        for (std::size_t k = 0; k < g_.nodes.size(); ++k) {
            if (processed_[k]) {
                nb[k] = eval(forms_[k], box);
                continue;
            }
            Bound pre = pre_interval(k, box, nb);
            nb[k] = g_.nodes[k].act == Activation::ReLU ? relu(pre) : pre;
        }
        return nb;
    }

    /// Cheap refutation of the branch from intervals alone.
    bool branch_refuted(const std::vector<Bound>& box, const std::vector<Bound>& nb) const {
        for (const auto& row : branch_.rows) {
            Bound b{Rational(0), Rational(0)};
            for (std::size_t i = 0; i < q_.base_dim; ++i)
                if (!row.coeffs[i].is_zero()) b = add(b, scale(box[i], row.coeffs[i]));
            for (std::size_t i = 0; i < g_.outputs.size(); ++i) {
                const Rational& c = row.coeffs[q_.base_dim + i];
                if (!c.is_zero()) b = add(b, scale(nb[g_.outputs[i]], c));
            }
            if (refutes(b, row.rel, row.rhs)) return true;
        }
        return false;
    }

    bool objective_dominated(const std::vector<Bound>& box, const std::vector<Bound>& nb) const {
        if (!objective_ || !best_) return false;
        Bound b{Rational(0), Rational(0)};
        for (std::size_t i = 0; i < q_.base_dim; ++i)
            if (!(*objective_)[i].is_zero()) b = add(b, scale(box[i], (*objective_)[i]));
        for (std::size_t i = 0; i < g_.outputs.size(); ++i) {
            const Rational& c = (*objective_)[q_.base_dim + i];
            if (!c.is_zero()) b = add(b, scale(nb[g_.outputs[i]], c));
        }
        return b.lo && dominated(*b.lo);
    }

    /// LP over base variables plus one relaxed variable per undecided ReLU
    /// whose phase the intervals leave open; the others are substituted.
    /// False when the relaxation proves the subtree empty (or, when
    /// minimising, unable to beat the incumbent).
    bool relaxed_lp(const std::vector<Bound>& box, const std::vector<Bound>& nb) {
        std::vector<std::size_t> fresh(g_.nodes.size(), kNone);
        std::vector<Bound> pre_bound(g_.nodes.size());
        std::size_t dim = q_.base_dim;
        for (std::size_t k = 0; k < g_.nodes.size(); ++k) {
            if (processed_[k] || g_.nodes[k].act != Activation::ReLU || !relevant_[k] || g_.alias[k] != k) continue;
            Bound acc = pre_interval(k, box, nb);
            pre_bound[k] = acc;
            bool dead = acc.hi && acc.hi->sign() <= 0;
            bool live = acc.lo && acc.lo->sign() >= 0;
            if (!dead && !live) fresh[k] = dim++;
        }
        LinSpec lp(dim);
        for (const auto& row : q_.domain.rows) lp.rows.push_back(padded(row, dim));
        for (const auto& row : region_) lp.rows.push_back(padded(row, dim));

        std::vector<Form> ext(g_.nodes.size());
        std::vector<Form> ext_pre(g_.nodes.size());
        auto ext_form = [&](std::size_t k) -> const Form& { return ext[k]; };
        for (std::size_t k = 0; k < g_.nodes.size(); ++k) {
            if (processed_[k]) {
                ext[k] = forms_[k];
                ext[k].coef.resize(dim);
                continue;
            }
            if (!relevant_[k]) continue;
            if (g_.alias[k] != k) {
                ext[k] = ext[g_.alias[k]];
                continue;
            }
            const Flat& f = g_.nodes[k];
            Form pre{RatVector(dim), f.bias};
            for (const auto& s : f.in) {
                if (s.src < g_.n) {
                    pre.coef[s.src] += s.w;
                    continue;
                }
                const Form& src = ext[s.src - g_.n];
                for (std::size_t i = 0; i < dim; ++i)
                    if (!src.coef[i].is_zero()) pre.coef[i] += s.w * src.coef[i];
                if (!src.c.is_zero()) pre.c += s.w * src.c;
            }
            if (f.act == Activation::Id) {
                ext[k] = std::move(pre);
                continue;
            }
            ext_pre[k] = pre;
            const Bound& pb = pre_bound[k];
            std::size_t v = fresh[k];
            if (v == kNone) {
                bool dead = pb.hi && pb.hi->sign() <= 0;
                ext[k] = dead ? Form{RatVector(dim), Rational(0)} : std::move(pre);
                continue;
            }
            // y >= 0
            RatVector c0(dim);
            c0[v] = -1;
            lp.rows.push_back(LinRow{std::move(c0), Relation::LE, 0});
            // pre - y <= 0
            RatVector c1 = pre.coef;
            c1[v] -= 1;
            lp.rows.push_back(LinRow{std::move(c1), Relation::LE, -pre.c});
            // y <= hi (pre - lo) / (hi - lo) when the interval is finite
            if (pb.lo && pb.hi) {
                Rational sl = *pb.hi / (*pb.hi - *pb.lo);
                RatVector c2(dim);
                for (std::size_t i = 0; i < dim; ++i) c2[i] = -sl * pre.coef[i];
                c2[v] += 1;
                lp.rows.push_back(LinRow{std::move(c2), Relation::LE, sl * pre.c - sl * *pb.lo});
            }
            Form y{RatVector(dim), Rational(0)};
            y.coef[v] = 1;
            ext[k] = std::move(y);
        }
        for (const auto& pr : g_.pairs) {
            if (fresh[pr.p] == kNone && fresh[pr.q] == kNone) continue;
            if (!relevant_[pr.p] || !relevant_[pr.q]) continue;
            // 0 <= y_p - y_q <= d
            RatVector diff(dim);
            for (std::size_t i = 0; i < dim; ++i) diff[i] = ext[pr.p].coef[i] - ext[pr.q].coef[i];
            Rational c = ext[pr.p].c - ext[pr.q].c;
            RatVector neg = diff;
            for (auto& x : neg) x = -x;
            lp.rows.push_back(LinRow{std::move(neg), Relation::LE, c});
            lp.rows.push_back(LinRow{std::move(diff), Relation::LE, pr.d - c});
        }
        for (auto [p, q] : g_.antipairs) {
            if (fresh[p] == kNone && fresh[q] == kNone) continue;
            if (!relevant_[p] || !relevant_[q]) continue;
            // y_p - y_q = pre_p = -pre_q
            std::size_t known = processed_[q] ? p : q;
            Rational sign(known == p ? -1 : 1);
            RatVector c(dim);
            for (std::size_t i = 0; i < dim; ++i)
                c[i] = ext[p].coef[i] - ext[q].coef[i] + sign * ext_pre[known].coef[i];
            lp.rows.push_back(LinRow{std::move(c), Relation::EQ, ext[q].c - ext[p].c - sign * ext_pre[known].c});
        }
        for (const auto& row : branch_.rows) lp.rows.push_back(substitute(row, dim, ext_form));
        ++stats_.lp_count;
        if (!objective_) {
            auto f = feasible(lp);
            if (f.feasible) try_point(f.witness);
            return f.feasible;
        }
        auto [cost, constant] = objective_over(dim, ext_form);
        auto opt = minimize_closure(lp, cost);
        if (opt.status == Optimum::Optimal) try_point(opt.point);
        else hint_.clear();
        if (opt.status == Optimum::Infeasible) return false;
        if (opt.status == Optimum::Unbounded) return true;
        return !dominated(opt.value + constant);
    }

    /// The base part of a relaxation optimum is a genuine input: evaluate the
    /// network there and keep it if it already answers the query.
    void try_point(const RatVector& relaxed) {
        RatVector x(relaxed.begin(), relaxed.begin() + static_cast<std::ptrdiff_t>(q_.base_dim));
        hint_ = x;
        if (!q_.domain.satisfied_by(x)) return;
        RatVector full = x;
        RatVector out = evaluate(q_.net, std::span<const Rational>(x.data(), g_.n));
        full.insert(full.end(), out.begin(), out.end());
        if (objective_) {
            Rational value(0);
            for (std::size_t i = 0; i < full.size(); ++i) value += (*objective_)[i] * full[i];
            if (!dominated(value))
                best_ = Incumbent{std::move(value), x, pattern_of(q_.net, std::span<const Rational>(x.data(), g_.n))};
            return;
        }
        LinSpec check(full.size());
        check.rows = branch_.rows;
        if (!check.satisfied_by(full)) return;
        ActivationPattern pattern = pattern_of(q_.net, std::span<const Rational>(x.data(), g_.n));
        leaves_.insert(to_string(pattern));
        hit_ = SearchHit{branch_index_, std::move(pattern), std::move(x)};
    }

    template <typename FormOf>
    LinRow substitute(const LinRow& row, std::size_t dim, FormOf&& form_of) const {
        LinRow r{RatVector(dim), row.rel, row.rhs};
        for (std::size_t i = 0; i < q_.base_dim; ++i) r.coeffs[i] = row.coeffs[i];
        for (std::size_t i = 0; i < g_.outputs.size(); ++i) {
            const Rational& c = row.coeffs[q_.base_dim + i];
            if (c.is_zero()) continue;
            const Form& f = form_of(g_.outputs[i]);
            for (std::size_t v = 0; v < dim; ++v)
                if (!f.coef[v].is_zero()) r.coeffs[v] += c * f.coef[v];
            r.rhs -= c * f.c;
        }
        return r;
    }

    void leaf(const std::vector<Bound>& box) {
        ActivationPattern pattern(g_.relus.size());
        for (std::size_t r = 0; r < g_.relus.size(); ++r) pattern[r] = phase_[g_.relus[r]];
        leaves_.insert(to_string(pattern));
        auto nb = node_bounds(box);
        if (branch_refuted(box, nb)) return;
        LinSpec lp(q_.base_dim);
        lp.rows = q_.domain.rows;
        lp.rows.insert(lp.rows.end(), region_.begin(), region_.end());
        auto form_of = [&](std::size_t k) -> const Form& { return forms_[k]; };
        for (const auto& row : branch_.rows) lp.rows.push_back(substitute(row, q_.base_dim, form_of));
        ++stats_.lp_count;
        if (objective_) {
            auto [cost, constant] = objective_over(q_.base_dim, form_of);
            auto opt = minimize_closure(lp, cost);
            if (opt.status == Optimum::Unbounded) unbounded_ = true;
            if (opt.status != Optimum::Optimal) return;
            Rational value = opt.value + constant;
            if (!dominated(value)) best_ = Incumbent{std::move(value), std::move(opt.point), std::move(pattern)};
            return;
        }
        auto f = feasible(lp);
        if (!f.feasible) return;
        // Strict inactive rows make pattern_of agree with every decided phase.
        pattern = pattern_of(q_.net, std::span<const Rational>(f.witness.data(), g_.n));
        hit_ = SearchHit{branch_index_, std::move(pattern), std::move(f.witness)};
    }

    void set_phase(std::size_t k, Phase ph, const Form& pre) {
        phase_[k] = ph;
        forms_[k] = ph == Phase::Active ? pre : Form{RatVector(q_.base_dim), Rational(0)};
    }

    void dfs(std::size_t p, std::vector<Bound> box) {
        if (done()) return;
        ++stats_.nodes_visited;
        // Advance to the next ReLU that needs a phase.
        while (p < order_.size() && deterministic(order_[p])) {
            std::size_t k = order_[p++];
            if (!relevant_[k]) continue;
            if (g_.alias[k] != k) {
                forms_[k] = forms_[g_.alias[k]];
                phase_[k] = phase_[g_.alias[k]];
            } else {
                forms_[k] = pre_form(k);
            }
            processed_[k] = true;
        }
        if (p == order_.size()) {
            leaf(box);
            for (std::size_t i = p; i-- > 0 && deterministic(order_[i]);) processed_[order_[i]] = false;
            return;
        }
        std::size_t first_id = p;
        while (first_id > 0 && deterministic(order_[first_id - 1])) --first_id;

        std::size_t k = order_[p];
        Form pre = pre_form(k);
        Bound pb = eval(pre, box);
        bool can_inactive = !pb.lo || pb.lo->sign() < 0;
        bool can_active = !pb.hi || pb.hi->sign() >= 0;
        bool split = can_inactive && can_active;
        processed_[k] = true;
        // Try first the phase the last relaxation optimum lies in.
        std::array<Phase, 2> phases{Phase::Inactive, Phase::Active};
        if (split && !hint_.empty()) {
            Rational at = pre.c;
            for (std::size_t i = 0; i < q_.base_dim; ++i)
                if (!pre.coef[i].is_zero()) at += pre.coef[i] * hint_[i];
            if (at.sign() >= 0) std::swap(phases[0], phases[1]);
        }
        for (Phase ph : phases) {
            if (done()) break;
            if (ph == Phase::Inactive ? !can_inactive : !can_active) continue;
            LinRow row;
            if (ph == Phase::Inactive) {
                // Minimisation works on closed regions; ReLU agrees on both sides of pre = 0.
                row = LinRow{pre.coef, objective_ ? Relation::LE : Relation::LT, -pre.c};
            } else {
                RatVector neg = pre.coef;
                for (auto& c : neg) c = -c;
                row = LinRow{std::move(neg), Relation::LE, pre.c};
            }
            std::vector<Bound> child = box;
            tighten(child, row);
            if (!box_nonempty(child)) continue;
            set_phase(k, ph, pre);
            region_.push_back(std::move(row));
            bool viable = true;
            if (split) {
                auto nb = node_bounds(child);
                viable = !branch_refuted(child, nb) && !objective_dominated(child, nb) && relaxed_lp(child, nb);
            }
            if (viable) dfs(p + 1, std::move(child));
            region_.pop_back();
        }
        phase_[k] = Phase::Undecided;
        processed_[k] = false;
        for (std::size_t i = first_id; i < p; ++i) processed_[order_[i]] = false;
    }
};

std::optional<SearchHit> enumerate_all(const Query& q, const Graph& g, SearchStats& stats) {
    std::size_t r = g.relus.size();
    for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << r); ++bits) {
        ActivationPattern pattern(r);
        for (std::size_t i = 0; i < r; ++i) pattern[i] = (bits >> i) & 1 ? Phase::Active : Phase::Inactive;
        ++stats.patterns_explored;
        LinSpec region = q.domain;
        std::vector<Form> forms(g.nodes.size());
        for (std::size_t k = 0; k < g.nodes.size(); ++k) {
            const Flat& f = g.nodes[k];
            Form pre{RatVector(q.base_dim), f.bias};
            for (const auto& s : f.in) {
                const Form src = s.src < g.n ? unit_form(q.base_dim, s.src) : forms[s.src - g.n];
                for (std::size_t i = 0; i < q.base_dim; ++i) pre.coef[i] += s.w * src.coef[i];
                pre.c += s.w * src.c;
            }
            if (f.act == Activation::Id) {
                forms[k] = std::move(pre);
            } else if (pattern[f.relu] == Phase::Active) {
                RatVector neg = pre.coef;
                for (auto& c : neg) c = -c;
                region.rows.push_back(LinRow{std::move(neg), Relation::LE, pre.c});
                forms[k] = std::move(pre);
            } else {
                region.rows.push_back(LinRow{pre.coef, Relation::LT, -pre.c});
                forms[k] = Form{RatVector(q.base_dim), Rational(0)};
            }
        }
        ++stats.lp_count;
        if (!feasible(region).feasible) continue;
        for (std::size_t b = 0; b < q.branches.size(); ++b) {
            LinSpec lp = region;
            for (const auto& row : q.branches[b].rows) {
                LinRow sub{RatVector(row.coeffs.begin(), row.coeffs.begin() + static_cast<std::ptrdiff_t>(q.base_dim)),
                           row.rel, row.rhs};
                for (std::size_t i = 0; i < g.outputs.size(); ++i) {
                    const Rational& c = row.coeffs[q.base_dim + i];
                    if (c.is_zero()) continue;
                    const Form& f = forms[g.outputs[i]];
                    for (std::size_t v = 0; v < q.base_dim; ++v) sub.coeffs[v] += c * f.coef[v];
                    sub.rhs -= c * f.c;
                }
                lp.rows.push_back(std::move(sub));
            }
            ++stats.lp_count;
            auto f = feasible(lp);
            if (f.feasible) return SearchHit{b, pattern, std::move(f.witness)};
        }
    }
    return std::nullopt;
}

}  // namespace

SearchResult search(const Query& q, const SearchOptions& opts) {
    Graph g(q.net);
    SearchResult result;
    if (opts.mode == SearchMode::Enumerate) {
        if (g.relus.size() > opts.max_enumerate_relus)
            throw std::invalid_argument("enumeration refused: " + std::to_string(g.relus.size()) + " ReLU nodes");
        result.hit = enumerate_all(q, g, result.stats);
        return result;
    }

    std::unordered_set<std::string> leaves;
    std::atomic<bool> stop{false};
    if (opts.threads <= 1 || q.branches.size() <= 1) {
        for (std::size_t b = 0; b < q.branches.size() && !result.hit; ++b) {
            Searcher s(q, g, q.branches[b], b, result.stats, leaves, stop);
            result.hit = s.run();
        }
        result.stats.patterns_explored = leaves.size();
        return result;
    }

    std::mutex mu;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        SearchStats local;
        std::unordered_set<std::string> local_leaves;
        while (!stop.load()) {
            std::size_t b = next.fetch_add(1);
            if (b >= q.branches.size()) break;
            Searcher s(q, g, q.branches[b], b, local, local_leaves, stop);
            if (auto hit = s.run()) {
                std::lock_guard lock(mu);
                if (!result.hit || hit->branch < result.hit->branch) result.hit = std::move(hit);
                stop.store(true);
            }
        }
        std::lock_guard lock(mu);
        result.stats.lp_count += local.lp_count;
        result.stats.nodes_visited += local.nodes_visited;
        leaves.insert(local_leaves.begin(), local_leaves.end());
    };
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < opts.threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    result.stats.patterns_explored = leaves.size();
    return result;
}

MinimumResult minimize(const Query& q, const RatVector& objective, SearchStats* stats, const RatVector* seed,
                       const Rational* stop_below) {
    if (objective.size() != q.base_dim + q.net.output_dim())
        throw std::logic_error("objective has the wrong dimension");
    Graph g(q.net);
    SearchStats local;
    std::unordered_set<std::string> leaves;
    std::atomic<bool> stop{false};
    Branch none;
    Searcher s(q, g, none, 0, local, leaves, stop, &objective);
    if (stop_below) s.stop_below(*stop_below);
    if (seed) {
        std::span<const Rational> x(seed->data(), q.net.input_dim());
        RatVector out = evaluate(q.net, x);
        Rational value(0);
        for (std::size_t i = 0; i < q.base_dim; ++i) value += objective[i] * (*seed)[i];
        for (std::size_t i = 0; i < out.size(); ++i) value += objective[q.base_dim + i] * out[i];
        s.seed(std::move(value), *seed, pattern_of(q.net, x));
    }
    auto r = s.minimize();
    local.patterns_explored = leaves.size();
    if (stats) {
        stats->lp_count += local.lp_count;
        stats->nodes_visited += local.nodes_visited;
        stats->patterns_explored += local.patterns_explored;
    }
    return r;
}

std::optional<RatVector> solve_pattern(const Query& q, const ActivationPattern& pattern, std::size_t branch) {
    Graph g(q.net);
    if (pattern.size() != g.relus.size())
        throw std::invalid_argument("certificate pattern has " + std::to_string(pattern.size()) + " phases, network has " +
                                    std::to_string(g.relus.size()) + " ReLU nodes");
    if (branch >= q.branches.size()) throw std::invalid_argument("certificate branch index out of range");
    for (Phase p : pattern)
        if (p == Phase::Undecided) throw std::invalid_argument("certificate pattern must be complete");
    Query single = q;
    single.branches = {q.branches[branch]};
    // Pin every ReLU by a one-pattern enumeration.
    LinSpec region = q.domain;
    std::vector<Form> forms(g.nodes.size());
    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
        const Flat& f = g.nodes[k];
        Form pre{RatVector(q.base_dim), f.bias};
        for (const auto& s : f.in) {
            const Form src = s.src < g.n ? unit_form(q.base_dim, s.src) : forms[s.src - g.n];
            for (std::size_t i = 0; i < q.base_dim; ++i) pre.coef[i] += s.w * src.coef[i];
            pre.c += s.w * src.c;
        }
        if (f.act == Activation::Id) {
            forms[k] = std::move(pre);
        } else if (pattern[f.relu] == Phase::Active) {
            RatVector neg = pre.coef;
            for (auto& c : neg) c = -c;
            region.rows.push_back(LinRow{std::move(neg), Relation::LE, pre.c});
            forms[k] = std::move(pre);
        } else {
            region.rows.push_back(LinRow{pre.coef, Relation::LT, -pre.c});
            forms[k] = Form{RatVector(q.base_dim), Rational(0)};
        }
    }
    for (const auto& row : q.branches[branch].rows) {
        LinRow sub{RatVector(row.coeffs.begin(), row.coeffs.begin() + static_cast<std::ptrdiff_t>(q.base_dim)), row.rel,
                   row.rhs};
        for (std::size_t i = 0; i < g.outputs.size(); ++i) {
            const Rational& c = row.coeffs[q.base_dim + i];
            if (c.is_zero()) continue;
            const Form& f = forms[g.outputs[i]];
            for (std::size_t v = 0; v < q.base_dim; ++v) sub.coeffs[v] += c * f.coef[v];
            sub.rhs -= c * f.c;
        }
        region.rows.push_back(std::move(sub));
    }
    auto f = feasible(region);
    if (!f.feasible) return std::nullopt;
    return f.witness;
}

}  // namespace nnv::detail
