#include "nnv/minimize.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

namespace nnv {

namespace {

RatVector unit(std::size_t n, std::size_t i, Rational v = 1) {
    RatVector w(n);
    w[i] = std::move(v);
    return w;
}

// The sub-network computing node `ref` alone, as its single output.
Network node_network(const Network& net, NodeRef ref) {
    std::vector<Layer> layers;
    for (std::size_t l = 1; l < ref.layer; ++l) layers.push_back(net.layer(l));
    layers.push_back(Layer{net.node(ref)});
    return Network(net.input_dim(), std::move(layers));
}

void add_stats(SearchStats& into, const SearchStats& from) {
    into.lp_count += from.lp_count;
    into.patterns_explored += from.patterns_explored;
    into.nodes_visited += from.nodes_visited;
}

void require_same_dims(const Network& a, const Network& b, const char* what) {
    if (a.input_dim() != b.input_dim() || a.output_dim() != b.output_dim())
        throw std::invalid_argument(std::string(what) + ": networks differ in input or output dimension");
}

}  // namespace

Verdict decide_nece(const Network& net, const std::set<NodeRef>& doomed, const SearchOptions& opts) {
    if (doomed.empty()) throw std::invalid_argument("nece: the node set must be nonempty");
    Verdict ne = decide_ne(NeInstance{net, delete_nodes(net, doomed)}, opts);
    Verdict v;
    v.holds = !ne.holds;
    v.witness = std::move(ne.witness);
    v.stats = ne.stats;
    return v;
}

AneceResult decide_anece(const Network& net, const AneceOptions& opts) {
    std::vector<NodeRef> hidden = net.hidden_nodes();
    if (hidden.size() > opts.max_hidden)
        throw std::invalid_argument("anece: " + std::to_string(hidden.size()) + " hidden nodes exceed the cap of " +
                                    std::to_string(opts.max_hidden));
    // Cheap necessity proofs: a probe point where the reduced network differs.
    std::mt19937_64 rng(opts.search.seed);
    std::uniform_int_distribution<long> num(-64, 64), den(1, 8);
    std::vector<RatVector> probes{RatVector(net.input_dim())};
    for (int t = 0; t < 16; ++t) {
        RatVector x(net.input_dim());
        for (auto& c : x) c = Rational(num(rng), den(rng));
        probes.push_back(std::move(x));
    }
    std::vector<RatVector> reference;
    for (const auto& x : probes) reference.push_back(evaluate(net, x));

    AneceResult result;
    const std::size_t h = hidden.size();
    for (std::size_t k = 1; k <= h; ++k) {
        std::vector<bool> mask(h, false);
        std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(k), true);
        do {
            std::set<NodeRef> doomed;
            for (std::size_t i = 0; i < h; ++i)
                if (mask[i]) doomed.insert(hidden[i]);
            ++result.subsets_checked;
            Network reduced = delete_nodes(net, doomed);
            bool differs = false;
            for (std::size_t p = 0; p < probes.size() && !differs; ++p)
                differs = evaluate(reduced, probes[p]) != reference[p];
            if (differs) continue;
            Verdict ne = decide_ne(NeInstance{net, reduced}, opts.search);
            add_stats(result.stats, ne.stats);
            if (ne.holds) {
                result.unnecessary.assign(doomed.begin(), doomed.end());
                return result;
            }
        } while (std::prev_permutation(mask.begin(), mask.end()));
    }
    result.holds = true;
    return result;
}

std::pair<Network, NodeRef> ne_to_nece(const Network& net1, const Network& net2) {
    require_same_dims(net1, net2, "ne_to_nece");
    const std::size_t m = net1.output_dim();
    Network p = stack_parallel(net1, net2, true);
    Layer diff;
    for (std::size_t i = 0; i < m; ++i) {
        RatVector w(2 * m);
        w[i] = 1;
        w[m + i] = -1;
        diff.push_back(Node{Activation::Id, {}, std::move(w)});
    }
    p = append_layer(p, std::move(diff));
    if (m != 1) p = append_abs_sum(p);
    NodeRef y{p.num_layers() - 1, 0};
    p = append_layer(p, Layer{Node{Activation::Id, {}, {Rational(1)}}});
    return {std::move(p), y};
}

Network ne_to_anece(const Network& net1, const Network& net2, const SearchOptions& opts) {
    require_same_dims(net1, net2, "ne_to_anece");
    const std::size_t m = net1.output_dim();
    Network base = stack_parallel(net1, net2, true);
    const std::size_t stacked_depth = base.num_layers() - 1;
    Layer gadget, out;
    for (std::size_t i = 0; i < m; ++i) {
        RatVector d(2 * m);
        d[i] = 1;
        d[m + i] = -1;
        RatVector neg = d;
        for (auto& c : neg) c = -c;
        for (int copy = 0; copy < 2; ++copy) {
            gadget.push_back(Node{Activation::ReLU, {}, d});
            gadget.push_back(Node{Activation::ReLU, {}, neg});
        }
    }
    for (std::size_t i = 0; i < m; ++i) {
        // gadget layout per output: p, q, p', q'
        RatVector wp(4 * m), wq(4 * m);
        wp[4 * i] = 1;
        wp[4 * i + 2] = -1;
        wq[4 * i + 1] = 1;
        wq[4 * i + 3] = -1;
        out.push_back(Node{Activation::Id, {}, std::move(wp)});
        out.push_back(Node{Activation::Id, {}, std::move(wq)});
    }
    base = append_layer(append_layer(base, std::move(gadget)), std::move(out));

    std::set<NodeRef> zero;
    for (const auto& ref : base.hidden_nodes()) {
        Verdict v = decide_ne(NeInstance{node_network(base, ref), zero_network(base.input_dim(), 1)}, opts);
        if (v.holds) zero.insert(ref);
    }
    Network trimmed = zero.empty() ? base : delete_nodes(base, zero);

    // Every hidden node of the stacked part gets an id chain to its own output.
    // Chain nodes are appended at the end of each layer, so existing weight
    // vectors only need zero padding.
    std::vector<Layer> layers = trimmed.computation_layers();
    const std::size_t gadget_width = layers[stacked_depth].size();
    for (std::size_t k = 1; k < layers.size(); ++k) {
        const std::size_t width = layers[k - 1].size();
        for (auto& node : layers[k])
            if (!node.weights.empty()) node.weights.resize(width);
        std::size_t from = k - 1 == stacked_depth ? gadget_width : 0;
        for (std::size_t idx = from; idx < width; ++idx) layers[k].push_back(Node{Activation::Id, {}, unit(width, idx)});
    }
    return Network(trimmed.input_dim(), std::move(layers));
}

}  // namespace nnv
