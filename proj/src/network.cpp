#include "nnv/network.hpp"

#include <algorithm>
#include <stdexcept>

namespace nnv {

std::string to_string(const NodeRef& ref) {
    return std::to_string(ref.layer) + ":" + std::to_string(ref.index);
}

NodeRef parse_node_ref(const std::string& text) {
    auto colon = text.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == text.size())
        throw std::invalid_argument("node reference must look like 'layer:index', got '" + text + "'");
    auto digits = [&](std::string_view s) {
        if (!std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); }))
            throw std::invalid_argument("node reference must look like 'layer:index', got '" + text + "'");
        return static_cast<std::size_t>(std::stoul(std::string(s)));
    };
    std::string_view view(text);
    return NodeRef{digits(view.substr(0, colon)), digits(view.substr(colon + 1))};
}

std::string to_string(const ActivationPattern& pattern) {
    std::string s;
    s.reserve(pattern.size());
    for (Phase p : pattern) s.push_back(p == Phase::Active ? 'A' : (p == Phase::Inactive ? 'I' : '?'));
    return s;
}

Network::Network(std::size_t input_dim, std::vector<Layer> layers)
    : input_dim_(input_dim), layers_(std::move(layers)) {
    if (layers_.empty()) throw std::invalid_argument("network needs at least one computation layer");
    std::size_t prev = input_dim_;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        for (std::size_t i = 0; i < layers_[l].size(); ++i) {
            auto w = layers_[l][i].weights.size();
            if (w != 0 && w != prev)
                throw std::invalid_argument("node " + to_string(NodeRef{l + 1, i}) + " has " + std::to_string(w) +
                                            " weights, previous layer has width " + std::to_string(prev));
        }
        prev = layers_[l].size();
    }
}

std::size_t Network::node_count() const {
    std::size_t n = input_dim_;
    for (const auto& layer : layers_) n += layer.size();
    return n;
}

std::size_t Network::hidden_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l) n += layers_[l].size();
    return n;
}

std::vector<NodeRef> Network::hidden_nodes() const {
    std::vector<NodeRef> refs;
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l)
        for (std::size_t i = 0; i < layers_[l].size(); ++i) refs.push_back({l + 1, i});
    return refs;
}

std::vector<NodeRef> Network::relu_nodes() const {
    std::vector<NodeRef> refs;
    for (std::size_t l = 0; l < layers_.size(); ++l)
        for (std::size_t i = 0; i < layers_[l].size(); ++i)
            if (layers_[l][i].act == Activation::ReLU) refs.push_back({l + 1, i});
    return refs;
}

std::size_t Network::relu_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers_)
        for (const auto& node : layer) n += node.act == Activation::ReLU;
    return n;
}

bool Network::has_hidden_id() const {
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l)
        for (const auto& node : layers_[l])
            if (node.act == Activation::Id) return true;
    return false;
}

std::set<Activation> Network::activations() const {
    std::set<Activation> f;
    for (const auto& layer : layers_)
        for (const auto& node : layer) f.insert(node.act);
    return f;
}

namespace {

Rational pre_activation(const Node& node, const RatVector& prev) {
    mpq_class t = node.bias.raw();
    mpq_class prod;
    for (std::size_t j = 0; j < node.weights.size(); ++j) {
        if (node.weights[j].is_zero() || prev[j].is_zero()) continue;
        mpq_mul(prod.get_mpq_t(), node.weights[j].raw().get_mpq_t(), prev[j].raw().get_mpq_t());
        mpq_add(t.get_mpq_t(), t.get_mpq_t(), prod.get_mpq_t());
    }
    return Rational(std::move(t));
}

void check_input(const Network& net, std::span<const Rational> x) {
    if (x.size() != net.input_dim())
        throw std::invalid_argument("input has dimension " + std::to_string(x.size()) + ", network expects " +
                                    std::to_string(net.input_dim()));
}

Node id_node(RatVector weights, Rational bias = {}) {
    return Node{Activation::Id, std::move(bias), std::move(weights)};
}

RatVector unit(std::size_t n, std::size_t i, Rational v = 1) {
    RatVector w(n);
    w[i] = std::move(v);
    return w;
}

Layer identity_layer(std::size_t width) {
    Layer layer;
    for (std::size_t i = 0; i < width; ++i) layer.push_back(id_node(unit(width, i)));
    return layer;
}

}  // namespace

std::vector<RatVector> evaluate_all(const Network& net, std::span<const Rational> x) {
    check_input(net, x);
    std::vector<RatVector> values;
    values.reserve(net.num_layers());
    values.emplace_back(x.begin(), x.end());
    for (const auto& layer : net.computation_layers()) {
        RatVector out;
        out.reserve(layer.size());
        for (const auto& node : layer) {
            Rational t = pre_activation(node, values.back());
            out.push_back(node.act == Activation::ReLU ? relu(t) : t);
        }
        values.push_back(std::move(out));
    }
    return values;
}

RatVector evaluate(const Network& net, std::span<const Rational> x) { return evaluate_all(net, x).back(); }

ActivationPattern pattern_of(const Network& net, std::span<const Rational> x) {
    auto values = evaluate_all(net, x);
    ActivationPattern pattern;
    for (std::size_t l = 1; l < net.num_layers(); ++l)
        for (const auto& node : net.layer(l))
            if (node.act == Activation::ReLU)
                pattern.push_back(pre_activation(node, values[l - 1]).sign() >= 0 ? Phase::Active : Phase::Inactive);
    return pattern;
}

Network identity_network(std::size_t n) { return Network(n, {identity_layer(n)}); }

Network zero_network(std::size_t n, std::size_t m, std::size_t layers) {
    if (layers < 2) throw std::invalid_argument("zero_network: need at least 2 layers");
    std::vector<Layer> ls;
    std::size_t prev = n;
    for (std::size_t l = 1; l + 1 < layers; ++l) {
        ls.push_back(identity_layer(prev));
    }
    Layer out;
    for (std::size_t i = 0; i < m; ++i) out.push_back(id_node({}));
    ls.push_back(std::move(out));
    return Network(n, std::move(ls));
}

Network append_layer(const Network& net, Layer layer) {
    auto layers = net.computation_layers();
    layers.push_back(std::move(layer));
    return Network(net.input_dim(), std::move(layers));
}

Network pad_layers(const Network& net, std::size_t num_layers) {
    if (num_layers < net.num_layers()) throw std::invalid_argument("pad_layers: network already deeper");
    auto layers = net.computation_layers();
    while (layers.size() + 1 < num_layers) layers.push_back(identity_layer(layers.back().size()));
    return Network(net.input_dim(), std::move(layers));
}

Network compose(const Network& outer, const Network& inner) {
    if (inner.output_dim() != outer.input_dim()) throw std::invalid_argument("compose: dimension mismatch");
    auto layers = inner.computation_layers();
    for (const auto& layer : outer.computation_layers()) layers.push_back(layer);
    return Network(inner.input_dim(), std::move(layers));
}

Network stack_parallel(const Network& a, const Network& b, bool share_input) {
    if (share_input && a.input_dim() != b.input_dim())
        throw std::invalid_argument("stack_parallel: shared input needs equal input dimensions");
    std::size_t depth = std::max(a.num_layers(), b.num_layers());
    Network pa = pad_layers(a, depth);
    Network pb = pad_layers(b, depth);
    std::size_t input_dim = share_input ? a.input_dim() : a.input_dim() + b.input_dim();

    std::vector<Layer> layers;
    for (std::size_t l = 1; l < depth; ++l) {
        std::size_t wa = pa.width(l - 1);
        std::size_t wb = pb.width(l - 1);
        Layer merged;
        for (const auto& node : pa.layer(l)) {
            Node copy = node;
            if (!copy.weights.empty() && !(share_input && l == 1)) copy.weights.resize(wa + wb);
            merged.push_back(std::move(copy));
        }
        for (const auto& node : pb.layer(l)) {
            Node copy = node;
            if (!copy.weights.empty() && !(share_input && l == 1)) {
                RatVector w(wa);
                w.insert(w.end(), node.weights.begin(), node.weights.end());
                copy.weights = std::move(w);
            }
            merged.push_back(std::move(copy));
        }
        layers.push_back(std::move(merged));
    }
    return Network(input_dim, std::move(layers));
}

Network freeze_input(const Network& net, std::span<const Rational> center) {
    check_input(net, center);
    std::vector<Layer> layers;
    Layer frozen;
    for (const auto& c : center) frozen.push_back(id_node({}, c));
    layers.push_back(std::move(frozen));
    for (const auto& layer : net.computation_layers()) layers.push_back(layer);
    return Network(net.input_dim(), std::move(layers));
}

Network id_to_relu(const Network& net) {
    if (!net.has_hidden_id()) return net;
    // For every layer, map old node index -> (first new index, split?).
    const auto& old = net.computation_layers();
    std::vector<Layer> layers;
    std::vector<std::size_t> prev_pos;  // new position of each node of the previous layer
    std::vector<bool> prev_split;
    std::size_t prev_width = net.input_dim();
    for (std::size_t i = 0; i < net.input_dim(); ++i) {
        prev_pos.push_back(i);
        prev_split.push_back(false);
    }
    for (std::size_t l = 0; l < old.size(); ++l) {
        bool hidden = l + 1 < old.size();
        Layer out;
        std::vector<std::size_t> pos;
        std::vector<bool> split;
        for (const auto& node : old[l]) {
            RatVector w;
            if (!node.weights.empty()) {
                w.assign(prev_width, Rational{});
                for (std::size_t j = 0; j < node.weights.size(); ++j) {
                    w[prev_pos[j]] = node.weights[j];
                    if (prev_split[j]) w[prev_pos[j] + 1] = -node.weights[j];
                }
            }
            pos.push_back(out.size());
            if (hidden && node.act == Activation::Id) {
                RatVector neg = w;
                for (auto& v : neg) v = -v;
                out.push_back(Node{Activation::ReLU, node.bias, std::move(w)});
                out.push_back(Node{Activation::ReLU, -node.bias, std::move(neg)});
                split.push_back(true);
            } else {
                out.push_back(Node{node.act, node.bias, std::move(w)});
                split.push_back(false);
            }
        }
        prev_width = out.size();
        prev_pos = std::move(pos);
        prev_split = std::move(split);
        layers.push_back(std::move(out));
    }
    return Network(net.input_dim(), std::move(layers));
}

Network delete_nodes(const Network& net, const std::set<NodeRef>& doomed) {
    std::size_t last = net.num_layers() - 1;
    for (const auto& ref : doomed) {
        if (ref.layer == 0 || ref.layer >= last)
            throw std::invalid_argument("cannot delete " + to_string(ref) + ": only hidden nodes may be deleted");
        if (ref.index >= net.width(ref.layer))
            throw std::invalid_argument("cannot delete " + to_string(ref) + ": index out of range");
    }
    std::vector<Layer> layers;
    std::vector<bool> prev_kept(net.input_dim(), true);
    for (std::size_t l = 1; l <= last; ++l) {
        Layer out;
        std::vector<bool> kept;
        for (std::size_t i = 0; i < net.width(l); ++i) {
            bool keep = !doomed.contains(NodeRef{l, i});
            kept.push_back(keep);
            if (!keep) continue;
            const Node& node = net.layer(l)[i];
            Node copy{node.act, node.bias, {}};
            for (std::size_t j = 0; j < node.weights.size(); ++j)
                if (prev_kept[j]) copy.weights.push_back(node.weights[j]);
            out.push_back(std::move(copy));
        }
        prev_kept = std::move(kept);
        layers.push_back(std::move(out));
    }
    return Network(net.input_dim(), std::move(layers));
}

Network append_abs_sum(const Network& net) {
    std::size_t m = net.output_dim();
    Layer parts;
    for (std::size_t i = 0; i < m; ++i) {
        parts.push_back(Node{Activation::ReLU, {}, unit(m, i)});
        parts.push_back(Node{Activation::ReLU, {}, unit(m, i, -1)});
    }
    Layer sum{id_node(RatVector(2 * m, Rational(1)))};
    if (m == 0) sum.front().weights.clear();
    return append_layer(append_layer(net, std::move(parts)), std::move(sum));
}

}  // namespace nnv
