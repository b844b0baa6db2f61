#pragma once

#include "nnv/rational.hpp"

#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace nnv {

enum class Activation : std::uint8_t { ReLU, Id };

/// A computation node: y = act(sum_j weights[j] * prev[j] + bias).
///
/// An empty weight vector marks a detached node, which computes act(bias)
/// regardless of the previous layer (the "empty sum").
struct Node {
    Activation act = Activation::ReLU;
    Rational bias;
    RatVector weights;

    friend bool operator==(const Node&, const Node&) = default;
};

using Layer = std::vector<Node>;

/// Addresses node `index` of layer `layer`; layer 0 is the input layer.
struct NodeRef {
    std::size_t layer = 0;
    std::size_t index = 0;

    friend auto operator<=>(const NodeRef&, const NodeRef&) = default;
};

std::string to_string(const NodeRef& ref);
/// Parses "layer:index".
NodeRef parse_node_ref(const std::string& text);

enum class Phase : std::uint8_t { Inactive, Active, Undecided };

/// One phase per ReLU node, in the order of Network::relu_nodes().
using ActivationPattern = std::vector<Phase>;

std::string to_string(const ActivationPattern& pattern);

/// Layered feedforward network over ReLU and identity nodes with rational data.
class Network {
public:
    Network() = default;
    /// Throws std::invalid_argument when a weight vector does not match the width
    /// of the preceding layer or when there is no computation layer.
    Network(std::size_t input_dim, std::vector<Layer> layers);

    std::size_t input_dim() const { return input_dim_; }
    std::size_t output_dim() const { return layers_.back().size(); }
    /// Number of layers including the input layer (L).
    std::size_t num_layers() const { return layers_.size() + 1; }
    /// Width of layer `l`; layer 0 is the input layer.
    std::size_t width(std::size_t l) const { return l == 0 ? input_dim_ : layers_.at(l - 1).size(); }
    /// Computation layer `l` (1 <= l < num_layers()).
    const Layer& layer(std::size_t l) const { return layers_.at(l - 1); }
    const Node& node(NodeRef ref) const { return layers_.at(ref.layer - 1).at(ref.index); }
    const std::vector<Layer>& computation_layers() const { return layers_; }

    std::size_t node_count() const;
    std::size_t hidden_count() const;
    std::vector<NodeRef> hidden_nodes() const;
    /// ReLU nodes in topological (layer, index) order.
    std::vector<NodeRef> relu_nodes() const;
    std::size_t relu_count() const;
    bool has_hidden_id() const;
    /// Activation set F actually used by the network.
    std::set<Activation> activations() const;

    friend bool operator==(const Network&, const Network&) = default;

private:
    std::size_t input_dim_ = 0;
    std::vector<Layer> layers_;
};

/// Values of every node, indexed [layer][index], layer 0 being the input.
std::vector<RatVector> evaluate_all(const Network& net, std::span<const Rational> x);
/// Exact forward pass. Throws std::invalid_argument on dimension mismatch.
RatVector evaluate(const Network& net, std::span<const Rational> x);
/// Phase of every ReLU node at x; a pre-activation of exactly 0 counts as Active.
ActivationPattern pattern_of(const Network& net, std::span<const Rational> x);

// ---------------------------------------------------------------------------
// Builders. All return fresh networks and leave their arguments untouched.
// ---------------------------------------------------------------------------

/// Identity network R^n -> R^n with a single id layer.
Network identity_network(std::size_t n);
/// Network R^n -> R^m whose output nodes are detached with bias 0.
Network zero_network(std::size_t n, std::size_t m, std::size_t layers = 2);

/// Appends one computation layer whose weights refer to the current output layer.
Network append_layer(const Network& net, Layer layer);
/// Appends identity layers until the network has `num_layers` layers.
Network pad_layers(const Network& net, std::size_t num_layers);
/// outer o inner; requires inner.output_dim() == outer.input_dim().
Network compose(const Network& outer, const Network& inner);

/// Runs a and b side by side. With share_input both read the same x (a(x), b(x));
/// otherwise the input is the concatenation (x, y) and the output (a(x), b(y)).
/// The shorter network is padded with identity layers.
Network stack_parallel(const Network& a, const Network& b, bool share_input);

/// Same input dimension, output constantly net(center). The input layer is
/// disconnected; the old inputs become detached id nodes carrying center as bias.
Network freeze_input(const Network& net, std::span<const Rational> center);

/// Replaces every hidden id node t by ReLU(t) - ReLU(-t); same function.
Network id_to_relu(const Network& net);

/// Induced subnetwork without the given hidden nodes. Throws std::invalid_argument
/// for references to input/output nodes or out-of-range references.
Network delete_nodes(const Network& net, const std::set<NodeRef>& doomed);

/// Scalar output sum_i |net(x)_i|, realized by a ReLU pair per output.
Network append_abs_sum(const Network& net);

}  // namespace nnv
