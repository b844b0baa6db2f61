#include "nnv/network.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

namespace nnv {
namespace {

using testing::example_k;
using testing::example_m;
using testing::example_n;
using testing::example_q;
using testing::vec;

// Affine map (matrix, offset) of the whole net under a fixed pattern, built by
// multiplying per-layer matrices. Independent of evaluate().
struct Affine {
    std::vector<RatVector> a;  // rows = outputs
    RatVector c;
};

Affine affine_for_pattern(const Network& net, const ActivationPattern& pattern) {
    std::size_t n = net.input_dim();
    Affine cur;
    for (std::size_t i = 0; i < n; ++i) {
        RatVector row(n);
        row[i] = 1;
        cur.a.push_back(row);
        cur.c.push_back(0);
    }
    std::size_t k = 0;
    for (std::size_t l = 1; l < net.num_layers(); ++l) {
        Affine next;
        for (const auto& node : net.layer(l)) {
            RatVector row(n);
            Rational off = node.bias;
            for (std::size_t j = 0; j < node.weights.size(); ++j) {
                for (std::size_t v = 0; v < n; ++v) row[v] += node.weights[j] * cur.a[j][v];
                off += node.weights[j] * cur.c[j];
            }
            if (node.act == Activation::ReLU && pattern[k++] == Phase::Inactive) {
                row.assign(n, Rational{});
                off = 0;
            }
            next.a.push_back(row);
            next.c.push_back(off);
        }
        cur = std::move(next);
    }
    return cur;
}

RatVector apply_affine(const Affine& f, const RatVector& x) {
    RatVector y;
    for (std::size_t i = 0; i < f.a.size(); ++i) y.push_back(dot(f.a[i], x) + f.c[i]);
    return y;
}

TEST(NetworkTest, RejectsMismatchedWeights) {
    Layer bad{Node{Activation::ReLU, 0, {1, 2, 3}}};
    EXPECT_THROW(Network(2, {bad}), std::invalid_argument);
    EXPECT_THROW(Network(2, {}), std::invalid_argument);
    EXPECT_THROW(evaluate(example_n(), vec({"1", "2"})), std::invalid_argument);
}

TEST(NetworkTest, ExampleNetworks) {
    EXPECT_EQ(evaluate(example_n(), vec({"-3"})), vec({"-3"}));
    EXPECT_EQ(evaluate(example_n(), vec({"5/2"})), vec({"5/2"}));
    for (const char* x : {"-7", "0", "13/3"}) {
        EXPECT_EQ(evaluate(example_q(), vec({x})), vec({"0"}));
        EXPECT_EQ(evaluate(example_k(), vec({x})), vec({"0"}));
    }
}

TEST(NetworkTest, PatternBoundaryIsActive) {
    using enum Phase;
    EXPECT_EQ(pattern_of(example_n(), vec({"2"})), (ActivationPattern{Active, Inactive}));
    EXPECT_EQ(pattern_of(example_n(), vec({"0"})), (ActivationPattern{Active, Active}));
}

TEST(NetworkTest, StackParallel) {
    auto both = stack_parallel(example_n(), example_n(), true);
    EXPECT_EQ(evaluate(both, vec({"1"})), vec({"1", "1"}));
    auto mixed = stack_parallel(example_m(), example_q(), true);
    EXPECT_EQ(evaluate(mixed, vec({"5"})), vec({"5", "0"}));
    auto split = stack_parallel(example_n(), example_m(), false);
    EXPECT_EQ(split.input_dim(), 2u);
    EXPECT_EQ(evaluate(split, vec({"-2", "7"})), vec({"-2", "7"}));
    EXPECT_THROW(stack_parallel(example_n(), identity_network(2), true), std::invalid_argument);
}

TEST(NetworkTest, FreezeInput) {
    auto frozen = freeze_input(example_n(), vec({"7"}));
    for (const char* x : {"-1", "0", "100"}) EXPECT_EQ(evaluate(frozen, vec({x})), vec({"7"}));
    EXPECT_EQ(evaluate(freeze_input(example_q(), vec({"3"})), vec({"9"})), vec({"0"}));
}

TEST(NetworkTest, IdToRelu) {
    Network single(1, {Layer{Node{Activation::Id, 0, {1}}}, Layer{Node{Activation::Id, 0, {1}}}});
    auto converted = id_to_relu(single);
    EXPECT_FALSE(converted.has_hidden_id());
    EXPECT_EQ(converted.width(1), 2u);
    EXPECT_EQ(evaluate(converted, vec({"-3"})), vec({"-3"}));
    EXPECT_EQ(id_to_relu(example_n()).node_count(), example_n().node_count());
}

TEST(NetworkTest, DeleteNodes) {
    auto neg = delete_nodes(example_n(), {{1, 0}});
    EXPECT_EQ(evaluate(neg, vec({"-2"})), vec({"-2"}));
    EXPECT_EQ(evaluate(neg, vec({"3"})), vec({"0"}));
    auto zero = delete_nodes(example_n(), {{1, 0}, {1, 1}});
    EXPECT_EQ(zero, example_q());
    EXPECT_EQ(evaluate(zero, vec({"4"})), vec({"0"}));
    EXPECT_THROW(delete_nodes(example_n(), {{2, 0}}), std::invalid_argument);
    EXPECT_THROW(delete_nodes(example_n(), {{0, 0}}), std::invalid_argument);
    EXPECT_THROW(delete_nodes(example_n(), {{1, 5}}), std::invalid_argument);
}

TEST(NetworkTest, AbsSum) {
    EXPECT_EQ(evaluate(append_abs_sum(identity_network(1)), vec({"-4"})), vec({"4"}));
    auto two = stack_parallel(identity_network(1), identity_network(1), false);
    EXPECT_EQ(evaluate(append_abs_sum(two), vec({"1", "-2"})), vec({"3"}));
}

TEST(NetworkTest, NodeRefs) {
    EXPECT_EQ(parse_node_ref("2:3"), (NodeRef{2, 3}));
    EXPECT_EQ(to_string(NodeRef{1, 0}), "1:0");
    EXPECT_THROW(parse_node_ref("2"), std::invalid_argument);
    EXPECT_THROW(parse_node_ref("a:1"), std::invalid_argument);
}

class NetworkPropertyTest : public ::testing::Test {
protected:
    std::mt19937_64 rng{2024};
    Network random_net() {
        testing::NetShape shape;
        shape.input_dim = 1 + rng() % 3;
        shape.hidden = {1 + rng() % 3, 1 + rng() % 3};
        shape.output_dim = 1 + rng() % 2;
        shape.id_fraction = 0.3;
        return testing::random_network(rng, shape);
    }
};

TEST_F(NetworkPropertyTest, EvaluateIsPiecewiseAffine) {
    for (int t = 0; t < 100; ++t) {
        auto net = random_net();
        auto x = testing::random_vector(rng, net.input_dim());
        auto f = affine_for_pattern(net, pattern_of(net, x));
        EXPECT_EQ(apply_affine(f, x), evaluate(net, x));
    }
}

TEST_F(NetworkPropertyTest, BuildersRealizeTheirSemantics) {
    for (int t = 0; t < 50; ++t) {
        auto a = random_net();
        auto b = random_net();
        auto relu_only = id_to_relu(a);
        EXPECT_FALSE(relu_only.has_hidden_id());
        auto center = testing::random_vector(rng, a.input_dim());
        auto frozen = freeze_input(a, center);
        auto abs_net = append_abs_sum(a);
        auto split = stack_parallel(a, b, false);
        EXPECT_EQ(delete_nodes(a, {}), a);
        for (int s = 0; s < 10; ++s) {
            auto x = testing::random_vector(rng, a.input_dim());
            auto y = testing::random_vector(rng, b.input_dim());
            auto ax = evaluate(a, x);
            EXPECT_EQ(evaluate(relu_only, x), ax);
            EXPECT_EQ(evaluate(frozen, x), evaluate(a, center));
            Rational total;
            for (const auto& v : ax) total += v.abs();
            EXPECT_EQ(evaluate(abs_net, x), RatVector{total});
            RatVector xy = x;
            xy.insert(xy.end(), y.begin(), y.end());
            RatVector expect = ax;
            auto by = evaluate(b, y);
            expect.insert(expect.end(), by.begin(), by.end());
            EXPECT_EQ(evaluate(split, xy), expect);
            if (a.input_dim() == b.input_dim()) {
                RatVector shared = ax;
                auto bx = evaluate(b, x);
                shared.insert(shared.end(), bx.begin(), bx.end());
                EXPECT_EQ(evaluate(stack_parallel(a, b, true), x), shared);
            }
        }
    }
}

}  // namespace
}  // namespace nnv
