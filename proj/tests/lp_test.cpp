#include "nnv/lp.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

namespace nnv {
namespace {

LinSpec spec1(std::initializer_list<std::tuple<const char*, Relation, const char*>> rows) {
    LinSpec s(1);
    for (const auto& [c, rel, rhs] : rows) s.add({{0, parse_rational(c)}}, rel, parse_rational(rhs));
    return s;
}

TEST(LpTest, ClosedPointWithStrictCap) {
    // x <= 1, x >= 1, x < 2
    auto s = spec1({{"1", Relation::LE, "1"}, {"-1", Relation::LE, "-1"}, {"1", Relation::LT, "2"}});
    auto f = feasible(s);
    ASSERT_TRUE(f.feasible);
    EXPECT_EQ(f.witness, testing::vec({"1"}));
    EXPECT_TRUE(fm_feasible(s));
}

TEST(LpTest, OpposingStrictRowsAreInfeasible) {
    auto s = spec1({{"1", Relation::LT, "0"}, {"-1", Relation::LT, "0"}});
    EXPECT_FALSE(feasible(s).feasible);
    EXPECT_FALSE(fm_feasible(s));
    auto t = max_slack(s);
    ASSERT_TRUE(t.has_value());
    EXPECT_LE(*t, Rational(0));
}

TEST(LpTest, OpenIntervalHasPositiveSlack) {
    auto s = spec1({{"1", Relation::LT, "1"}, {"-1", Relation::LT, "0"}});
    auto t = max_slack(s);
    ASSERT_TRUE(t.has_value());
    EXPECT_GT(*t, Rational(0));
    EXPECT_TRUE(feasible(s).feasible);
}

TEST(LpTest, FourierMotzkinExamples) {
    LinSpec s(2);
    s.add({{0, 1}, {1, 1}}, Relation::LE, 1);
    s.add({{0, -1}}, Relation::LE, -2);
    s.add({{1, -1}}, Relation::LE, 0);
    EXPECT_FALSE(fm_feasible(s));
    EXPECT_FALSE(feasible(s).feasible);
    EXPECT_TRUE(fm_feasible(spec1({{"1", Relation::LT, "1"}})));
    EXPECT_THROW(fm_feasible(LinSpec(7)), std::invalid_argument);
}

TEST(LpTest, EmptySpecIsFeasibleAtOrigin) {
    auto f = feasible(LinSpec(3));
    ASSERT_TRUE(f.feasible);
    EXPECT_EQ(f.witness, RatVector(3));
    EXPECT_FALSE(feasible(spec1({{"0", Relation::LE, "-1"}})).feasible);
    EXPECT_FALSE(feasible(spec1({{"0", Relation::EQ, "2"}})).feasible);
    EXPECT_TRUE(feasible(spec1({{"0", Relation::EQ, "0"}})).feasible);
}

TEST(LpTest, EqualityRows) {
    LinSpec s(2);
    s.add({{0, 1}, {1, 1}}, Relation::EQ, 3);
    s.add({{0, 1}, {1, -1}}, Relation::EQ, 1);
    s.add({{0, 2}, {1, 2}}, Relation::EQ, 6);  // redundant
    auto f = feasible(s);
    ASSERT_TRUE(f.feasible);
    EXPECT_EQ(f.witness, testing::vec({"2", "1"}));
}

// Degenerate systems in the style of Beale's cycling example: many constraints
// tight at the origin. Bland's rule must terminate.
TEST(LpTest, DegenerateCorporaTerminate) {
    LinSpec beale(4);
    beale.add({{0, Rational(1, 4)}, {1, -8}, {2, -1}, {3, 9}}, Relation::LE, 0);
    beale.add({{0, Rational(1, 2)}, {1, -12}, {2, Rational(-1, 2)}, {3, 3}}, Relation::LE, 0);
    beale.add({{2, 1}}, Relation::LE, 1);
    for (std::size_t j = 0; j < 4; ++j) beale.add({{j, -1}}, Relation::LE, 0);
    // Ask for a strictly improving direction of Beale's objective.
    beale.add({{0, Rational(-3, 4)}, {1, 20}, {2, Rational(-1, 2)}, {3, 6}}, Relation::LT, 0);
    auto f = feasible(beale);
    EXPECT_TRUE(f.feasible);
    EXPECT_TRUE(fm_feasible(beale));

    std::mt19937_64 rng(99);
    for (int t = 0; t < 50; ++t) {
        LinSpec s(3);
        for (int r = 0; r < 8; ++r) {
            auto c = testing::random_vector(rng, 3, 2, 1);
            s.add(LinRow{c, r % 3 == 0 ? Relation::LT : Relation::LE, 0});
        }
        EXPECT_EQ(feasible(s).feasible, fm_feasible(s));
    }
}

TEST(LpPropertyTest, AgreesWithFourierMotzkin) {
    std::mt19937_64 rng(17);
    int feasible_count = 0;
    for (int t = 0; t < 500; ++t) {
        std::size_t n = 1 + rng() % 4;
        std::size_t rows = 1 + rng() % 7;
        LinSpec s(n);
        for (std::size_t r = 0; r < rows; ++r) {
            auto rel = static_cast<Relation>(rng() % 5 == 0 ? 2 : rng() % 2);
            s.add(LinRow{testing::random_vector(rng, n, 3, 2), rel, testing::random_rational(rng, 3, 2)});
        }
        auto f = feasible(s);
        ASSERT_EQ(f.feasible, fm_feasible(s)) << "trial " << t;
        if (f.feasible) {
            ++feasible_count;
            EXPECT_TRUE(s.satisfied_by(f.witness));
        }
    }
    EXPECT_GT(feasible_count, 50);
    EXPECT_LT(feasible_count, 450);
}

TEST(LpPropertyTest, PlantedInteriorPointGivesPositiveSlack) {
    std::mt19937_64 rng(23);
    for (int t = 0; t < 100; ++t) {
        std::size_t n = 1 + rng() % 4;
        auto p = testing::random_vector(rng, n);
        LinSpec s(n);
        for (int r = 0; r < 6; ++r) {
            auto c = testing::random_vector(rng, n, 3, 2);
            Rational margin = Rational(1 + static_cast<long>(rng() % 3), 2);
            s.add(LinRow{c, Relation::LT, dot(c, p) + margin});
        }
        auto slack = max_slack(s);
        ASSERT_TRUE(slack.has_value());
        EXPECT_GT(*slack, Rational(0));
    }
}

}  // namespace
}  // namespace nnv
