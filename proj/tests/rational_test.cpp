#include "nnv/rational.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

namespace nnv {
namespace {

using testing::q;

TEST(RationalTest, ParsesCanonically) {
    EXPECT_EQ(parse_rational("2/4"), Rational(1, 2));
    EXPECT_EQ(parse_rational("-0.25"), Rational(-1, 4));
    EXPECT_EQ(parse_rational("7"), Rational(7));
    EXPECT_EQ(parse_rational("+3/9"), Rational(1, 3));
    EXPECT_EQ(parse_rational(".5"), Rational(1, 2));
    EXPECT_EQ(parse_rational(" -12/2 ").str(), "-6");
}

TEST(RationalTest, RejectsMalformedText) {
    EXPECT_THROW(parse_rational("3/0"), std::invalid_argument);
    EXPECT_THROW(parse_rational(""), std::invalid_argument);
    EXPECT_THROW(parse_rational("1/2/3"), std::invalid_argument);
    EXPECT_THROW(parse_rational("abc"), std::invalid_argument);
    EXPECT_THROW(parse_rational("1e5"), std::invalid_argument);
    EXPECT_THROW(parse_rational("."), std::invalid_argument);
    EXPECT_THROW(parse_rational("1/-2"), std::invalid_argument);
}

TEST(RationalTest, ExtendedInfinity) {
    auto inf = parse_ext_rational("inf");
    EXPECT_TRUE(inf.is_infinite());
    EXPECT_TRUE(Rational(1000) <= inf);
    EXPECT_FALSE(Rational(2) <= ExtRational(Rational(1)));
    EXPECT_THROW(inf.value(), std::logic_error);
    EXPECT_EQ(inf.str(), "inf");
}

TEST(RationalTest, Distances) {
    EXPECT_EQ(dist(Metric::L1, testing::vec({"1", "2"}), testing::vec({"1", "2"})), Rational(0));
    EXPECT_EQ(dist(Metric::L1, testing::vec({"0", "0"}), testing::vec({"1", "-2"})), Rational(3));
    EXPECT_EQ(dist(Metric::Linf, testing::vec({"0", "0"}), testing::vec({"1", "-2"})), Rational(2));
    EXPECT_THROW(dist(Metric::L1, testing::vec({"0"}), testing::vec({"1", "2"})), std::invalid_argument);
}

TEST(RationalPropertyTest, SerializationAndFieldLaws) {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 500; ++i) {
        Rational a = testing::random_rational(rng, 50, 30);
        Rational b = testing::random_rational(rng, 50, 30);
        Rational c = testing::random_rational(rng, 50, 30);
        EXPECT_EQ(parse_rational(a.str()), a);
        EXPECT_EQ((a + b) + c, a + (b + c));
        EXPECT_EQ(a * b, b * a);
        EXPECT_EQ(a * (b + c), a * b + a * c);
        auto g = gcd(a.raw().get_num(), a.raw().get_den());
        EXPECT_EQ(g, 1);
        EXPECT_GT(a.raw().get_den(), 0);
    }
}

TEST(RationalPropertyTest, MetricAxiomsAndNormEquivalence) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 300; ++i) {
        std::size_t n = 1 + rng() % 4;
        auto x = testing::random_vector(rng, n);
        auto y = testing::random_vector(rng, n);
        auto z = testing::random_vector(rng, n);
        for (Metric m : {Metric::L1, Metric::Linf}) {
            EXPECT_EQ(dist(m, x, y), dist(m, y, x));
            EXPECT_LE(dist(m, x, z), dist(m, x, y) + dist(m, y, z));
        }
        Rational linf = dist(Metric::Linf, x, y);
        Rational l1 = dist(Metric::L1, x, y);
        EXPECT_LE(linf, l1);
        EXPECT_LE(l1, Rational(static_cast<long>(n)) * linf);
    }
}

}  // namespace
}  // namespace nnv
