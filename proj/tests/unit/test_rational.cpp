#include <paramsynth/rational.hpp>

#include <gtest/gtest.h>

using namespace paramsynth;

TEST(Rational, ParsesFractionsAndDecimalsExactly) {
    EXPECT_EQ(*parse_rational("3/4"), Rational(3, 4));
    EXPECT_EQ(*parse_rational("-1/3"), Rational(-1, 3));
    EXPECT_EQ(*parse_rational("0.1"), Rational(1, 10));
    EXPECT_EQ(*parse_rational("1e-5"), Rational(1, 100000));
    EXPECT_EQ(*parse_rational("2.5E2"), Rational(250));
    EXPECT_EQ(*parse_rational(".5"), Rational(1, 2));
    EXPECT_EQ(*parse_rational("+7"), Rational(7));
    EXPECT_EQ(*parse_rational("0.084"), Rational(84, 1000));
    EXPECT_EQ(*parse_rational("007/08"), Rational(7, 8));
    EXPECT_EQ(*parse_rational("0.0"), Rational(0));
}

TEST(Rational, RejectsMalformedText) {
    for (const char* bad : {"", "1/0", "abc", "1..2", "1/-2", "e5", "1e", "--1", "1/2/3"})
        EXPECT_FALSE(parse_rational(bad).has_value()) << bad;
}

TEST(Rational, DecimalRationalIsShortestRoundTrip) {
    EXPECT_EQ(decimal_rational(0.1), Rational(1, 10));
    EXPECT_EQ(decimal_rational(1e-5), Rational(1, 100000));
    EXPECT_EQ(to_double(decimal_rational(0.123456789)), 0.123456789);
    EXPECT_EQ(format_decimal(0.5), "0.5");
}

TEST(Rational, FromDoubleIsExact) {
    EXPECT_EQ(from_double(0.5), Rational(1, 2));
    EXPECT_NE(from_double(0.1), Rational(1, 10));
    EXPECT_THROW(from_double(std::numeric_limits<double>::infinity()), std::invalid_argument);
}

TEST(Rational, ToString) {
    EXPECT_EQ(to_string(Rational(3, 6)), "1/2");
    EXPECT_EQ(to_string(Rational(-4)), "-4");
}
