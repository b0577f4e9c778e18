#include "doctest.h"
#include "stencilfd/rational.hpp"

using sfd::Rational;

TEST_SUITE_BEGIN("rational");

TEST_CASE("construction normalizes sign and gcd") {
    CHECK(Rational(6, 3) == Rational(2));
    CHECK(Rational(2, -4) == Rational(-1, 2));
    CHECK(Rational(-2, -4) == Rational(1, 2));
    CHECK(Rational(0, 7) == Rational(0));
    CHECK(Rational(0, 7).den() == 1);
    CHECK_THROWS_AS(Rational(1, 0), std::domain_error);
}

TEST_CASE("arithmetic stays exact") {
    const Rational a(1, 3), b(1, 6);
    CHECK(a + b == Rational(1, 2));
    CHECK(a - b == Rational(1, 6));
    CHECK(a * b == Rational(1, 18));
    CHECK(a / b == Rational(2));
    CHECK(-a == Rational(-1, 3));
    CHECK_THROWS_AS(a / Rational(0), std::domain_error);
}

TEST_CASE("comparison and formatting") {
    CHECK(Rational(-1, 2) < Rational(1, 3));
    CHECK(Rational(2, 3) < Rational(3, 4));
    CHECK(Rational(7).str() == "7");
    CHECK(Rational(-4, 6).str() == "-2/3");
    CHECK(Rational(1, 2).to_double() == 0.5);
}

TEST_CASE("gcd reduction delays overflow") {
    // 2^40/3 * 3/2^40 collapses to 1 even though the cross products would
    // not fit a 64-bit product of numerators times denominators.
    const std::int64_t big = 1ll << 40;
    CHECK(Rational(big, 3) * Rational(3, big) == Rational(1));
    // A genuinely unrepresentable result must throw, not wrap.
    const Rational huge(INT64_MAX, 1);
    CHECK_THROWS_AS(huge * huge, std::overflow_error);
    CHECK_THROWS_AS(huge + huge, std::overflow_error);
}

TEST_SUITE_END();
