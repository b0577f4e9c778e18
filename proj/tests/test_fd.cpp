#include <cmath>
#include <map>

#include "doctest.h"
#include "stencilfd/fd.hpp"
#include "support/vandermonde.hpp"

using namespace sfd;

namespace {

std::map<long, Rational> as_map(const std::vector<StencilTap>& taps) {
    std::map<long, Rational> m;
    for (const StencilTap& t : taps) m.emplace(t.offset, t.weight);
    return m;
}

}  // namespace

TEST_SUITE_BEGIN("fd");

TEST_CASE("frozen reference weights") {
    SUBCASE("first derivative, accuracy 2") {
        const auto w = as_map(fd_coefficients(1, 2));
        REQUIRE(w.size() == 2);  // the zero center weight is dropped
        CHECK(w.at(-1) == Rational(-1, 2));
        CHECK(w.at(1) == Rational(1, 2));
    }
    SUBCASE("first derivative, accuracy 4") {
        const auto w = as_map(fd_coefficients(1, 4));
        REQUIRE(w.size() == 4);
        CHECK(w.at(-2) == Rational(1, 12));
        CHECK(w.at(-1) == Rational(-2, 3));
        CHECK(w.at(1) == Rational(2, 3));
        CHECK(w.at(2) == Rational(-1, 12));
    }
    SUBCASE("second derivative, accuracy 2") {
        const auto w = as_map(fd_coefficients(2, 2));
        REQUIRE(w.size() == 3);
        CHECK(w.at(-1) == Rational(1));
        CHECK(w.at(0) == Rational(-2));
        CHECK(w.at(1) == Rational(1));
    }
    SUBCASE("second derivative, accuracy 4") {
        const auto w = as_map(fd_coefficients(2, 4));
        REQUIRE(w.size() == 5);
        CHECK(w.at(-2) == Rational(-1, 12));
        CHECK(w.at(-1) == Rational(4, 3));
        CHECK(w.at(0) == Rational(-5, 2));
        CHECK(w.at(1) == Rational(4, 3));
        CHECK(w.at(2) == Rational(-1, 12));
    }
    SUBCASE("second derivative, accuracy 14") {
        const auto w = as_map(fd_coefficients(2, 14));
        REQUIRE(w.size() == 15);
        CHECK(w.at(0) == Rational(-266681, 88200));
        CHECK(w.at(1) == Rational(7, 4));
        CHECK(w.at(2) == Rational(-7, 24));
        CHECK(w.at(3) == Rational(7, 108));
        CHECK(w.at(4) == Rational(-7, 528));
        CHECK(w.at(5) == Rational(7, 3300));
        CHECK(w.at(6) == Rational(-7, 30888));
        CHECK(w.at(7) == Rational(1, 84084));
    }
}

TEST_CASE("production weights equal the Vandermonde oracle exactly") {
    for (int deriv : {1, 2}) {
        for (int acc = 2; acc <= 14; acc += 2) {
            CAPTURE(deriv);
            CAPTURE(acc);
            const int p = acc / 2;
            const auto oracle = sfd::testing::vandermonde_weights(deriv, acc);
            const auto taps = as_map(fd_coefficients(deriv, acc));
            for (int i = 0; i < 2 * p + 1; ++i) {
                const long off = i - p;
                const Rational expect = oracle[i];
                if (expect.is_zero()) {
                    CHECK(taps.count(off) == 0);
                } else {
                    REQUIRE(taps.count(off) == 1);
                    CHECK(taps.at(off) == expect);
                }
            }
        }
    }
}

TEST_CASE("weights satisfy the moment conditions exactly") {
    for (int deriv : {1, 2}) {
        for (int acc = 2; acc <= 14; acc += 2) {
            const auto taps = fd_coefficients(deriv, acc);
            Rational fact(1);
            for (int t = 2; t <= deriv; ++t) fact = fact * Rational(t);
            for (int j = 0; j < deriv + acc; ++j) {
                Rational moment(0);
                for (const StencilTap& tap : taps) {
                    Rational pw(1);
                    for (int q = 0; q < j; ++q) pw = pw * Rational(tap.offset);
                    moment = moment + tap.weight * pw;
                }
                CAPTURE(deriv);
                CAPTURE(acc);
                CAPTURE(j);
                CHECK(moment == (j == deriv ? fact : Rational(0)));
            }
        }
    }
}

TEST_CASE("weight symmetry follows the derivative parity") {
    for (int acc = 2; acc <= 14; acc += 2) {
        const auto w1 = as_map(fd_coefficients(1, acc));
        const auto w2 = as_map(fd_coefficients(2, acc));
        for (const auto& [off, w] : w1)
            if (off > 0) CHECK(w1.at(-off) == -w);
        CHECK(w1.count(0) == 0);
        for (const auto& [off, w] : w2)
            if (off > 0) CHECK(w2.at(-off) == w);
    }
}

TEST_CASE("applying the stencil converges at the designed order") {
    // Numeric spot check independent of any algebra: differentiate sin at
    // x0 = 0.6 and confirm the error shrinks like h**accuracy.
    const double x0 = 0.6;
    for (int deriv : {1, 2}) {
        for (int acc : {2, 4, 6}) {
            const auto taps = fd_coefficients(deriv, acc);
            auto error_at = [&](double h) {
                double v = 0.0;
                for (const StencilTap& t : taps)
                    v += t.weight.to_double() * std::sin(x0 + t.offset * h);
                v /= std::pow(h, deriv);
                const double truth = deriv == 1 ? std::cos(x0) : -std::sin(x0);
                return std::abs(v - truth);
            };
            const double e1 = error_at(0.5), e2 = error_at(0.25);
            CAPTURE(deriv);
            CAPTURE(acc);
            CHECK(e1 / e2 > 0.6 * std::pow(2.0, acc));
        }
    }
}

TEST_CASE("invalid requests are rejected") {
    CHECK_THROWS_AS(fd_coefficients(3, 2), std::invalid_argument);
    CHECK_THROWS_AS(fd_coefficients(0, 2), std::invalid_argument);
    CHECK_THROWS_AS(fd_coefficients(2, 3), std::invalid_argument);
    CHECK_THROWS_AS(fd_coefficients(2, 0), std::invalid_argument);
    CHECK_THROWS_AS(fd_coefficients(1, -2), std::invalid_argument);
}

TEST_SUITE_END();
