#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace sfd {

/// Exact rational arithmetic on 64-bit integers.
///
/// Finite-difference weights and the symbolic simplifier stay exact until
/// lowering converts everything to doubles.  All operations reduce through
/// gcd before multiplying and check the final narrowing from 128-bit
/// intermediates, so overflow raises instead of corrupting a coefficient.
class Rational {
public:
    constexpr Rational() : num_(0), den_(1) {}
    constexpr Rational(std::int64_t n) : num_(n), den_(1) {}

    Rational(std::int64_t n, std::int64_t d) {
        if (d == 0) throw std::domain_error("Rational: zero denominator");
        if (d < 0) { n = -n; d = -d; }
        const std::int64_t g = std::gcd(n < 0 ? -n : n, d);
        num_ = g ? n / g : n;
        den_ = g ? d / g : d;
    }

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }
    bool is_zero() const { return num_ == 0; }
    bool is_integer() const { return den_ == 1; }
    bool is_negative() const { return num_ < 0; }

    double to_double() const {
        return static_cast<double>(num_) / static_cast<double>(den_);
    }

    Rational operator-() const { return Rational(-num_, den_, raw_tag{}); }

    friend Rational operator+(const Rational& a, const Rational& b) {
        // a.n/a.d + b.n/b.d with the classic gcd trick to delay overflow.
        const std::int64_t g = std::gcd(a.den_, b.den_);
        const __int128 n = static_cast<__int128>(a.num_) * (b.den_ / g) +
                           static_cast<__int128>(b.num_) * (a.den_ / g);
        const __int128 d = static_cast<__int128>(a.den_) * (b.den_ / g);
        return make_reduced(n, d);
    }

    friend Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }

    friend Rational operator*(const Rational& a, const Rational& b) {
        const std::int64_t g1 = std::gcd(a.num_ < 0 ? -a.num_ : a.num_, b.den_);
        const std::int64_t g2 = std::gcd(b.num_ < 0 ? -b.num_ : b.num_, a.den_);
        const __int128 n = static_cast<__int128>(a.num_ / g1) * (b.num_ / g2);
        const __int128 d = static_cast<__int128>(a.den_ / g2) * (b.den_ / g1);
        return make_reduced(n, d);
    }

    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.num_ == 0) throw std::domain_error("Rational: division by zero");
        return a * Rational(b.den_, b.num_);
    }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }

    friend bool operator<(const Rational& a, const Rational& b) {
        return static_cast<__int128>(a.num_) * b.den_ <
               static_cast<__int128>(b.num_) * a.den_;
    }

    std::string str() const {
        if (den_ == 1) return std::to_string(num_);
        return std::to_string(num_) + "/" + std::to_string(den_);
    }

private:
    struct raw_tag {};
    constexpr Rational(std::int64_t n, std::int64_t d, raw_tag) : num_(n), den_(d) {}

    static Rational make_reduced(__int128 n, __int128 d) {
        if (d < 0) { n = -n; d = -d; }
        const __int128 an = n < 0 ? -n : n;
        __int128 g = gcd128(an, d);
        if (g == 0) g = 1;
        n /= g;
        d /= g;
        constexpr __int128 lo = INT64_MIN, hi = INT64_MAX;
        if (n < lo || n > hi || d > hi)
            throw std::overflow_error("Rational: value exceeds 64-bit range");
        return Rational(static_cast<std::int64_t>(n), static_cast<std::int64_t>(d), raw_tag{});
    }

    static __int128 gcd128(__int128 a, __int128 b) {
        while (b) { const __int128 t = a % b; a = b; b = t; }
        return a;
    }

    std::int64_t num_;
    std::int64_t den_;
};

}  // namespace sfd
