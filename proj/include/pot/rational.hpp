#pragma once

#include <charconv>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>

#include "pot/util.hpp"

namespace pot {

/// Exact rational with a positive denominator, always reduced to lowest
/// terms. Arithmetic uses 128-bit intermediates, so puzzle-scale values
/// can never overflow silently.
class Rational {
public:
    constexpr Rational() : num_(0), den_(1) {}
    constexpr Rational(std::int64_t n) : num_(n), den_(1) {}

    Rational(std::int64_t num, std::int64_t den) {
        if (den == 0) throw std::domain_error("Rational: zero denominator");
        normalize(num, den);
    }

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }
    bool is_zero() const { return num_ == 0; }
    bool is_integer() const { return den_ == 1; }

    friend Rational operator+(const Rational& a, const Rational& b) {
        return make(i128(a.num_) * b.den_ + i128(b.num_) * a.den_, i128(a.den_) * b.den_);
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        return make(i128(a.num_) * b.den_ - i128(b.num_) * a.den_, i128(a.den_) * b.den_);
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return make(i128(a.num_) * b.num_, i128(a.den_) * b.den_);
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.is_zero()) throw std::domain_error("Rational: division by zero");
        return make(i128(a.num_) * b.den_, i128(a.den_) * b.num_);
    }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend bool operator<(const Rational& a, const Rational& b) {
        return i128(a.num_) * b.den_ < i128(b.num_) * a.den_;
    }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
    friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
    friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
    friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }

    std::string str() const {
        std::string s = std::to_string(num_);
        if (den_ != 1) s += "/" + std::to_string(den_);
        return s;
    }

    /// Accepts "n", "n/d" and plain decimals ("1.5").
    static Rational parse(std::string_view text) {
        text = trim(text);
        if (text.empty()) throw std::invalid_argument("Rational: empty token");
        if (auto slash = text.find('/'); slash != std::string_view::npos) {
            return Rational(parse_int(text.substr(0, slash)), parse_int(text.substr(slash + 1)));
        }
        if (auto dot = text.find('.'); dot != std::string_view::npos) {
            auto whole = text.substr(0, dot);
            auto frac = text.substr(dot + 1);
            if (frac.empty() || frac.size() > 15) throw std::invalid_argument("Rational: bad decimal");
            std::int64_t den = 1;
            for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
            bool neg = !whole.empty() && whole.front() == '-';
            std::int64_t w = whole.empty() || whole == "-" ? 0 : parse_int(whole);
            std::int64_t f = parse_int(frac);
            std::int64_t num = (neg ? -1 : 1) * ((neg ? -w : w) * den + f);
            return Rational(num, den);
        }
        return Rational(parse_int(text));
    }

    std::uint64_t digest(std::uint64_t seed = 0xcbf29ce484222325ull) const {
        std::uint64_t h = fnv1a64(std::string_view(reinterpret_cast<const char*>(&num_), sizeof(num_)), seed);
        return fnv1a64(std::string_view(reinterpret_cast<const char*>(&den_), sizeof(den_)), h);
    }

private:
    using i128 = __int128;

    static Rational make(i128 num, i128 den) {
        if (den == 0) throw std::domain_error("Rational: zero denominator");
        if (den < 0) { num = -num; den = -den; }
        i128 g = gcd128(num < 0 ? -num : num, den);
        if (g > 1) { num /= g; den /= g; }
        constexpr i128 lo = INT64_MIN, hi = INT64_MAX;
        if (num < lo || num > hi || den > hi)
            throw std::overflow_error("Rational: value out of range");
        Rational r;
        r.num_ = static_cast<std::int64_t>(num);
        r.den_ = static_cast<std::int64_t>(den);
        return r;
    }

    static i128 gcd128(i128 a, i128 b) {
        while (b != 0) { i128 t = a % b; a = b; b = t; }
        return a == 0 ? 1 : a;
    }

    void normalize(std::int64_t num, std::int64_t den) {
        Rational r = make(num, den);
        num_ = r.num_;
        den_ = r.den_;
    }

    static std::int64_t parse_int(std::string_view s) {
        s = trim(s);
        std::int64_t v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size())
            throw std::invalid_argument("Rational: non-numeric token '" + std::string(s) + "'");
        return v;
    }

    std::int64_t num_;
    std::int64_t den_;
};

} // namespace pot

template <>
struct std::hash<pot::Rational> {
    std::size_t operator()(const pot::Rational& r) const noexcept { return r.digest(); }
};
