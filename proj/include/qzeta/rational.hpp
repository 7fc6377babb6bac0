#pragma once

#include <cstdint>
#include <numeric>
#include <string>

#include "qzeta/errors.hpp"
#include "qzeta/real.hpp"

namespace qzeta {

/// Small exact rational, used for direction entries and memo keys.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    Rational() = default;
    Rational(std::int64_t n, std::int64_t d = 1) : num(n), den(d) {
        if (den == 0) throw DomainError("Rational: zero denominator");
        normalize();
    }

    void normalize() {
        if (den < 0) { num = -num; den = -den; }
        std::int64_t g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) { num /= g; den /= g; }
        if (num == 0) den = 1;
    }

    bool is_zero() const { return num == 0; }
    bool operator==(const Rational&) const = default;
    auto operator<=>(const Rational& o) const {
        return num * o.den <=> o.num * den;
    }

    friend Rational operator+(Rational a, Rational b) {
        return {a.num * b.den + b.num * a.den, a.den * b.den};
    }
    friend Rational operator-(Rational a, Rational b) {
        return {a.num * b.den - b.num * a.den, a.den * b.den};
    }
    friend Rational operator*(Rational a, Rational b) {
        return {a.num * b.num, a.den * b.den};
    }
    friend Rational operator/(Rational a, Rational b) {
        if (b.num == 0) throw DomainError("Rational: division by zero");
        return {a.num * b.den, a.den * b.num};
    }

    Real to_real(mpfr_prec_t prec) const {
        return Real(static_cast<long>(num), prec) / Real(static_cast<long>(den), prec);
    }
    std::string str() const {
        return den == 1 ? std::to_string(num)
                        : std::to_string(num) + "/" + std::to_string(den);
    }
};

} // namespace qzeta
