#pragma once

#include <mpfr.h>

#include <cstdint>
#include <string>
#include <utility>

#include "qzeta/errors.hpp"

namespace qzeta {

/// Arbitrary-precision binary float (MPFR-backed, value semantics).
///
/// Every value carries its own mantissa width; arithmetic between two
/// values rounds to the minimum of the operand precisions.
class Real {
  public:
    static constexpr mpfr_prec_t kMinPrecision = 64;

    static mpfr_prec_t& default_precision() {
        static mpfr_prec_t prec = 256;
        return prec;
    }

    explicit Real(mpfr_prec_t prec = default_precision()) {
        mpfr_init2(v_, check_prec(prec));
        mpfr_set_zero(v_, 1);
    }
    Real(long x, mpfr_prec_t prec) {
        mpfr_init2(v_, check_prec(prec));
        mpfr_set_si(v_, x, MPFR_RNDN);
    }
    Real(int x, mpfr_prec_t prec) : Real(static_cast<long>(x), prec) {}
    Real(double x, mpfr_prec_t prec) {
        mpfr_init2(v_, check_prec(prec));
        mpfr_set_d(v_, x, MPFR_RNDN);
    }
    /// Parse a decimal string at the requested precision.
    Real(const std::string& s, mpfr_prec_t prec) {
        mpfr_init2(v_, check_prec(prec));
        if (mpfr_set_str(v_, s.c_str(), 10, MPFR_RNDN) != 0)
            throw DomainError("Real: cannot parse '" + s + "'");
    }

    Real(const Real& o) {
        mpfr_init2(v_, mpfr_get_prec(o.v_));
        mpfr_set(v_, o.v_, MPFR_RNDN);
    }
    Real(Real&& o) noexcept {
        mpfr_init2(v_, mpfr_get_prec(o.v_));
        mpfr_swap(v_, o.v_);
    }
    Real& operator=(const Real& o) {
        if (this != &o) {
            mpfr_set_prec(v_, mpfr_get_prec(o.v_));
            mpfr_set(v_, o.v_, MPFR_RNDN);
        }
        return *this;
    }
    Real& operator=(Real&& o) noexcept {
        if (this != &o) mpfr_swap(v_, o.v_);
        return *this;
    }
    ~Real() { mpfr_clear(v_); }

    mpfr_prec_t precision() const { return mpfr_get_prec(v_); }
    const mpfr_t& raw() const { return v_; }
    mpfr_t& raw() { return v_; }

    bool is_zero() const { return mpfr_zero_p(v_) != 0; }
    int sign() const { return mpfr_sgn(v_); }
    double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
    long to_long() const { return mpfr_get_si(v_, MPFR_RNDN); }

    /// Deterministic decimal rendering with enough digits to round-trip.
    std::string str(size_t digits = 0) const {
        if (digits == 0)
            digits = static_cast<size_t>(precision() * 0.30103) + 3;
        char* s = nullptr;
        int n = mpfr_asprintf(&s, "%.*Rg", static_cast<int>(digits), v_);
        std::string out = (n >= 0 && s) ? std::string(s) : std::string("nan");
        if (s) mpfr_free_str(s);
        return out;
    }

    friend Real operator+(const Real& a, const Real& b) {
        Real r(op_prec(a, b));
        mpfr_add(r.v_, a.v_, b.v_, MPFR_RNDN);
        return r;
    }
    friend Real operator-(const Real& a, const Real& b) {
        Real r(op_prec(a, b));
        mpfr_sub(r.v_, a.v_, b.v_, MPFR_RNDN);
        return r;
    }
    friend Real operator*(const Real& a, const Real& b) {
        Real r(op_prec(a, b));
        mpfr_mul(r.v_, a.v_, b.v_, MPFR_RNDN);
        return r;
    }
    friend Real operator/(const Real& a, const Real& b) {
        Real r(op_prec(a, b));
        mpfr_div(r.v_, a.v_, b.v_, MPFR_RNDN);
        return r;
    }
    Real operator-() const {
        Real r(precision());
        mpfr_neg(r.v_, v_, MPFR_RNDN);
        return r;
    }
    Real& operator+=(const Real& o) { return *this = *this + o; }
    Real& operator-=(const Real& o) { return *this = *this - o; }
    Real& operator*=(const Real& o) { return *this = *this * o; }
    Real& operator/=(const Real& o) { return *this = *this / o; }

    friend bool operator<(const Real& a, const Real& b) { return mpfr_less_p(a.v_, b.v_) != 0; }
    friend bool operator>(const Real& a, const Real& b) { return mpfr_greater_p(a.v_, b.v_) != 0; }
    friend bool operator<=(const Real& a, const Real& b) { return mpfr_lessequal_p(a.v_, b.v_) != 0; }
    friend bool operator>=(const Real& a, const Real& b) { return mpfr_greaterequal_p(a.v_, b.v_) != 0; }
    friend bool operator==(const Real& a, const Real& b) { return mpfr_equal_p(a.v_, b.v_) != 0; }
    friend bool operator!=(const Real& a, const Real& b) { return !(a == b); }

    friend Real abs(const Real& a) {
        Real r(a.precision());
        mpfr_abs(r.v_, a.v_, MPFR_RNDN);
        return r;
    }
    friend Real exp(const Real& a) {
        Real r(a.precision());
        mpfr_exp(r.v_, a.v_, MPFR_RNDN);
        return r;
    }
    friend Real log(const Real& a) {
        Real r(a.precision());
        mpfr_log(r.v_, a.v_, MPFR_RNDN);
        return r;
    }
    friend Real sqrt(const Real& a) {
        Real r(a.precision());
        mpfr_sqrt(r.v_, a.v_, MPFR_RNDN);
        return r;
    }
    friend Real floor(const Real& a) {
        Real r(a.precision());
        mpfr_floor(r.v_, a.v_);
        return r;
    }
    /// a^n for integer n (exact binary powering in MPFR).
    friend Real pow_si(const Real& a, long n) {
        Real r(a.precision());
        mpfr_pow_si(r.v_, a.v_, n, MPFR_RNDN);
        return r;
    }
    /// a^b = exp(b ln a), a > 0.
    friend Real pow(const Real& a, const Real& b) {
        Real r(op_prec(a, b));
        mpfr_pow(r.v_, a.v_, b.v_, MPFR_RNDN);
        return r;
    }

    static Real pi(mpfr_prec_t prec) {
        Real r(prec);
        mpfr_const_pi(r.v_, MPFR_RNDN);
        return r;
    }

  private:
    static mpfr_prec_t check_prec(mpfr_prec_t p) {
        if (p < kMinPrecision)
            throw DomainError("Real: precision_bits must be >= 64");
        return p;
    }
    static mpfr_prec_t op_prec(const Real& a, const Real& b) {
        return std::min(mpfr_get_prec(a.v_), mpfr_get_prec(b.v_));
    }

    mpfr_t v_;
};

/// |x - y| <= tol * max(1, |x|, |y|).
inline bool approx_equal(const Real& x, const Real& y, const Real& tol) {
    Real scale(1L, x.precision());
    if (abs(x) > scale) scale = abs(x);
    if (abs(y) > scale) scale = abs(y);
    return abs(x - y) <= tol * scale;
}

/// Default coefficient-equality tolerance, 2^(10 - precision).
inline Real default_tolerance(mpfr_prec_t prec = Real::default_precision()) {
    Real t(1L, prec);
    mpfr_mul_2si(t.raw(), t.raw(), 10 - static_cast<long>(prec), MPFR_RNDN);
    return t;
}

} // namespace qzeta
