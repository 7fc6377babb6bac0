#pragma once

#include <map>
#include <vector>

#include "qzeta/constants.hpp"
#include "qzeta/errors.hpp"
#include "qzeta/rational.hpp"
#include "qzeta/real.hpp"

namespace qzeta {

/// Horizon value marking a series that is complete at every order (scalars,
/// exact monomials). Min-combines harmlessly with finite horizons.
inline constexpr int kExactHi = 1 << 20;

/// Truncated Laurent series in the direction perturbation delta.
///
/// `hi` is the tightest exponent through which every coefficient is complete;
/// operations propagate it and never silently widen it.
class DeltaSeries {
  public:
    explicit DeltaSeries(mpfr_prec_t prec = Real::default_precision(), int hi = kExactHi)
        : prec_(prec), lo_(0), hi_(hi) {}

    static DeltaSeries scalar(const Real& c, int hi = kExactHi) {
        DeltaSeries s(c.precision(), hi);
        s.set(0, c);
        return s;
    }
    static DeltaSeries monomial(const Real& c, int exponent, int hi = kExactHi) {
        DeltaSeries s(c.precision(), hi);
        s.set(exponent, c);
        s.lo_ = exponent < 0 ? exponent : 0;
        return s;
    }

    mpfr_prec_t precision() const { return prec_; }
    int lo() const { return lo_; }
    int hi() const { return hi_; }
    const std::map<int, Real>& coeffs() const { return coeffs_; }
    bool is_structurally_zero() const { return coeffs_.empty(); }

    Real coeff(int e) const {
        auto it = coeffs_.find(e);
        return it == coeffs_.end() ? Real(0L, prec_) : it->second;
    }
    void set(int e, const Real& c) {
        if (e > hi_) return;
        if (c.is_zero())
            coeffs_.erase(e);
        else
            coeffs_[e] = c;
        if (e < lo_) lo_ = e;
    }
    void add_to(int e, const Real& c) {
        if (e > hi_) return;
        auto [it, inserted] = coeffs_.try_emplace(e, c);
        if (!inserted) it->second += c;
        if (it->second.is_zero()) coeffs_.erase(it);
        if (e < lo_) lo_ = e;
    }

    Real max_abs_coeff() const {
        Real m(0L, prec_);
        for (const auto& [e, c] : coeffs_)
            if (abs(c) > m) m = abs(c);
        return m;
    }

    DeltaSeries& operator+=(const DeltaSeries& b) {
        prec_ = std::min(prec_, b.prec_);
        if (b.hi_ < hi_) {
            hi_ = b.hi_;
            coeffs_.erase(coeffs_.upper_bound(hi_), coeffs_.end());
        }
        lo_ = std::min(lo_, b.lo_);
        for (const auto& [e, c] : b.coeffs_) {
            if (e > hi_) continue;
            auto [it, inserted] = coeffs_.try_emplace(e, c);
            if (!inserted) {
                it->second += c;
                if (it->second.is_zero()) coeffs_.erase(it);
            }
        }
        return *this;
    }
    friend DeltaSeries operator+(const DeltaSeries& a, const DeltaSeries& b) {
        DeltaSeries r(a);
        r += b;
        return r;
    }
    friend DeltaSeries operator-(const DeltaSeries& a, const DeltaSeries& b) {
        return a + (-b);
    }
    DeltaSeries operator-() const {
        DeltaSeries r(*this);
        for (auto& [e, c] : r.coeffs_) c = -c;
        return r;
    }
    friend DeltaSeries operator*(const DeltaSeries& a, const DeltaSeries& b) {
        int hi = static_cast<int>(std::min<long>(
            std::min(static_cast<long>(a.hi_) + b.lo_, static_cast<long>(b.hi_) + a.lo_),
            kExactHi));
        DeltaSeries r(std::min(a.prec_, b.prec_), hi);
        r.lo_ = a.lo_ + b.lo_;
        for (const auto& [ea, ca] : a.coeffs_)
            for (const auto& [eb, cb] : b.coeffs_) {
                if (ea + eb > hi) continue;
                r.add_to(ea + eb, ca * cb);
            }
        return r;
    }
    friend DeltaSeries operator*(const Real& c, const DeltaSeries& a) {
        DeltaSeries r(a);
        for (auto& [e, v] : r.coeffs_) v = c * v;
        if (c.is_zero()) r.coeffs_.clear();
        r.prec_ = std::min(a.prec_, c.precision());
        return r;
    }

    /// Drop completeness beyond `hi` (used when feeding exact data into a
    /// truncated pipeline).
    DeltaSeries truncated(int hi) const {
        DeltaSeries r(prec_, std::min(hi_, hi));
        r.lo_ = lo_;
        for (const auto& [e, c] : coeffs_)
            if (e <= r.hi_) r.coeffs_[e] = c;
        return r;
    }

    Real eval(const Real& delta0) const {
        Real total(0L, prec_);
        for (const auto& [e, c] : coeffs_) total += c * pow_si(delta0, e);
        return total;
    }

  private:
    mpfr_prec_t prec_;
    int lo_;
    int hi_;
    std::map<int, Real> coeffs_;
};

/// A direction entry r = a + b*delta with delta -> 0+, a,b exact non-negative
/// rationals, not both zero.
struct AffineR {
    Rational a;
    Rational b;

    AffineR(Rational a_, Rational b_) : a(a_), b(b_) {
        if (a.num < 0 || b.num < 0)
            throw DomainError("AffineR: coefficients must be non-negative");
        if (a.is_zero() && b.is_zero())
            throw DomainError("AffineR: a and b cannot both vanish");
    }
    static AffineR constant(Rational a_) { return AffineR(a_, Rational(0)); }

    bool operator==(const AffineR&) const = default;
    auto operator<=>(const AffineR&) const = default;

    friend AffineR operator+(const AffineR& x, const AffineR& y) {
        return AffineR(x.a + y.a, x.b + y.b);
    }
    std::string str() const { return a.str() + "+" + b.str() + "d"; }
};

/// (a + b*delta)^k as an exact polynomial DeltaSeries, k >= 0.
inline DeltaSeries affine_pow(const AffineR& r, long k,
                              mpfr_prec_t prec = Real::default_precision()) {
    DeltaSeries s(prec, kExactHi);
    Real a = r.a.to_real(prec), b = r.b.to_real(prec);
    for (long m = 0; m <= k; ++m) {
        Real c = binomial(k, m, prec) * pow_si(a, k - m) * pow_si(b, m);
        if (r.a.is_zero() && m < k) continue; // 0^(k-m) = 0
        if (r.b.is_zero() && m > 0) continue;
        s.set(static_cast<int>(m), c);
    }
    return s;
}

/// (a + b*delta)^{-k}: binomial expansion when a > 0, exact monomial
/// b^{-k} delta^{-k} when a = 0.
inline DeltaSeries affine_recip_pow(const AffineR& r, long k, int delta_hi,
                                    mpfr_prec_t prec = Real::default_precision()) {
    if (k < 1) throw DomainError("affine_recip_pow: k must be >= 1");
    if (r.a.is_zero()) {
        Real b = r.b.to_real(prec);
        return DeltaSeries::monomial(pow_si(b, -k), static_cast<int>(-k));
    }
    DeltaSeries s(prec, delta_hi);
    Real a = r.a.to_real(prec);
    Real ratio = r.b.to_real(prec) / a; // (b/a)
    Real lead = pow_si(a, -k);
    Real pw(1L, prec);
    for (int m = 0; m <= delta_hi; ++m) {
        // C(-k, m) = (-1)^m C(k+m-1, m)
        Real c = binomial(k + m - 1, m, prec) * lead * pw;
        s.set(m, m % 2 == 0 ? c : -c);
        pw *= ratio;
    }
    return s;
}

/// ln(a + b*delta) = ln a + sum_{m>=1} (-1)^{m+1} (b/a)^m delta^m / m, a > 0.
inline DeltaSeries affine_log(const AffineR& r, int delta_hi,
                              mpfr_prec_t prec = Real::default_precision()) {
    if (r.a.is_zero())
        throw DomainError("affine_log: logarithmically divergent direction (a = 0)");
    DeltaSeries s(prec, delta_hi);
    Real a = r.a.to_real(prec);
    s.set(0, log(a));
    Real ratio = r.b.to_real(prec) / a;
    Real pw = ratio;
    for (int m = 1; m <= delta_hi; ++m) {
        Real c = pw / Real(static_cast<long>(m), prec);
        s.set(m, m % 2 == 1 ? c : -c);
        pw *= ratio;
    }
    return s;
}

/// Asserts that every negative-delta coefficient is below `tol`, then returns
/// the delta^0 coefficient.
inline Real delta_limit(const DeltaSeries& x, const Real& tol) {
    if (x.hi() < 0)
        throw TruncationOverflow("delta_limit: series not complete through delta^0");
    for (const auto& [e, c] : x.coeffs())
        if (e < 0 && !(abs(c) < tol))
            throw ResidualPole(e, abs(c).to_double());
    return x.coeff(0);
}

} // namespace qzeta
