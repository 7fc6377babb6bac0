#pragma once

#include <limits>
#include <map>

#include "qzeta/tpoly.hpp"

namespace qzeta {

/// Truncated Laurent series in the regulator eps with TPoly coefficients.
///
/// `hi` is the information horizon (complete through eps^hi); `lo` is the
/// declared floor of the support. Products take lo = lo_a + lo_b and the
/// tightest feasible horizon min(hi_a + lo_b, hi_b + lo_a).
class EpsSeries {
  public:
    explicit EpsSeries(mpfr_prec_t prec = Real::default_precision(), int hi = kExactHi)
        : prec_(prec), lo_(0), hi_(hi) {}

    static EpsSeries scalar(const Real& c, int hi = kExactHi) {
        EpsSeries s(c.precision(), hi);
        s.set(0, TPoly::from_scalar(c));
        return s;
    }
    static EpsSeries monomial(const TPoly& c, int exponent, int hi = kExactHi) {
        EpsSeries s(c.precision(), hi);
        s.lo_ = std::min(exponent, 0);
        s.set(exponent, c);
        return s;
    }
    static EpsSeries one(mpfr_prec_t prec) { return scalar(Real(1L, prec)); }

    mpfr_prec_t precision() const { return prec_; }
    int lo() const { return lo_; }
    int hi() const { return hi_; }
    void declare_lo(int lo) { lo_ = std::min(lo_, lo); }
    const std::map<int, TPoly>& terms() const { return terms_; }

    TPoly coeff(int e) const {
        auto it = terms_.find(e);
        return it == terms_.end() ? TPoly(prec_) : it->second;
    }
    void set(int e, const TPoly& c) {
        if (e > hi_) return;
        if (c.is_structurally_zero())
            terms_.erase(e);
        else
            terms_[e] = c;
        if (e < lo_) lo_ = e;
    }
    void add_to(int e, const TPoly& c) {
        if (e > hi_) return;
        auto [it, inserted] = terms_.try_emplace(e, c);
        if (!inserted) it->second += c;
        if (it->second.is_structurally_zero()) terms_.erase(it);
        if (e < lo_) lo_ = e;
    }

    Real max_abs_coeff() const {
        Real m(0L, prec_);
        for (const auto& [e, c] : terms_) {
            Real v = c.max_abs_coeff();
            if (v > m) m = v;
        }
        return m;
    }
    int max_t_degree() const {
        int d = 0;
        for (const auto& [e, c] : terms_) d = std::max(d, c.degree());
        return d;
    }

    EpsSeries& operator+=(const EpsSeries& b) {
        prec_ = std::min(prec_, b.prec_);
        if (b.hi_ < hi_) {
            hi_ = b.hi_;
            terms_.erase(terms_.upper_bound(hi_), terms_.end());
        }
        lo_ = std::min(lo_, b.lo_);
        for (const auto& [e, c] : b.terms_) {
            if (e > hi_) continue;
            auto [it, inserted] = terms_.try_emplace(e, c);
            if (!inserted) {
                it->second += c;
                if (it->second.is_structurally_zero()) terms_.erase(it);
            }
        }
        return *this;
    }
    friend EpsSeries operator+(const EpsSeries& a, const EpsSeries& b) {
        EpsSeries r(a);
        r += b;
        return r;
    }
    friend EpsSeries operator-(const EpsSeries& a, const EpsSeries& b) { return a + (-b); }
    EpsSeries operator-() const {
        EpsSeries r(*this);
        for (auto& [e, c] : r.terms_) c = -c;
        return r;
    }
    friend EpsSeries operator*(const EpsSeries& a, const EpsSeries& b) {
        return mul_clamped(a, b, std::numeric_limits<int>::min() / 4);
    }
    friend EpsSeries operator*(const Real& c, const EpsSeries& a) {
        EpsSeries r(a);
        r.prec_ = std::min(a.prec_, c.precision());
        for (auto& [e, t] : r.terms_) t = c * t;
        return r;
    }
    friend EpsSeries operator*(const TPoly& c, const EpsSeries& a) {
        EpsSeries r(a);
        for (auto& [e, t] : r.terms_) t = c * t;
        return r;
    }

    /// Product keeping only result exponents >= lo_keep. Used deep in the
    /// recursions where coefficients below a proven pole bound are known to
    /// cancel and tracking them would blow up the cost.
    friend EpsSeries mul_clamped(const EpsSeries& a, const EpsSeries& b, int lo_keep) {
        long hi_l = std::min(static_cast<long>(a.hi_) + b.lo_,
                             static_cast<long>(b.hi_) + a.lo_);
        int hi = static_cast<int>(std::min<long>(hi_l, kExactHi));
        EpsSeries r(std::min(a.prec_, b.prec_), hi);
        r.lo_ = std::max(a.lo_ + b.lo_, lo_keep);
        for (const auto& [ea, ca] : a.terms_)
            for (const auto& [eb, cb] : b.terms_) {
                int e = ea + eb;
                if (e > hi || e < lo_keep) continue;
                r.add_to(e, ca * cb);
            }
        return r;
    }

    /// Multiply by eps^k (exact shift).
    EpsSeries shifted(int k) const {
        EpsSeries r(prec_, hi_ >= kExactHi ? kExactHi : hi_ + k);
        r.lo_ = lo_ + k;
        for (const auto& [e, c] : terms_) r.terms_[e + k] = c;
        return r;
    }

    /// Drop knowledge (and stored terms) beyond eps^hi.
    EpsSeries truncated(int hi) const {
        EpsSeries r(prec_, std::min(hi_, hi));
        r.lo_ = lo_;
        for (const auto& [e, c] : terms_)
            if (e <= r.hi_) r.terms_[e] = c;
        return r;
    }

    /// Keep exactly the exponents < 0.
    EpsSeries pole_part() const {
        EpsSeries r(prec_, hi_);
        r.lo_ = lo_;
        for (const auto& [e, c] : terms_)
            if (e < 0) r.terms_[e] = c;
        return r;
    }
    /// The negated pole projector P-check = -P of the Birkhoff formula.
    EpsSeries checked_pole_part_negated() const { return -pole_part(); }
    /// Complement projector: exponents >= 0.
    EpsSeries plus_part() const {
        EpsSeries r(prec_, hi_);
        for (const auto& [e, c] : terms_)
            if (e >= 0) r.terms_[e] = c;
        return r;
    }

    struct Eval {
        Real value;
        Real remainder_estimate;
    };

    /// Substitute eps = eps0 (< 0), T = -ln(-eps0), delta = delta0.
    /// The remainder estimate is the magnitude of the highest retained order.
    Eval eval_eps(const Real& eps0, const Real& delta0) const {
        if (!(eps0 < Real(0L, prec_)))
            throw DomainError("eval_eps: eps0 must be negative");
        Real t0 = -log(-eps0);
        Real total(0L, prec_);
        Real top(0L, prec_);
        int top_e = std::numeric_limits<int>::min();
        for (const auto& [e, c] : terms_) {
            Real term = c.eval(t0, delta0) * pow_si(eps0, e);
            total += term;
            if (e > top_e) {
                top_e = e;
                top = abs(term);
            }
        }
        return {total, top};
    }

  private:
    mpfr_prec_t prec_;
    int lo_;
    int hi_;
    std::map<int, TPoly> terms_;
};

inline EpsSeries pole_part(const EpsSeries& x) { return x.pole_part(); }
inline EpsSeries checked_pole_part_negated(const EpsSeries& x) {
    return x.checked_pole_part_negated();
}

} // namespace qzeta
