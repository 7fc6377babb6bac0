#pragma once

#include <vector>

#include "qzeta/delta_series.hpp"

namespace qzeta {

/// Polynomial in the divergence symbol T (the image of -ln(-eps)) with
/// DeltaSeries coefficients. T never appears with a negative exponent.
class TPoly {
  public:
    explicit TPoly(mpfr_prec_t prec = Real::default_precision()) : prec_(prec) {}

    static TPoly from_delta(const DeltaSeries& d) {
        TPoly p(d.precision());
        p.coeffs_.push_back(d);
        p.trim();
        return p;
    }
    static TPoly from_scalar(const Real& c) { return from_delta(DeltaSeries::scalar(c)); }
    /// c * T^k.
    static TPoly t_power(const DeltaSeries& c, int k) {
        TPoly p(c.precision());
        p.coeffs_.assign(static_cast<size_t>(k) + 1, DeltaSeries(c.precision()));
        p.coeffs_[static_cast<size_t>(k)] = c;
        p.trim();
        return p;
    }

    mpfr_prec_t precision() const { return prec_; }
    int degree() const { return coeffs_.empty() ? 0 : static_cast<int>(coeffs_.size()) - 1; }
    bool is_structurally_zero() const { return coeffs_.empty(); }
    size_t size() const { return coeffs_.size(); }

    DeltaSeries coeff(int k) const {
        if (k < 0 || k >= static_cast<int>(coeffs_.size()))
            return DeltaSeries(prec_);
        return coeffs_[static_cast<size_t>(k)];
    }

    Real max_abs_coeff() const {
        Real m(0L, prec_);
        for (const auto& d : coeffs_) {
            Real c = d.max_abs_coeff();
            if (c > m) m = c;
        }
        return m;
    }

    TPoly& operator+=(const TPoly& b) {
        prec_ = std::min(prec_, b.prec_);
        if (coeffs_.size() < b.coeffs_.size())
            coeffs_.resize(b.coeffs_.size(), DeltaSeries(prec_));
        for (size_t k = 0; k < b.coeffs_.size(); ++k) coeffs_[k] += b.coeffs_[k];
        trim();
        return *this;
    }
    friend TPoly operator+(const TPoly& a, const TPoly& b) {
        TPoly r(a);
        r += b;
        return r;
    }
    friend TPoly operator-(const TPoly& a, const TPoly& b) { return a + (-b); }
    TPoly operator-() const {
        TPoly r(*this);
        for (auto& d : r.coeffs_) d = -d;
        return r;
    }
    friend TPoly operator*(const TPoly& a, const TPoly& b) {
        TPoly r(std::min(a.prec_, b.prec_));
        if (a.coeffs_.empty() || b.coeffs_.empty()) return r;
        r.coeffs_.assign(a.coeffs_.size() + b.coeffs_.size() - 1,
                         DeltaSeries(r.prec_, kExactHi));
        for (size_t i = 0; i < a.coeffs_.size(); ++i)
            for (size_t j = 0; j < b.coeffs_.size(); ++j)
                r.coeffs_[i + j] += a.coeffs_[i] * b.coeffs_[j];
        r.trim();
        return r;
    }
    friend TPoly operator*(const Real& c, const TPoly& a) {
        TPoly r(a);
        for (auto& d : r.coeffs_) d = c * d;
        r.trim();
        return r;
    }
    friend TPoly operator*(const DeltaSeries& c, const TPoly& a) {
        TPoly r(a);
        for (auto& d : r.coeffs_) d = c * d;
        r.trim();
        return r;
    }

    /// Substitute numeric values for T and delta.
    Real eval(const Real& t0, const Real& delta0) const {
        Real total(0L, prec_);
        Real tp(1L, prec_);
        for (const auto& d : coeffs_) {
            total += tp * d.eval(delta0);
            tp *= t0;
        }
        return total;
    }

  private:
    void trim() {
        while (!coeffs_.empty() && coeffs_.back().is_structurally_zero())
            coeffs_.pop_back();
    }

    mpfr_prec_t prec_;
    std::vector<DeltaSeries> coeffs_;
};

} // namespace qzeta
