#pragma once

#include <cmath>
#include <vector>

#include "qzeta/errors.hpp"
#include "qzeta/real.hpp"

namespace qzeta {

/// Fixed numeric deformation parameter q in (0,1) with cached derived scalars.
class QContext {
  public:
    QContext(const Real& q) : q_(q), ln_q_(q.precision()), one_minus_q_(q.precision()) {
        Real zero(0L, q.precision()), one(1L, q.precision());
        if (!(q > zero) || !(q < one))
            throw DomainError("QContext: q must lie strictly inside (0,1)");
        ln_q_ = log(q_);
        one_minus_q_ = one - q_;
    }
    QContext(const std::string& q_decimal, mpfr_prec_t prec)
        : QContext(Real(q_decimal, prec)) {}

    const Real& q() const { return q_; }
    const Real& ln_q() const { return ln_q_; }
    const Real& one_minus_q() const { return one_minus_q_; }
    mpfr_prec_t precision() const { return q_.precision(); }

    Real real(long n) const { return Real(n, precision()); }
    Real q_pow(long k) const { return pow_si(q_, k); }
    Real q_pow(const Real& r) const { return exp(r * ln_q_); }

  private:
    Real q_;
    Real ln_q_;
    Real one_minus_q_;
};

/// Euler's constant gamma to the requested precision.
inline Real euler_gamma(mpfr_prec_t precision_bits) {
    Real r(precision_bits);
    mpfr_const_euler(r.raw(), MPFR_RNDN);
    return r;
}

/// H_n = 1 + 1/2 + ... + 1/n, H_0 = 0.
inline Real harmonic(long n, mpfr_prec_t prec = Real::default_precision()) {
    if (n < 0) throw DomainError("harmonic: n must be >= 0");
    Real h(0L, prec), one(1L, prec);
    for (long i = 1; i <= n; ++i) h += one / Real(i, prec);
    return h;
}

/// [r] = (1 - q^r)/(1 - q).
inline Real q_bracket(const QContext& ctx, const Real& r) {
    Real one(1L, ctx.precision());
    return (one - ctx.q_pow(r)) / ctx.one_minus_q();
}

/// Periodic Bernoulli polynomial of degree 2: {x}^2 - {x} + 1/6.
inline Real periodic_bernoulli2(const Real& x) {
    if (x < Real(1L, x.precision()))
        throw DomainError("periodic_bernoulli2: x must be >= 1");
    Real f = x - floor(x);
    return f * f - f + Real(1L, x.precision()) / Real(6L, x.precision());
}

inline Real binomial(long n, long k, mpfr_prec_t prec) {
    if (k < 0 || k > n) return Real(0L, prec);
    Real r(1L, prec);
    for (long i = 0; i < k; ++i)
        r = r * Real(n - i, prec) / Real(i + 1, prec);
    return r;
}

inline Real factorial(long n, mpfr_prec_t prec) {
    Real r(1L, prec);
    for (long i = 2; i <= n; ++i) r *= Real(i, prec);
    return r;
}

/// zeta_q(-l) in closed form:
///   (1-q)^{-l} { sum_{r=0}^{l} (-1)^r C(l,r)/(q^{l+1-r}-1) + (-1)^{l+1}/((l+1) ln q) }.
inline Real zeta_q_nonpos(const QContext& ctx, long l) {
    if (l < 0) throw DomainError("zeta_q_nonpos: l must be >= 0");
    const mpfr_prec_t prec = ctx.precision();
    Real one(1L, prec);
    Real sum(0L, prec);
    for (long r = 0; r <= l; ++r) {
        Real term = binomial(l, r, prec) / (ctx.q_pow(l + 1 - r) - one);
        sum += (r % 2 == 0) ? term : -term;
    }
    Real corr = one / (Real(l + 1, prec) * ctx.ln_q());
    sum += (l % 2 == 0) ? -corr : corr;
    return pow_si(ctx.one_minus_q(), -l) * sum;
}

/// Convergent multiple q-zeta sum at integer arguments with s_1 >= 2, s_i >= 1.
///
/// Nested cutoffs come from one master cutoff; the certified tail bound uses
/// q^{k_1(s_1-1)} decay against the polynomial count of inner index tuples.
inline Real zeta_q_convergent(const QContext& ctx, const std::vector<long>& s,
                              const Real& tail_tol) {
    const mpfr_prec_t prec = ctx.precision();
    const long d = static_cast<long>(s.size());
    if (d == 0) throw DomainError("zeta_q_convergent: empty argument vector");
    if (s[0] <= 1) throw DomainError("zeta_q_convergent: s_1 must be >= 2");
    for (long v : s)
        if (v <= 0) throw DomainError("zeta_q_convergent: all s_i must be >= 1");

    Real one(1L, prec);
    auto term = [&](long j, long k) {
        Real br = (one - ctx.q_pow(k)) / ctx.one_minus_q();
        return ctx.q_pow(k * (s[j] - 1)) / pow_si(br, s[j]);
    };
    auto tail_bound = [&](long K) {
        // sum_{k>K} k^{d-1} Q^k / (d-1)!  with Q = q^{s_1-1}
        Real Q = ctx.q_pow(s[0] - 1);
        Real ratio = Q * pow_si(Real(K + 2, prec) / Real(K + 1, prec), d - 1);
        if (!(ratio < one)) return Real(1L, prec); // not yet contractive
        Real lead = pow_si(Real(K + 1, prec), d - 1) * pow_si(Q, K + 1);
        return lead / ((one - ratio) * factorial(d - 1, prec));
    };

    for (long K = 32;; K *= 2) {
        if (K > (1L << 24)) throw DomainError("zeta_q_convergent: cutoff overflow");
        if (!(tail_bound(K) <= tail_tol)) continue;
        // inner[k] = sum over k > k_j > ... > k_d > 0 of the trailing product
        std::vector<Real> inner(static_cast<size_t>(K) + 1, one);
        for (long j = d - 1; j >= 1; --j) {
            std::vector<Real> next(static_cast<size_t>(K) + 1, Real(0L, prec));
            for (long k = 2; k <= K; ++k)
                next[k] = next[k - 1] + term(j, k - 1) * inner[k - 1];
            inner = std::move(next);
        }
        Real total(0L, prec);
        for (long k = 1; k <= K; ++k) total += term(0, k) * inner[k];
        return total;
    }
}

namespace detail {

/// Gauss-Legendre nodes/weights on [0,1], computed at working precision.
struct GaussRule {
    std::vector<Real> nodes, weights;
};

inline GaussRule gauss_legendre_unit(int n, mpfr_prec_t prec) {
    GaussRule rule;
    Real one(1L, prec), two(2L, prec);
    double pi_d = 3.14159265358979323846;
    for (int i = 1; i <= n; ++i) {
        Real x(std::cos(pi_d * (i - 0.25) / (n + 0.5)), prec);
        Real dp(0L, prec);
        for (int iter = 0; iter < 200; ++iter) {
            // Legendre recurrence for P_n(x) and P_n'(x)
            Real p0(1L, prec), p1 = x;
            for (int k = 2; k <= n; ++k) {
                Real p2 = (Real(2 * k - 1, prec) * x * p1 - Real(k - 1, prec) * p0) /
                          Real(k, prec);
                p0 = p1;
                p1 = p2;
            }
            dp = Real(n, prec) * (x * p1 - p0) / (x * x - one);
            Real dx = p1 / dp;
            x -= dx;
            Real thresh(1L, prec);
            mpfr_mul_2si(thresh.raw(), thresh.raw(), 8 - static_cast<long>(prec),
                         MPFR_RNDN);
            if (abs(dx) <= thresh) break;
        }
        rule.nodes.push_back((x + one) / two);
        rule.weights.push_back(one / ((one - x * x) * dp * dp));
    }
    return rule;
}

} // namespace detail

/// M(q), the q-analog of Euler's constant:
///   q - 1/2 + (q/12)(ln q/(q-1))
///     - ((1-q)(ln q)^2/2) * int_1^inf B~2(x) (2-3u+u^2)/u^3 dx,   u = 1-q^x.
///
/// Integration runs over unit panels aligned to the period of B~2 with
/// composite Gauss rules; the tail past X is certified from the q^x decay
/// of the integrand.
inline Real m_of_q(const QContext& ctx, const Real& quad_tol) {
    const mpfr_prec_t prec = ctx.precision();
    if (!(quad_tol > Real(0L, prec))) throw DomainError("m_of_q: quad_tol must be > 0");
    Real one(1L, prec), half = one / Real(2L, prec);
    Real prefactor = ctx.one_minus_q() * ctx.ln_q() * ctx.ln_q() * half;

    // pick X with certified tail <= quad_tol/2
    auto tail = [&](long X) {
        Real qX = ctx.q_pow(X);
        Real u = one - qX;
        Real envelope = (one + qX) / (pow_si(u, 3) * Real(6L, prec));
        return prefactor * envelope * qX / (-ctx.ln_q());
    };
    long X = 4;
    while (!(tail(X) <= quad_tol * half)) {
        X *= 2;
        if (X > (1L << 22)) throw QuadratureFailure("m_of_q: tail bound unreachable");
    }

    auto integrand = [&](const Real& x) {
        Real qx = ctx.q_pow(x);
        Real u = one - qx;
        return periodic_bernoulli2(x) * qx * (one + qx) / pow_si(u, 3);
    };
    auto composite = [&](int nodes_per_panel) {
        auto rule = detail::gauss_legendre_unit(nodes_per_panel, prec);
        Real total(0L, prec);
        for (long p = 1; p < X; ++p) {
            Real base(p, prec);
            for (size_t i = 0; i < rule.nodes.size(); ++i)
                total += rule.weights[i] * integrand(base + rule.nodes[i]);
        }
        return total;
    };

    Real integral = composite(16);
    for (int n = 32;; n *= 2) {
        Real refined = composite(n);
        Real diff = abs(refined - integral);
        integral = refined;
        if (diff <= quad_tol * half) break;
        if (n >= 256) throw QuadratureFailure("m_of_q: quadrature did not converge");
    }

    Real q = ctx.q();
    return q - half + (q / Real(12L, prec)) * (ctx.ln_q() / (q - one)) -
           prefactor * integral;
}

} // namespace qzeta
