#pragma once

#include <optional>
#include <vector>

#include "qzeta/regularize.hpp"

namespace qzeta {

/// A renormalized MqZV: polynomial in T with the delta-limit already taken
/// in each coefficient, plus the worst residual magnitudes observed while
/// cancelling the eps-poles (Birkhoff) and the delta-poles (limit step).
struct RenormValue {
    TPoly t_poly;
    Real residual_delta;
    Real residual_eps;
};

/// Residual tolerance for pole/limit cancellations: the series engines
/// truncate their adaptive tails near ladder_tolerance (2^-100 floor) and
/// the sector completions near kappa * 2^-44, so cancellations are exact
/// only to that level; allow a margin on top, scaled by the largest
/// intermediate magnitude (cancellation amplifies the absolute error).
inline Real residual_tolerance(mpfr_prec_t prec, const Real& scale) {
    Real t(1L, prec);
    long e = std::max<long>(48 - static_cast<long>(prec), -72);
    mpfr_mul_2si(t.raw(), t.raw(), e, MPFR_RNDN);
    Real one(1L, prec);
    return scale > one ? t * scale : t;
}

namespace detail {

/// Negated pole part P-check = -P, marked complete at every order: a series
/// complete through eps^{-1} has its pole coefficients final, and the
/// non-negative orders of a pole part are identically zero.
inline EpsSeries pole_part_negated_exact(const EpsSeries& x) {
    if (x.hi() < -1)
        throw TruncationOverflow("pole_part: series not complete through eps^-1");
    EpsSeries r(x.precision(), kExactHi);
    r.declare_lo(x.lo());
    for (const auto& [e, c] : x.terms())
        if (e < 0) r.set(e, -c);
    return r;
}

inline Real max_negative_eps_residual(const EpsSeries& x) {
    Real m(0L, x.precision());
    for (const auto& [e, c] : x.terms()) {
        if (e >= 0) continue;
        Real v = c.max_abs_coeff();
        if (v > m) m = v;
    }
    return m;
}

struct BirkhoffResult {
    EpsSeries series;
    Real scale; // largest intermediate coefficient magnitude
};

/// The Birkhoff plus-part of Eq. 33. The counterterm of each prefix is the
/// partition sum with nested P-check applications; the plus-part is then the
/// convolution sum_{k=0}^{d} phi_minus(prefix_k) Z(rest_k), whose trivial
/// and full terms are Z(word) and phi_minus(word). The eps-poles of the
/// summands cancel only through the identities relating the independently
/// truncated sub-series, so the residual negative coefficients of the output
/// are a genuine consistency measure, not zero by construction.
inline BirkhoffResult birkhoff_full(const QContext& ctx, const IndexedWord& w,
                                    int eps_hi, int delta_hi, ZCache& cache) {
    const mpfr_prec_t prec = ctx.precision();
    if (w.empty()) return {EpsSeries::one(prec), Real(1L, prec)};
    if (!w.all_nonpositive())
        throw DomainError("birkhoff_full: word must be all-non-positive");

    const size_t d = w.depth();
    const int p_word = pole_order_bound(w);
    const int hi_big = eps_hi + p_word;
    const int lo_keep = -p_word;

    Real scale(1L, prec);
    auto note = [&](const EpsSeries& x) {
        Real m = x.max_abs_coeff();
        if (m > scale) scale = m;
    };
    auto z_sub = [&](size_t i, size_t j) {
        IndexedWord v({w.s.begin() + static_cast<long>(i), w.s.begin() + static_cast<long>(j)},
                      {w.r.begin() + static_cast<long>(i), w.r.begin() + static_cast<long>(j)});
        EpsSeries z = z_nonpos_median(ctx, v, hi_big, delta_hi, cache);
        note(z);
        return z;
    };

    // phi_minus of every proper-or-full prefix, by the partition sum.
    std::vector<EpsSeries> neg(d + 1, EpsSeries(prec));
    for (size_t k = 1; k <= d; ++k) {
        EpsSeries nk(prec, kExactHi);
        for (const auto& seq : partitions(k)) {
            std::optional<EpsSeries> acc;
            size_t prev = 0;
            for (size_t cut : seq) {
                EpsSeries z = z_sub(prev, cut);
                EpsSeries prod = acc ? mul_clamped(z, *acc, lo_keep) : z;
                note(prod);
                acc = pole_part_negated_exact(prod);
                prev = cut;
            }
            nk = nk + *acc;
        }
        note(nk);
        neg[k] = nk;
    }

    EpsSeries out = z_sub(0, d);
    for (size_t k = 1; k < d; ++k) {
        EpsSeries p = mul_clamped(neg[k], z_sub(k, d), lo_keep);
        note(p);
        out = out + p;
    }
    out = (out + neg[d]).truncated(eps_hi);
    note(out);
    return {out, scale};
}

inline ZCache& shared_cache() {
    thread_local ZCache cache;
    return cache;
}

} // namespace detail

/// Eq. 33 plus-part of a non-positive word, with the residual eps-pole
/// cancellation checked against the scaled tolerance.
inline EpsSeries birkhoff_plus(const QContext& ctx, const IndexedWord& w, int eps_hi,
                               int delta_hi, ZCache& cache) {
    detail::BirkhoffResult r = detail::birkhoff_full(ctx, w, eps_hi, delta_hi, cache);
    Real resid = detail::max_negative_eps_residual(r.series);
    if (!(resid < residual_tolerance(ctx.precision(), r.scale))) {
        int worst = 0;
        for (const auto& [e, c] : r.series.terms())
            if (e < 0 && c.max_abs_coeff() == resid) worst = e;
        throw ResidualPole(worst, resid.to_double());
    }
    return r.series;
}

inline EpsSeries birkhoff_plus(const QContext& ctx, const IndexedWord& w, int eps_hi,
                               int delta_hi) {
    return birkhoff_plus(ctx, w, eps_hi, delta_hi, detail::shared_cache());
}

/// Renormalized directional MqZV before the delta-limit: the eps^0
/// coefficient of the plus-part (non-positive regime) or the constant engine
/// for all-positive words.
inline TPoly zeta_directional(const QContext& ctx, const IndexedWord& w,
                              int delta_hi = 4) {
    if (w.all_positive()) return z_positive_const(ctx, w, delta_hi);
    if (!w.all_nonpositive())
        throw DomainError("zeta_directional: mixed-sign words are not renormalizable");
    return birkhoff_plus(ctx, w, 0, delta_hi).coeff(0);
}

namespace detail {

inline void validate_shift(const std::vector<long>& s, const std::vector<int>& f) {
    if (f.size() != s.size()) throw InvalidShift("shift vector length mismatch");
    bool nonpos = true;
    for (long v : s)
        if (v > 0) nonpos = false;
    for (size_t i = 0; i < f.size(); ++i) {
        if (f[i] != 0 && f[i] != 1) throw InvalidShift("shift entries must be 0 or 1");
        if (nonpos && s[i] == 0 && f[i] == 1)
            throw InvalidShift("f_i = 1 is forbidden where s_i = 0");
    }
}

/// The renormalization path: r_j = |s_j + f_j| + (1 + f_j) delta. This is
/// the convention under which a stuffed entry's direction is the sum of the
/// directions of the entries it merged.
inline IndexedWord renorm_word(const std::vector<long>& s, const std::vector<int>& f) {
    std::vector<AffineR> r;
    r.reserve(s.size());
    for (size_t j = 0; j < s.size(); ++j) {
        long a = s[j] + f[j];
        r.push_back(AffineR(Rational(a < 0 ? -a : a), Rational(1 + f[j])));
    }
    return IndexedWord(s, r);
}

inline RenormValue renorm_core(const QContext& ctx, const std::vector<long>& s,
                               const std::vector<int>& f, ZCache& cache) {
    const mpfr_prec_t prec = ctx.precision();
    if (s.empty())
        return {TPoly::from_scalar(Real(1L, prec)), Real(0L, prec), Real(0L, prec)};
    IndexedWord w = renorm_word(s, f);

    TPoly raw(prec);
    Real residual_eps(0L, prec);
    Real scale(1L, prec);
    if (w.all_positive()) {
        raw = z_positive_const(ctx, w, 4);
        Real m = raw.max_abs_coeff();
        if (m > scale) scale = m;
    } else if (w.all_nonpositive()) {
        int dint = delta_pole_bound(w) + 4;
        BirkhoffResult bf = birkhoff_full(ctx, w, 0, dint, cache);
        scale = bf.scale;
        residual_eps = max_negative_eps_residual(bf.series);
        if (!(residual_eps < residual_tolerance(prec, scale)))
            throw ResidualPole(-1, residual_eps.to_double());
        raw = bf.series.coeff(0);
    } else {
        throw DomainError("zeta_renorm: arguments must be all-positive or "
                          "all-non-positive");
    }

    // Coefficient-wise delta-limit with residual tracking.
    TPoly out(prec);
    Real residual_delta(0L, prec);
    Real tol = residual_tolerance(prec, scale);
    for (int k = 0; k <= raw.degree(); ++k) {
        DeltaSeries c = raw.coeff(k);
        if (c.is_structurally_zero()) continue;
        if (c.hi() < 0)
            throw TruncationOverflow("zeta_renorm: delta window excludes delta^0");
        for (const auto& [e, v] : c.coeffs()) {
            if (e >= 0) continue;
            Real m = abs(v);
            if (m > residual_delta) residual_delta = m;
            if (!(m < tol)) throw ResidualPole(e, m.to_double());
        }
        out = out + TPoly::t_power(DeltaSeries::scalar(c.coeff(0)), k);
    }
    return {out, residual_delta, residual_eps};
}

} // namespace detail

/// Renormalized MqZV along the canonical path r_j = |s_j| + delta.
inline RenormValue zeta_renorm(const QContext& ctx, const std::vector<long>& s) {
    return detail::renorm_core(ctx, s, std::vector<int>(s.size(), 0),
                               detail::shared_cache());
}

/// Shifted renormalization along r_j = |s_j + f_j| + (1 + f_j) delta.
inline RenormValue zeta_renorm_shifted(const QContext& ctx, const std::vector<long>& s,
                                       const std::vector<int>& f) {
    detail::validate_shift(s, f);
    return detail::renorm_core(ctx, s, f, detail::shared_cache());
}

namespace detail {

/// Depth-2 closed form for the asymptotic-core part of the renormalized
/// directional value at s1, s2 <= 0 (with t = 1 - s1 - s2):
///
///   zeta_q([s1,s2; r1,r2])
///     = (q-1)/ln q [ zeta_q(s1+s2-1)/(s1-1)
///         + sum_{j=0}^{-s1} C(-s1,j) sum_{l>=t} C(l+1, l-t) (1-q)^{l-t}
///             (-r1/(r1+r2))^{l+s1+j} zeta_q(-l)/(l+s1+j) ]
///     + sum_{j=0}^{-s1} C(-s1,j) sum_{i=0}^{1-j-s1} C(1-j-s1, i) (1-q)^i
///         zeta_q(s2-j-i) zeta_q(j+s1),
///
/// expanded in delta along the given directions. The l-sum contracts like
/// (a1/(a1+a2))^l; in the marginal case a1 > 0, a2 = 0 the value is reached
/// instead through the exact stuffle relation
///   zeta(s1,s2) = zeta(s1) zeta(s2) - zeta(s2,s1) - zeta(s1+s2)
///                 - (1-q) zeta(s1+s2-1),
/// whose swapped depth-2 term has the contracting ratio.
inline DeltaSeries depth2_closed_core(const QContext& ctx, long s1, long s2,
                                      const AffineR& r1, const AffineR& r2,
                                      int delta_hi) {
    const mpfr_prec_t prec = ctx.precision();
    if (s1 > 0 || s2 > 0)
        throw DomainError("depth2_closed_form: s1, s2 must be <= 0");
    Real one(1L, prec);

    if (r2.a.is_zero() && !r1.a.is_zero()) {
        Real z1 = detail::zeta_q_nonpos_cached(ctx, -s1);
        Real z2 = detail::zeta_q_nonpos_cached(ctx, -s2);
        DeltaSeries swapped = depth2_closed_core(ctx, s2, s1, r2, r1, delta_hi);
        Real merged = detail::zeta_q_nonpos_cached(ctx, -(s1 + s2));
        Real stuffed = detail::zeta_q_nonpos_cached(ctx, -(s1 + s2 - 1));
        return DeltaSeries::scalar(z1 * z2) - swapped -
               DeltaSeries::scalar(merged + ctx.one_minus_q() * stuffed);
    }

    const long t = 1 - s1 - s2;
    Real pref = (ctx.q() - one) / ctx.ln_q();
    const Real stop_tol = work_tolerance(prec);

    DeltaSeries total = DeltaSeries::scalar(
        pref * detail::zeta_q_nonpos_cached(ctx, -(s1 + s2 - 1)) / Real(s1 - 1, prec));

    // Keep the exact numerator polynomial untruncated and rebuild the product
    // from its actual support: for pure-delta directions rho is the exact
    // scalar -b1/(b1+b2), and a structural lo of -1 would otherwise erode the
    // horizon by one with every power taken below.
    DeltaSeries rho_raw = affine_pow(r1, 1, prec) *
                          affine_recip_pow(r1 + r2, 1, delta_hi, prec);
    DeltaSeries rho(prec, rho_raw.hi());
    for (const auto& [e, c] : rho_raw.coeffs()) rho.set(e, -c);
    for (long j = 0; j <= -s1; ++j) {
        Real cj = binomial(-s1, j, prec);
        // starting exponent of rho is l + s1 + j at l = t, i.e. 1 - s2 + j
        DeltaSeries rp = DeltaSeries::scalar(one).truncated(delta_hi);
        for (long m = 0; m < 1 - s2 + j; ++m) rp = rp * rho;
        Real running(1L, prec);
        int stalled = 0;
        Real omq_pow(1L, prec); // (1-q)^{l-t}, starting at l = t
        for (long l = t;; ++l) {
            Real c = cj * binomial(l + 1, l - t, prec) * omq_pow *
                     detail::zeta_q_nonpos_cached(ctx, l) / Real(l + s1 + j, prec);
            DeltaSeries term = (pref * c) * rp;
            total = total + term;
            Real tmax = term.max_abs_coeff();
            Real smax = total.max_abs_coeff();
            if (smax > running) running = smax;
            if (tmax <= stop_tol * running)
                ++stalled;
            else
                stalled = 0;
            if (l > t + 8 * (delta_hi + 2) && stalled >= 4) break;
            if (l - t > 3000)
                throw TruncationOverflow("depth2_closed_form: l-sum did not settle");
            rp = rp * rho;
            omq_pow *= ctx.one_minus_q();
        }
    }

    for (long j = 0; j <= -s1; ++j) {
        Real cj = binomial(-s1, j, prec);
        Real omq_pow(1L, prec);
        for (long i = 0; i <= 1 - j - s1; ++i) {
            Real c = cj * binomial(1 - j - s1, i, prec) * omq_pow *
                     detail::zeta_q_nonpos_cached(ctx, -(s2 - j - i)) *
                     detail::zeta_q_nonpos_cached(ctx, -(j + s1));
            total = total + DeltaSeries::scalar(c);
            omq_pow *= ctx.one_minus_q();
        }
    }
    return total;
}

} // namespace detail

/// Depth-2 closed-form oracle matching the pipeline's median convention:
/// the asymptotic core above plus half the word's own zero-frequency
/// recombination correction at eps^0 (the depth-1 factors entering the
/// Birkhoff counterterms carry no correction, so at depth 2 the word's own
/// series is the only place it enters).
inline DeltaSeries depth2_closed_form(const QContext& ctx, long s1, long s2,
                                      const AffineR& r1, const AffineR& r2,
                                      int delta_hi) {
    const mpfr_prec_t prec = ctx.precision();
    DeltaSeries core = detail::depth2_closed_core(ctx, s1, s2, r1, r2, delta_hi);
    IndexedWord w({s1, s2}, {r1, r2});
    EpsSeries e = completion_correction(ctx, w, 0, delta_hi,
                                        detail::shared_cache(), true);
    Real half = Real(1L, prec) / Real(2L, prec);
    DeltaSeries corr = e.coeff(0).coeff(0);
    DeltaSeries kept(prec, std::min(core.hi(), corr.hi()));
    for (const auto& [k, c] : corr.coeffs())
        if (k >= 0) kept.set(k, half * c);
    return core + kept;
}

/// Both sides of the q-stuffle relation for renormalized values: the left
/// side is the product of the two renormalizations; the right side sums the
/// stuffle expansion with each term evaluated under the shifted
/// renormalization matching its stuffing vector.
struct StuffleReport {
    TPoly lhs;
    TPoly rhs;
    Real max_discrepancy;
    Real scale;
};

inline StuffleReport verify_stuffle(const QContext& ctx, const std::vector<long>& s1,
                                    const std::vector<long>& s2) {
    const mpfr_prec_t prec = ctx.precision();
    RenormValue a = zeta_renorm(ctx, s1);
    RenormValue b = zeta_renorm(ctx, s2);
    TPoly lhs = a.t_poly * b.t_poly;

    IndexedWord u = detail::renorm_word(s1, std::vector<int>(s1.size(), 0));
    IndexedWord v = detail::renorm_word(s2, std::vector<int>(s2.size(), 0));
    WordSum terms = stuffle(u, v, ctx);
    TPoly rhs(prec);
    for (const auto& t : terms.terms) {
        RenormValue val = zeta_renorm_shifted(ctx, t.word.s, t.stuffing);
        rhs = rhs + t.coeff * val.t_poly;
    }

    TPoly diff = lhs - rhs;
    Real scale = lhs.max_abs_coeff();
    Real rs = rhs.max_abs_coeff();
    if (rs > scale) scale = rs;
    return {lhs, rhs, diff.max_abs_coeff(), scale};
}

/// Classical-limit probe along a monotone family q_k -> 1: tabulates the
/// renormalized value and a first-order Richardson extrapolation
/// L_k = 2 v_k - v_{k-1} under the model v_k = L + c 2^{-k}.
struct LimitReport {
    std::vector<Real> values;
    std::vector<Real> extrapolated;
    Real estimate;
    bool stable;
};

inline LimitReport q_limit_probe(const std::vector<QContext>& family,
                                 const std::vector<long>& target) {
    if (family.size() < 2) throw DomainError("q_limit_probe: need at least two q");
    const mpfr_prec_t prec = family.front().precision();
    LimitReport rep{{}, {}, Real(0L, prec), true};
    for (const auto& ctx : family) {
        RenormValue v = zeta_renorm(ctx, target);
        rep.values.push_back(v.t_poly.coeff(0).coeff(0));
    }
    Real two(2L, prec);
    for (size_t k = 1; k < rep.values.size(); ++k)
        rep.extrapolated.push_back(two * rep.values[k] - rep.values[k - 1]);
    rep.estimate = rep.extrapolated.back();
    // stability: the extrapolation corrections should shrink toward the end
    for (size_t k = 2; k + 1 < rep.extrapolated.size(); ++k) {
        Real prev = abs(rep.extrapolated[k] - rep.extrapolated[k - 1]);
        Real next = abs(rep.extrapolated[k + 1] - rep.extrapolated[k]);
        if (next > prev + prev) rep.stable = false;
    }
    return rep;
}

} // namespace qzeta
