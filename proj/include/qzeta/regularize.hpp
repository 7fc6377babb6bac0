#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "qzeta/eps_series.hpp"
#include "qzeta/word.hpp"

namespace qzeta {

/// Upper bound for the pole order of the regularized series of a
/// non-positive word: each entry s_i contributes at most 1 - s_i.
inline int pole_order_bound(const IndexedWord& w) {
    long p = 0;
    for (long s : w.s) p += 1 - s;
    return static_cast<int>(p);
}

/// Upper bound for the delta-pole depth: only entries whose direction has a
/// vanishing constant part can contribute reciprocal powers of delta.
inline int delta_pole_bound(const IndexedWord& w) {
    long p = 0;
    for (size_t j = 0; j < w.depth(); ++j)
        if (w.r[j].a.is_zero()) p += 1 - w.s[j];
    return static_cast<int>(p);
}

/// Default accuracy target for internal scalar constants (M(q), convergent
/// sums, summation tails): well below verification tolerances, well above
/// the working precision floor.
inline Real work_tolerance(mpfr_prec_t prec = Real::default_precision()) {
    Real t(1L, prec);
    mpfr_mul_2si(t.raw(), t.raw(), 32 - static_cast<long>(prec), MPFR_RNDN);
    return t;
}

/// Relative stall tolerance for the shift ladders of the depth recursions.
/// Tracks the working precision at moderate sizes but is floored at 2^-100:
/// ladder length grows linearly with the demanded bits while every consumer
/// tolerance sits far above 2^-100, so the floor trades invisible accuracy
/// for a large constant factor in depth-3 words.
inline Real ladder_tolerance(mpfr_prec_t prec = Real::default_precision()) {
    Real t(1L, prec);
    long e = std::max<long>(32 - static_cast<long>(prec), -100);
    mpfr_mul_2si(t.raw(), t.raw(), e, MPFR_RNDN);
    return t;
}

/// Fundamental log-periodic frequency omega = 2 pi / |ln q|: the defining
/// nested sums are harmonic sums over the geometric nodes q^{-k}, so their
/// Mellin transforms carry poles on the vertical lattice z = m + i k omega,
/// k in Z, next to the real poles that generate the asymptotic series.
inline Real mellin_omega(const QContext& ctx) {
    Real pi(ctx.precision());
    mpfr_const_pi(pi.raw(), MPFR_RNDN);
    return Real(2L, ctx.precision()) * pi / abs(ctx.ln_q());
}

/// kappa = |Gamma(1 +/- i omega)|^2 = pi omega / sinh(pi omega): the weight
/// with which a pair of conjugate first-harmonic sectors recombines into
/// zero-frequency content. Non-perturbatively small in 1 - q
/// (~ 2 pi omega e^{-pi omega}), but far above roundoff at moderate q.
inline Real mellin_kappa(const QContext& ctx) {
    Real pi(ctx.precision());
    mpfr_const_pi(pi.raw(), MPFR_RNDN);
    Real po = pi * mellin_omega(ctx);
    Real sh(ctx.precision());
    mpfr_sinh(sh.raw(), po.raw(), MPFR_RNDN);
    return po / sh;
}

namespace detail {

/// zeta_q(-l) through the decomposition
///   zeta_q(-l) (1-q)^l = (-1)^l b_l,
///   b_l = -sum_{n>=1} q^n (1-q^n)^l - 1/((l+1) ln q),
/// which is stable for large l where the alternating binomial form loses
/// ~2l bits to cancellation. The n-sum has positive terms bounded by q^n,
/// so cutting at q^n < 2^-(prec+8) certifies the tail.
inline Real zeta_q_nonpos_large(const QContext& ctx, long l) {
    const mpfr_prec_t prec = ctx.precision();
    Real one(1L, prec);
    Real s(0L, prec);
    Real qn = ctx.q();
    Real cut(1L, prec);
    mpfr_mul_2si(cut.raw(), cut.raw(), -static_cast<long>(prec) - 8, MPFR_RNDN);
    while (qn > cut) {
        s += qn * pow_si(one - qn, l);
        qn *= ctx.q();
    }
    Real b = -s - one / (Real(l + 1, prec) * ctx.ln_q());
    Real z = b * pow_si(ctx.one_minus_q(), -l);
    return l % 2 == 0 ? z : -z;
}

/// Memoized zeta_q(-l); the depth recursions request the same values
/// thousands of times, at l far beyond where the defining binomial sum is
/// numerically usable.
inline const Real& zeta_q_nonpos_cached(const QContext& ctx, long l) {
    static std::map<std::string, Real> memo;
    std::string key = ctx.q().str(40) + "#" + std::to_string(ctx.precision()) + "#" +
                      std::to_string(l);
    auto it = memo.find(key);
    if (it == memo.end()) {
        Real v = l <= 40 ? zeta_q_nonpos(ctx, l) : zeta_q_nonpos_large(ctx, l);
        it = memo.emplace(key, v).first;
    }
    return it->second;
}

/// Memoized M(q).
inline const Real& m_of_q_cached(const QContext& ctx, const Real& quad_tol) {
    static std::map<std::string, Real> memo;
    std::string key = ctx.q().str(40) + "#" + std::to_string(ctx.precision()) + "#" +
                      quad_tol.str(8);
    auto it = memo.find(key);
    if (it == memo.end())
        it = memo.emplace(key, m_of_q(ctx, quad_tol)).first;
    return it->second;
}

/// Minimal complex arithmetic over Real, for the Gamma-ratio sector weights.
struct CReal {
    Real re, im;
};

inline CReal cmul(const CReal& a, const CReal& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}

inline CReal clog(const CReal& z) {
    const mpfr_prec_t prec = mpfr_get_prec(z.re.raw());
    Real m(prec), a(prec);
    mpfr_hypot(m.raw(), z.re.raw(), z.im.raw(), MPFR_RNDN);
    mpfr_log(m.raw(), m.raw(), MPFR_RNDN);
    mpfr_atan2(a.raw(), z.im.raw(), z.re.raw(), MPFR_RNDN);
    return {m, a};
}

inline CReal cexp(const CReal& z) {
    const mpfr_prec_t prec = mpfr_get_prec(z.re.raw());
    Real m = exp(z.re);
    Real c(prec), s(prec);
    mpfr_sin_cos(s.raw(), c.raw(), z.im.raw(), MPFR_RNDN);
    return {m * c, m * s};
}

/// B_{2n} = (-1)^{n+1} 2 (2n)! zeta(2n) / (2 pi)^{2n}.
inline Real bernoulli_2n(long n, mpfr_prec_t prec) {
    Real z(prec);
    mpfr_zeta_ui(z.raw(), static_cast<unsigned long>(2 * n), MPFR_RNDN);
    Real pi(prec);
    mpfr_const_pi(pi.raw(), MPFR_RNDN);
    Real b = Real(2L, prec) * factorial(2 * n, prec) * z /
             pow_si(Real(2L, prec) * pi, 2 * n);
    return n % 2 == 0 ? -b : b;
}

/// log Gamma(z) for Re z > 0 via recurrence shifts into the Stirling region
/// and the Bernoulli asymptotic series. The shift target |z| >~ 0.12 (prec +
/// 64) puts the smallest asymptotic term (~ e^{-2 pi |z|}) below the target
/// accuracy; the series is truncated at its smallest term.
inline CReal clgamma(CReal z, mpfr_prec_t prec) {
    Real zero(0L, prec), one(1L, prec), half(prec);
    mpfr_set_d(half.raw(), 0.5, MPFR_RNDN);
    long target = 4 + (static_cast<long>(prec) + 64) / 8;
    CReal shift_log{zero, zero};
    while (z.re < Real(target, prec)) {
        CReal l = clog(z);
        shift_log.re += l.re;
        shift_log.im += l.im;
        z.re += one;
    }
    CReal lz = clog(z);
    CReal out = cmul({z.re - half, z.im}, lz);
    out.re -= z.re;
    out.im -= z.im;
    Real pi(prec);
    mpfr_const_pi(pi.raw(), MPFR_RNDN);
    out.re += half * log(Real(2L, prec) * pi);
    // Sum B_{2n} / (2n (2n-1) z^{2n-1}), stopping at the smallest term.
    Real mod2 = z.re * z.re + z.im * z.im;
    CReal zinv{z.re / mod2, -z.im / mod2};
    CReal zinv2 = cmul(zinv, zinv);
    CReal zp = zinv;
    Real cut(1L, prec);
    mpfr_mul_2si(cut.raw(), cut.raw(), -static_cast<long>(prec) - 16, MPFR_RNDN);
    Real prev_mag(0L, prec);
    for (long n = 1; n <= 4 * target; ++n) {
        Real c = bernoulli_2n(n, prec) /
                 Real(2 * n * (2 * n - 1), prec);
        CReal term{c * zp.re, c * zp.im};
        Real mag = abs(term.re) + abs(term.im);
        if (n > 1 && mag > prev_mag) break; // asymptotic turn-around guard
        out.re += term.re;
        out.im += term.im;
        if (mag < cut) break;
        prev_mag = mag;
        zp = cmul(zp, zinv2);
    }
    out.re -= shift_log.re;
    out.im -= shift_log.im;
    return out;
}

/// Gamma-ratio weights of the sector algebra at harmonics k = 1, 2. With
/// Gamma_k = Gamma(1 - i k omega):
///   kappa_k = |Gamma_k|^2 = k pi omega / sinh(k pi omega)
///     (conjugate harmonics recombining into zero frequency),
///   c11 = Gamma_1^2 / Gamma_2   (two first harmonics merging into a second),
///   c21 = Gamma_2 conj(Gamma_1) / Gamma_1
///     (a second harmonic absorbing a conjugate first harmonic).
struct MellinWeights {
    Real kappa1, kappa2;
    CReal c11, c21;
};

inline const MellinWeights& mellin_weights(const QContext& ctx) {
    static std::map<std::string, MellinWeights> memo;
    const mpfr_prec_t prec = ctx.precision();
    std::string key = ctx.q().str(40) + "#" + std::to_string(prec);
    auto it = memo.find(key);
    if (it == memo.end()) {
        Real w = mellin_omega(ctx);
        Real pi(prec);
        mpfr_const_pi(pi.raw(), MPFR_RNDN);
        auto kap = [&](long k) {
            Real po = Real(k, prec) * pi * w;
            Real sh(prec);
            mpfr_sinh(sh.raw(), po.raw(), MPFR_RNDN);
            return po / sh;
        };
        Real one(1L, prec);
        CReal l1 = clgamma({one, -w}, prec);
        CReal l2 = clgamma({one, Real(-2L, prec) * w}, prec);
        MellinWeights mw;
        mw.kappa1 = kap(1);
        mw.kappa2 = kap(2);
        mw.c11 = cexp({l1.re + l1.re - l2.re, l1.im + l1.im - l2.im});
        // conj(Gamma_1) / Gamma_1 contributes -2i arg Gamma_1.
        mw.c21 = cexp({l2.re, l2.im - l1.im - l1.im});
        it = memo.emplace(key, mw).first;
    }
    return it->second;
}

} // namespace detail

/// Memo store for regularized series, keyed by word, route, and delta
/// horizon; an entry is reusable whenever its eps horizon covers the request.
class ZCache {
  public:
    const EpsSeries* find(const std::string& key, int eps_hi) const {
        auto it = map_.find(key);
        if (it == map_.end() || it->second.hi() < eps_hi) return nullptr;
        return &it->second;
    }
    void store(const std::string& key, const EpsSeries& s) { map_[key] = s; }

  private:
    std::map<std::string, EpsSeries> map_;
};

/// Depth-1 closed form. For s = 1 - n <= 0:
///   Z(s; r eps) = (q-1)/ln q (-1/(r eps))^n (n-1)! + sum_l zeta_q(s-l)(r eps)^l / l!
/// ((n-1)!, not n!: repeated differentiation of the depth-1 seed series under
/// d/d eps Z(s) = r Z(s-1) multiplies the pole coefficient by n at each step).
/// For s = n >= 1:
///   Z(n; r eps) = (q-1)/ln q u_n(r eps)
///     + (M(q) + (1-q) gamma / ln q)(r eps)^{n-1}/(n-1)!
///     + sum_{l != n-1} zeta_q(n-l)(r eps)^l / l!,
/// with u_n(r eps) = (r eps)^{n-1}/(n-1)! (H_{n-1} - ln r + T) after the
/// divergence substitution T = -ln(-eps).
inline EpsSeries z_depth1(const QContext& ctx, long s, const AffineR& r, int eps_hi,
                          int delta_hi, const Real& tol = Real(0L, 64)) {
    const mpfr_prec_t prec = ctx.precision();
    Real tol_eff = tol.is_zero() ? work_tolerance(prec) : tol;
    Real one(1L, prec);
    Real qm1_over_lnq = (ctx.q() - one) / ctx.ln_q();
    EpsSeries out(prec, eps_hi);

    if (s <= 0) {
        long n = 1 - s;
        Real c = qm1_over_lnq * factorial(n - 1, prec);
        if (n % 2 == 1) c = -c;
        DeltaSeries pole = c * affine_recip_pow(r, n, delta_hi, prec);
        out.add_to(static_cast<int>(-n), TPoly::from_delta(pole));
        out.declare_lo(static_cast<int>(-n));
        DeltaSeries rpow = DeltaSeries::scalar(one).truncated(delta_hi);
        DeltaSeries rstep = affine_pow(r, 1, prec).truncated(delta_hi);
        for (int l = 0; l <= eps_hi; ++l) {
            Real z = detail::zeta_q_nonpos_cached(ctx, l + n - 1);
            out.add_to(l, TPoly::from_delta((z / factorial(l, prec)) * rpow));
            rpow = rpow * rstep;
        }
        return out;
    }

    long n = s;
    if (r.a.is_zero())
        throw DomainError("z_depth1: positive s needs a direction with a > 0");
    if (n - 1 <= eps_hi) {
        DeltaSeries rp = affine_pow(r, n - 1, prec).truncated(delta_hi);
        Real fct = factorial(n - 1, prec);
        // (q-1)/ln q * (r eps)^{n-1}/(n-1)! * (T + H_{n-1} - ln r)
        DeltaSeries lead = (qm1_over_lnq / fct) * rp;
        TPoly block = TPoly::t_power(lead, 1);
        DeltaSeries hm = DeltaSeries::scalar(harmonic(n - 1, prec)) -
                         affine_log(r, delta_hi, prec);
        block = block + TPoly::from_delta(lead * hm);
        // (M(q) + (1-q) gamma / ln q) (r eps)^{n-1}/(n-1)!
        Real mq = detail::m_of_q_cached(ctx, tol_eff);
        Real finite = mq + ctx.one_minus_q() * euler_gamma(prec) / ctx.ln_q();
        block = block + TPoly::from_delta((finite / fct) * rp);
        out.add_to(static_cast<int>(n - 1), block);
    }
    for (int l = 0; l <= eps_hi; ++l) {
        if (l == n - 1) continue;
        long a = n - l;
        Real z = a >= 2 ? zeta_q_convergent(ctx, {a}, tol_eff)
                        : detail::zeta_q_nonpos_cached(ctx, -a);
        DeltaSeries coeff =
            (z / factorial(l, prec)) * affine_pow(r, l, prec).truncated(delta_hi);
        out.add_to(l, TPoly::from_delta(coeff));
    }
    return out;
}

namespace detail {

/// A peel step contracts only when its shift ladder does: the ratio of
/// consecutive ladder terms is r_peel/(r_peel + r_next), which at delta = 0
/// equals a_peel/(a_peel + a_next). The step is therefore safe (geometric
/// ratio < 1, or nilpotent in delta when a_peel = 0) unless a_peel > 0 and
/// a_next = 0 — the marginal case where the ladder stalls at ratio 1.
inline bool has_zero_direction(const IndexedWord& w) {
    for (const auto& r : w.r)
        if (r.a.is_zero()) return true;
    return false;
}

inline bool all_zero_directions(const IndexedWord& w) {
    for (const auto& r : w.r)
        if (!r.a.is_zero()) return false;
    return true;
}

/// Shared machinery of the two depth recursions. Peels one entry (s_peel,
/// r_peel) off a word; `sub` maps u = j + i to the remaining word with the
/// merged-direction slot shifted down by u. Produces
///   block1 = (q-1)/ln q sum_j (-s_peel)!/j! (-1/(r_peel eps))^{1-s_peel-j} Z(sub(j))
///   block2 = sum_t Z(sub(t)) B_t(eps),
///   B_t = sum_{j<=min(t,-s_peel)} C(-s_peel,j) (1-q)^{t-j} C(l+1,t-j)
///         zeta_q(-l) (r_peel eps)^p / p!,   l = p - s_peel - j,
/// the j and i = t - j sums of the raw rearrangement folded over the common
/// shift depth t so each subword series is consumed once. B_t is built only
/// at powers p that can reach the clamp window against the actual support of
/// Z(sub(t)), with all binomial factors updated incrementally. The t-sum is
/// truncated once consecutive contributions stall below stop_tol relative to
/// the largest magnitude seen; for safe words (see above) the terms decay
/// geometrically, so the stall test is sound. A zero (default) stop_tol
/// selects ladder_tolerance(prec).
/// Vector form: transports several series components through one shared
/// ladder. The shift blocks B_t depend only on the peeled entry, so building
/// them once and applying them to every component avoids re-running the
/// ladder per component; the stall criterion is tracked per component
/// (components scale very differently) and the ladder stops when all stall.
inline std::vector<EpsSeries> peel_correction_vec(
    const QContext& ctx, long s_peel, const AffineR& r_peel,
    const std::function<IndexedWord(long)>& sub, int eps_hi, int delta_hi,
    int lo_keep,
    const std::function<std::vector<EpsSeries>(const IndexedWord&, int)>& recurse,
    const Real& stop = Real(0L, 64)) {
    const mpfr_prec_t prec = ctx.precision();
    Real one(1L, prec);
    Real qm1_over_lnq = (ctx.q() - one) / ctx.ln_q();
    const Real stop_tol = stop.is_zero() ? ladder_tolerance(prec) : stop;
    const long J = -s_peel;

    std::vector<EpsSeries> total;
    auto ensure_size = [&](size_t n) {
        while (total.size() < n) {
            EpsSeries s(prec, eps_hi);
            s.declare_lo(lo_keep);
            total.push_back(std::move(s));
        }
    };

    // Block 1: the explicit pole prefactors against the j-shifted subwords.
    for (long j = 0; j <= J; ++j) {
        long m = 1 - s_peel - j;
        std::vector<EpsSeries> zs = recurse(sub(j), eps_hi + static_cast<int>(m));
        ensure_size(zs.size());
        Real c = qm1_over_lnq * factorial(-s_peel, prec) / factorial(j, prec);
        if (m % 2 == 1) c = -c;
        DeltaSeries pref = c * affine_recip_pow(r_peel, m, delta_hi, prec);
        TPoly tpref = TPoly::from_delta(pref);
        for (size_t ch = 0; ch < zs.size(); ++ch) {
            EpsSeries term = tpref * zs[ch];
            term = term.shifted(static_cast<int>(-m));
            total[ch] += term.truncated(eps_hi);
        }
    }

    // Shared p-indexed tables, extended on demand.
    std::vector<DeltaSeries> rpow{DeltaSeries::scalar(one).truncated(delta_hi)};
    std::vector<Real> inv_fact{one};
    DeltaSeries rstep = affine_pow(r_peel, 1, prec).truncated(delta_hi);
    auto extend_tables = [&](long p_max) {
        while (static_cast<long>(rpow.size()) <= p_max) {
            long p = static_cast<long>(rpow.size());
            rpow.push_back((rpow.back() * rstep).truncated(delta_hi));
            inv_fact.push_back(inv_fact.back() / Real(p, prec));
        }
    };
    std::vector<Real> binJ;
    for (long j = 0; j <= J; ++j) binJ.push_back(binomial(J, j, prec));
    std::vector<Real> omq_pow{one};
    std::vector<Real> zl_memo;
    auto zl = [&](long l) -> const Real& {
        while (static_cast<long>(zl_memo.size()) <= l)
            zl_memo.push_back(
                zeta_q_nonpos_cached(ctx, static_cast<long>(zl_memo.size())));
        return zl_memo[static_cast<size_t>(l)];
    };

    // Block 2: the folded shift ladder.
    std::vector<int> stalled;
    std::vector<Real> running_max;
    for (long t = 0;; ++t) {
        omq_pow.push_back(omq_pow.back() * ctx.one_minus_q());
        IndexedWord wsub = sub(t);
        std::vector<EpsSeries> w = recurse(wsub, eps_hi);
        ensure_size(w.size());
        while (stalled.size() < w.size()) {
            stalled.push_back(0);
            running_max.push_back(Real(0L, prec));
        }
        long p_floor = std::max<long>(0, t - 1 + s_peel);
        long p_max = eps_hi + pole_order_bound(wsub);
        extend_tables(p_max);

        // Powers that can land in [lo_keep, eps_hi] against the union of the
        // component supports.
        std::vector<char> need(static_cast<size_t>(p_max + 1), 0);
        for (const auto& wc : w)
            for (const auto& [e, c] : wc.terms()) {
                long plo = std::max<long>(p_floor, lo_keep - e);
                long phi = std::min<long>(p_max, eps_hi - e);
                for (long p = plo; p <= phi; ++p) need[static_cast<size_t>(p)] = 1;
            }

        // Per-j state for C(l+1, i), i = t - j, advanced incrementally in l
        // from the first non-vanishing entry l = max(0, i-1), where C = 1.
        long j_hi = std::min(J, t);
        std::vector<Real> curC(static_cast<size_t>(j_hi + 1));
        std::vector<long> curl(static_cast<size_t>(j_hi + 1));
        for (long j = 0; j <= j_hi; ++j) {
            // p-independent prefactor folded into the running binomial.
            curC[static_cast<size_t>(j)] = binJ[static_cast<size_t>(j)] *
                                           omq_pow[static_cast<size_t>(t - j)];
            curl[static_cast<size_t>(j)] = std::max<long>(0, t - j - 1);
        }

        EpsSeries b(prec, static_cast<int>(p_max));
        b.declare_lo(static_cast<int>(p_floor));
        bool empty = true;
        Real cp(prec), term(prec);
        for (long p = p_floor; p <= p_max; ++p) {
            if (!need[static_cast<size_t>(p)]) continue;
            mpfr_set_zero(cp.raw(), 1);
            for (long j = 0; j <= j_hi; ++j) {
                long l = p - s_peel - j;
                Real& C = curC[static_cast<size_t>(j)];
                long& lc = curl[static_cast<size_t>(j)];
                if (l < lc) continue; // C(l+1, t-j) still structurally zero
                long i = t - j;
                while (lc < l) {
                    // C(l+2, i) = C(l+1, i) (l+2)/(l+2-i)
                    mpfr_mul_ui(C.raw(), C.raw(), static_cast<unsigned long>(lc + 2),
                                MPFR_RNDN);
                    mpfr_div_ui(C.raw(), C.raw(),
                                static_cast<unsigned long>(lc + 2 - i), MPFR_RNDN);
                    ++lc;
                }
                mpfr_mul(term.raw(), C.raw(), zl(l).raw(), MPFR_RNDN);
                mpfr_add(cp.raw(), cp.raw(), term.raw(), MPFR_RNDN);
            }
            if (!cp.is_zero()) {
                b.add_to(static_cast<int>(p),
                         TPoly::from_delta((cp * inv_fact[static_cast<size_t>(p)]) *
                                           rpow[static_cast<size_t>(p)]));
                empty = false;
            }
        }
        bool all_stalled = true;
        for (size_t ch = 0; ch < w.size(); ++ch) {
            EpsSeries contrib(prec, eps_hi);
            if (!empty) {
                contrib = mul_clamped(b, w[ch], lo_keep).truncated(eps_hi);
                total[ch] += contrib;
            }
            Real tmax = contrib.max_abs_coeff();
            if (tmax > running_max[ch]) running_max[ch] = tmax;
            Real smax = total[ch].max_abs_coeff();
            if (smax > running_max[ch]) running_max[ch] = smax;
            if (tmax <= stop_tol * running_max[ch])
                ++stalled[ch];
            else
                stalled[ch] = 0;
            if (stalled[ch] < 4) all_stalled = false;
        }
        if (t > eps_hi - s_peel - lo_keep && all_stalled) break;
        if (t > 2000)
            throw TruncationOverflow("peel_correction: shift ladder did not settle");
    }
    return total;
}

inline EpsSeries peel_correction(
    const QContext& ctx, long s_peel, const AffineR& r_peel,
    const std::function<IndexedWord(long)>& sub, int eps_hi, int delta_hi,
    int lo_keep, const std::function<EpsSeries(const IndexedWord&, int)>& recurse,
    const Real& stop = Real(0L, 64)) {
    auto recurse_vec = [&](const IndexedWord& v,
                           int hi) -> std::vector<EpsSeries> {
        return {recurse(v, hi)};
    };
    return peel_correction_vec(ctx, s_peel, r_peel, sub, eps_hi, delta_hi, lo_keep,
                               recurse_vec, stop)[0];
}

inline std::string cache_key(const QContext& ctx, const IndexedWord& w,
                             const char* route, int delta_hi) {
    return ctx.q().str(40) + "#" + std::to_string(ctx.precision()) + "#" + route +
           "#" + std::to_string(delta_hi) + "#" + w.str();
}

/// Substitute eps -> delta*eps coefficient-wise: the eps^e coefficient
/// acquires an exact factor delta^e.
inline EpsSeries delta_rescale(const QContext& ctx, const EpsSeries& flat) {
    EpsSeries out(ctx.precision(), flat.hi());
    out.declare_lo(flat.lo());
    Real one(1L, ctx.precision());
    for (const auto& [e, c] : flat.terms())
        out.add_to(e, TPoly::from_delta(DeltaSeries::monomial(one, e)) * c);
    return out;
}

/// When every direction is a pure delta multiple, the regularized series
/// depends on the directions only through the products r_j eps, so it equals
/// the series along the constant directions b_j with eps replaced by
/// delta*eps.
inline EpsSeries z_pure_delta_rescaled(
    const QContext& ctx, const IndexedWord& w, int eps_hi,
    const std::function<EpsSeries(const IndexedWord&, int)>& recurse) {
    IndexedWord base = w;
    for (auto& r : base.r) r = AffineR::constant(r.b);
    return delta_rescale(ctx, recurse(base, eps_hi));
}

/// cos and sin of a delta-series: split off the constant term and expand the
/// nilpotent remainder by its (finite) Taylor series.
inline void delta_cos_sin(const DeltaSeries& x, int delta_hi, mpfr_prec_t prec,
                          DeltaSeries* cos_out, DeltaSeries* sin_out) {
    Real c0 = x.coeff(0);
    DeltaSeries u = (x - DeltaSeries::scalar(c0)).truncated(delta_hi);
    Real cc(prec), ss(prec);
    mpfr_cos(cc.raw(), c0.raw(), MPFR_RNDN);
    mpfr_sin(ss.raw(), c0.raw(), MPFR_RNDN);
    Real one(1L, prec);
    DeltaSeries cosu = DeltaSeries::scalar(one).truncated(delta_hi);
    DeltaSeries sinu(prec, delta_hi);
    DeltaSeries upow = DeltaSeries::scalar(one).truncated(delta_hi);
    Real fact(1L, prec);
    for (int k = 1; k <= delta_hi; ++k) {
        upow = (upow * u).truncated(delta_hi);
        fact *= Real(k, prec);
        Real c = one / fact;
        if ((k / 2) % 2 == 1) c = -c;
        if (k % 2 == 1)
            sinu = sinu + c * upow;
        else
            cosu = cosu + c * upow;
    }
    *cos_out = (cc * cosu - ss * sinu).truncated(delta_hi);
    *sin_out = (ss * cosu + cc * sinu).truncated(delta_hi);
}

/// Real/imaginary component pair of a complex eps-series.
struct CSeries {
    EpsSeries re, im;
};

/// Re[a conj(b)], clamped like the route products.
inline EpsSeries re_conj_prod(const CSeries& a, const CSeries& b, int lo_keep) {
    return mul_clamped(a.re, b.re, lo_keep) + mul_clamped(a.im, b.im, lo_keep);
}

/// Sector channel label: harmonic k >= 1 of the log-periodic phase
/// mu^{i k omega} (mu = -eps/(1-q), omega = 2 pi/|ln q|), paired with the
/// integer delta-phase label j of the non-expandable factor
/// delta^{i j omega} contributed by pure-delta directions. Negative
/// harmonics are implied by conjugation.
using SectorKey = std::pair<int, int>;

/// Sector decomposition of a regularized series around one recursion route.
///
/// The true function behind each formal series splits into zero-frequency
/// (asymptotic) content plus conjugate pairs of log-periodic sectors; the
/// channel (k, j) of a word enters as
///     Gamma(1 - i k omega) mu^{i k omega} delta^{i j omega} s[(k,j)] + conj.
/// `e` is the zero-frequency correction the route's asymptotic core misses:
/// whenever the recursion multiplies two factors, their conjugate harmonics
/// recombine into real content with weight kappa_k = |Gamma(1 - i k
/// omega)|^2, which the core (built from asymptotic parts only) cannot see.
/// Harmonics are tracked through k = 2: same-sign first harmonics merge into
/// second harmonics with an O(1) Gamma-ratio weight and feed back into both
/// the first harmonic and the zero-frequency channel at the kappa^2 scale,
/// which sits above the cross-route verification gates; third-harmonic
/// content is another factor e^{-pi omega} down and is dropped. The
/// completed series core + e is route-independent to that floor.
struct OscSeries {
    EpsSeries e;
    std::map<SectorKey, CSeries> s;
};

inline OscSeries osc_truncated(const OscSeries& o, int eps_hi) {
    OscSeries out;
    out.e = o.e.truncated(eps_hi);
    for (const auto& [key, c] : o.s)
        out.s.emplace(key, CSeries{c.re.truncated(eps_hi), c.im.truncated(eps_hi)});
    return out;
}

/// a * b and a * conj(b) on complex eps-series, clamped like the routes.
inline CSeries cmul_clamped(const CSeries& a, const CSeries& b, int lo_keep) {
    return {mul_clamped(a.re, b.re, lo_keep) - mul_clamped(a.im, b.im, lo_keep),
            mul_clamped(a.re, b.im, lo_keep) + mul_clamped(a.im, b.re, lo_keep)};
}

inline CSeries cmulc_clamped(const CSeries& a, const CSeries& b, int lo_keep) {
    return {mul_clamped(a.re, b.re, lo_keep) + mul_clamped(a.im, b.im, lo_keep),
            mul_clamped(a.im, b.re, lo_keep) - mul_clamped(a.re, b.im, lo_keep)};
}

inline CSeries cscale(const CReal& c, const CSeries& a) {
    return {c.re * a.re - c.im * a.im, c.re * a.im + c.im * a.re};
}

/// Sector channels a word's decomposition can populate at the tracked
/// accuracy: harmonics k <= 2 with the delta labels reachable by at most one
/// second-order coupling. Channels outside this list are third-order.
inline std::vector<SectorKey> sector_keys(bool zero_dir) {
    if (!zero_dir) return {{1, 0}, {2, 0}};
    return {{1, -1}, {1, 0}, {1, 1}, {1, 2}, {2, 0}, {2, 1}, {2, 2}};
}

/// Zero-frequency recombination of two factors' sectors: one unit of
///   sum_k 2 kappa_k Re[Su[(k,j)] conj(Sv[(k,j)])]
/// over the channels present in both.
inline EpsSeries sector_recomb_e(const MellinWeights& mw,
                                 const std::map<SectorKey, CSeries>& su,
                                 const std::map<SectorKey, CSeries>& sv,
                                 int lo_keep, int eps_hi, mpfr_prec_t prec) {
    EpsSeries out(prec, eps_hi);
    out.declare_lo(lo_keep);
    Real two(2L, prec);
    for (const auto& [key, a] : su) {
        auto it = sv.find(key);
        if (it == sv.end()) continue;
        const Real& kap = key.first == 1 ? mw.kappa1 : mw.kappa2;
        out += ((two * kap) * re_conj_prod(a, it->second, lo_keep))
                   .truncated(eps_hi);
    }
    return out;
}

/// Sector content of a product of two completed factors with zero-frequency
/// parts ru, rv (either may be absent) and sector maps Su, Sv. Sectors
/// transport linearly against the opposite zero-frequency part; products of
/// sectors re-weight by the Gamma ratios of mellin_weights:
///   (1,j1) x (1,j2)       -> (2, j1+j2)  with weight c11,
///   (2,j1) x conj((1,j2)) -> (1, j1-j2)  with weight c21 (both orderings).
/// Harmonics above 2 are dropped (third order). Results accumulate into
/// out_s.
inline void sector_product(const MellinWeights& mw, const EpsSeries* ru,
                           const std::map<SectorKey, CSeries>& su,
                           const EpsSeries* rv,
                           const std::map<SectorKey, CSeries>& sv, int lo_keep,
                           int eps_hi, mpfr_prec_t prec,
                           std::map<SectorKey, CSeries>& out_s) {
    auto blank = [&]() {
        EpsSeries s(prec, eps_hi);
        s.declare_lo(lo_keep);
        return s;
    };
    auto chan = [&](const SectorKey& key) -> CSeries& {
        auto [it, inserted] = out_s.try_emplace(key);
        if (inserted) it->second = {blank(), blank()};
        return it->second;
    };
    auto cadd = [&](const SectorKey& key, const CSeries& x) {
        CSeries& acc = chan(key);
        acc.re += x.re.truncated(eps_hi);
        acc.im += x.im.truncated(eps_hi);
    };
    if (ru)
        for (const auto& [key, c] : sv)
            cadd(key, {mul_clamped(*ru, c.re, lo_keep),
                       mul_clamped(*ru, c.im, lo_keep)});
    if (rv)
        for (const auto& [key, c] : su)
            cadd(key, {mul_clamped(c.re, *rv, lo_keep),
                       mul_clamped(c.im, *rv, lo_keep)});
    for (const auto& [ku, a] : su)
        for (const auto& [kv, b] : sv) {
            if (ku.first == 1 && kv.first == 1)
                cadd({2, ku.second + kv.second},
                     cscale(mw.c11, cmul_clamped(a, b, lo_keep)));
            else if (ku.first == 2 && kv.first == 1)
                cadd({1, ku.second - kv.second},
                     cscale(mw.c21, cmulc_clamped(a, b, lo_keep)));
            else if (ku.first == 1 && kv.first == 2) {
                // conj(Su_1) Sv_2: the conjugate of Su_1 x conj(Sv_2).
                CSeries p = cmulc_clamped(a, b, lo_keep);
                p.im = -p.im;
                cadd({1, kv.second - ku.second}, cscale(mw.c21, p));
            }
        }
}

/// Harmonic-k sector of the depth-1 series Z(s; r eps), s = 1 - n <= 0,
/// with the global factor Gamma(1 - i k omega) mu^{i k omega} stripped
/// (write w = k omega):
///
///   g = (-1)^n (1-q)^{1-n}/|ln q| * r^{i w} * e^{-r eps/(1-q)}
///       * sum_{m=1}^{n} C(n-1,m-1) P_m (1-q)^m r^{-m} eps^{-m},
///   P_m = prod_{u=1}^{m-1} (u - i w).
///
/// Derivation: expand (1-q^k)^{n-1} binomially in the defining sum, apply
/// the Mellin transform to each harmonic sum over the nodes q^{-k}, and
/// collect the residues on the imaginary lattice z = m - i w; the residue of
/// the node counting factor is 1/|ln q| at every harmonic. Sets *delta_phase
/// when r is a pure delta multiple, in which case r^{i w} contributes the
/// scalar b^{i w} here and the remaining delta^{i k omega} is carried as the
/// sector's delta label instead.
inline CSeries osc_seed(const QContext& ctx, long s, const AffineR& r, int eps_hi,
                        int delta_hi, bool* delta_phase, int harmonic = 1) {
    const mpfr_prec_t prec = ctx.precision();
    const long n = 1 - s;
    Real one(1L, prec);
    Real omega = Real(harmonic, prec) * mellin_omega(ctx);

    DeltaSeries pc(prec, delta_hi), ps(prec, delta_hi);
    if (r.a.is_zero()) {
        *delta_phase = true;
        Real th = omega * log(r.b.to_real(prec));
        Real cc(prec), ss(prec);
        mpfr_cos(cc.raw(), th.raw(), MPFR_RNDN);
        mpfr_sin(ss.raw(), th.raw(), MPFR_RNDN);
        pc = DeltaSeries::scalar(cc);
        ps = DeltaSeries::scalar(ss);
    } else {
        *delta_phase = false;
        delta_cos_sin(omega * affine_log(r, delta_hi, prec), delta_hi, prec, &pc,
                      &ps);
    }

    // X = e^{lambda} * sum_m C(n-1,m-1) P_m (1-q)^m r^{-m} eps^{-m} collapses
    // coefficient-wise: the eps^E coefficient of the product is
    //   (-1)^E (1-q)^{-E} r^E  sum_{m >= max(1,-E)} (-1)^m C(n-1,m-1) P_m / (E+m)!
    // because each (1-q)^m cancels against the matching e^{lambda} term.
    std::vector<Real> d_re, d_im; // D_m = (-1)^m C(n-1,m-1) P_m, index m-1
    {
        Real p_re(1L, prec), p_im(0L, prec), c(1L, prec);
        for (long m = 1; m <= n; ++m) {
            if (m > 1) {
                Real u(m - 1, prec);
                Real nre = p_re * u + p_im * omega;
                Real nim = p_im * u - p_re * omega;
                p_re = nre;
                p_im = nim;
                // C(n-1, m-1) = C(n-1, m-2) (n-m+1)/(m-1)
                mpfr_mul_ui(c.raw(), c.raw(), static_cast<unsigned long>(n - m + 1),
                            MPFR_RNDN);
                mpfr_div_ui(c.raw(), c.raw(), static_cast<unsigned long>(m - 1),
                            MPFR_RNDN);
            }
            Real sign = m % 2 == 1 ? Real(-1L, prec) : Real(1L, prec);
            d_re.push_back(sign * c * p_re);
            d_im.push_back(sign * c * p_im);
        }
    }
    std::vector<Real> inv_fact{one}; // 1/(E+m)! for E+m <= eps_hi+n
    for (long k = 1; k <= n + eps_hi; ++k)
        inv_fact.push_back(inv_fact.back() / Real(k, prec));

    EpsSeries xre(prec, eps_hi), xim(prec, eps_hi);
    xre.declare_lo(static_cast<int>(-n));
    xim.declare_lo(static_cast<int>(-n));
    DeltaSeries rE = affine_recip_pow(r, n, delta_hi, prec);
    DeltaSeries rstep = affine_pow(r, 1, prec).truncated(delta_hi);
    Real cE = pow_si(ctx.one_minus_q(), n); // (-1)^E (1-q)^{-E} at E = -n
    if (n % 2 == 1) cE = -cE;
    Real m_omq = Real(-1L, prec) / ctx.one_minus_q();
    for (long E = -n; E <= eps_hi; ++E) {
        if (E > -n) {
            rE = (rE * rstep).truncated(delta_hi);
            cE *= m_omq;
        }
        Real a_re(0L, prec), a_im(0L, prec);
        for (long m = std::max<long>(1, -E); m <= n; ++m) {
            const Real& f = inv_fact[static_cast<size_t>(E + m)];
            a_re += d_re[static_cast<size_t>(m - 1)] * f;
            a_im += d_im[static_cast<size_t>(m - 1)] * f;
        }
        xre.add_to(static_cast<int>(E), TPoly::from_delta((cE * a_re) * rE));
        xim.add_to(static_cast<int>(E), TPoly::from_delta((cE * a_im) * rE));
    }

    Real base = pow_si(ctx.one_minus_q(), 1 - n) / abs(ctx.ln_q());
    if (n % 2 == 1) base = -base;
    TPoly tpc = TPoly::from_delta(pc), tps = TPoly::from_delta(ps);
    CSeries out;
    out.re = base * (tpc * xre - tps * xim);
    out.im = base * (tpc * xim + tps * xre);
    return out;
}

inline std::map<SectorKey, CSeries> z_osc_s(const QContext& ctx,
                                            const IndexedWord& w, int eps_hi,
                                            int delta_hi, ZCache& cache,
                                            bool front);

/// Marginal words are rewritten through the q-stuffle identity before
/// peeling. Split w = u v at the first (front route) or just after the last
/// (back route) vanishing-constant entry; then Z(u) Z(v) = sum over
/// stuffle(u, v) of Z(term), the concatenation term being w itself with
/// multiplicity kappa. The split leaves the peel-side factor all-positive,
/// so every other interleaving strictly reduces the number of
/// (positive-constant, later vanishing-constant) inversions seen from the
/// peel end, and merge terms reduce the depth: the rewrite terminates. The
/// identity is an exact rearrangement of the defining absolutely convergent
/// sums, valid coefficient-wise in delta.
inline EpsSeries z_stuffle_reduce(
    const QContext& ctx, const IndexedWord& w, int eps_hi, bool front,
    const std::function<EpsSeries(const IndexedWord&, int)>& recurse, int delta_hi,
    ZCache& cache) {
    const mpfr_prec_t prec = ctx.precision();
    size_t split = 0; // v starts at this index
    if (front) {
        // u = all-positive prefix before the first vanishing-constant entry.
        while (split < w.depth() && !w.r[split].a.is_zero()) ++split;
    } else {
        // v = all-positive suffix after the last vanishing-constant entry.
        for (size_t j = 0; j < w.depth(); ++j)
            if (w.r[j].a.is_zero()) split = j + 1;
    }
    if (split == 0 || split >= w.depth())
        throw DomainError("z_stuffle_reduce: word needs no reduction");
    IndexedWord u({w.s.begin(), w.s.begin() + split}, {w.r.begin(), w.r.begin() + split});
    IndexedWord v({w.s.begin() + split, w.s.end()}, {w.r.begin() + split, w.r.end()});

    WordSum terms = stuffle(u, v, ctx);
    Real kappa(0L, prec);
    int p_u = pole_order_bound(u), p_v = pole_order_bound(v);
    EpsSeries zu = recurse(u, eps_hi + p_v);
    EpsSeries zv = recurse(v, eps_hi + p_u);
    int lo_uv = -(p_u + p_v);
    EpsSeries out = mul_clamped(zu, zv, lo_uv).truncated(eps_hi);
    // Align the rewrite with the route's core convention. The product of the
    // factors' sectors recombines into zero-frequency content (one unit of
    // sector_recomb_e); the back core carries the full recombined content,
    // while the front core leaves its own recombination to the adjustment
    // series (z_osc_e), so the term enters with opposite signs.
    {
        auto su = z_osc_s(ctx, u, eps_hi + p_v, delta_hi, cache, front);
        auto sv = z_osc_s(ctx, v, eps_hi + p_u, delta_hi, cache, front);
        EpsSeries recomb =
            sector_recomb_e(mellin_weights(ctx), su, sv, lo_uv, eps_hi, prec);
        out = front ? (out - recomb).truncated(eps_hi)
                    : (out + recomb).truncated(eps_hi);
    }
    for (const auto& t : terms.terms) {
        if (t.word == w) {
            kappa += t.coeff;
            continue;
        }
        out = out - t.coeff * recurse(t.word, eps_hi);
    }
    if (!(kappa > Real(0L, prec)))
        throw DomainError("z_stuffle_reduce: degenerate rewrite");
    return (Real(1L, prec) / kappa) * out;
}

inline EpsSeries z_back_raw(const QContext& ctx, const IndexedWord& w, int eps_hi,
                            int delta_hi, ZCache& cache);

/// Asymptotic-series core of the front route: the length-reducing recursion
/// peeling the first entry, with the merged direction r_1 + r_2 at the front
/// of the remaining word. Peeling is marginal exactly when the first
/// direction has a positive constant part while a later one vanishes; such
/// words are first rewritten through the stuffle identity so that every peel
/// step contracts. Peel subwords of depth >= 2 are evaluated through the
/// opposite-end identity: the peel ladder shifts one slot ever deeper, and
/// peeling the shifted end again would make the next ladder's binomial range
/// grow with the shift; peeling the opposite end keeps every ladder bounded
/// by the original entries. This core resums only the real Mellin poles; the
/// log-periodic sectors are tracked separately by z_osc below.
inline EpsSeries z_front_raw(const QContext& ctx, const IndexedWord& w, int eps_hi,
                             int delta_hi, ZCache& cache) {
    if (!w.all_nonpositive())
        throw DomainError("z_nonpos: word must be all-non-positive");
    if (w.empty()) return EpsSeries::one(ctx.precision());

    std::string key = detail::cache_key(ctx, w, "front", delta_hi);
    if (const EpsSeries* hit = cache.find(key, eps_hi))
        return hit->truncated(eps_hi);

    auto recurse = [&](const IndexedWord& v, int hi) {
        return z_front_raw(ctx, v, hi, delta_hi, cache);
    };

    EpsSeries out(ctx.precision(), eps_hi);
    if (w.depth() == 1) {
        out = z_depth1(ctx, w.s[0], w.r[0], eps_hi, delta_hi);
    } else if (detail::all_zero_directions(w)) {
        out = detail::z_pure_delta_rescaled(ctx, w, eps_hi, recurse);
    } else if (!w.r[0].a.is_zero() && detail::has_zero_direction(w)) {
        out = detail::z_stuffle_reduce(ctx, w, eps_hi, true, recurse, delta_hi, cache);
    } else {
        IndexedWord rest = w.tail();
        AffineR merged = w.r[0] + w.r[1];
        auto sub = [&](long u) {
            IndexedWord v = rest;
            v.s[0] -= u;
            v.r[0] = merged;
            return v;
        };
        auto recurse_flip = [&](const IndexedWord& v, int hi) {
            return v.depth() >= 2 ? z_back_raw(ctx, v, hi, delta_hi, cache)
                                  : z_front_raw(ctx, v, hi, delta_hi, cache);
        };
        out = detail::peel_correction(ctx, w.s[0], w.r[0], sub, eps_hi, delta_hi,
                                      -pole_order_bound(w), recurse_flip);
    }
    cache.store(key, out);
    return out;
}

/// Asymptotic-series core of the back route: the product
/// Z(s_d) Z(s_1..s_{d-1}) minus the same two correction blocks taken at the
/// back with merged direction r_{d-1} + r_d. Mirrors the front route's
/// safety rewrite: peeling from the back is marginal exactly when the last
/// direction has a positive constant part while an earlier one vanishes.
inline EpsSeries z_back_raw(const QContext& ctx, const IndexedWord& w, int eps_hi,
                            int delta_hi, ZCache& cache) {
    if (!w.all_nonpositive())
        throw DomainError("z_nonpos_alt: word must be all-non-positive");
    if (w.empty()) return EpsSeries::one(ctx.precision());

    std::string key = detail::cache_key(ctx, w, "back", delta_hi);
    if (const EpsSeries* hit = cache.find(key, eps_hi))
        return hit->truncated(eps_hi);

    auto recurse = [&](const IndexedWord& v, int hi) {
        return z_back_raw(ctx, v, hi, delta_hi, cache);
    };

    EpsSeries out(ctx.precision(), eps_hi);
    if (w.depth() == 1) {
        out = z_depth1(ctx, w.s[0], w.r[0], eps_hi, delta_hi);
    } else if (detail::all_zero_directions(w)) {
        out = detail::z_pure_delta_rescaled(ctx, w, eps_hi, recurse);
    } else if (!w.r[w.depth() - 1].a.is_zero() && detail::has_zero_direction(w)) {
        out = detail::z_stuffle_reduce(ctx, w, eps_hi, false, recurse, delta_hi, cache);
    } else {
        const size_t d = w.depth();
        IndexedWord head = w.head_dropped_back();
        long sd = w.s[d - 1];
        AffineR rd = w.r[d - 1];
        AffineR merged = w.r[d - 2] + rd;
        int p_word = pole_order_bound(w);

        // Opposite-end evaluation of the depth >= 2 subwords: see z_front_raw.
        auto recurse_flip = [&](const IndexedWord& v, int hi) {
            return v.depth() >= 2 ? z_front_raw(ctx, v, hi, delta_hi, cache)
                                  : z_back_raw(ctx, v, hi, delta_hi, cache);
        };

        EpsSeries last =
            z_depth1(ctx, sd, rd, eps_hi + pole_order_bound(head), delta_hi);
        EpsSeries heads = recurse_flip(head, eps_hi + static_cast<int>(1 - sd));
        out = mul_clamped(last, heads, -p_word).truncated(eps_hi);

        auto sub = [&](long u) {
            IndexedWord v = head;
            v.s[d - 2] -= u;
            v.r[d - 2] = merged;
            return v;
        };
        out = out - detail::peel_correction(ctx, sd, rd, sub, eps_hi, delta_hi,
                                            -p_word, recurse_flip);

        // The product over k_1 > ... > k_{d-1} and k_d ranges over all of
        // k_d <= k_{d-1}; the peel correction restores k_d > k_{d-1} but the
        // diagonal k_d = k_{d-1} remains: remove the merged word
        // (s_{d-1}+s_d; r_{d-1}+r_d) together with its (1-q)-lowered partner
        // (the q-stuffle diagonal, [k]^2-vs-[2k] rearrangement).
        IndexedWord diag = head;
        diag.s[d - 2] += sd;
        diag.r[d - 2] = merged;
        IndexedWord diag_low = diag;
        diag_low.s[d - 2] -= 1;
        out = out - recurse_flip(diag, eps_hi) -
              ctx.one_minus_q() * recurse_flip(diag_low, eps_hi);
        out = out.truncated(eps_hi);
    }
    cache.store(key, out);
    return out;
}

inline EpsSeries z_raw(const QContext& ctx, const IndexedWord& w, int eps_hi,
                       int delta_hi, ZCache& cache, bool front) {
    return front ? z_front_raw(ctx, w, eps_hi, delta_hi, cache)
                 : z_back_raw(ctx, w, eps_hi, delta_hi, cache);
}

/// Sector-channel recursion mirroring the chosen route's dispatch. The
/// rules follow from applying the route's exact rearrangements to the full
/// functions and projecting onto the log-periodic channels:
///  - the correction blocks are linear, so they transport each channel
///    unchanged (one shared peel ladder over all channels);
///  - a front peel additionally multiplies the peeled entry's own seeds
///    against the untouched remainder along its ORIGINAL directions: the
///    seeds ride on the remainder's asymptotic core and merge with the
///    remainder's sectors under the Gamma-ratio weights (sector_product);
///  - on the back route the ladder resums the region where the last index
///    rises past the head, and its resummation deficit (seed times the
///    head's true content) cancels exactly against the seed-bearing terms
///    of the product, so every channel transports linearly against the
///    peeled entry's core with no seed terms at all;
///  - stuffle rewrites complete their product under the product rule;
///  - pure-delta words reduce by eps -> delta*eps, which raises every
///    channel's delta label by its harmonic.
inline std::map<SectorKey, CSeries> z_osc_s(const QContext& ctx,
                                            const IndexedWord& w, int eps_hi,
                                            int delta_hi, ZCache& cache,
                                            bool front) {
    const mpfr_prec_t prec = ctx.precision();
    using SectorMap = std::map<SectorKey, CSeries>;
    static std::map<std::string, std::pair<int, SectorMap>> memo;
    const std::string key = cache_key(ctx, w, front ? "oscs-f" : "oscs-b", delta_hi);
    {
        auto it = memo.find(key);
        if (it != memo.end() && it->second.first >= eps_hi) {
            SectorMap out;
            for (const auto& [k, c] : it->second.second)
                out.emplace(k, CSeries{c.re.truncated(eps_hi),
                                       c.im.truncated(eps_hi)});
            return out;
        }
    }

    auto raw = [&](const IndexedWord& v, int hi) {
        return z_raw(ctx, v, hi, delta_hi, cache, front);
    };
    auto osc_s = [&](const IndexedWord& v, int hi) {
        return z_osc_s(ctx, v, hi, delta_hi, cache, front);
    };
    // Peel branches evaluate depth >= 2 subwords through the opposite end,
    // mirroring the raw cores (see z_front_raw).
    auto raw_flip = [&](const IndexedWord& v, int hi) {
        return z_raw(ctx, v, hi, delta_hi, cache, v.depth() >= 2 ? !front : front);
    };
    auto osc_s_flip = [&](const IndexedWord& v, int hi) {
        return z_osc_s(ctx, v, hi, delta_hi, cache,
                       v.depth() >= 2 ? !front : front);
    };

    const MellinWeights& mw = mellin_weights(ctx);
    // Sector ladders stall at a fixed 2^-60 relative to their own scale.
    // Sector content reaches the verified outputs through at least one
    // recombination factor kappa_1, so the absolute budget is
    // kappa_1 * 2^-60 * (channel scale), far below the cross-route gates.
    Real osc_stop(1L, prec);
    mpfr_mul_2si(osc_stop.raw(), osc_stop.raw(), -60, MPFR_RNDN);
    const int p_word = pole_order_bound(w);
    const int lo_keep = -p_word;
    const size_t d = w.depth();

    SectorMap out;
    auto blank = [&]() {
        EpsSeries s(prec, eps_hi);
        s.declare_lo(lo_keep);
        return s;
    };
    auto chan = [&](const SectorKey& k) -> CSeries& {
        auto [it, inserted] = out.try_emplace(k);
        if (inserted) it->second = {blank(), blank()};
        return it->second;
    };
    // Depth-1 seeds of an entry (s, r), as a sector map at the given horizon.
    auto seed_map = [&](long s, const AffineR& r, int hi) -> SectorMap {
        SectorMap m;
        bool dphase = false;
        CSeries s1 = osc_seed(ctx, s, r, hi, delta_hi, &dphase, 1);
        CSeries s2 = osc_seed(ctx, s, r, hi, delta_hi, &dphase, 2);
        m.emplace(SectorKey{1, dphase ? 1 : 0}, std::move(s1));
        m.emplace(SectorKey{2, dphase ? 2 : 0}, std::move(s2));
        return m;
    };
    // Channel list of the shared transport ladders; subword channels are a
    // subset (peeling can only remove vanishing-constant directions).
    const std::vector<SectorKey> keys = sector_keys(has_zero_direction(w));
    auto recurse_vec = [&](const IndexedWord& v, int hi) {
        SectorMap s = osc_s_flip(v, hi);
        std::vector<EpsSeries> comps;
        comps.reserve(2 * keys.size());
        for (const auto& k : keys) {
            auto it = s.find(k);
            if (it != s.end()) {
                comps.push_back(it->second.re);
                comps.push_back(it->second.im);
            } else {
                comps.push_back(EpsSeries(prec, hi));
                comps.push_back(EpsSeries(prec, hi));
            }
        }
        return comps;
    };

    if (d == 1) {
        out = seed_map(w.s[0], w.r[0], eps_hi);
    } else if (all_zero_directions(w)) {
        IndexedWord base = w;
        for (auto& r : base.r) r = AffineR::constant(r.b);
        // eps -> delta*eps turns mu^{i k omega} into delta^{i k omega} times
        // itself: every channel's delta label rises by its harmonic.
        for (const auto& [k, c] : osc_s(base, eps_hi))
            out.emplace(SectorKey{k.first, k.second + k.first},
                        CSeries{delta_rescale(ctx, c.re),
                                delta_rescale(ctx, c.im)});
    } else if (front ? (!w.r[0].a.is_zero() && has_zero_direction(w))
                     : (!w.r[d - 1].a.is_zero() && has_zero_direction(w))) {
        // Marginal word: the same stuffle rewrite as the core, with the
        // product completed channel-wise under the product rule.
        size_t split = 0;
        if (front) {
            while (split < d && !w.r[split].a.is_zero()) ++split;
        } else {
            for (size_t j = 0; j < d; ++j)
                if (w.r[j].a.is_zero()) split = j + 1;
        }
        IndexedWord u({w.s.begin(), w.s.begin() + split},
                      {w.r.begin(), w.r.begin() + split});
        IndexedWord v({w.s.begin() + split, w.s.end()},
                      {w.r.begin() + split, w.r.end()});
        WordSum terms = stuffle(u, v, ctx);
        int p_u = pole_order_bound(u), p_v = pole_order_bound(v);
        int lo_uv = -(p_u + p_v);
        EpsSeries ru = raw(u, eps_hi + p_v);
        EpsSeries rv = raw(v, eps_hi + p_u);
        SectorMap su = osc_s(u, eps_hi + p_v);
        SectorMap sv = osc_s(v, eps_hi + p_u);
        sector_product(mw, &ru, su, &rv, sv, lo_uv, eps_hi, prec, out);
        Real kappa_mult(0L, prec);
        for (const auto& t : terms.terms) {
            if (t.word == w) {
                kappa_mult += t.coeff;
                continue;
            }
            for (const auto& [k, c] : osc_s(t.word, eps_hi)) {
                CSeries& a = chan(k);
                a.re = a.re - t.coeff * c.re;
                a.im = a.im - t.coeff * c.im;
            }
        }
        if (!(kappa_mult > Real(0L, prec)))
            throw DomainError("z_osc_s: degenerate stuffle rewrite");
        Real inv = Real(1L, prec) / kappa_mult;
        for (auto& [k, c] : out) {
            c.re = inv * c.re;
            c.im = inv * c.im;
        }
    } else if (front) {
        IndexedWord rest = w.tail();
        AffineR merged = w.r[0] + w.r[1];
        auto sub = [&](long uu) {
            IndexedWord v = rest;
            v.s[0] -= uu;
            v.r[0] = merged;
            return v;
        };
        std::vector<EpsSeries> lad = peel_correction_vec(
            ctx, w.s[0], w.r[0], sub, eps_hi, delta_hi, lo_keep, recurse_vec,
            osc_stop);
        for (size_t i = 0; i < keys.size(); ++i)
            out[keys[i]] = {lad[2 * i], lad[2 * i + 1]};
        // Seeds of the peeled entry against the untouched remainder: they
        // ride on its core and merge with its sectors.
        IndexedWord tail = w.tail();
        int p_tail = pole_order_bound(tail);
        int m1 = static_cast<int>(1 - w.s[0]);
        SectorMap sseed = seed_map(w.s[0], w.r[0], eps_hi + p_tail);
        SectorMap st = osc_s_flip(tail, eps_hi + m1);
        EpsSeries rt = raw_flip(tail, eps_hi + m1);
        sector_product(mw, nullptr, sseed, &rt, st, lo_keep, eps_hi, prec, out);
    } else {
        IndexedWord head = w.head_dropped_back();
        long sd = w.s[d - 1];
        AffineR rd = w.r[d - 1];
        AffineR merged = w.r[d - 2] + rd;
        int p_head = pole_order_bound(head);
        int md = static_cast<int>(1 - sd);

        EpsSeries rlast = z_depth1(ctx, sd, rd, eps_hi + p_head, delta_hi);
        for (const auto& [k, c] : osc_s_flip(head, eps_hi + md))
            out.emplace(k, CSeries{
                               mul_clamped(rlast, c.re, lo_keep).truncated(eps_hi),
                               mul_clamped(rlast, c.im, lo_keep).truncated(eps_hi)});

        auto sub = [&](long uu) {
            IndexedWord v = head;
            v.s[d - 2] -= uu;
            v.r[d - 2] = merged;
            return v;
        };
        std::vector<EpsSeries> lad = peel_correction_vec(
            ctx, sd, rd, sub, eps_hi, delta_hi, lo_keep, recurse_vec, osc_stop);
        for (size_t i = 0; i < keys.size(); ++i) {
            CSeries& a = chan(keys[i]);
            a.re = (a.re - lad[2 * i]).truncated(eps_hi);
            a.im = (a.im - lad[2 * i + 1]).truncated(eps_hi);
        }
        IndexedWord diag = head;
        diag.s[d - 2] += sd;
        diag.r[d - 2] = merged;
        IndexedWord diag_low = diag;
        diag_low.s[d - 2] -= 1;
        const Real& omq = ctx.one_minus_q();
        for (const auto& [k, c] : osc_s_flip(diag, eps_hi)) {
            CSeries& a = chan(k);
            a.re = (a.re - c.re).truncated(eps_hi);
            a.im = (a.im - c.im).truncated(eps_hi);
        }
        for (const auto& [k, c] : osc_s_flip(diag_low, eps_hi)) {
            CSeries& a = chan(k);
            a.re = (a.re - omq * c.re).truncated(eps_hi);
            a.im = (a.im - omq * c.im).truncated(eps_hi);
        }
    }

    // Channels outside the tracked list carry only third-order content.
    for (auto it = out.begin(); it != out.end();) {
        if (std::find(keys.begin(), keys.end(), it->first) == keys.end())
            it = out.erase(it);
        else
            ++it;
    }
    auto it = memo.find(key);
    if (it == memo.end() || it->second.first < eps_hi) memo[key] = {eps_hi, out};
    return out;
}

/// Zero-frequency adjustment of the chosen route (the e channel): the
/// content the route's asymptotic core misses relative to the completed
/// (route-independent) series. It transports linearly through the route's
/// rearrangements; recombination sources enter only where the FRONT route
/// multiplies (its ladder deficit pairs the peeled seeds with the
/// remainder's conjugate channels), while the back core carries its own
/// products' recombined content (see z_osc_s), leaving pure transport.
inline EpsSeries z_osc_e(const QContext& ctx, const IndexedWord& w, int eps_hi,
                         int delta_hi, ZCache& cache, bool front) {
    const mpfr_prec_t prec = ctx.precision();
    static std::map<std::string, std::pair<int, EpsSeries>> memo;
    const std::string key = cache_key(ctx, w, front ? "osce-f" : "osce-b", delta_hi);
    {
        auto it = memo.find(key);
        if (it != memo.end() && it->second.first >= eps_hi)
            return it->second.second.truncated(eps_hi);
    }

    auto raw = [&](const IndexedWord& v, int hi) {
        return z_raw(ctx, v, hi, delta_hi, cache, front);
    };
    auto osc_e = [&](const IndexedWord& v, int hi) {
        return z_osc_e(ctx, v, hi, delta_hi, cache, front);
    };
    auto osc_e_flip = [&](const IndexedWord& v, int hi) {
        return z_osc_e(ctx, v, hi, delta_hi, cache,
                       v.depth() >= 2 ? !front : front);
    };
    auto osc_s_flip = [&](const IndexedWord& v, int hi) {
        return z_osc_s(ctx, v, hi, delta_hi, cache,
                       v.depth() >= 2 ? !front : front);
    };

    const MellinWeights& mw = mellin_weights(ctx);
    const Real two(2L, prec);
    Real osc_stop(1L, prec);
    mpfr_mul_2si(osc_stop.raw(), osc_stop.raw(), -60, MPFR_RNDN);
    const int p_word = pole_order_bound(w);
    const int lo_keep = -p_word;
    const size_t d = w.depth();

    EpsSeries out(prec, eps_hi);
    out.declare_lo(lo_keep);

    if (d == 1) {
        // Depth-1 closed forms are complete.
    } else if (all_zero_directions(w)) {
        IndexedWord base = w;
        for (auto& r : base.r) r = AffineR::constant(r.b);
        out = delta_rescale(ctx, osc_e(base, eps_hi));
    } else if (front ? (!w.r[0].a.is_zero() && has_zero_direction(w))
                     : (!w.r[d - 1].a.is_zero() && has_zero_direction(w))) {
        size_t split = 0;
        if (front) {
            while (split < d && !w.r[split].a.is_zero()) ++split;
        } else {
            for (size_t j = 0; j < d; ++j)
                if (w.r[j].a.is_zero()) split = j + 1;
        }
        IndexedWord u({w.s.begin(), w.s.begin() + split},
                      {w.r.begin(), w.r.begin() + split});
        IndexedWord v({w.s.begin() + split, w.s.end()},
                      {w.r.begin() + split, w.r.end()});
        WordSum terms = stuffle(u, v, ctx);
        int p_u = pole_order_bound(u), p_v = pole_order_bound(v);
        int lo_uv = -(p_u + p_v);
        EpsSeries ru = raw(u, eps_hi + p_v);
        EpsSeries rv = raw(v, eps_hi + p_u);
        // The front adjustment satisfies the product cocycle
        //   sum_t E_t = E_u A_v + A_u E_v + 2 * (sector recombination)
        // (one recombination unit per ordering of the concatenation words);
        // the back channel transports linearly, mirroring its core.
        out = (mul_clamped(ru, osc_e(v, eps_hi + p_u), lo_uv) +
               mul_clamped(osc_e(u, eps_hi + p_v), rv, lo_uv))
                  .truncated(eps_hi);
        if (front) {
            auto su = z_osc_s(ctx, u, eps_hi + p_v, delta_hi, cache, front);
            auto sv = z_osc_s(ctx, v, eps_hi + p_u, delta_hi, cache, front);
            out = (out + two * sector_recomb_e(mw, su, sv, lo_uv, eps_hi, prec))
                      .truncated(eps_hi);
        }
        Real kappa_mult(0L, prec);
        for (const auto& t : terms.terms) {
            if (t.word == w) {
                kappa_mult += t.coeff;
                continue;
            }
            out = out - t.coeff * osc_e(t.word, eps_hi);
        }
        if (!(kappa_mult > Real(0L, prec)))
            throw DomainError("z_osc_e: degenerate stuffle rewrite");
        out = (Real(1L, prec) / kappa_mult) * out;
    } else if (front) {
        IndexedWord rest = w.tail();
        AffineR merged = w.r[0] + w.r[1];
        auto sub = [&](long uu) {
            IndexedWord v = rest;
            v.s[0] -= uu;
            v.r[0] = merged;
            return v;
        };
        out = peel_correction(ctx, w.s[0], w.r[0], sub, eps_hi, delta_hi, lo_keep,
                              osc_e_flip, osc_stop);
        // Ladder deficit: the peeled entry's seeds recombine with the
        // remainder's conjugate matching channels.
        IndexedWord tail = w.tail();
        int p_tail = pole_order_bound(tail);
        int m1 = static_cast<int>(1 - w.s[0]);
        std::map<SectorKey, CSeries> sseed;
        {
            bool dphase = false;
            sseed.emplace(SectorKey{1, 0},
                          osc_seed(ctx, w.s[0], w.r[0], eps_hi + p_tail, delta_hi,
                                   &dphase, 1));
            CSeries s2 = osc_seed(ctx, w.s[0], w.r[0], eps_hi + p_tail, delta_hi,
                                  &dphase, 2);
            if (dphase) {
                sseed.emplace(SectorKey{1, 1}, sseed.at(SectorKey{1, 0}));
                sseed.erase(SectorKey{1, 0});
                sseed.emplace(SectorKey{2, 2}, std::move(s2));
            } else {
                sseed.emplace(SectorKey{2, 0}, std::move(s2));
            }
        }
        out = (out + sector_recomb_e(mw, sseed,
                                     osc_s_flip(tail, eps_hi + m1), lo_keep,
                                     eps_hi, prec))
                  .truncated(eps_hi);
    } else {
        IndexedWord head = w.head_dropped_back();
        long sd = w.s[d - 1];
        AffineR rd = w.r[d - 1];
        AffineR merged = w.r[d - 2] + rd;
        int p_head = pole_order_bound(head);
        int md = static_cast<int>(1 - sd);

        EpsSeries rlast = z_depth1(ctx, sd, rd, eps_hi + p_head, delta_hi);
        out = mul_clamped(rlast, osc_e_flip(head, eps_hi + md), lo_keep)
                  .truncated(eps_hi);
        auto sub = [&](long uu) {
            IndexedWord v = head;
            v.s[d - 2] -= uu;
            v.r[d - 2] = merged;
            return v;
        };
        IndexedWord diag = head;
        diag.s[d - 2] += sd;
        diag.r[d - 2] = merged;
        IndexedWord diag_low = diag;
        diag_low.s[d - 2] -= 1;
        out = (out -
               peel_correction(ctx, sd, rd, sub, eps_hi, delta_hi, lo_keep,
                               osc_e_flip, osc_stop) -
               osc_e_flip(diag, eps_hi) -
               ctx.one_minus_q() * osc_e_flip(diag_low, eps_hi))
                  .truncated(eps_hi);
    }

    auto it = memo.find(key);
    if (it == memo.end() || it->second.first < eps_hi) memo[key] = {eps_hi, out};
    return out;
}

/// Full sector decomposition (adjustment plus channels), for cross-checks.
inline OscSeries z_osc(const QContext& ctx, const IndexedWord& w, int eps_hi,
                       int delta_hi, ZCache& cache, bool front) {
    return {z_osc_e(ctx, w, eps_hi, delta_hi, cache, front),
            z_osc_s(ctx, w, eps_hi, delta_hi, cache, front)};
}

} // namespace detail

/// Zero-frequency completion of the chosen route: the content the route's
/// asymptotic core misses because conjugate log-periodic sectors of its
/// internal products recombine with weight kappa. Adding the full correction
/// yields the route-independent completed series; adding half of it yields
/// the symmetric representative that satisfies the stuffle relations.
inline EpsSeries completion_correction(const QContext& ctx, const IndexedWord& w,
                                       int eps_hi, int delta_hi, ZCache& cache,
                                       bool front = true) {
    return detail::z_osc_e(ctx, w, eps_hi, delta_hi, cache, front);
}

/// Completed regularized series of an all-non-positive word (front
/// recursion): asymptotic core plus the zero-frequency recombination
/// correction. Agrees with z_nonpos_alt far below the first-harmonic scale.
inline EpsSeries z_nonpos(const QContext& ctx, const IndexedWord& w, int eps_hi,
                          int delta_hi, ZCache& cache) {
    EpsSeries core = detail::z_front_raw(ctx, w, eps_hi, delta_hi, cache);
    if (w.depth() <= 1) return core;
    return (core + completion_correction(ctx, w, eps_hi, delta_hi, cache, true))
        .truncated(eps_hi);
}

/// Completed regularized series through the independent back recursion.
inline EpsSeries z_nonpos_alt(const QContext& ctx, const IndexedWord& w, int eps_hi,
                              int delta_hi, ZCache& cache) {
    EpsSeries core = detail::z_back_raw(ctx, w, eps_hi, delta_hi, cache);
    if (w.depth() <= 1) return core;
    return (core + completion_correction(ctx, w, eps_hi, delta_hi, cache, false))
        .truncated(eps_hi);
}

/// Median representative: core plus half the completion. The completed
/// series and the core sit symmetrically around it with stuffle defects
/// +/- the same recombination term, so the median satisfies the q-stuffle
/// relations through first order in kappa.
inline EpsSeries z_nonpos_median(const QContext& ctx, const IndexedWord& w,
                                 int eps_hi, int delta_hi, ZCache& cache) {
    EpsSeries core = detail::z_front_raw(ctx, w, eps_hi, delta_hi, cache);
    if (w.depth() <= 1) return core;
    Real half = Real(1L, ctx.precision()) / Real(2L, ctx.precision());
    return (core +
            half * completion_correction(ctx, w, eps_hi, delta_hi, cache, true))
        .truncated(eps_hi);
}

struct ZNumericResult {
    Real value;
    Real tail_bound;
};

/// Direct summation of the defining nested series at numeric eps0 < 0,
/// delta0 >= 0, with a certified positive-term tail bound.
inline ZNumericResult z_numeric(const QContext& ctx, const IndexedWord& w,
                                const Real& eps0, const Real& delta0,
                                const Real& tail_tol) {
    const mpfr_prec_t prec = ctx.precision();
    Real one(1L, prec);
    if (!(eps0 < Real(0L, prec))) throw DomainError("z_numeric: eps0 must be < 0");
    if (delta0 < Real(0L, prec)) throw DomainError("z_numeric: delta0 must be >= 0");
    const long d = static_cast<long>(w.depth());
    if (d == 0) return {one, Real(0L, prec)};

    std::vector<Real> r;
    for (const auto& a : w.r)
        r.push_back(a.a.to_real(prec) + a.b.to_real(prec) * delta0);

    auto bracket = [&](long k) { return (one - ctx.q_pow(k)) / ctx.one_minus_q(); };
    auto g = [&](long j, long k) {
        Real br = bracket(k);
        return ctx.q_pow(k * (w.s[j] - 1)) * exp(eps0 * r[j] * br / ctx.q_pow(k)) /
               pow_si(br, w.s[j]);
    };
    // Certified one-step decay ratio for k -> k+1 (terms are positive).
    auto rho = [&](long j, long k) {
        Real base = ctx.q_pow(w.s[j] - 1);
        if (w.s[j] < 0) base *= pow_si(one + ctx.q(), -w.s[j]);
        return base * exp(eps0 * r[j] * ctx.q_pow(-(k + 1)));
    };

    for (long K = 64;; K *= 2) {
        if (K > (1L << 22)) throw DomainError("z_numeric: cutoff overflow");
        // Tail of the outermost index against full inner sums.
        bool ok = true;
        Real bound(0L, prec);
        {
            Real rh = rho(0, K + 1);
            if (!(rh < one)) { ok = false; }
            else {
                bound = g(0, K + 1) / (one - rh);
                for (long j = 1; j < d && ok; ++j) {
                    Real s(0L, prec);
                    for (long k = 1; k <= K; ++k) s += g(j, k);
                    Real rj = rho(j, K + 1);
                    if (!(rj < one)) { ok = false; break; }
                    bound *= s + g(j, K + 1) / (one - rj);
                }
            }
        }
        if (!ok || !(bound <= tail_tol)) continue;

        std::vector<Real> inner(static_cast<size_t>(K) + 1, one);
        for (long j = d - 1; j >= 1; --j) {
            std::vector<Real> next(static_cast<size_t>(K) + 1, Real(0L, prec));
            for (long k = 2; k <= K; ++k)
                next[k] = next[k - 1] + g(j, k - 1) * inner[k - 1];
            inner = std::move(next);
        }
        Real total(0L, prec);
        for (long k = 1; k <= K; ++k) total += g(0, k) * inner[k];
        return {total, bound};
    }
}

/// Constant term (as a polynomial in T with delta-series coefficients) of the
/// regularized series of an all-positive word. Words starting at >= 2 are
/// direction-independent convergent sums; leading 1-entries are peeled via
/// the stuffle identity with the depth-1 block X(c).
inline TPoly z_positive_const(const QContext& ctx, const IndexedWord& w, int delta_hi,
                              const Real& tol = Real(0L, 64), int guard = 0) {
    const mpfr_prec_t prec = ctx.precision();
    Real tol_eff = tol.is_zero() ? work_tolerance(prec) : tol;
    if (guard > 64)
        throw DomainError("z_positive_const: unsupported positive word class");
    if (w.empty()) return TPoly::from_scalar(Real(1L, prec));
    if (!w.all_positive())
        throw DomainError("z_positive_const: word must be all-positive");

    if (w.s[0] >= 2)
        return TPoly::from_scalar(zeta_q_convergent(ctx, w.s, tol_eff));

    const AffineR c = w.r[0];
    if (c.a.is_zero())
        throw DomainError(
            "z_positive_const: leading 1-entry has log-divergent direction");

    // X(c) = (q-1)/ln q (T - ln c) + M(q) + (1-q) gamma / ln q.
    Real one(1L, prec);
    Real qm1_over_lnq = (ctx.q() - one) / ctx.ln_q();
    TPoly xc = TPoly::t_power(DeltaSeries::scalar(qm1_over_lnq), 1);
    Real finite = detail::m_of_q_cached(ctx, tol_eff) +
                  ctx.one_minus_q() * euler_gamma(prec) / ctx.ln_q();
    xc = xc + TPoly::from_delta(DeltaSeries::scalar(finite) -
                                qm1_over_lnq * affine_log(c, delta_hi, prec));

    IndexedWord b = w.tail();
    WordSum terms = stuffle(IndexedWord({1}, {c}), b, ctx);
    TPoly lhs = xc * z_positive_const(ctx, b, delta_hi, tol_eff, guard + 1);
    long kappa = 0;
    TPoly acc(prec);
    for (const auto& t : terms.terms) {
        if (t.word == w) {
            ++kappa;
            continue;
        }
        acc = acc + t.coeff * z_positive_const(ctx, t.word, delta_hi, tol_eff,
                                               guard + 1);
    }
    if (kappa == 0)
        throw DomainError("z_positive_const: peeling identity degenerated");
    return (one / Real(kappa, prec)) * (lhs - acc);
}

} // namespace qzeta
