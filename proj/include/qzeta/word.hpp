#pragma once

#include <string>
#include <vector>

#include "qzeta/constants.hpp"
#include "qzeta/delta_series.hpp"

namespace qzeta {

/// An indexed word [s; r]: integer exponents with matching direction entries.
/// Depth 0 is the unit of the stuffle algebra.
struct IndexedWord {
    std::vector<long> s;
    std::vector<AffineR> r;

    IndexedWord() = default;
    IndexedWord(std::vector<long> s_, std::vector<AffineR> r_)
        : s(std::move(s_)), r(std::move(r_)) {
        if (s.size() != r.size())
            throw DomainError("IndexedWord: |s| and |r| must agree");
    }

    size_t depth() const { return s.size(); }
    bool empty() const { return s.empty(); }
    bool all_nonpositive() const {
        for (long v : s)
            if (v > 0) return false;
        return true;
    }
    bool all_positive() const {
        for (long v : s)
            if (v <= 0) return false;
        return true;
    }

    bool operator==(const IndexedWord&) const = default;
    auto operator<=>(const IndexedWord&) const = default;

    IndexedWord tail() const {
        return IndexedWord({s.begin() + 1, s.end()}, {r.begin() + 1, r.end()});
    }
    IndexedWord head_dropped_back() const {
        return IndexedWord({s.begin(), s.end() - 1}, {r.begin(), r.end() - 1});
    }
    IndexedWord prepended(long s0, const AffineR& r0) const {
        IndexedWord w;
        w.s.reserve(s.size() + 1);
        w.r.reserve(r.size() + 1);
        w.s.push_back(s0);
        w.r.push_back(r0);
        w.s.insert(w.s.end(), s.begin(), s.end());
        w.r.insert(w.r.end(), r.begin(), r.end());
        return w;
    }

    std::string str() const {
        std::string out = "[";
        for (size_t i = 0; i < s.size(); ++i) {
            if (i) out += ",";
            out += std::to_string(s[i]);
        }
        out += ";";
        for (size_t i = 0; i < r.size(); ++i) {
            if (i) out += ",";
            out += r[i].str();
        }
        return out + "]";
    }
};

/// Linear combination of indexed words with per-term stuffing positions
/// (1-bits mark entries created by the weight-(1-q) pairing correction).
struct WordTerm {
    Real coeff;
    IndexedWord word;
    std::vector<int> stuffing;
};

struct WordSum {
    std::vector<WordTerm> terms;

    void add(const Real& c, IndexedWord w, std::vector<int> f) {
        if (w.depth() != f.size())
            throw DomainError("WordSum: stuffing length mismatch");
        terms.push_back({c, std::move(w), std::move(f)});
    }
};

/// The bilinear pairing of single entries:
///   <(s,r),(s',r')> = [s+s'; r+r'] + (1-q) [s+s'-1; r+r'].
inline WordSum pair(long s1, const AffineR& r1, long s2, const AffineR& r2,
                    const QContext& ctx) {
    WordSum out;
    AffineR rm = r1 + r2;
    out.add(Real(1L, ctx.precision()), IndexedWord({s1 + s2}, {rm}), {0});
    out.add(ctx.one_minus_q(), IndexedWord({s1 + s2 - 1}, {rm}), {1});
    return out;
}

/// Recursive q-stuffle product with stuffing-position propagation:
///   a *q b = (a1, a' *q b) + (b1, a *q b') + (<a1,b1>, a' *q b').
inline WordSum stuffle(const IndexedWord& a, const IndexedWord& b, const QContext& ctx) {
    WordSum out;
    if (a.empty()) {
        out.add(Real(1L, ctx.precision()), b, std::vector<int>(b.depth(), 0));
        return out;
    }
    if (b.empty()) {
        out.add(Real(1L, ctx.precision()), a, std::vector<int>(a.depth(), 0));
        return out;
    }
    auto prepend_all = [&](const WordSum& rest, long s0, const AffineR& r0, int f0,
                           const Real& scale) {
        for (const auto& t : rest.terms) {
            std::vector<int> f;
            f.reserve(t.stuffing.size() + 1);
            f.push_back(f0);
            f.insert(f.end(), t.stuffing.begin(), t.stuffing.end());
            out.add(scale * t.coeff, t.word.prepended(s0, r0), std::move(f));
        }
    };
    Real one(1L, ctx.precision());
    prepend_all(stuffle(a.tail(), b, ctx), a.s[0], a.r[0], 0, one);
    prepend_all(stuffle(a, b.tail(), ctx), b.s[0], b.r[0], 0, one);
    WordSum rest = stuffle(a.tail(), b.tail(), ctx);
    AffineR rm = a.r[0] + b.r[0];
    prepend_all(rest, a.s[0] + b.s[0], rm, 0, one);
    prepend_all(rest, a.s[0] + b.s[0] - 1, rm, 1, ctx.one_minus_q());
    return out;
}

/// n-fold shifting operator applied at position j (1-based):
///   sum_{k=0}^{n} C(n,k) (1-q)^k (word with s_j - k).
inline WordSum shift_expand(const IndexedWord& w, size_t j, long n, const QContext& ctx) {
    if (j < 1 || j > w.depth())
        throw InvalidShift("shift_expand: position out of range");
    if (n < 0) throw InvalidShift("shift_expand: negative iteration count");
    WordSum out;
    const mpfr_prec_t prec = ctx.precision();
    Real pw(1L, prec);
    for (long k = 0; k <= n; ++k) {
        IndexedWord v = w;
        v.s[j - 1] -= k;
        out.add(binomial(n, k, prec) * pw, std::move(v),
                std::vector<int>(w.depth(), 0));
        pw *= ctx.one_minus_q();
    }
    return out;
}

/// All 2^{d-1} increasing sequences 0 < i_1 < ... < i_p = d (the i_0 = 0 is
/// implicit), encoding the ordered set partitions into consecutive blocks.
inline std::vector<std::vector<size_t>> partitions(size_t d) {
    if (d < 1) throw DomainError("partitions: d must be >= 1");
    std::vector<std::vector<size_t>> out;
    for (size_t mask = 0; mask < (size_t{1} << (d - 1)); ++mask) {
        std::vector<size_t> seq;
        for (size_t i = 1; i < d; ++i)
            if (mask & (size_t{1} << (i - 1))) seq.push_back(i);
        seq.push_back(d);
        out.push_back(std::move(seq));
    }
    return out;
}

} // namespace qzeta
