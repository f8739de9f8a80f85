#pragma once

// Exact rational oracle for the pencil determinant. Independent of the f/g recurrence:
// cofactor expansion of the assembled matrices, then Sturm-sequence root isolation over Q.

#include "iep/chain_model.hpp"
#include "iep/errors.hpp"
#include "iep/real.hpp"

#include <gmpxx.h>

#include <algorithm>
#include <map>
#include <utility>
#include <vector>

namespace iep::oracle {

using QPoly = std::vector<mpq_class>;  // ascending coefficients

inline mpq_class to_rational(const Real& x) {
    if (!x.is_finite()) throw std::invalid_argument("to_rational: non-finite value");
    if (x.is_zero()) return 0;
    mpz_class z;
    mpfr_exp_t e = mpfr_get_z_2exp(z.get_mpz_t(), x.get());
    mpq_class q(z);
    if (e > 0) mpq_mul_2exp(q.get_mpq_t(), q.get_mpq_t(), e);
    else if (e < 0) mpq_div_2exp(q.get_mpq_t(), q.get_mpq_t(), -e);
    return q;
}

inline Real to_real(const mpq_class& q) {
    Real r;
    mpfr_set_q(r.get(), q.get_mpq_t(), MPFR_RNDN);
    return r;
}

inline void trim(QPoly& p) {
    while (!p.empty() && p.back() == 0) p.pop_back();
}

inline int degree(const QPoly& p) { return static_cast<int>(p.size()) - 1; }

inline QPoly add(const QPoly& a, const QPoly& b) {
    QPoly r(std::max(a.size(), b.size()), 0);
    for (size_t i = 0; i < a.size(); ++i) r[i] += a[i];
    for (size_t i = 0; i < b.size(); ++i) r[i] += b[i];
    trim(r);
    return r;
}

inline QPoly scale(const QPoly& a, const mpq_class& s) {
    QPoly r = a;
    for (auto& c : r) c *= s;
    trim(r);
    return r;
}

inline QPoly mul(const QPoly& a, const QPoly& b) {
    if (a.empty() || b.empty()) return {};
    QPoly r(a.size() + b.size() - 1, 0);
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
    trim(r);
    return r;
}

inline QPoly derivative(const QPoly& a) {
    QPoly r;
    for (size_t i = 1; i < a.size(); ++i) r.push_back(a[i] * static_cast<long>(i));
    trim(r);
    return r;
}

inline mpq_class eval(const QPoly& p, const mpq_class& x) {
    mpq_class r = 0;
    for (size_t i = p.size(); i-- > 0;) r = r * x + p[i];
    return r;
}

//! Quotient and remainder of a / b, b non-zero.
inline std::pair<QPoly, QPoly> divmod(QPoly a, const QPoly& b) {
    trim(a);
    const int db = degree(b);
    if (db < 0) throw std::domain_error("polynomial division by zero");
    QPoly q(std::max(0, degree(a) - db + 1), 0);
    while (degree(a) >= db) {
        int s = degree(a) - db;
        mpq_class c = a.back() / b.back();
        q[s] = c;
        for (int i = 0; i <= db; ++i) a[s + i] -= c * b[i];
        a.pop_back();
        trim(a);
    }
    trim(q);
    return {q, a};
}

inline QPoly gcd(QPoly a, QPoly b) {
    trim(a);
    trim(b);
    while (!b.empty()) {
        QPoly r = divmod(a, b).second;
        a = std::move(b);
        b = std::move(r);
    }
    if (!a.empty()) a = scale(a, 1 / mpq_class(a.back()));
    return a;
}

//! Coefficients of det(K - lambda (M+B)) by cofactor expansion over exact rationals.
inline QPoly dense_charpoly(const ChainSystem& c, size_t size_limit = 8) {
    require_valid(c);
    const size_t n = c.n();
    if (n > size_limit) throw SizeLimit("dense_charpoly: n = " + std::to_string(n) + " exceeds limit " + std::to_string(size_limit));
    PencilMatrices P = assemble(c);
    // entry (i,j) as the linear polynomial K_ij - lambda (M+B)_ij
    std::vector<std::vector<QPoly>> A(n, std::vector<QPoly>(n));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j) {
            QPoly e{to_rational(P.K[i][j]), -(to_rational(P.M[i][j]) + to_rational(P.B[i][j]))};
            trim(e);
            A[i][j] = e;
        }
    // det of rows [row, n) restricted to the columns in mask
    std::map<unsigned, QPoly> memo;
    auto det = [&](auto&& self, size_t row, unsigned mask) -> QPoly {
        if (row == n) return QPoly{1};
        auto it = memo.find(mask);
        if (it != memo.end()) return it->second;
        QPoly acc;
        int sign = 1;
        for (size_t j = 0; j < n; ++j) {
            if (!(mask & (1u << j))) continue;
            if (!A[row][j].empty()) {
                QPoly term = mul(A[row][j], self(self, row + 1, mask & ~(1u << j)));
                acc = add(acc, sign > 0 ? term : scale(term, -1));
            }
            sign = -sign;
        }
        memo[mask] = acc;
        return acc;
    };
    return det(det, 0, (1u << n) - 1);
}

struct OracleRoot {
    mpq_class value;  // within the requested relative width of the true root
    size_t multiplicity;
};

namespace detail {

inline std::vector<QPoly> sturm_chain(const QPoly& p) {
    std::vector<QPoly> s{p, derivative(p)};
    while (!s.back().empty()) {
        QPoly r = divmod(s[s.size() - 2], s.back()).second;
        if (r.empty()) break;
        s.push_back(scale(r, -1));
    }
    return s;
}

inline int variations(const std::vector<QPoly>& s, const mpq_class& x) {
    int v = 0, last = 0;
    for (auto& p : s) {
        int sg = sgn(eval(p, x));
        if (sg == 0) continue;
        if (last != 0 && sg != last) ++v;
        last = sg;
    }
    return v;
}

}  // namespace detail

//! Real roots of p in (0, inf), each located to relative width rel_tol, with multiplicities.
inline std::vector<OracleRoot> positive_roots(const QPoly& p_in, const mpq_class& rel_tol) {
    QPoly p = p_in;
    trim(p);
    if (degree(p) < 1) return {};
    QPoly sq = divmod(p, gcd(p, derivative(p))).first;
    auto chain = detail::sturm_chain(sq);
    mpq_class bound = 1;
    for (size_t i = 0; i + 1 < sq.size(); ++i) {
        mpq_class r = abs(sq[i] / sq.back());
        if (r + 1 > bound) bound = r + 1;
    }
    // isolate: intervals (lo, hi] holding exactly one distinct root
    std::vector<std::pair<mpq_class, mpq_class>> work{{0, bound}}, iso;
    while (!work.empty()) {
        auto [lo, hi] = work.back();
        work.pop_back();
        int k = detail::variations(chain, lo) - detail::variations(chain, hi);
        if (k == 0) continue;
        if (k == 1) {
            iso.emplace_back(lo, hi);
            continue;
        }
        mpq_class mid = (lo + hi) / 2;
        work.emplace_back(mid, hi);
        work.emplace_back(lo, mid);
    }
    std::vector<OracleRoot> out;
    for (auto& [lo0, hi0] : iso) {
        mpq_class lo = lo0, hi = hi0;
        if (eval(sq, hi) == 0) {
            out.push_back({hi, 0});
        } else {
            // simple root of the square-free part: plain sign bisection
            int shi = sgn(eval(sq, hi));
            while (hi - lo > rel_tol * hi) {
                mpq_class mid = (lo + hi) / 2;
                int sm = sgn(eval(sq, mid));
                if (sm == 0) { lo = hi = mid; break; }
                if (sm == shi) hi = mid;
                else lo = mid;
            }
            out.push_back({(lo + hi) / 2, 0});
        }
    }
    std::sort(out.begin(), out.end(), [](auto& a, auto& b) { return a.value < b.value; });
    // multiplicities from the square-free factorisation p = prod s_k^k
    std::vector<std::pair<QPoly, size_t>> factors;  // (square-free polynomial, exponent)
    {
        QPoly a = p;
        QPoly b = gcd(a, derivative(a));
        QPoly cpoly = divmod(a, b).first;
        size_t k = 1;
        while (degree(cpoly) >= 1) {
            QPoly y = gcd(cpoly, b);
            QPoly z = divmod(cpoly, y).first;
            if (degree(z) >= 1) factors.emplace_back(z, k);
            b = divmod(b, y).first;
            cpoly = y;
            ++k;
        }
    }
    for (auto& r : out) {
        for (auto& [fac, k] : factors) {
            auto ch = detail::sturm_chain(fac);
            mpq_class w = rel_tol * r.value;
            mpq_class lo = r.value - w, hi = r.value + w;
            if (detail::variations(ch, lo) - detail::variations(ch, hi) > 0) {
                r.multiplicity = k;
                break;
            }
        }
    }
    return out;
}

}  // namespace iep::oracle
