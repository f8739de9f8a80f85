#pragma once

#include "iep/errors.hpp"
#include "iep/real.hpp"

#include <algorithm>
#include <initializer_list>
#include <utility>
#include <vector>

namespace iep {

struct PrecisionConfig {
    long mantissa_bits = 128;
    Real bisection_rel_tol = pow2(-120);
    int escalation_factor = 2;
    int max_escalations = 3;

    //! Config at `bits` with the tightest admissible bisection tolerance.
    static PrecisionConfig with_bits(long bits, int factor = 2, int escalations = 3) {
        PrecisionConfig c;
        c.mantissa_bits = bits;
        c.bisection_rel_tol = pow2(-bits + 8);
        c.escalation_factor = factor;
        c.max_escalations = escalations;
        return c;
    }

    bool valid() const {
        return mantissa_bits >= 64 && escalation_factor >= 2 && max_escalations >= 0 &&
               bisection_rel_tol.sign() > 0 && bisection_rel_tol >= pow2(-mantissa_bits + 8);
    }

    // tolerance shrinks with the added bits so its relation to the mantissa is kept
    PrecisionConfig escalated() const {
        PrecisionConfig c = *this;
        c.mantissa_bits = mantissa_bits * escalation_factor;
        c.bisection_rel_tol = ldexp(bisection_rel_tol, -(c.mantissa_bits - mantissa_bits));
        return c;
    }
};

//! Monic real-rooted polynomial held by its strictly increasing roots.
class RootPoly {
public:
    RootPoly() = default;
    RootPoly(std::initializer_list<Real> r) : RootPoly(std::vector<Real>(r)) {}
    explicit RootPoly(std::vector<Real> r) : roots_(std::move(r)) {
        for (size_t i = 0; i < roots_.size(); ++i) {
            if (!roots_[i].is_finite()) throw std::invalid_argument("RootPoly: non-finite root");
            if (i && !(roots_[i - 1] < roots_[i])) throw std::invalid_argument("RootPoly: roots not strictly increasing");
        }
    }

    const std::vector<Real>& roots() const { return roots_; }
    size_t degree() const { return roots_.size(); }
    const Real& operator[](size_t i) const { return roots_[i]; }

private:
    std::vector<Real> roots_;
};

struct ScaledPair {
    Real mu;
    Real nu;
    bool valid() const { return mu.sign() * nu.sign() < 0; }
};

//! Product of (x - r) over a root list, any order, repeats allowed.
inline Real product_form(const std::vector<Real>& roots, const Real& scale, const Real& x) {
    Real r = scale;
    Real d;
    for (const Real& a : roots) {
        mpfr_sub(d.get(), x.get(), a.get(), MPFR_RNDN);
        mpfr_mul(r.get(), r.get(), d.get(), MPFR_RNDN);
    }
    return r;
}

inline int eval_sign(const RootPoly& p, const Real& scale, const Real& x) {
    int s = scale.sign();
    for (const Real& a : p.roots()) {
        int c = compare(x, a);
        if (c == 0) return 0;
        if (c < 0) s = -s;
    }
    return s;
}

// sign comes from root parity, so an underflowed magnitude still reports the right side
inline Real eval(const RootPoly& p, const Real& scale, const Real& x) {
    int s = eval_sign(p, scale, x);
    Real mag = abs(scale);
    Real d;
    for (const Real& a : p.roots()) {
        mpfr_sub(d.get(), x.get(), a.get(), MPFR_RNDN);
        mpfr_mul(mag.get(), mag.get(), d.get(), MPFR_RNDN);
    }
    mpfr_abs(mag.get(), mag.get(), MPFR_RNDN);
    if (s != 0 && mag.is_zero()) mpfr_set_ui_2exp(mag.get(), 1, mpfr_get_emin(), MPFR_RNDN);
    if (s < 0) mpfr_neg(mag.get(), mag.get(), MPFR_RNDN);
    if (s == 0) mpfr_set_zero(mag.get(), 1);
    return mag;
}

inline Real eval(const RootPoly& p, const Real& x) { return eval(p, Real(1), x); }

//! Bisection on a sign change of h over (lo, hi). Geometric midpoints while the bracket spans octaves.
template <class H>
Real root_in_bracket(H&& h, Real lo, Real hi, const PrecisionConfig& cfg) {
    if (!(lo < hi)) std::swap(lo, hi);
    int slo = sgn(h(lo));
    int shi = sgn(h(hi));
    if (slo * shi >= 0) throw BracketError("no sign change on [" + lo.to_string() + ", " + hi.to_string() + "]");
    Real mid;
    Real w;
    while (true) {
        if (lo.sign() > 0 && hi > ldexp(lo, 2)) mid = sqrt(lo * hi);
        else mid = ldexp(lo + hi, -1);
        w = cfg.bisection_rel_tol * max(Real(1), abs(mid));
        if (hi - lo <= w || mid <= lo || mid >= hi) return mid;
        int sm = sgn(h(mid));
        if (sm == 0) return mid;
        if (sm == slo) lo = mid;
        else hi = mid;
    }
}

//! True iff g's roots strictly alternate with f's, g leading: g1 < f1 < g2 < f2 < ...
inline bool interlaces(const RootPoly& g, const RootPoly& f) {
    if (g.degree() != f.degree()) throw DegreeMismatch("interlaces: degrees differ");
    for (size_t i = 0; i < f.degree(); ++i) {
        if (!(g[i] < f[i])) return false;
        if (i + 1 < f.degree() && !(f[i] < g[i + 1])) return false;
    }
    return true;
}

//! 0 < f1 < g1 < f2 < ... < g_{p-1} < f_p, i.e. lambda*G interlaces F.
inline bool lambda_g_interlaces(const RootPoly& f, const RootPoly& g) {
    if (f.degree() != g.degree() + 1) return false;
    std::vector<Real> lg;
    lg.reserve(f.degree());
    lg.emplace_back(0);
    for (const Real& b : g.roots()) lg.push_back(b);
    return interlaces(RootPoly(std::move(lg)), f);
}

}  // namespace iep
