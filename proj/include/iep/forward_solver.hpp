#pragma once

#include "iep/chain_model.hpp"
#include "iep/numerics.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace iep {

struct SturmSample {
    Real sigma;
    size_t count;
};

struct SpectrumReport {
    std::vector<Real> eigenvalues;
    std::vector<size_t> multiplicities;
    std::vector<Real> residuals;
    Real cluster_tol;
    std::vector<SturmSample> samples;  // bracketing counts, two per cluster
    std::vector<std::pair<Real, Real>> edges;  // lowest and highest member of each cluster
};

inline Real default_cluster_tol(const PrecisionConfig& cfg) { return pow2(-cfg.mantissa_bits / 3); }

//! (f_j, g_j) for j = 1..n at lambda.
inline std::vector<std::pair<Real, Real>> fg_sequence(const ChainSystem& c, const Real& lambda) {
    const size_t n = c.n();
    std::vector<std::pair<Real, Real>> out;
    out.reserve(n);
    Real g(1);
    Real f = c.k[0] - lambda * (c.m[0] + c.b[0]);
    out.emplace_back(f, g);
    for (size_t j = 1; j < n; ++j) {
        Real e = c.k[j] - lambda * c.b[j];
        Real g1 = f + e * g;
        Real f1 = -(lambda * c.m[j]) * g1 + e * f;
        f = std::move(f1);
        g = std::move(g1);
        out.emplace_back(f, g);
    }
    return out;
}

namespace detail {

// Pencil entries in the form the pivot recurrence reads them.
struct PreparedChain {
    size_t n = 0;
    std::vector<Real> dK, dMB, oK, oB;  // oK[j], oB[j] couple rows j-1 and j

    explicit PreparedChain(const ChainSystem& c) : n(c.n()) {
        for (size_t j = 0; j < n; ++j) {
            bool last = j + 1 == n;
            dK.push_back(last ? Real(c.k[j]).rounded() : c.k[j] + c.k[j + 1]);
            dMB.push_back(last ? c.m[j] + c.b[j] : c.m[j] + c.b[j] + c.b[j + 1]);
            oK.push_back(Real(c.k[j]).rounded());
            oB.push_back(Real(c.b[j]).rounded());
        }
    }
};

class SturmWorkspace {
public:
    SturmWorkspace() {
        for (auto* t : {&a_, &e_, &piv_}) mpfr_init2(*t, detail::working_prec_ref());
    }
    ~SturmWorkspace() {
        for (auto* t : {&a_, &e_, &piv_}) mpfr_clear(*t);
    }
    SturmWorkspace(const SturmWorkspace&) = delete;
    SturmWorkspace& operator=(const SturmWorkspace&) = delete;

    // Negative pivots of the leading `order` block of K - s(M+B); nullopt on an exact zero pivot.
    std::optional<size_t> count(const PreparedChain& p, const Real& s, size_t order) {
        size_t neg = 0;
        for (size_t j = 0; j < order; ++j) {
            mpfr_mul(a_, s.get(), p.dMB[j].get(), MPFR_RNDN);
            mpfr_sub(a_, p.dK[j].get(), a_, MPFR_RNDN);
            if (j > 0) {
                mpfr_mul(e_, s.get(), p.oB[j].get(), MPFR_RNDN);
                mpfr_sub(e_, p.oK[j].get(), e_, MPFR_RNDN);
                mpfr_sqr(e_, e_, MPFR_RNDN);
                mpfr_div(e_, e_, piv_, MPFR_RNDN);
                mpfr_sub(a_, a_, e_, MPFR_RNDN);
            }
            if (mpfr_zero_p(a_)) return std::nullopt;
            if (mpfr_sgn(a_) < 0) ++neg;
            mpfr_swap(piv_, a_);
        }
        return neg;
    }

private:
    mpfr_t a_, e_, piv_;
};

}  // namespace detail

inline SturmSample sturm_count(const ChainSystem& c, const Real& sigma) {
    detail::PreparedChain p(c);
    detail::SturmWorkspace ws;
    auto k = ws.count(p, sigma, c.n());
    if (!k) throw DegenerateSigma("zero leading minor at sigma = " + sigma.to_string());
    return {sigma, *k};
}

//! Gershgorin-type upper bound: 1 + max_j (row j of |K|) / ((M+B)_jj - off-diagonal row sum).
inline Real spectrum_upper_bound(const ChainSystem& c) {
    const size_t n = c.n();
    Real rowmax(0), mmin = c.m[0];
    // M+B is diagonally dominant with row margins exactly m_j, so lambda_min(M+B) >= min m_j
    for (size_t j = 0; j < n; ++j) {
        Real rowK = j + 1 == n ? Real(c.k[j]).rounded() : c.k[j] + ldexp(c.k[j + 1], 1);
        if (j > 0) rowK += c.k[j];
        rowmax = max(rowmax, rowK);
        mmin = min(mmin, c.m[j]);
    }
    return rowmax / mmin + 1;
}

//! Positive lower bound, halved: 1 / (trace(K^-1) * max row sum of |M+B|).
inline Real spectrum_lower_bound(const ChainSystem& c) {
    const size_t n = c.n();
    Real tr(0);
    for (size_t l = 0; l < n; ++l) tr += Real(long(n - l)) / c.k[l];
    Real rs(0);
    for (size_t j = 0; j < n; ++j) {
        bool last = j + 1 == n;
        Real r = c.m[j] + c.b[j];
        if (j > 0) r += c.b[j];
        if (!last) r += ldexp(c.b[j + 1], 1);
        rs = max(rs, r);
    }
    return ldexp(Real(1) / (tr * rs), -1);
}

namespace detail {

struct Cluster {
    Real lo, hi;
    size_t clo, chi;  // counts at lo and hi
};

struct Stalled {};

class SpectrumEngine {
public:
    SpectrumEngine(const ChainSystem& c, size_t order, const Real& cluster_tol, long bits)
        : p_(c), order_(order), tol_(cluster_tol), bits_(bits) {}

    size_t count(Real& s) {
        // a zero pivot means s sits on a minor's root; nudge and retry
        for (int attempt = 0; attempt < 8; ++attempt) {
            if (auto k = ws_.count(p_, s, order_)) return *k;
            s = s * (Real(1) + ldexp(Real(attempt % 2 ? -1 : 1), -bits_ / 2 + attempt));
        }
        throw DegenerateSigma("zero leading minor persists near " + s.to_string());
    }

    static Real split(const Real& lo, const Real& hi) {
        if (lo.sign() > 0 && hi > ldexp(lo, 1)) return sqrt(lo * hi);
        return ldexp(lo + hi, -1);
    }

    void isolate(Real lo, Real hi, size_t clo, size_t chi, std::vector<Cluster>& out) {
        if (clo == chi) return;
        if (hi - lo <= tol_ * hi) {
            out.push_back({std::move(lo), std::move(hi), clo, chi});
            return;
        }
        Real mid = split(lo, hi);
        if (mid <= lo || mid >= hi) throw Stalled{};
        size_t cm = count(mid);
        if (mid <= lo || mid >= hi || cm < clo || cm > chi) throw Stalled{};
        isolate(lo, mid, clo, cm, out);
        isolate(std::move(mid), std::move(hi), cm, chi, out);
    }

    // smallest point in [lo, hi] where the count exceeds `target`
    Real edge(Real lo, Real hi, size_t target, const Real& rel_tol) {
        while (true) {
            Real mid = split(lo, hi);
            if (hi - lo <= rel_tol * hi || mid <= lo || mid >= hi) return mid;
            Real probe = mid;
            size_t cm = count(probe);
            if (probe <= lo || probe >= hi) return mid;  // a nudge left the bracket: resolution is exhausted
            if (cm > target) hi = std::move(probe);
            else lo = std::move(probe);
        }
    }

private:
    PreparedChain p_;
    SturmWorkspace ws_;
    size_t order_;
    Real tol_;
    long bits_;
};

inline Real det_scale(const ChainSystem& c, const Real& lambda) {
    const size_t n = c.n();
    Real s(1);
    for (size_t j = 0; j < n; ++j) {
        bool last = j + 1 == n;
        Real r = c.k[j] + lambda * (c.m[j] + c.b[j]);
        if (!last) r += ldexp(c.k[j + 1] + lambda * c.b[j + 1], 1);
        if (j > 0) r += c.k[j] + lambda * c.b[j];
        s *= r;
    }
    return s;
}

inline SpectrumReport spectrum_at(const ChainSystem& c, size_t order, const PrecisionConfig& cfg,
                                  const Real& cluster_tol, bool refine) {
    SpectrumReport rep;
    rep.cluster_tol = cluster_tol;
    if (order == 0) return rep;
    SpectrumEngine eng(c, order, cluster_tol, cfg.mantissa_bits);
    Real lo = spectrum_lower_bound(c);
    Real hi = spectrum_upper_bound(c);
    size_t clo = eng.count(lo), chi = eng.count(hi);
    if (clo != 0 || chi != order) throw Stalled{};
    std::vector<Cluster> raw;
    eng.isolate(lo, hi, 0, order, raw);

    std::vector<Cluster> merged;
    for (auto& cl : raw) {
        if (!merged.empty() && cl.lo - merged.back().hi <= cluster_tol * cl.hi) {
            merged.back().hi = cl.hi;
            merged.back().chi = cl.chi;
        } else {
            merged.push_back(cl);
        }
    }

    for (auto& cl : merged) {
        Real ev;
        if (refine) {
            Real a = eng.edge(cl.lo, cl.hi, cl.clo, cfg.bisection_rel_tol);
            Real b = cl.chi - cl.clo == 1 ? a : eng.edge(cl.lo, cl.hi, cl.chi - 1, cfg.bisection_rel_tol);
            ev = ldexp(a + b, -1);
            rep.edges.emplace_back(std::move(a), std::move(b));
        } else {
            ev = ldexp(cl.lo + cl.hi, -1);
            rep.edges.emplace_back(cl.lo, cl.hi);
        }
        if (order == c.n()) {
            Real f = fg_sequence(c, ev).back().first;
            rep.residuals.push_back(abs(f) / det_scale(c, ev));
        }
        rep.eigenvalues.push_back(std::move(ev));
        rep.multiplicities.push_back(cl.chi - cl.clo);
        rep.samples.push_back({cl.lo, cl.clo});
        rep.samples.push_back({cl.hi, cl.chi});
    }
    return rep;
}

}  // namespace detail

//! Eigenvalues of the leading `order` block of the pencil (order n gives f_n's roots, n-1 gives g_n's).
inline SpectrumReport spectrum_of_block(const ChainSystem& c, size_t order, const PrecisionConfig& cfg,
                                        const Real& cluster_tol, bool refine = true) {
    require_valid(c);
    if (order > c.n()) throw DimensionError("block order exceeds n");
    PrecisionConfig cur = cfg;
    for (int e = 0;; ++e) {
        PrecisionScope scope(cur.mantissa_bits);
        try {
            return detail::spectrum_at(c, order, cur, cluster_tol, refine);
        } catch (const detail::Stalled&) {
            if (e >= cfg.max_escalations)
                throw PrecisionExhausted("spectrum localization stalled at " + std::to_string(cur.mantissa_bits) + " bits");
            cur = cur.escalated();
        }
    }
}

inline SpectrumReport spectrum(const ChainSystem& c, const PrecisionConfig& cfg, const Real& cluster_tol) {
    return spectrum_of_block(c, c.n(), cfg, cluster_tol, true);
}

inline SpectrumReport spectrum(const ChainSystem& c, const PrecisionConfig& cfg) {
    return spectrum(c, cfg, default_cluster_tol(cfg));
}

//! Cluster midpoints only; skips edge refinement.
inline SpectrumReport spectrum_clusters(const ChainSystem& c, const PrecisionConfig& cfg, const Real& cluster_tol) {
    return spectrum_of_block(c, c.n(), cfg, cluster_tol, false);
}

}  // namespace iep
