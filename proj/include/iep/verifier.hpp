#pragma once

#include "iep/chain_model.hpp"
#include "iep/forward_solver.hpp"
#include "iep/spectrum_plan.hpp"
#include "iep/synthesis.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace iep {

//! Taylor coefficients c_0..c_order of f_n about lambda0 (c_d = f_n^(d)(lambda0) / d!).
inline std::vector<Real> fn_taylor(const ChainSystem& c, const Real& lambda0, size_t order) {
    const size_t L = order + 1;
    std::vector<Real> f(L, Real(0)), g(L, Real(0)), g1(L), f1(L);
    f[0] = c.k[0] - lambda0 * (c.m[0] + c.b[0]);
    if (L > 1) f[1] = -(c.m[0] + c.b[0]);
    g[0] = Real(1);
    // multiply a series by the linear factor (u + v*delta)
    auto lin = [&](const std::vector<Real>& s, const Real& u, const Real& v) {
        std::vector<Real> r(L);
        for (size_t d = 0; d < L; ++d) {
            r[d] = u * s[d];
            if (d > 0) r[d] += v * s[d - 1];
        }
        return r;
    };
    for (size_t j = 1; j < c.n(); ++j) {
        Real eu = c.k[j] - lambda0 * c.b[j];
        Real ev = -c.b[j];
        Real au = -(lambda0 * c.m[j]);
        Real av = -c.m[j];
        auto eg = lin(g, eu, ev);
        for (size_t d = 0; d < L; ++d) g1[d] = f[d] + eg[d];
        auto ag = lin(g1, au, av);
        auto ef = lin(f, eu, ev);
        for (size_t d = 0; d < L; ++d) f1[d] = ag[d] + ef[d];
        std::swap(f, f1);
        std::swap(g, g1);
    }
    return f;
}

struct DivisibilityEntry {
    Real lambda;
    size_t t = 0;
    std::vector<Real> residuals;  // d = 0..t-1: |c_d| / (|c_t| lambda^(t-d))
    size_t sturm_jump = 0;
    bool ok = false;
};

struct VerificationReport {
    std::vector<DivisibilityEntry> divisibility;
    bool divisibility_ok = false;
    bool spectrum_match = false;
    std::vector<Real> eigen_errors;  // relative, per target eigenvalue (empty when counts differ)
    SpectrumReport detected;
    size_t gcd_degree = 0;
    bool gcd_degree_ok = false;
    bool pinned_masses_ok = false;
    Real threshold;
    Real cluster_tol;

    bool all_green() const { return divisibility_ok && spectrum_match && gcd_degree_ok && pinned_masses_ok; }
};

inline VerificationReport verify(const ChainSystem& c, const TargetSpectrum& s, const MultiplicityPlan& plan,
                                 const PrecisionConfig& cfg, std::optional<Real> cluster_tol = std::nullopt) {
    require_valid(c);
    require_well_formed(s);
    if (c.n() != s.n()) throw DimensionError("verify: chain and spectrum sizes differ");
    PrecisionScope scope(cfg.mantissa_bits);
    VerificationReport rep;
    rep.threshold = pow2(-cfg.mantissa_bits / 2);
    rep.cluster_tol = cluster_tol ? *cluster_tol : default_cluster_tol(cfg);
    const Real& tol = rep.cluster_tol;
    const size_t n = c.n();

    detail::SpectrumEngine fe(c, n, tol, cfg.mantissa_bits);
    rep.divisibility_ok = true;
    for (size_t i = 0; i < s.m(); ++i) {
        DivisibilityEntry d;
        d.lambda = s.lambdas[i];
        d.t = s.mults[i];
        auto co = fn_taylor(c, d.lambda, d.t);
        Real top = abs(co[d.t]);
        bool ok = !top.is_zero();
        for (size_t k = 0; k < d.t; ++k) {
            Real r = ok ? abs(co[k]) / (top * pow(d.lambda, static_cast<long>(d.t - k))) : Real(1);
            if (!(r < rep.threshold)) ok = false;
            d.residuals.push_back(std::move(r));
        }
        Real lo = d.lambda * (Real(1) - tol), hi = d.lambda * (Real(1) + tol);
        d.sturm_jump = fe.count(hi) - fe.count(lo);
        d.ok = ok && d.sturm_jump == d.t;
        rep.divisibility_ok = rep.divisibility_ok && d.ok;
        rep.divisibility.push_back(std::move(d));
    }

    rep.detected = spectrum(c, cfg, tol);
    rep.spectrum_match = rep.detected.eigenvalues.size() == s.m();
    if (rep.spectrum_match) {
        for (size_t i = 0; i < s.m(); ++i) {
            Real err = abs(rep.detected.eigenvalues[i] - s.lambdas[i]) / s.lambdas[i];
            if (rep.detected.multiplicities[i] != s.mults[i] || !(err <= tol)) rep.spectrum_match = false;
            rep.eigen_errors.push_back(std::move(err));
        }
    }

    // roots shared by f_n and g_n (the leading block of order n-1); by interlacing, a shared root of a
    // t-fold cluster lies between its lowest and highest member
    detail::SpectrumEngine ge(c, n - 1, tol, cfg.mantissa_bits);
    const Real eta = ldexp(cfg.bisection_rel_tol, 8);
    for (size_t i = 0; i < rep.detected.eigenvalues.size(); ++i) {
        Real lo = rep.detected.edges[i].first * (Real(1) - eta);
        Real hi = rep.detected.edges[i].second * (Real(1) + eta);
        size_t gj = n > 1 ? ge.count(hi) - ge.count(lo) : 0;
        rep.gcd_degree += std::min(gj, rep.detected.multiplicities[i]);
    }
    rep.gcd_degree_ok = rep.gcd_degree == n - s.m();

    rep.pinned_masses_ok = plan.pinned_indices.size() == s.m();
    for (size_t l = 0; l < plan.pinned_indices.size() && rep.pinned_masses_ok; ++l)
        rep.pinned_masses_ok = c.m[plan.pinned_indices[l] - 1] == plan.pinned_masses[l];
    return rep;
}

struct FiveDofBound {
    Real lhs, rhs;
    bool holds = false;
    Real margin;  // lhs / rhs
};

inline Real five_dof_rhs(const Real& l1, const Real& l2, const Real& l3) {
    return l1 / (Real(8) * l3) * (Real(1) - cbrt(l2 / l3));
}

inline FiveDofBound five_dof_bound(const ChainSystem& c, const std::vector<Real>& lambdas) {
    if (c.n() != 5) throw DimensionError("five_dof_bound: chain must have n = 5");
    if (lambdas.size() != 3) throw DimensionError("five_dof_bound: need three eigenvalues");
    FiveDofBound r;
    r.lhs = Real(0);
    for (size_t j = 2; j <= 4; ++j) r.lhs = max(r.lhs, c.m[j - 1] / c.m[j]);
    r.rhs = five_dof_rhs(lambdas[0], lambdas[1], lambdas[2]);
    r.holds = r.lhs > r.rhs;
    r.margin = r.lhs / r.rhs;
    return r;
}

struct FuzzCounterexample {
    ChainSystem chain;
    std::vector<size_t> multiplicities;
};

struct FuzzSummary {
    size_t trials = 0;
    size_t violations = 0;
    size_t chains_with_multiple = 0;  // trials where some detected cluster had size > 1
    std::vector<size_t> size_histogram;  // by n
    std::vector<FuzzCounterexample> counterexamples;
};

//! Random valid chain: parameters log-uniform on [1e-2, 1e2], each b_j zeroed with probability 1/2.
inline ChainSystem random_chain(std::mt19937_64& rng, size_t n) {
    std::uniform_real_distribution<double> ex(-2.0, 2.0);
    std::bernoulli_distribution zero(0.5);
    ChainSystem c;
    for (size_t j = 0; j < n; ++j) {
        c.m.emplace_back(std::pow(10.0, ex(rng)));
        c.k.emplace_back(std::pow(10.0, ex(rng)));
        double b = std::pow(10.0, ex(rng));
        c.b.emplace_back(zero(rng) ? 0.0 : b);
    }
    return c;
}

inline std::mt19937_64 trial_stream(uint64_t seed, uint64_t trial) {
    std::seed_seq sq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32), static_cast<uint32_t>(trial),
                     static_cast<uint32_t>(trial >> 32)};
    return std::mt19937_64(sq);
}

inline FuzzSummary necessity_fuzz(size_t num_trials, size_t n_max, uint64_t seed, const PrecisionConfig& cfg,
                                  std::optional<Real> cluster_tol = std::nullopt) {
    FuzzSummary sum;
    sum.size_histogram.assign(n_max + 1, 0);
    PrecisionScope scope(cfg.mantissa_bits);
    Real tol = cluster_tol ? *cluster_tol : default_cluster_tol(cfg);
    for (size_t t = 0; t < num_trials; ++t) {
        auto rng = trial_stream(seed, t);
        size_t n = std::uniform_int_distribution<size_t>(1, n_max)(rng);
        ChainSystem c = random_chain(rng, n);
        auto rep = spectrum_clusters(c, cfg, tol);
        ++sum.trials;
        ++sum.size_histogram[n];
        bool multi = false, bad = false;
        for (size_t i = 0; i < rep.multiplicities.size(); ++i) {
            if (rep.multiplicities[i] > 1) multi = true;
            if (rep.multiplicities[i] > i + 1) bad = true;
        }
        if (multi) ++sum.chains_with_multiple;
        if (bad) {
            ++sum.violations;
            sum.counterexamples.push_back({c, rep.multiplicities});
        }
    }
    return sum;
}


struct ReconstructionCheck {
    Real max_rel_error;
    Real threshold;
    size_t evaluations = 0;
    bool ok = false;
};

//! Compares the f_j/g_j recurrence on the assembled chain with (mu_j/nu_1) D_j F_j and (nu_j/nu_1) D_j G_j.
inline ReconstructionCheck reconstruction_identity(const SynthesisResult& res, size_t samples_per_level, uint64_t seed,
                                                   const PrecisionConfig& cfg) {
    PrecisionScope scope(cfg.mantissa_bits);
    const ChainSystem& c = res.chain;
    const size_t n = c.n();
    struct Level {
        const RootPoly* F;
        const RootPoly* G;
        const ScaledPair* pair;
        const std::vector<Real>* D;
    };
    std::vector<Level> lv(n + 1);
    lv[n] = {&res.top.F, &res.top.G, &res.top.pair, &res.D_top};
    for (auto& r : res.trace) lv[r.j] = {&r.F, &r.G, &r.pair, &r.D_factors};
    const Real& nu1 = lv[1].pair->nu;

    const Real& lo = res.top.F[0];
    const Real& hi = res.top.F[res.top.F.degree() - 1];
    double l0 = std::log(lo.to_double() / 2), l1 = std::log(hi.to_double() * 2);
    auto rng = trial_stream(seed, 0);
    std::uniform_real_distribution<double> u(l0, l1);

    ReconstructionCheck out;
    out.threshold = pow2(-cfg.mantissa_bits / 2);
    out.max_rel_error = Real(0);
    for (size_t s = 0; s < samples_per_level; ++s) {
        Real x(std::exp(u(rng)));
        auto fg = fg_sequence(c, x);
        for (size_t j = 1; j <= n; ++j) {
            const Level& L = lv[j];
            Real d = product_form(*L.D, Real(1), x);
            Real fp = L.pair->mu / nu1 * d * eval(*L.F, x);
            Real gp = L.pair->nu / nu1 * d * eval(*L.G, x);
            out.max_rel_error = max(out.max_rel_error, abs(fg[j - 1].first - fp) / abs(fp));
            out.max_rel_error = max(out.max_rel_error, abs(fg[j - 1].second - gp) / abs(gp));
            out.evaluations += 2;
        }
    }
    out.ok = out.max_rel_error < out.threshold;
    return out;
}

}  // namespace iep
