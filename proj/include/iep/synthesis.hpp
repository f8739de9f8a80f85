#pragma once

#include "iep/chain_model.hpp"
#include "iep/forward_solver.hpp"
#include "iep/numerics.hpp"
#include "iep/spectrum_plan.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace iep {

enum class Mode { faithful, adaptive };

inline const char* to_string(Mode m) { return m == Mode::faithful ? "faithful" : "adaptive"; }

struct ProofConstants {
    Real Delta, Lambda, epsilon;
    std::vector<Real> rho;  // rho[i-1] = rho_i, i = 1..m-1
    Real C1;
    std::vector<Real> C2;  // C2[j-1] = C_2(j), j = 1..m-1
    Real C;
    long required_bits = 0;
    double log2_epsilon = 0, log2_rho1 = 0, log2_C = 0;
};

struct InequalityCheck {
    bool eps_lt_one = false, lambda_over_delta = false, C_gt_one = false;
    bool family1 = false, family2 = false, family3 = false;
    bool all() const { return eps_lt_one && lambda_over_delta && C_gt_one && family1 && family2 && family3; }
};

inline Real spectral_gap_delta(const TargetSpectrum& s) {
    Real d(1);
    for (size_t i = 0; i + 1 < s.m(); ++i) d = min(d, s.lambdas[i + 1] - s.lambdas[i]);
    return ldexp(d, -1);
}

constexpr long kFaithfulBitCap = 1L << 16;
constexpr double kExponentLimit = 1.0e9;  // stays inside MPFR's default exponent range

//! Bit budget for faithful mode, from log2 bookkeeping only.
inline ProofConstants constant_exponents(const TargetSpectrum& s) {
    const double n = static_cast<double>(s.n());
    const double m = static_cast<double>(s.m());
    ProofConstants pc;
    double lD = log2(spectral_gap_delta(s)).to_double();
    double lL = log2(Real(1) + s.lambdas.back()).to_double();
    double le = (n * n + n + 1) * lD - std::log2(n) - 3 * std::pow(n + 1, 3) - std::pow(n + 1, 2) * lL;
    double lr1 = std::pow(n + 1, m - 1) * le;
    double lC1 = lD - (n + 1) - lL;
    double lC = (2 * n + 1) + std::max(n * lL, 0.0) + 1 - 2 * n * n * lC1 - 2 * n * lr1;
    pc.log2_epsilon = le;
    pc.log2_rho1 = lr1;
    pc.log2_C = lC;
    double need = 1.25 * (-(n * lC1 + lr1)) + lL + 256;
    pc.required_bits = (static_cast<long>(std::ceil(need)) + 63) / 64 * 64;
    if (!(std::fabs(lr1) < kExponentLimit && std::fabs(lC) < kExponentLimit))
        throw OverflowError("proof constants exceed the exponent range", static_cast<long>(std::min(need, 9.0e18)));
    return pc;
}

//! Constants of the sufficiency proof, evaluated at the working precision.
inline ProofConstants constants(const TargetSpectrum& s) {
    if (s.m() < 2) throw ValidationError("proof constants need at least two distinct eigenvalues");
    ProofConstants pc = constant_exponents(s);
    const long n = static_cast<long>(s.n());
    const long m = static_cast<long>(s.m());
    pc.Delta = spectral_gap_delta(s);
    pc.Lambda = Real(1) + s.lambdas.back();
    pc.epsilon = pow(pc.Delta, n * n + n + 1) / (Real(n) * pow2(3 * (n + 1) * (n + 1) * (n + 1)) * pow(pc.Lambda, (n + 1) * (n + 1)));
    auto ipow = [](long b, long e) {
        long r = 1;
        while (e-- > 0) r *= b;
        return r;
    };
    for (long i = 1; i <= m - 1; ++i) pc.rho.push_back(pow(pc.epsilon, ipow(n + 1, m - i)));
    pc.C1 = pc.Delta / (pow2(n + 1) * pc.Lambda);
    for (long j = 1; j <= m - 1; ++j)
        pc.C2.push_back(pow2(2 * (n + 1) * (n + 1)) * pow(pc.Lambda, n + 1) /
                        (pow(pc.Delta, n) * pow(pc.epsilon, ipow(n + 1, m - j - 1))));
    pc.C = pow2(2 * n + 1) * (Real(1) + pow(pc.Lambda, n)) / (pow(pc.C1, 2 * n * n) * pow(pc.rho[0], 2 * n));
    return pc;
}

inline InequalityCheck check_inequalities(const ProofConstants& pc, size_t n_, size_t m_) {
    const long n = static_cast<long>(n_);
    const long m = static_cast<long>(m_);
    InequalityCheck r;
    r.eps_lt_one = pc.epsilon < Real(1);
    r.lambda_over_delta = pc.Lambda / pc.Delta >= Real(2);
    r.C_gt_one = pc.C > Real(1);
    auto bound = [&](long j) { return pow(Real(1) + pc.C2[j - 1], n) * pc.rho[j - 1]; };  // (1+C_2(j))^n rho_j
    r.family1 = bound(m - 1) < ldexp(pc.Delta, -1);
    r.family2 = true;
    for (long j = 1; j <= m - 2; ++j) r.family2 = r.family2 && bound(j) < bound(j + 1);
    r.family3 = true;
    Real kappa = pow(pc.Delta, n) / (pow2((n + 1) * (n + 1)) * pow(pc.Lambda, n + 1));
    for (long j = 2; j <= m - 2; ++j)
        r.family3 = r.family3 && Real(n) * bound(j - 1) / pc.Delta < ldexp(kappa * pc.rho[j], -2);
    return r;
}

//! Right-hand side of the Lemma 7 bound on -mu_j/nu_j.
inline Real lemma7_bound(const ProofConstants& pc, const TargetSpectrum& s, const Real& M_total, size_t j) {
    const Real& l1 = s.lambdas.front();
    return pc.C * pow(pc.Lambda / l1, static_cast<long>(j)) * pc.Lambda * M_total / (pc.Lambda - l1);
}

struct TopLevel {
    RootPoly F, G;
    ScaledPair pair;
};

inline TopLevel init_top(const TargetSpectrum& s, const std::vector<Real>& rho, const Real& mu_n) {
    TopLevel t;
    t.F = RootPoly(s.lambdas);
    std::vector<Real> g;
    for (size_t i = 0; i + 1 < s.m(); ++i) g.push_back(s.lambdas[i] + rho[i]);
    t.G = RootPoly(std::move(g));
    t.pair = {mu_n, Real(-1)};
    return t;
}

inline TopLevel init_top(const TargetSpectrum& s, const MultiplicityPlan& plan, const ProofConstants& pc) {
    return init_top(s, pc.rho, ldexp(lemma7_bound(pc, s, plan.M_total, s.n()), 1));
}

struct StepOutcome {
    RootPoly F0, G0;
    ScaledPair pair0;
    Real lambda_star, b_star, m_star;
    std::optional<Real> tau;
    bool last_bracket_widened = false;
};

namespace detail {

// mu F(x) + m nu x G(x)
struct Combo {
    const RootPoly& F;
    const RootPoly& G;
    Real a, c;
    Real operator()(const Real& x) const { return a * product_form(F.roots(), Real(1), x) + c * x * product_form(G.roots(), Real(1), x); }
};

// nu G(x) - mu0 Ft(x)
struct Blend {
    const RootPoly& G;
    const std::vector<Real>& Ft;
    Real nu, mu0;
    Real operator()(const Real& x) const { return nu * product_form(G.roots(), Real(1), x) - mu0 * product_form(Ft, Real(1), x); }
};

}  // namespace detail

//! Strategy A: m_{j+1} is pinned, lambda* is solved for.
inline StepOutcome step_A(const RootPoly& F, const RootPoly& G, const ScaledPair& pr, const Real& m_next,
                          const PrecisionConfig& cfg) {
    const size_t p = F.degree();
    if (p < 2 || G.degree() + 1 != p) throw DegreeMismatch("step_A: need deg F = deg G + 1 >= 2");
    if (!(-(pr.mu / pr.nu) > m_next)) throw NonPositiveParameter("step_A: -mu/nu does not exceed the pinned mass");
    StepOutcome o;
    o.m_star = m_next;
    detail::Combo H{F, G, pr.mu, m_next * pr.nu};

    const Real& ap = F[p - 1];
    Real w = ap - F[0] + 1;
    Real hi = ap + w;
    const int s_lo = sgn(H(ap));
    for (int k = 0; sgn(H(hi)) == s_lo; ++k) {
        if (k > 4096) throw BracketError("step_A: no sign change above the largest root");
        w = ldexp(w, 1);
        hi = ap + w;
    }
    o.lambda_star = root_in_bracket(H, ap, hi, cfg);
    if (!(o.lambda_star > ap)) throw NonPositiveParameter("step_A: lambda* not above alpha_p");

    std::vector<Real> a0;
    for (size_t i = 0; i + 1 < p; ++i) a0.push_back(root_in_bracket(H, F[i], G[i], cfg));
    o.F0 = RootPoly(std::move(a0));

    Real F0s = eval(o.F0, o.lambda_star);
    Real Gs = eval(G, o.lambda_star);
    o.b_star = -(pr.mu + m_next * pr.nu) / pr.nu * F0s / Gs;
    Real mu0 = pr.nu * Gs / F0s;
    if (o.b_star.sign() <= 0) throw NonPositiveParameter("step_A: b* <= 0");

    detail::Blend K{G, o.F0.roots(), pr.nu, mu0};
    std::vector<Real> b0;
    for (size_t i = 0; i + 2 < p; ++i) b0.push_back(root_in_bracket(K, G[i], o.F0[i + 1], cfg));
    o.G0 = RootPoly(std::move(b0));
    o.pair0 = {mu0, (mu0 - pr.nu) / o.b_star};
    return o;
}

inline Real strategy_b_tau(const RootPoly& F, const RootPoly& G, const std::vector<Real>& a0) {
    const size_t p = F.degree();
    if (p == 1) return ldexp(Real(1), -1);
    if (p == 2) {
        Real eta2 = min(G[0] - F[0], ldexp(Real(1), -1));
        return ldexp(min(eta2 / (G[0] - a0[0]), Real(1)), -2);
    }
    Real gb = G[1] - G[0];
    for (size_t l = 1; l + 2 < p; ++l) gb = min(gb, G[l + 1] - G[l]);
    Real eta1 = G[0] - F[0];
    for (size_t l = 1; l + 1 < p; ++l) eta1 = min(eta1, G[l] - F[l]);
    eta1 = min(ldexp(gb, -2), eta1);
    Real mx(0);
    for (size_t j = 0; j + 1 < p; ++j) mx = max(mx, abs(product_form(a0, Real(1), G[j])));
    const long e = static_cast<long>(p) - 1;
    return ldexp(min(Real(1), pow(gb - eta1, e)) * min(Real(1), pow(eta1, e)) / (Real(2) + ldexp(mx, 1)), -1);
}

//! Strategy B: lambda* is a scheduled eigenvalue and becomes an exact root of F_0.
inline StepOutcome step_B(const RootPoly& F, const RootPoly& G, const ScaledPair& pr, const Real& lambda_star,
                          const PrecisionConfig& cfg, const Real& widen = Real(1)) {
    const size_t p = F.degree();
    if (p < 1 || G.degree() + 1 != p) throw DegreeMismatch("step_B: need deg F = deg G + 1 >= 1");
    if (!(lambda_star > F[p - 1])) throw NonPositiveParameter("step_B: lambda* not above alpha_p");
    if (!((pr.mu / pr.nu).sign() < 0)) throw NonPositiveParameter("step_B: mu/nu must be negative");
    StepOutcome o;
    o.lambda_star = lambda_star;
    o.m_star = -(pr.mu / pr.nu) * eval(F, lambda_star) / (lambda_star * eval(G, lambda_star));
    if (o.m_star.sign() <= 0) throw NonPositiveParameter("step_B: m* <= 0");

    detail::Combo H{F, G, pr.mu, o.m_star * pr.nu};
    std::vector<Real> a0;
    for (size_t i = 0; i + 1 < p; ++i) a0.push_back(root_in_bracket(H, F[i], G[i], cfg));
    const std::vector<Real> Ft = a0;
    a0.push_back(lambda_star);
    o.F0 = RootPoly(std::move(a0));

    Real tau = strategy_b_tau(F, G, Ft);
    o.tau = tau;
    Real mu0 = tau * pr.nu;
    o.b_star = -(pr.mu + o.m_star * pr.nu) / mu0;
    if (o.b_star.sign() <= 0) throw NonPositiveParameter("step_B: b* <= 0");

    detail::Blend K{G, Ft, pr.nu, mu0};
    std::vector<Real> b0;
    for (size_t i = 0; i + 1 < p; ++i) {
        if (i + 2 < p) {
            b0.push_back(root_in_bracket(K, G[i], o.F0[i + 1], cfg));
            continue;
        }
        try {
            b0.push_back(root_in_bracket(K, G[i], lambda_star, cfg));
        } catch (const BracketError&) {
            b0.push_back(root_in_bracket(K, G[i], lambda_star + widen, cfg));
            o.last_bracket_widened = true;
        }
    }
    o.G0 = RootPoly(std::move(b0));
    o.pair0 = {mu0, (mu0 - pr.nu) / o.b_star};
    return o;
}

struct StepRecord {
    size_t j = 0;  // level of the produced (F, G, pair); chain index j+1 gets (lambda*, b, m)
    Strategy::Kind strategy = Strategy::A;
    Real lambda_star, b_next, m_next;
    ScaledPair pair;
    RootPoly F, G;
    std::vector<Real> D_factors;  // roots of D_j with multiplicity
    Real m_star, b_star, mu0, nu0;
    std::optional<Real> tau;
    bool last_bracket_widened = false;
    bool interlacing_ok = false;
    bool containment_ok = true;  // adaptive: beta_j(i) < lambda_{i+1}; faithful: proof window
    std::optional<bool> lemma7_ok;  // faithful only
};

struct SynthesisResult {
    ChainSystem chain;
    std::vector<StepRecord> trace;  // j = n-1 down to 1
    Mode mode = Mode::adaptive;
    long precision_used = 0;
    TopLevel top;
    std::vector<Real> D_top;  // roots of D_n
    std::optional<ProofConstants> proof_constants;
    std::optional<InequalityCheck> inequalities;
    int shrinks = 0;      // adaptive rho halvings
    int ratio_boosts = 0;  // adaptive mu_n increases
    int escalations = 0;
};

struct SynthesisOptions {
    int max_retries = 40;
    bool verify_round_trip = true;
};

namespace detail {

struct RetryRequest {
    bool boost_ratio;
    std::string why;
};

inline Real exact_product(const Real& a, const Real& b) {
    Real r;
    mpfr_set_prec(r.get(), a.precision() + b.precision());
    mpfr_mul(r.get(), a.get(), b.get(), MPFR_RNDN);
    return r;
}

inline bool quick_round_trip(const ChainSystem& c, const TargetSpectrum& s, const PrecisionConfig& cfg) {
    Real tol = default_cluster_tol(cfg);
    SpectrumEngine eng(c, c.n(), tol, cfg.mantissa_bits);
    size_t below = 0;
    for (size_t i = 0; i < s.m(); ++i) {
        Real lo = s.lambdas[i] * (Real(1) - tol);
        Real hi = s.lambdas[i] * (Real(1) + tol);
        size_t a = eng.count(lo), b = eng.count(hi);
        if (a != below || b - a != s.mults[i]) return false;
        below = b;
    }
    return below == c.n();
}

inline SynthesisResult run_once(const TargetSpectrum& s, const MultiplicityPlan& plan, Mode mode,
                                const TopLevel& top, const std::optional<ProofConstants>& pc,
                                const PrecisionConfig& cfg) {
    const size_t n = plan.n;
    SynthesisResult res;
    res.mode = mode;
    res.top = top;
    res.precision_used = cfg.mantissa_bits;
    const Real Delta = spectral_gap_delta(s);

    RootPoly F = top.F, G = top.G;
    ScaledPair pr = top.pair;
    std::vector<Real> lam_star(n + 1), b(n + 1), mm(n + 1);
    for (size_t j = n - 1; j >= 1; --j) {
        Strategy st = strategy_for(plan, j);
        StepOutcome o = st.kind == Strategy::A
                            ? step_A(F, G, pr, plan.pinned_masses[st.pinned_slot], cfg)
                            : step_B(F, G, pr, s.lambdas[st.lambda_index], cfg, Delta);
        StepRecord r;
        r.j = j;
        r.strategy = st.kind;
        r.lambda_star = o.lambda_star;
        r.b_next = o.b_star;
        r.m_next = o.m_star;
        r.pair = o.pair0;
        r.F = o.F0;
        r.G = o.G0;
        r.m_star = o.m_star;
        r.b_star = o.b_star;
        r.mu0 = o.pair0.mu;
        r.nu0 = o.pair0.nu;
        r.tau = o.tau;
        r.last_bracket_widened = o.last_bracket_widened;
        r.interlacing_ok = lambda_g_interlaces(r.F, r.G) && r.pair.valid();
        for (size_t i = 0; i < r.G.degree(); ++i) {
            if (mode == Mode::adaptive) {
                if (i + 1 < s.m() && !(r.G[i] < s.lambdas[i + 1])) r.containment_ok = false;
            } else {
                const long nn = static_cast<long>(n);
                Real lo = s.lambdas[i] + pow(pc->C1, nn) * pc->rho[i];
                Real hi = s.lambdas[i] + pow(Real(1) + pc->C2[i], nn) * pc->rho[i];
                if (!(lo < r.G[i] && r.G[i] < hi)) r.containment_ok = false;
            }
        }
        if (mode == Mode::faithful) r.lemma7_ok = -(r.pair.mu / r.pair.nu) > lemma7_bound(*pc, s, plan.M_total, j);
        if (mode == Mode::adaptive && !(r.interlacing_ok && r.containment_ok))
            throw RetryRequest{false, "interlacing lost at level " + std::to_string(j)};

        lam_star[j + 1] = o.lambda_star;
        b[j + 1] = o.b_star;
        mm[j + 1] = o.m_star;
        F = o.F0;
        G = o.G0;
        pr = o.pair0;
        res.trace.push_back(std::move(r));
    }
    if (F.degree() != 1 || G.degree() != 0) throw Error("synthesis: recursion ended with wrong degrees");

    // D ledger, built upward from D_1 = 1
    std::vector<Real> D;
    for (auto it = res.trace.rbegin(); it != res.trace.rend(); ++it) {
        it->D_factors = D;
        if (it->strategy == Strategy::B) D.push_back(it->lambda_star);
    }
    res.D_top = D;

    ChainSystem& c = res.chain;
    c.m.resize(n);
    c.k.resize(n);
    c.b.resize(n);
    Real ratio = -(pr.mu / pr.nu);
    c.m[0] = plan.pinned_masses[0];
    c.b[0] = ratio - plan.pinned_masses[0];
    c.k[0] = F[0] * ratio;
    if (c.b[0].sign() <= 0) throw NonPositiveParameter("assembly: b_1 <= 0");
    for (size_t i = 2; i <= n; ++i) {
        c.m[i - 1] = mm[i];
        c.b[i - 1] = b[i];
        c.k[i - 1] = exact_product(lam_star[i], b[i]);
    }
    require_valid(c);
    return res;
}

}  // namespace detail

inline Real adaptive_rho(const Real& Delta, size_t m, size_t i) {
    return Delta * pow(Real(10), -2 * static_cast<long>(m - i) - 2);
}

inline SynthesisResult synthesize(const TargetSpectrum& s, const MultiplicityPlan& plan, Mode mode,
                                  const PrecisionConfig& cfg, const SynthesisOptions& opt = {}) {
    require_well_formed(s);
    if (!feasible(s)) throw InfeasibleSpectrum("spectrum violates t_i <= i");
    if (plan.n != s.n() || plan.m != s.m()) throw DimensionError("plan does not match spectrum");
    const size_t n = s.n(), m = s.m();

    PrecisionConfig cur = cfg;
    std::optional<ProofConstants> shape;
    if (mode == Mode::faithful) {
        if (n > 4) throw ValidationError("faithful mode is limited to n <= 4");
        if (m < 2) throw ValidationError("faithful mode needs at least two distinct eigenvalues");
        shape = constant_exponents(s);
        if (shape->required_bits > kFaithfulBitCap) throw OverflowError("faithful bit budget too large", shape->required_bits);
        if (cur.mantissa_bits < shape->required_bits) {
            long extra = shape->required_bits - cur.mantissa_bits;
            cur.mantissa_bits = shape->required_bits;
            cur.bisection_rel_tol = ldexp(cur.bisection_rel_tol, -extra);
        }
    }

    std::string last_failure;
    for (int e = 0; e <= cfg.max_escalations; ++e, cur = cur.escalated()) {
        PrecisionScope scope(cur.mantissa_bits);
        if (n == 1) {
            // single mass: the spectrum {lambda_1} only fixes k_1 / (m_1 + b_1)
            SynthesisResult r;
            r.mode = mode;
            r.precision_used = cur.mantissa_bits;
            Real ratio = Real(1000) * plan.M_total;
            r.top = init_top(s, {}, ratio);
            r.chain.m = {plan.pinned_masses[0]};
            r.chain.b = {ratio - plan.pinned_masses[0]};
            r.chain.k = {s.lambdas[0] * ratio};
            return r;
        }
        try {
            if (mode == Mode::faithful) {
                ProofConstants pc = constants(s);
                pc.required_bits = shape->required_bits;
                InequalityCheck ineq = check_inequalities(pc, n, m);
                SynthesisResult r = detail::run_once(s, plan, mode, init_top(s, plan, pc), pc, cur);
                if (opt.verify_round_trip && !detail::quick_round_trip(r.chain, s, cur)) {
                    last_failure = "round trip failed";
                    continue;
                }
                r.proof_constants = std::move(pc);
                r.inequalities = ineq;
                r.escalations = e;
                return r;
            }
            const Real Delta = spectral_gap_delta(s);
            std::vector<Real> rho;
            for (size_t i = 1; i < m; ++i) rho.push_back(adaptive_rho(Delta, m, i));
            Real ratio = Real(1000) * plan.M_total;
            int shrinks = 0, boosts = 0;
            for (int attempt = 0; attempt <= opt.max_retries; ++attempt) {
                try {
                    SynthesisResult r = detail::run_once(s, plan, mode, init_top(s, rho, ratio), std::nullopt, cur);
                    if (!opt.verify_round_trip || detail::quick_round_trip(r.chain, s, cur)) {
                        r.shrinks = shrinks;
                        r.ratio_boosts = boosts;
                        r.escalations = e;
                        return r;
                    }
                    last_failure = "round trip failed";
                } catch (const detail::RetryRequest& rq) {
                    last_failure = rq.why;
                } catch (const NonPositiveParameter& err) {
                    last_failure = err.what();
                    if (std::string(err.what()).find("-mu/nu") != std::string::npos) {
                        ratio *= Real(1000);
                        ++boosts;
                        continue;
                    }
                }
                for (auto& r : rho) r = ldexp(r, -1);
                ++shrinks;
            }
        } catch (const BracketError& err) {
            last_failure = err.what();
        } catch (const NonPositiveParameter& err) {
            last_failure = err.what();
        } catch (const detail::RetryRequest& rq) {
            last_failure = rq.why;
        }
    }
    throw PrecisionExhausted("synthesis failed after " + std::to_string(cfg.max_escalations) +
                             " escalations; last failure: " + last_failure);
}

}  // namespace iep
