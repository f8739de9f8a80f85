#include "support.hpp"

using namespace iep;
using namespace iep::testing;

TEST(Constants, FiveMassExample) {
    PrecisionScope ps(1024);
    auto s = spec({1, 2, 3}, {1, 1, 3});
    auto pc = constants(s);
    EXPECT_EQ(pc.Delta, Real(0.5));
    EXPECT_EQ(pc.Lambda, Real(4));
    // (1/2)^31 / (5 * 2^648 * 4^36) = 1 / (5 * 2^751)
    Real want = oracle::to_real(mpq_class(1) / (mpq_class(5) * mpq_class(mpz_class(1) << 751)));
    EXPECT_LT(rel(pc.epsilon, want), pow2(-1000));
    EXPECT_EQ(pc.C1, pow2(-9));
    EXPECT_EQ(pc.rho.size(), 2u);
    EXPECT_EQ(pc.C2.size(), 2u);
}

TEST(Constants, RemarkInequalitiesAcrossSpectra) {
    for (auto [l, t] : std::vector<std::pair<std::vector<double>, std::vector<size_t>>>{
             {{1, 2}, {1, 2}}, {{1, 2, 3}, {1, 1, 2}}, {{1, 2, 3}, {1, 2, 1}}, {{0.5, 4}, {1, 1}}}) {
        auto s = spec(l, t);
        auto need = constant_exponents(s).required_bits;
        PrecisionScope ps(need);
        auto pc = constants(s);
        EXPECT_LT(pc.epsilon, Real(1));
        EXPECT_GE(pc.Lambda / pc.Delta, Real(2));
        EXPECT_TRUE(check_inequalities(pc, s.n(), s.m()).all());
        EXPECT_NEAR(log2(pc.rho[0]).to_double(), pc.log2_rho1, 1e-6 * std::fabs(pc.log2_rho1));
    }
}

TEST(Constants, Preconditions) {
    EXPECT_THROW(constants(spec({1}, {1})), ValidationError);
    // 12 masses overflow the exponent budget
    EXPECT_THROW(constant_exponents(spec({1, 2, 3, 4, 5}, {1, 2, 3, 4, 2})), OverflowError);
}

TEST(InitTop, Shapes) {
    auto s = spec({1, 2, 3}, {1, 1, 3});
    std::vector<Real> rho{Real(0.01), Real(0.02)};
    auto t = init_top(s, rho, Real(50));
    EXPECT_EQ(t.F.roots(), s.lambdas);
    ASSERT_EQ(t.G.degree(), 2u);
    EXPECT_EQ(t.G[0], Real(1) + Real(0.01));
    EXPECT_EQ(t.G[1], Real(2) + Real(0.02));
    EXPECT_TRUE(t.pair.valid());
    auto two = init_top(spec({1, 2}, {1, 1}), {Real(0.25)}, Real(10));
    EXPECT_EQ(two.G[0], Real(1.25));
}

// Coefficient-form oracle: H = mu F + m* nu x G vanishes at lambda*, and H / (x - lambda*) is (mu + m* nu) F_0.
TEST(StepA, CoefficientDivisionOracle) {
    PrecisionScope ps(256);
    auto cfg = PrecisionConfig::with_bits(256);
    RootPoly F{Real(1), Real(2), Real(3)};
    RootPoly G{Real(1.25), Real(2.25)};
    ScaledPair pr{Real(100), Real(-1)};
    Real ms(1);
    auto o = step_A(F, G, pr, ms, cfg);

    Coeffs H = axpy(pr.mu, from_roots(F.roots()), shift_up(from_roots(G.roots(), ms * pr.nu)));
    Real rem;
    Coeffs q = deflate(H, o.lambda_star, rem);
    EXPECT_LT(abs(rem) / max_coeff(H), pow2(-230));
    Coeffs f0 = from_roots(o.F0.roots(), pr.mu + ms * pr.nu);
    ASSERT_EQ(q.size(), f0.size());
    for (size_t i = 0; i < q.size(); ++i) EXPECT_LT(abs(q[i] - f0[i]) / max_coeff(q), pow2(-220));

    // nu G - mu0 F0 = (nu - mu0)(x - lambda*) G0
    Coeffs K = axpy(-o.pair0.mu, from_roots(o.F0.roots()), from_roots(G.roots(), pr.nu));
    Coeffs q2 = deflate(K, o.lambda_star, rem);
    EXPECT_LT(abs(rem) / max_coeff(K), pow2(-220));
    Coeffs g0 = from_roots(o.G0.roots(), pr.nu - o.pair0.mu);
    ASSERT_EQ(q2.size(), g0.size());
    for (size_t i = 0; i < q2.size(); ++i) EXPECT_LT(abs(q2[i] - g0[i]) / max_coeff(q2), pow2(-200));

    EXPECT_GT(o.lambda_star, Real(3));
    EXPECT_GT(o.b_star.sign(), 0);
    EXPECT_EQ(o.pair0.nu, (o.pair0.mu - pr.nu) / o.b_star);
    EXPECT_TRUE(lambda_g_interlaces(o.F0, o.G0));
    EXPECT_GT(-(o.pair0.mu / o.pair0.nu), -(pr.mu / pr.nu) - ms);
    for (size_t i = 0; i < 2; ++i) EXPECT_TRUE(F[i] < o.F0[i] && o.F0[i] < G[i]);
}

TEST(StepA, DefiningIdentityResidual) {
    PrecisionScope ps(256);
    auto cfg = PrecisionConfig::with_bits(256);
    RootPoly F{Real(0.5), Real(1.5), Real(2.5), Real(4)};
    RootPoly G{Real(0.75), Real(2), Real(3)};
    ScaledPair pr{Real(1000), Real(-1)};
    Real ms(2);
    auto o = step_A(F, G, pr, ms, cfg);
    for (double xd : {0.3, 1.1, 2.2, 3.7, 6.0}) {
        Real x(xd);
        Real lhs = pr.mu * eval(F, x);
        Real rhs = -(ms * pr.nu * x * eval(G, x)) + o.b_star * o.pair0.mu * (o.lambda_star - x) * eval(o.F0, x);
        EXPECT_LT(rel(rhs, lhs), pow2(-200)) << xd;
    }
}

TEST(StepA, BaseCaseDegrees) {
    auto cfg = PrecisionConfig::with_bits(128);
    auto o = step_A(RootPoly{Real(1), Real(2)}, RootPoly{Real(1.5)}, {Real(100), Real(-1)}, Real(1), cfg);
    EXPECT_EQ(o.F0.degree(), 1u);
    EXPECT_EQ(o.G0.degree(), 0u);
    EXPECT_TRUE(Real(1) < o.F0[0] && o.F0[0] < Real(1.5));
}

TEST(StepA, RatioPrecondition) {
    auto cfg = PrecisionConfig::with_bits(128);
    EXPECT_THROW(step_A(RootPoly{Real(1), Real(2)}, RootPoly{Real(1.5)}, {Real(1), Real(-1)}, Real(2), cfg),
                 NonPositiveParameter);
    EXPECT_THROW(step_A(RootPoly{Real(1)}, RootPoly{}, {Real(100), Real(-1)}, Real(1), cfg), DegreeMismatch);
}

TEST(StepB, CoefficientDivisionOracle) {
    PrecisionScope ps(256);
    auto cfg = PrecisionConfig::with_bits(256);
    RootPoly F{Real(1), Real(2.5)};
    RootPoly G{Real(1.3)};
    ScaledPair pr{Real(50), Real(-1)};
    Real ls(3);
    auto o = step_B(F, G, pr, ls, cfg);

    // m* closed form
    EXPECT_LT(rel(o.m_star, Real(50) * Real(2) * Real(0.5) / (Real(3) * Real(1.7))), pow2(-240));
    // mu F + m* nu x G = (mu + m* nu) F0, with lambda* an exact root of F0
    EXPECT_EQ(o.F0[o.F0.degree() - 1], ls);
    Coeffs H = axpy(pr.mu, from_roots(F.roots()), shift_up(from_roots(G.roots(), o.m_star * pr.nu)));
    Coeffs f0 = from_roots(o.F0.roots(), pr.mu + o.m_star * pr.nu);
    ASSERT_EQ(H.size(), f0.size());
    for (size_t i = 0; i < H.size(); ++i) EXPECT_LT(abs(H[i] - f0[i]) / max_coeff(H), pow2(-220));
    // nu (x - lambda*) G - mu0 F0 = (nu - mu0)(x - lambda*) G0
    std::vector<Real> ft(o.F0.roots().begin(), o.F0.roots().end() - 1);
    Coeffs K = axpy(-o.pair0.mu, from_roots(ft), from_roots(G.roots(), pr.nu));
    Coeffs g0 = from_roots(o.G0.roots(), pr.nu - o.pair0.mu);
    ASSERT_EQ(K.size(), g0.size());
    for (size_t i = 0; i < K.size(); ++i) EXPECT_LT(abs(K[i] - g0[i]) / max_coeff(K), pow2(-200));

    ASSERT_TRUE(o.tau.has_value());
    EXPECT_EQ(o.pair0.mu, *o.tau * pr.nu);
    EXPECT_EQ(o.b_star, -(pr.mu + o.m_star * pr.nu) / o.pair0.mu);
    EXPECT_TRUE(lambda_g_interlaces(o.F0, o.G0));
    EXPECT_GT(o.m_star.sign(), 0);
    EXPECT_TRUE(o.pair0.valid());
}

TEST(StepB, DefiningIdentityResidual) {
    PrecisionScope ps(256);
    auto cfg = PrecisionConfig::with_bits(256);
    RootPoly F{Real(1), Real(2), Real(3.5)};
    RootPoly G{Real(1.2), Real(2.4)};
    ScaledPair pr{Real(500), Real(-1)};
    auto o = step_B(F, G, pr, Real(3.5) + Real(0.5), cfg);
    for (double xd : {0.4, 1.5, 2.7, 5.0}) {
        Real x(xd);
        Real lhs = pr.mu * eval(F, x);
        Real rhs = -(o.m_star * pr.nu * x * eval(G, x)) - o.b_star * o.pair0.mu * eval(o.F0, x);
        EXPECT_LT(rel(rhs, lhs), pow2(-200)) << xd;
    }
}

TEST(StepB, SingleRootClosedForms) {
    PrecisionScope ps(256);
    auto cfg = PrecisionConfig::with_bits(256);
    Real a1(1.5), ls(4), mu(20), nu(-2);
    auto o = step_B(RootPoly{a1}, RootPoly{}, {mu, nu}, ls, cfg);
    EXPECT_LT(rel(o.m_star, -(mu / nu) * (ls - a1) / ls), pow2(-250));
    EXPECT_EQ(o.pair0.mu, nu / Real(2));
    EXPECT_LT(rel(o.b_star, -(mu / nu) * Real(2) * a1 / ls), pow2(-250));
    EXPECT_LT(rel(o.pair0.nu, Real(0.25) * (nu * nu / mu) * (ls / a1)), pow2(-250));
    EXPECT_EQ(o.F0.roots(), std::vector<Real>{ls});
    EXPECT_EQ(o.G0.degree(), 0u);
}

TEST(StepB, Preconditions) {
    auto cfg = PrecisionConfig::with_bits(128);
    EXPECT_THROW(step_B(RootPoly{Real(1), Real(2)}, RootPoly{Real(1.5)}, {Real(10), Real(-1)}, Real(1.8), cfg),
                 NonPositiveParameter);
    EXPECT_THROW(step_B(RootPoly{Real(1)}, RootPoly{}, {Real(10), Real(1)}, Real(2), cfg), NonPositiveParameter);
}

TEST(Synthesize, DistinctPair) {
    auto s = spec({1, 2}, {1, 1});
    auto plan = build_plan(s);
    auto r = synthesize(s, plan, Mode::adaptive, PrecisionConfig::with_bits(256));
    PrecisionScope ps(256);
    auto rep = spectrum(r.chain, PrecisionConfig::with_bits(256), Real(1e-12));
    ASSERT_EQ(rep.eigenvalues.size(), 2u);
    EXPECT_LT(rel(rep.eigenvalues[0], Real(1)), Real(1e-30));
    EXPECT_LT(rel(rep.eigenvalues[1], Real(2)), Real(1e-30));
    auto roots = oracle::positive_roots(oracle::dense_charpoly(r.chain), mpq_class(1, 1) / mpq_class(mpz_class(1) << 120));
    ASSERT_EQ(roots.size(), 2u);
    EXPECT_LT(rel(oracle::to_real(roots[1].value), Real(2)), Real(1e-30));
}

TEST(Synthesize, DoubleRootLedger) {
    auto s = spec({1, 4}, {1, 2});
    auto plan = build_plan(s);
    auto r = synthesize(s, plan, Mode::adaptive, PrecisionConfig::with_bits(256));
    PrecisionScope ps(256);
    auto rep = spectrum(r.chain, PrecisionConfig::with_bits(256), Real(1e-12));
    ASSERT_EQ(rep.eigenvalues.size(), 2u);
    EXPECT_EQ(rep.multiplicities, (std::vector<size_t>{1, 2}));
    EXPECT_EQ(r.D_top, std::vector<Real>{Real(4)});
    // k_2 / b_2 = 4 exactly
    EXPECT_EQ(r.chain.k[1], Real(4) * r.chain.b[1]);
    EXPECT_EQ(r.chain.k[1] / r.chain.b[1], Real(4));
    EXPECT_EQ(r.chain.m[0], Real(1));
    EXPECT_EQ(r.chain.m[2], Real(1));
}

TEST(Synthesize, TraceInvariants) {
    std::mt19937_64 rng(99);
    for (int t = 0; t < 25; ++t) {
        auto s = random_feasible_spec(rng, 2 + t % 8);
        auto plan = build_plan(s);
        auto r = synthesize(s, plan, Mode::adaptive, PrecisionConfig::with_bits(256));
        EXPECT_EQ(r.trace.size(), s.n() - 1);
        size_t bsteps = 0;
        for (auto& st : r.trace) {
            EXPECT_TRUE(st.interlacing_ok);
            EXPECT_TRUE(st.containment_ok);
            EXPECT_EQ(st.F.degree(), st.G.degree() + 1);
            EXPECT_TRUE(st.pair.valid());
            EXPECT_GT(st.b_next.sign(), 0);
            EXPECT_GT(st.m_next.sign(), 0);
            if (st.strategy == Strategy::B) ++bsteps;
        }
        EXPECT_EQ(bsteps, s.n() - s.m());
        EXPECT_TRUE(validate(r.chain).empty());
        EXPECT_GT(r.chain.b[0].sign(), 0);
    }
}

TEST(Synthesize, InfeasibleAndSingleMass) {
    auto bad = spec({1}, {2});
    EXPECT_THROW(synthesize(bad, MultiplicityPlan{}, Mode::adaptive, PrecisionConfig::with_bits(128)), InfeasibleSpectrum);
    auto one = spec({3}, {1});
    auto r = synthesize(one, build_plan(one), Mode::adaptive, PrecisionConfig::with_bits(128));
    auto rep = spectrum(r.chain, PrecisionConfig::with_bits(128));
    EXPECT_LT(rel(rep.eigenvalues[0], Real(3)), pow2(-100));
}

TEST(Synthesize, FaithfulThreeMasses) {
    auto s = spec({1, 2}, {1, 2});
    auto plan = build_plan(s);
    auto r = synthesize(s, plan, Mode::faithful, PrecisionConfig::with_bits(256));
    ASSERT_TRUE(r.proof_constants && r.inequalities);
    EXPECT_TRUE(r.inequalities->all());
    EXPECT_EQ(r.precision_used, r.proof_constants->required_bits);
    for (auto& st : r.trace) {
        EXPECT_TRUE(st.interlacing_ok);
        EXPECT_TRUE(st.containment_ok);
        EXPECT_TRUE(st.lemma7_ok.value_or(false));
    }
    EXPECT_THROW(synthesize(spec({1, 2, 3}, {1, 2, 2}), build_plan(spec({1, 2, 3}, {1, 2, 2})), Mode::faithful,
                            PrecisionConfig::with_bits(256)),
                 ValidationError);
}

TEST(ExactProduct, KeepsAllBits) {
    PrecisionScope ps(128);
    Real a = Real(1) / Real(3), b = Real(1) / Real(7);
    Real p = detail::exact_product(a, b);
    EXPECT_EQ(p.precision(), 256);
    EXPECT_EQ(p / b, a);
}
