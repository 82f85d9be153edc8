#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "frlab/calculus.hpp"
#include "frlab/errors.hpp"
#include "frlab/graph.hpp"
#include "frlab/kernels.hpp"
#include "frlab/markov.hpp"
#include "frlab/rng.hpp"
#include "frlab/spectral.hpp"
#include "frlab/vicsek.hpp"

using namespace frlab;

namespace {

WeightedGraph path_graph(int n) {
    GraphBuilder b(n);
    for (int i = 0; i + 1 < n; ++i) b.add_edge(i, i + 1, 1.0);
    return b.build();
}

WeightedGraph weighted_sample() {
    GraphBuilder b(6);
    b.add_edge(0, 1, 2.0);
    b.add_edge(1, 2, 0.5);
    b.add_edge(2, 3, 1.5);
    b.add_edge(3, 4, 3.0);
    b.add_edge(4, 5, 1.0);
    b.add_edge(5, 0, 0.75);
    b.add_edge(1, 4, 2.5);
    return b.build();
}

std::vector<double> random_f(int nv, std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<double> f(nv);
    for (double& v : f) v = rng.next_normal();
    return f;
}

} // namespace

TEST(Calculus, DirichletFormIdentity) {
    // ||grad f||_2^2 = <Delta f, f>_m exactly, for any f and alpha.
    for (double alpha : {0.1, 0.5, 0.8}) {
        const auto g = weighted_sample();
        const MarkovOperator op = make_walk(g, alpha);
        for (int trial = 0; trial < 10; ++trial) {
            const auto f = random_f(g.vertex_count(), 42 + trial);
            const auto grad = gradient_length(op, f);
            const double lhs = inner_m(g, grad, grad);
            const auto lap = laplacian(op, f);
            const double rhs = inner_m(g, lap, f);
            EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::abs(rhs)));
        }
    }
}

TEST(Calculus, GradientScalesWithLaziness) {
    const auto g = weighted_sample();
    const auto f = random_f(g.vertex_count(), 5);
    const auto g0 = gradient_length(make_walk(g, 0.0), f);
    const auto g5 = gradient_length(make_walk(g, 0.5), f);
    for (std::size_t x = 0; x < g0.size(); ++x)
        EXPECT_NEAR(g5[x], g0[x] * std::sqrt(0.5), 1e-14);
}

TEST(Calculus, NormsAndMean) {
    GraphBuilder b(2);
    b.add_edge(0, 1, 1.0);  // m = (1,1), total 2
    const auto g = b.build();
    const std::vector<double> f{3.0, -4.0};
    EXPECT_DOUBLE_EQ(lp_norm(g, f, 1.0), 7.0);
    EXPECT_DOUBLE_EQ(lp_norm(g, f, 2.0), 5.0);
    EXPECT_DOUBLE_EQ(lp_norm(g, f, std::numeric_limits<double>::infinity()), 4.0);
    EXPECT_THROW(lp_norm(g, f, 0.5), validation_error);
    EXPECT_DOUBLE_EQ(mean_m(g, f), -0.5);
    const auto c = centered(g, f);
    EXPECT_NEAR(mean_m(g, c), 0.0, 1e-15);
    EXPECT_DOUBLE_EQ(c[0], 3.5);
}

TEST(Binomial, RecurrenceMatchesGammaClosedForm) {
    // |c_k| = beta Gamma(k-beta) / (Gamma(1-beta) k!) for beta in (0,1), k >= 1.
    for (double beta : {0.25, 0.5, 0.9}) {
        const auto c = binomial_coeffs(beta, 100);
        EXPECT_DOUBLE_EQ(c[0], 1.0);
        for (int k : {1, 2, 5, 20, 100}) {
            const double logv = std::log(beta) + std::lgamma(k - beta)
                              - std::lgamma(1.0 - beta) - std::lgamma(k + 1.0);
            EXPECT_NEAR(std::abs(c[k]), std::exp(logv), 1e-12 * std::exp(logv))
                << "beta=" << beta << " k=" << k;
            EXPECT_LT(c[k], 0.0);
        }
    }
    // beta = -1/2: all coefficients positive, c_k = binom(2k,k)/4^k.
    const auto c = binomial_coeffs(-0.5, 40);
    for (int k : {1, 3, 10, 40}) {
        const double logv = std::lgamma(2.0 * k + 1.0) - 2.0 * std::lgamma(k + 1.0)
                          - k * std::log(4.0);
        EXPECT_NEAR(c[k], std::exp(logv), 1e-12 * std::exp(logv));
    }
    EXPECT_THROW(binomial_coeffs(0.5, -1), validation_error);
}

TEST(Binomial, PartialSumIdentity) {
    // sum_{k<=K} (-1)^k binom(beta,k) = (-1)^K binom(beta-1,K), evaluated
    // through the independent product form prod_{j<=K} (j-beta)/j.
    for (double beta : {0.3, 0.5, 0.9}) {
        const auto c = binomial_coeffs(beta, 100);
        double sum = 0.0;
        for (double v : c) sum += v;
        double prod = 1.0;
        for (int j = 1; j <= 100; ++j) prod *= (j - beta) / j;
        EXPECT_NEAR(sum, prod, 1e-12 * std::abs(prod)) << "beta=" << beta;
    }
}

TEST(Spectral, TwoVertexClosedForm) {
    GraphBuilder b(2);
    b.add_edge(0, 1, 2.3);
    const auto g = b.build();
    for (double alpha : {0.5, 0.7}) {
        const MarkovOperator op = make_walk(g, alpha);
        const SpectralDecomposition dec(op);
        ASSERT_EQ(dec.size(), 2);
        EXPECT_NEAR(dec.eigenvalues()[0], 2.0 * alpha - 1.0, 1e-12);
        EXPECT_NEAR(dec.eigenvalues()[1], 1.0, 1e-12);
        // Delta^{1/2} on the alternating function scales it by sqrt(2-2alpha).
        const std::vector<double> f{1.0, -1.0};
        const auto out = dec.apply_function(f, [](double s) { return std::sqrt(s); });
        for (int x = 0; x < 2; ++x)
            EXPECT_NEAR(out[x], std::sqrt(2.0 - 2.0 * alpha) * f[x], 1e-12);
    }
}

TEST(Spectral, ReconstructionAndConstantEigenfunction) {
    const auto v = build_vicsek(2, 1);
    const MarkovOperator op = make_walk(v.graph, 0.5);
    const SpectralDecomposition dec(op);
    EXPECT_LT(dec.reconstruction_residual(op), 1e-10);
    const int top = dec.size() - 1;
    EXPECT_NEAR(dec.eigenvalues()[top], 1.0, 1e-10);
    const auto phi = dec.eigenfunction(top);
    for (int x = 1; x < dec.size(); ++x) EXPECT_NEAR(phi[x], phi[0], 1e-10);
    // trace(S) = trace(P) = nv * alpha on a loopless graph
    EXPECT_NEAR(dec.trace(), 0.5 * dec.size(), 1e-9);
}

TEST(Spectral, DenseCapEnforced) {
    const auto v = build_vicsek(2, 2);
    const MarkovOperator op = make_walk(v.graph, 0.5);
    EXPECT_THROW(SpectralDecomposition(op, 50), resource_error);
}

TEST(RestrictedRadius, MatchesDenseSpectrum) {
    const auto g = path_graph(5);
    const MarkovOperator op = make_walk(g, 0.5);
    const SpectralDecomposition dec(op);
    double want = 0.0;
    for (int j = 0; j + 1 < dec.size(); ++j)
        want = std::max(want, std::abs(dec.eigenvalues()[j]));
    EXPECT_NEAR(restricted_spectral_radius(op), want, 1e-6);

    GraphBuilder b(2);
    b.add_edge(0, 1, 1.0);
    const auto g2 = b.build();
    EXPECT_NEAR(restricted_spectral_radius(make_walk(g2, 0.75)), 0.5, 1e-9);
    EXPECT_LT(restricted_spectral_radius(make_walk(g2, 0.5)), 1e-9);
}

TEST(Frac, SpectralVsSeriesAgree) {
    // Level 1 mixes fast, so K = 3000 drives the truncation error far below
    // the comparison tolerance.
    const auto v = build_vicsek(2, 1);
    const auto& g = v.graph;
    const MarkovOperator op = make_walk(g, 0.5);
    const SpectralDecomposition dec(op);
    const FracEngine spec = FracEngine::spectral(op, dec);
    const FracEngine ser = FracEngine::series(op, 3000);
    const auto f = centered(g, random_f(g.vertex_count(), 11));
    for (double beta : {0.25, 0.5, 1.0, -0.5}) {
        const auto a = spec.apply(f, beta);
        const auto b = ser.apply(f, beta);
        EXPECT_EQ(a.backend, FracBackend::spectral);
        EXPECT_EQ(b.backend, FracBackend::series);
        EXPECT_EQ(b.series_K, 3000);
        for (std::size_t x = 0; x < f.size(); ++x)
            EXPECT_NEAR(a.value[x], b.value[x], 1e-9) << "beta=" << beta;
    }
}

TEST(Frac, SeriesTailBoundIsHonest) {
    // Level 2 mixes slowly enough that K = 4000 leaves a visible truncation
    // error; the reported tail must still dominate it in L2(m).
    const auto v = build_vicsek(2, 2);
    const auto& g = v.graph;
    const MarkovOperator op = make_walk(g, 0.5);
    const SpectralDecomposition dec(op);
    const FracEngine spec = FracEngine::spectral(op, dec);
    const FracEngine ser = FracEngine::series(op, 4000);
    const auto f = centered(g, random_f(g.vertex_count(), 11));
    const double f2 = lp_norm(g, f, 2.0);
    for (double beta : {0.25, 0.5, -0.5}) {
        const auto a = spec.apply(f, beta);
        const auto b = ser.apply(f, beta);
        std::vector<double> d(f.size());
        for (std::size_t x = 0; x < f.size(); ++x) d[x] = a.value[x] - b.value[x];
        EXPECT_LE(lp_norm(g, d, 2.0), b.series_tail * f2 + 1e-10) << "beta=" << beta;
        EXPECT_LT(b.series_tail, 0.1) << "beta=" << beta;
    }
}

TEST(Frac, SeriesHandlesNonMeanZeroLikeSpectral) {
    // Delta^beta kills constants; both backends must agree on f + const.
    const auto v = build_vicsek(2, 1);
    const auto& g = v.graph;
    const MarkovOperator op = make_walk(g, 0.5);
    const SpectralDecomposition dec(op);
    const FracEngine spec = FracEngine::spectral(op, dec);
    const FracEngine ser = FracEngine::series(op, 3000);
    auto f = random_f(g.vertex_count(), 12);
    for (double& x : f) x += 3.0;
    const auto a = spec.apply(f, 0.5);
    const auto b = ser.apply(f, 0.5);
    for (std::size_t x = 0; x < f.size(); ++x)
        ASSERT_NEAR(a.value[x], b.value[x], 1e-9);
}

TEST(Frac, AutoTruncationRespectsTolerance) {
    const auto v = build_vicsek(2, 1);
    const MarkovOperator op = make_walk(v.graph, 0.5);
    const FracEngine ser = FracEngine::series(op);  // K chosen automatically
    const auto f = centered(v.graph, random_f(v.graph.vertex_count(), 3));
    const auto r = ser.apply(f, 0.5);
    EXPECT_GT(r.series_K, 0);
    EXPECT_LE(r.series_tail, 1e-6);
}

TEST(Frac, BetaOneIsTheLaplacian) {
    const auto v = build_vicsek(2, 1);
    const MarkovOperator op = make_walk(v.graph, 0.5);
    const SpectralDecomposition dec(op);
    const FracEngine spec = FracEngine::spectral(op, dec);
    const FracEngine ser = FracEngine::series(op, 5);
    const auto f = random_f(v.graph.vertex_count(), 21);
    const auto want = laplacian(op, f);
    const auto a = spec.apply(f, 1.0);
    const auto b = ser.apply(f, 1.0);
    for (std::size_t x = 0; x < f.size(); ++x) {
        EXPECT_NEAR(a.value[x], want[x], 1e-10);
        EXPECT_NEAR(b.value[x], want[x], 1e-12);
    }
}

TEST(Frac, MeanRemovalAccounting) {
    const auto v = build_vicsek(2, 1);
    const auto& g = v.graph;
    const MarkovOperator op = make_walk(g, 0.5);
    const SpectralDecomposition dec(op);
    const FracEngine engine = FracEngine::spectral(op, dec);
    auto f0 = centered(g, random_f(g.vertex_count(), 8));
    auto f = f0;
    for (double& x : f) x += 2.5;
    const auto shifted = engine.apply(f, -0.5);
    const auto base = engine.apply(f0, -0.5);
    EXPECT_NEAR(shifted.removed_component_norm, 2.5 * std::sqrt(g.total_measure()),
                1e-9);
    EXPECT_NEAR(base.removed_component_norm, 0.0, 1e-9);
    for (std::size_t x = 0; x < f.size(); ++x)
        EXPECT_NEAR(shifted.value[x], base.value[x], 1e-10);
    EXPECT_THROW(engine.apply(f, -0.5, false), domain_error);
    EXPECT_NO_THROW(engine.apply(f0, -0.5, false));
}

TEST(Frac, BetaValidation) {
    const auto v = build_vicsek(2, 1);
    const MarkovOperator op = make_walk(v.graph, 0.5);
    const SpectralDecomposition dec(op);
    const FracEngine engine = FracEngine::spectral(op, dec);
    const auto f = random_f(v.graph.vertex_count(), 2);
    for (double beta : {0.0, -0.3, 1.5, -1.0})
        EXPECT_THROW(engine.apply(f, beta), validation_error) << beta;
}

TEST(Frac, HalfPowersCompose) {
    const auto v = build_vicsek(2, 2);
    const auto& g = v.graph;
    const MarkovOperator op = make_walk(g, 0.5);
    const SpectralDecomposition dec(op);
    const FracEngine engine = FracEngine::spectral(op, dec);
    const auto f = centered(g, random_f(g.vertex_count(), 77));
    const auto inv = engine.apply(f, -0.5);
    const auto back = engine.apply(inv.value, 0.5);
    for (std::size_t x = 0; x < f.size(); ++x)
        EXPECT_NEAR(back.value[x], f[x], 1e-8);
}

TEST(Riesz, L2Isometry) {
    const auto v = build_vicsek(2, 2);
    const auto& g = v.graph;
    const MarkovOperator op = make_walk(g, 0.5);
    const SpectralDecomposition dec(op);
    const FracEngine engine = FracEngine::spectral(op, dec);
    for (int trial = 0; trial < 5; ++trial) {
        const auto f = random_f(g.vertex_count(), 100 + trial);
        const auto t = riesz_apply(engine, f);
        EXPECT_NEAR(lp_norm(g, t, 2.0), lp_norm(g, centered(g, f), 2.0), 1e-9);
    }
}

TEST(Riesz, RatioReportAtPTwo) {
    const auto v = build_vicsek(2, 2);
    const auto& g = v.graph;
    const MarkovOperator op = make_walk(g, 0.5);
    const SpectralDecomposition dec(op);
    const FracEngine engine = FracEngine::spectral(op, dec);
    // ||grad f||_2 = ||Delta^{1/2} f||_2: forward and reverse ratios are 1.
    const auto f = centered(g, random_f(g.vertex_count(), 31));
    const auto r = ratio_report(engine, f, 2.0, 0.5);
    EXPECT_NEAR(r.forward_ratio, 1.0, 1e-9);
    EXPECT_NEAR(r.reverse_ratio, 1.0, 1e-9);
    EXPECT_GT(r.grad_norm, 0.0);
}

TEST(GeometricSteps, Basics) {
    const auto ks = geometric_steps(10, 1000, 12);
    EXPECT_EQ(ks.front(), 10);
    EXPECT_EQ(ks.back(), 1000);
    for (std::size_t i = 1; i < ks.size(); ++i) EXPECT_GT(ks[i], ks[i - 1]);
    EXPECT_EQ(geometric_steps(5, 5, 3), std::vector<int>{5});
    EXPECT_THROW(geometric_steps(0, 10, 3), validation_error);
    EXPECT_THROW(geometric_steps(10, 5, 3), validation_error);
}

TEST(OnDiagonal, VicsekDecaySlope) {
    const auto v = build_vicsek(2, 5);
    const MarkovOperator op = make_walk(v.graph, 0.5);
    const auto ks = geometric_steps(50, 2000, 25);
    const auto od = on_diagonal_fit(op, v.z0, ks);
    // -D/m = -log3(5)/(1+log3(5)) = -0.5944 measured on this window.
    EXPECT_NEAR(od.fit.exponent, -0.594, 0.05);
    EXPECT_GT(od.fit.r_squared, 0.99);
    for (std::size_t i = 1; i < od.values.size(); ++i)
        EXPECT_LT(od.values[i], od.values[i - 1]);
}

TEST(OnDiagonal, PathDecaySlope) {
    const auto g = path_graph(1001);
    const MarkovOperator op = make_walk(g, 0.5);
    const auto od = on_diagonal_fit(op, 500, geometric_steps(50, 2000, 25));
    EXPECT_NEAR(od.fit.exponent, -0.5, 0.03);
}

TEST(TrustedHorizon, Values) {
    const double m = 1.0 + std::log(5.0) / std::log(3.0);
    EXPECT_GE(trusted_horizon(4, m), 330);
    EXPECT_LE(trusted_horizon(4, m), 345);
    EXPECT_GE(trusted_horizon(5, m), 4900);
    EXPECT_LE(trusted_horizon(5, m), 5150);
    EXPECT_THROW(trusted_horizon(0, m), validation_error);
}

TEST(UpperEstimate, SubGaussianExponentStaysBounded) {
    const auto v = build_vicsek(2, 5);
    const MarkovOperator op = make_walk(v.graph, 0.5);
    const double m = v.growth_exponent() + 1.0;
    const auto r100 = verify_ue(op, v.z0, 100, m, 0.05);
    const auto r1000 = verify_ue(op, v.z0, 1000, m, 0.05);
    EXPECT_LT(std::exp(r1000.sup_log - r100.sup_log), 2.0);
    for (std::size_t i = 1; i < r1000.trace.size(); ++i)
        EXPECT_GE(r1000.trace[i].sup_log, r1000.trace[i - 1].sup_log);
}

TEST(UpperEstimate, GaussianExponentBlowsUp) {
    // Forcing m = 2 with a Gaussian-size constant c = 2 must fail: the
    // realized constant keeps growing by orders of magnitude, without
    // overflowing thanks to the log-space scan.  Level 5 keeps the center
    // more than 243 steps from the boundary, so the k = 1000 horizon still
    // has tail room.
    const auto v = build_vicsek(2, 5);
    const MarkovOperator op = make_walk(v.graph, 0.5);
    const auto r100 = verify_ue(op, v.z0, 100, 2.0, 2.0);
    const auto r1000 = verify_ue(op, v.z0, 1000, 2.0, 2.0);
    EXPECT_NEAR(r100.sup_log, 33.6, 5.0);
    EXPECT_NEAR(r1000.sup_log, 87.8, 7.0);
    EXPECT_GT(r1000.sup_log - r100.sup_log, std::log(10.0));
    EXPECT_TRUE(std::isfinite(r1000.sup_log));
}

TEST(UpperEstimate, Validations) {
    const auto v = build_vicsek(2, 1);
    const MarkovOperator op = make_walk(v.graph, 0.5);
    EXPECT_THROW(verify_ue(op, v.z0, 0, 2.0, 0.1), validation_error);
    EXPECT_THROW(verify_ue(op, v.z0, 10, 1.0, 0.1), validation_error);
}

TEST(Analyticity, VicsekScaledNormBounded) {
    const auto v = build_vicsek(2, 2);
    const MarkovOperator op = make_walk(v.graph, 0.5);
    double prev = 0.0;
    for (int n : {10, 20, 40}) {
        const auto r = analyticity_norm(op, n);
        EXPECT_TRUE(r.converged);
        EXPECT_LE(r.scaled, 0.37) << "n=" << n;
        EXPECT_GE(r.scaled, 0.20) << "n=" << n;
        if (prev > 0.0) {
            EXPECT_LT(r.scaled / prev, 1.5);
            EXPECT_GT(r.scaled / prev, 1.0 / 1.5);
        }
        prev = r.scaled;
    }
}

TEST(Analyticity, BipartiteWithoutLazinessIsNotAnalytic) {
    GraphBuilder b(2);
    b.add_edge(0, 1, 1.0);
    const auto g = b.build();
    const MarkovOperator op = make_walk(g, 0.0);
    EXPECT_TRUE(op.lb_violated());
    const auto r = analyticity_norm(op, 5);
    EXPECT_NEAR(r.norm, 2.0, 1e-9);  // (1-s)s^n at s = -1, n odd
    EXPECT_THROW(analyticity_norm(op, 0), validation_error);
}
