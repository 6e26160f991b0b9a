#include "polywalk/diagnostics.hpp"
#include "polywalk/walks.hpp"
#include "support.hpp"

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/binomial.hpp>
#include <gtest/gtest.h>

#include <cstdlib>

using namespace polywalk;
using namespace testsupport;

namespace {

ConvexBody square() { return box(2); }

struct Simplex {
    AffineEmbedding emb;
    ConvexBody body;
};

Simplex simplex(int n) {
    auto emb = build_embedding(Mat::Ones(1, n), Vec::Ones(1), Vec::Constant(n, 1.0 / n));
    auto body = embed_body(orthant(n), emb);
    return {emb, body};
}

WalkConfig config(WalkKind kind, std::uint64_t seed, long thinning = 1, long burn_in = 200) {
    WalkConfig c;
    c.kind = kind;
    c.seed = seed;
    c.thinning = thinning;
    c.burn_in = burn_in;
    return c;
}

/// Monte Carlo standard error of the column means, from the effective size.
Vec mean_standard_error(const SampleSet& s) {
    const Vec e = total_ess(s.chain_draws());
    const Mat centered = s.draws.rowwise() - s.draws.colwise().mean();
    const Vec var = centered.colwise().squaredNorm().transpose() / static_cast<double>(s.draws.rows() - 1);
    return (var.array() / e.array()).sqrt().matrix();
}

WalkState state_at(const ConvexBody& body, Vec x, std::uint64_t seed = 1) { return WalkState(body, std::move(x), Rng(seed)); }

}  // namespace

// ---------------------------------------------------------------------------
// ball walk

TEST(BallWalk, ProposalOutsideKeepsPoint) {
    const auto body = square();
    auto s = state_at(body, Vec::Zero(2));
    for (int i = 0; i < 50; ++i) {
        EXPECT_FALSE(baw_step(body, TargetDensity::uniform(), s, 1e6));
        EXPECT_EQ(s.x, Vec::Zero(2));
    }
}

TEST(BallWalk, UniformInsideAlwaysAccepted) {
    const auto body = square();
    auto s = state_at(body, Vec::Zero(2));
    for (int i = 0; i < 200; ++i) EXPECT_TRUE(baw_step(body, TargetDensity::uniform(), s, 1e-3));
}

TEST(BallWalk, SquareMeanWithinThreeStandardErrors) {
    auto cfg = config(WalkKind::baw, 11, 1, 1000);
    cfg.delta = 0.2;
    const auto s = sample(square(), TargetDensity::uniform(), cfg, 100000, 1);
    const Vec mean = s.draws.colwise().mean();
    const Vec se = mean_standard_error(s);
    for (int j = 0; j < 2; ++j) EXPECT_LT(std::abs(mean[j]), 3.0 * se[j]);
}

// ---------------------------------------------------------------------------
// hit-and-run

TEST(HitAndRun, UnitIntervalIsUniform) {
    const ConvexBody body(HPolytope((Mat(2, 1) << 1, -1).finished(), Vec::Unit(2, 0)));
    auto s = state_at(body, Vec::Constant(1, 0.5), 3);
    std::vector<double> xs;
    for (int i = 0; i < 4000; ++i) {
        har_step(body, TargetDensity::uniform(), s);
        xs.push_back(s.x[0]);
    }
    EXPECT_LT(ks_statistic(xs, [](double x) { return std::clamp(x, 0.0, 1.0); }), ks_critical(xs.size(), 0.01));
}

TEST(HitAndRun, ChordThroughCenter) {
    const auto body = square();
    const auto s = state_at(body, Vec::Zero(2));
    const auto ch = detail::cached_chord(body, s, Vec::Unit(2, 0));
    EXPECT_NEAR(ch.lower, -1.0, 1e-15);
    EXPECT_NEAR(ch.upper, 1.0, 1e-15);
    const auto ch2 = detail::cached_chord(body, s, Vec::Unit(2, 1));
    EXPECT_NEAR(ch2.lower, -1.0, 1e-15);
    EXPECT_NEAR(ch2.upper, 1.0, 1e-15);
}

TEST(HitAndRun, DegenerateDirectionsEventuallyFail) {
    // a sliver of width 1e-14: every chord is shorter than 1e-12
    const ConvexBody body(HPolytope((Mat(2, 1) << 1, -1).finished(), Vec::Constant(2, 5e-15)));
    auto s = state_at(body, Vec::Zero(1));
    EXPECT_THROW(har_step(body, TargetDensity::uniform(), s), Error);
}

// ---------------------------------------------------------------------------
// coordinate hit-and-run

TEST(CoordinateHitAndRun, CachedProductsMatchRecomputed) {
    Rng gen(5);
    Mat A = Mat::Zero(30, 6);
    for (int i = 0; i < 30; ++i) A.row(i) = gen.unit_direction(6).transpose();
    const ConvexBody body(HPolytope(A, Vec::Ones(30)));
    auto s = state_at(body, Vec::Zero(6), 7);
    for (int i = 0; i < 999; ++i) {
        cdhr_step(body, TargetDensity::uniform(), s);
        const Vec fresh = A * s.x;
        ASSERT_LT((fresh - s.Ax).cwiseAbs().maxCoeff(), 1e-10);
        ASSERT_TRUE(membership(body, s.x));
    }
}

TEST(CoordinateHitAndRun, AgreesWithHitAndRunIn5D) {
    // box cut by a few oblique halfspaces, then whitened by a Chebyshev recentring
    Mat A(13, 5);
    A << Mat::Identity(5, 5), -Mat::Identity(5, 5), Mat::Zero(3, 5);
    A.row(10) << 1, 1, 1, 0, 0;
    A.row(11) << 0, -1, 1, 1, 0;
    A.row(12) << 0, 0, 0, 1, -1;
    Vec b = Vec::Ones(13);
    b.tail(3) << 1.5, 1.2, 0.8;
    const ConvexBody body(HPolytope(A, b));
    const auto sh = sample(body, TargetDensity::uniform(), config(WalkKind::har, 21, 5), 20000, 2);
    const auto sc = sample(body, TargetDensity::uniform(), config(WalkKind::cdhr, 22, 5), 20000, 2);
    const Vec mh = sh.draws.colwise().mean();
    const Vec mc = sc.draws.colwise().mean();
    const Vec se = (mean_standard_error(sh).array().square() + mean_standard_error(sc).array().square()).sqrt();
    for (int j = 0; j < 5; ++j) EXPECT_LT(std::abs(mh[j] - mc[j]), 3.0 * se[j]) << "coordinate " << j;
}

// ---------------------------------------------------------------------------
// billiard walk

TEST(BilliardWalk, FreeFlight) {
    const auto body = square();
    const auto tr = billiard_path(body, Vec::Zero(2), Vec::Unit(2, 1), 0.4, 10);
    EXPECT_EQ(tr.reflections, 0);
    EXPECT_NEAR((tr.end - Vec::Unit(2, 1) * 0.4).norm(), 0.0, 1e-15);
}

TEST(BilliardWalk, ReflectsOffRightWall) {
    const auto tr = billiard_path(square(), Vec::Zero(2), Vec::Unit(2, 0), 1.5, 10);
    EXPECT_EQ(tr.reflections, 1);
    EXPECT_NEAR(tr.end[0], 0.5, 1e-14);
    EXPECT_NEAR(tr.end[1], 0.0, 1e-14);
    EXPECT_NEAR(tr.direction[0], -1.0, 1e-15);
}

TEST(BilliardWalk, ExceedingReflectionCapReturnsStart) {
    // sliver [-1,1] x [-1e-3, 1e-3]: a steep direction bounces many times
    Mat A(4, 2);
    A << 1, 0, -1, 0, 0, 1, 0, -1;
    const ConvexBody body(HPolytope(A, Vec((Vec(4) << 1, 1, 1e-3, 1e-3).finished())));
    const Vec v = Vec((Vec(2) << 0.1, 1.0).finished()).normalized();
    const auto tr = billiard_path(body, Vec::Zero(2), v, 1.0, 20);
    EXPECT_TRUE(tr.exceeded);
    EXPECT_EQ(tr.end, Vec::Zero(2));

    auto s = state_at(body, Vec::Zero(2));
    for (int i = 0; i < 20; ++i) {
        EXPECT_FALSE(biw_step(body, s, 10.0, 3));
        EXPECT_EQ(s.x, Vec::Zero(2));
    }
}

TEST(BilliardWalk, DirectionNormConservedAcrossReflections) {
    const Ellipsoid ball(Mat::Identity(3, 3), 1.0);
    Mat A(2, 3);
    A << 1, 1, 0, -1, 0, 1;
    const ConvexBody body(HPolytope(A, Vec::Constant(2, 0.5)), ball);
    Rng rng(9);
    for (int t = 0; t < 200; ++t) {
        const auto tr = billiard_path(body, Vec::Zero(3), rng.unit_direction(3), 8.0, 1000);
        ASSERT_FALSE(tr.exceeded);
        EXPECT_GT(tr.reflections, 0);
        EXPECT_NEAR(tr.direction.norm(), 1.0, 1e-10);
        EXPECT_TRUE(membership(body, tr.end, 1e-8));
    }
}

// ---------------------------------------------------------------------------
// barrier walks

TEST(DikinWalk, CubeCentreMetricIsIsotropic) {
    const auto P = *box(4, 2.0).polytope();
    const Mat H = dikin_metric(P, Vec::Zero(4));
    EXPECT_LT((H - 0.5 * Mat::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(DikinWalk, ZeroProposalHasUnitRatio) {
    const auto P = *box(3).polytope();
    const Vec x = (Vec(3) << 0.3, -0.2, 0.7).finished();
    const auto f = detail::metric_factor(dikin_metric(P, x), "test");
    EXPECT_DOUBLE_EQ(detail::log_det(f) - detail::log_det(f), 0.0);
}

TEST(DikinWalk, SingularMetricIsReported) {
    // the x2 direction is unconstrained, so H has a zero eigenvalue
    Mat A(2, 2);
    A << 1, 0, -1, 0;
    const HPolytope P(A, Vec::Ones(2));
    WalkState s(ConvexBody(P), Vec::Zero(2), Rng(1));
    EXPECT_THROW(dikin_step(P, s, 0.5), Error);
}

TEST(VaidyaWalk, LazyCoinHoldsAboutHalf) {
    const auto P = *box(3).polytope();
    WalkState s(ConvexBody(P), Vec::Zero(3), Rng(4));
    int moved = 0;
    for (int i = 0; i < 4000; ++i) moved += vaidya_step(P, s, 0.9);
    EXPECT_LT(moved, 2200);
    EXPECT_GT(moved, 800);
}

TEST(VaidyaWalk, CubeCentreLeverageIsUniform) {
    const auto P = *box(4).polytope();
    const Mat As = detail::scaled_rows(P, Vec::Zero(4));
    const Vec sigma = detail::leverage_scores(As);
    EXPECT_LT((sigma.array() - sigma[0]).abs().maxCoeff(), 1e-14);
    EXPECT_NEAR(sigma.sum(), 4.0, 1e-12);
}

TEST(JohnWalk, CubeCentreWeightsUniform) {
    const auto P = *box(4).polytope();
    const auto jw = john_weights(P, Vec::Zero(4));
    EXPECT_LT((jw.weights.array() - jw.weights[0]).abs().maxCoeff(), 1e-10);
    EXPECT_LE(jw.iterations, 200);
}

TEST(JohnWalk, WeightsMatchBetweenOppositeFacetsOffCentre) {
    const auto P = *box(3).polytope();
    const Vec x = (Vec(3) << 0.0, 0.4, 0.0).finished();
    const Vec w = john_weights(P, x).weights;
    EXPECT_NEAR(w[0], w[3], 1e-10);  // ±e1 facets are mirror images
    EXPECT_GT(w[1], w[4]);           // the nearer +e2 facet weighs more
}

TEST(JohnWalk, NonConvergenceCarriesTrace) {
    const auto P = *box(3).polytope();
    try {
        john_weights(P, (Vec(3) << 0.9, -0.5, 0.2).finished(), 1e-8, 1);
        FAIL() << "expected a convergence error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::convergence);
        EXPECT_NE(std::string(e.what()).find("last changes"), std::string::npos);
    }
}

TEST(JohnWalk, LazyCoinHolds) {
    const auto P = *box(3).polytope();
    WalkState s(ConvexBody(P), Vec::Zero(3), Rng(8));
    int moved = 0;
    for (int i = 0; i < 1000; ++i) moved += john_step(P, s, 0.9);
    EXPECT_LT(moved, 560);
}

class BarrierCube : public ::testing::TestWithParam<WalkKind> {};

TEST_P(BarrierCube, FourCubeMeansAndMarginals) {
    const auto body = box(4);
    const auto s = sample(body, TargetDensity::uniform(), config(GetParam(), 31, 1, 500), 100000, 2);
    const Vec mean = s.draws.colwise().mean();
    const Vec se = mean_standard_error(s);
    for (int j = 0; j < 4; ++j) EXPECT_LT(std::abs(mean[j]), 3.0 * se[j]) << "coordinate " << j;
    for (const auto& c : s.chains) EXPECT_GT(c.acceptance, 0.05);
}

INSTANTIATE_TEST_SUITE_P(Walks, BarrierCube, ::testing::Values(WalkKind::dikin, WalkKind::vaidya, WalkKind::john),
                         [](const auto& info) { return to_string(info.param); });

// ---------------------------------------------------------------------------
// reflective HMC

TEST(ReflectiveHmc, TinyStepIsAccepted) {
    const auto sx = simplex(4);
    const auto target = TargetDensity::dirichlet(Vec::Constant(4, 3.0)).transformed(sx.emb);
    auto s = state_at(sx.body, Vec::Zero(3), 5);
    HmcTuning tune{1e-7, 5, 30};
    int accepted = 0;
    for (int i = 0; i < 200; ++i) accepted += rehmc_step(sx.body, target, s, tune);
    EXPECT_EQ(accepted, 200);
}

TEST(ReflectiveHmc, FreeParticleAccepted) {
    const auto body = square();
    auto s = state_at(body, Vec::Zero(2), 6);
    HmcTuning tune{0.01, 5, 10};
    for (int i = 0; i < 100; ++i) {
        const Vec before = s.x;
        ASSERT_TRUE(rehmc_step(body, TargetDensity::uniform(), s, tune));
        EXPECT_LT((s.x - before).norm(), 0.01 * 5 * 6.0);
    }
}

TEST(ReflectiveHmc, DirichletMeanOnTenAssets) {
    // concentration 100 * ω_bm keeps every α_i above 1
    const int n = 10;
    const auto sx = simplex(n);
    Vec bm(n);
    for (int i = 0; i < n; ++i) bm[i] = 1.0 + i;
    bm /= bm.sum();
    const auto target = TargetDensity::dirichlet(100.0 * bm).transformed(sx.emb);
    const auto s = sample(sx.body, target, config(WalkKind::rehmc, 41, 1, 500), 20000, 2,
                          AffineMap::from_embedding(sx.emb));
    const Mat& W = *s.lifted;
    SampleSet lifted = s;
    lifted.draws = W;
    const Vec mean = W.colwise().mean();
    const Vec se = mean_standard_error(lifted);
    for (int i = 0; i < n; ++i) EXPECT_LT(std::abs(mean[i] - bm[i]), 3.0 * se[i]) << "asset " << i;
}

// ---------------------------------------------------------------------------
// orchestration

TEST(Sample, ZeroDrawsGivesEmptySet) {
    const auto s = sample(square(), TargetDensity::uniform(), config(WalkKind::har, 1), 0, 3);
    EXPECT_EQ(s.draws.rows(), 0);
    EXPECT_EQ(s.draws.cols(), 2);
    ASSERT_EQ(s.chains.size(), 3u);
    for (const auto& c : s.chains) EXPECT_EQ(c.begin, c.end);
}

TEST(Sample, ChainsPartitionTheDraws) {
    const auto s = sample(square(), TargetDensity::uniform(), config(WalkKind::har, 1), 10, 3);
    ASSERT_EQ(s.chains.size(), 3u);
    EXPECT_EQ(s.chains[0].end - s.chains[0].begin, 4);
    EXPECT_EQ(s.chains[2].end, 10);
    EXPECT_EQ(s.chain_draws()[1].rows(), 3);
}

class EveryWalk : public ::testing::TestWithParam<WalkKind> {};

TEST_P(EveryWalk, DrawsAndLiftsSatisfyConstraints) {
    const int n = 6;
    const auto sx = simplex(n);
    const auto s = sample(sx.body, TargetDensity::uniform(), config(GetParam(), 3), 500, 2,
                          AffineMap::from_embedding(sx.emb));
    for (Eigen::Index i = 0; i < s.draws.rows(); ++i) {
        ASSERT_TRUE(membership(sx.body, s.draws.row(i).transpose(), 1e-8));
        const Vec w = s.lifted->row(i).transpose();
        ASSERT_TRUE(membership(orthant(n), w, 1e-8));
        ASSERT_NEAR(w.sum(), 1.0, 1e-8);
    }
}

TEST_P(EveryWalk, SameSeedIsBitIdentical) {
    const auto body = box(3);
    const auto a = sample(body, TargetDensity::uniform(), config(GetParam(), 77), 300, 3);
    ::setenv("POLYWALK_THREADS", "1", 1);
    const auto b = sample(body, TargetDensity::uniform(), config(GetParam(), 77), 300, 3);
    ::unsetenv("POLYWALK_THREADS");
    EXPECT_TRUE((a.draws.array() == b.draws.array()).all());
    const auto c = sample(body, TargetDensity::uniform(), config(GetParam(), 78), 300, 3);
    EXPECT_FALSE((a.draws.array() == c.draws.array()).all());
}

INSTANTIATE_TEST_SUITE_P(Walks, EveryWalk,
                         ::testing::Values(WalkKind::baw, WalkKind::har, WalkKind::cdhr, WalkKind::biw,
                                           WalkKind::dikin, WalkKind::vaidya, WalkKind::john, WalkKind::rehmc),
                         [](const auto& info) { return to_string(info.param); });

TEST(Sample, FlatSimplexSquaredNorm) {
    // E‖ω‖² = 2/(n+1) for ω uniform on the simplex
    const auto sx = simplex(3);
    for (WalkKind kind : {WalkKind::har, WalkKind::biw}) {
        const auto s = sample(sx.body, TargetDensity::uniform(), config(kind, 5, 5), 40000, 2,
                              AffineMap::from_embedding(sx.emb));
        const double m = s.lifted->rowwise().squaredNorm().mean();
        EXPECT_NEAR(m, 0.5, 0.005) << to_string(kind);
    }
}

TEST(Sample, IncompatiblePairingsRejected) {
    const auto sx = simplex(3);
    const auto dir = TargetDensity::dirichlet(Vec::Constant(3, 2.0)).transformed(sx.emb);
    for (WalkKind kind : {WalkKind::biw, WalkKind::dikin, WalkKind::vaidya, WalkKind::john}) {
        try {
            sample(sx.body, dir, config(kind, 1), 10);
            FAIL() << to_string(kind);
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::configuration);
            EXPECT_NE(std::string(e.what()).find("uniform"), std::string::npos);
        }
    }
    const ConvexBody with_ball(*box(2).polytope(), Ellipsoid(Mat::Identity(2, 2), 1.0));
    try {
        sample(with_ball, TargetDensity::uniform(), config(WalkKind::dikin, 1), 10);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("polytope-only"), std::string::npos);
    }
    EXPECT_THROW(sample(box(3), dir, config(WalkKind::har, 1), 10), Error);
    auto bad = config(WalkKind::har, 1);
    bad.thinning = 0;
    EXPECT_THROW(sample(box(2), TargetDensity::uniform(), bad, 10), Error);
}

TEST(Sample, FlatDirichletCountsAsUniform) {
    const auto sx = simplex(4);
    const auto flat = TargetDensity::dirichlet(Vec::Ones(4)).transformed(sx.emb);
    EXPECT_NO_THROW(sample(sx.body, flat, config(WalkKind::biw, 2), 50));
}

TEST(WalkKindNames, RoundTrip) {
    for (WalkKind k : {WalkKind::baw, WalkKind::har, WalkKind::cdhr, WalkKind::biw, WalkKind::dikin,
                       WalkKind::vaidya, WalkKind::john, WalkKind::rehmc})
        EXPECT_EQ(parse_walk_kind(to_string(k)), k);
    EXPECT_THROW(parse_walk_kind("nuts"), Error);
}

// ---------------------------------------------------------------------------
// stationarity: KS against analytic marginals, Bonferroni over coordinates

constexpr Eigen::Index kStationarityDraws = 10000;
constexpr double kRequiredEss = 5000;

/// KS test of one column at level 0.01 / n_tests, with the critical value
/// taken at the column's effective sample size.
void expect_marginal(const Mat& draws, Eigen::Index j, const std::function<double(double)>& cdf, Eigen::Index n_tests) {
    const double e = ess(Mat(draws.col(j)))[0];
    EXPECT_GE(e, kRequiredEss) << "column " << j << ": not enough effective draws";
    const double crit = ks_critical(static_cast<std::size_t>(e), 0.01 / static_cast<double>(n_tests));
    EXPECT_LT(ks_statistic(column(draws, j), cdf), crit) << "column " << j << ", ess " << e;
}

struct StationarityCase {
    WalkKind kind;
    bool on_simplex;
    int n;
    long thinning;
};

class Stationarity : public ::testing::TestWithParam<StationarityCase> {};

TEST_P(Stationarity, MarginalsPassKs) {
    const auto& p = GetParam();
    Mat draws;
    std::function<double(double)> cdf;
    if (p.on_simplex) {
        const auto sx = simplex(p.n);
        const auto s = sample(sx.body, TargetDensity::uniform(), config(p.kind, 100 + p.n, p.thinning, 500),
                              kStationarityDraws, 1, AffineMap::from_embedding(sx.emb));
        draws = *s.lifted;
        const boost::math::beta_distribution<> beta(1.0, p.n - 1.0);
        cdf = [beta](double x) { return boost::math::cdf(beta, std::clamp(x, 0.0, 1.0)); };
    } else {
        const auto s =
            sample(box(p.n), TargetDensity::uniform(), config(p.kind, 200 + p.n, p.thinning, 500), kStationarityDraws, 1);
        draws = s.draws;
        cdf = [](double x) { return std::clamp(0.5 * (x + 1.0), 0.0, 1.0); };
    }
    for (Eigen::Index j = 0; j < draws.cols(); ++j) expect_marginal(draws, j, cdf, draws.cols());
}

std::vector<StationarityCase> stationarity_cases() {
    const std::vector<std::pair<WalkKind, long>> walks{{WalkKind::baw, 40},    {WalkKind::har, 10},
                                                       {WalkKind::cdhr, 20},   {WalkKind::biw, 3},
                                                       {WalkKind::dikin, 150}, {WalkKind::vaidya, 200},
                                                       {WalkKind::john, 200},  {WalkKind::rehmc, 6}};
    std::vector<StationarityCase> out;
    for (const auto& [kind, thin] : walks)
        for (bool simplex_body : {false, true})
            for (int n : {2, 5}) out.push_back({kind, simplex_body, n, thin});
    return out;
}

INSTANTIATE_TEST_SUITE_P(Walks, Stationarity, ::testing::ValuesIn(stationarity_cases()), [](const auto& info) {
    return to_string(info.param.kind) + (info.param.on_simplex ? "_simplex" : "_box") + std::to_string(info.param.n);
});

// ---------------------------------------------------------------------------
// reversibility smoke check: transitions between three slabs are symmetric

class Reversibility : public ::testing::TestWithParam<WalkKind> {};

TEST_P(Reversibility, ThreeStateTransitionCountsBalance) {
    const auto body = square();
    auto cfg = config(GetParam(), 51, 1, 500);
    const auto s = sample(body, TargetDensity::uniform(), cfg, 60000, 1);
    auto cell = [](double x) { return x < -1.0 / 3.0 ? 0 : (x < 1.0 / 3.0 ? 1 : 2); };
    int counts[3][3] = {};
    for (Eigen::Index i = 1; i < s.draws.rows(); ++i) ++counts[cell(s.draws(i - 1, 0))][cell(s.draws(i, 0))];
    for (int a = 0; a < 3; ++a)
        for (int b = a + 1; b < 3; ++b) {
            const int total = counts[a][b] + counts[b][a];
            if (total == 0) continue;
            const boost::math::binomial_distribution<> bin(total, 0.5);
            const int lo = std::min(counts[a][b], counts[b][a]);
            const double pvalue = std::min(1.0, 2.0 * boost::math::cdf(bin, lo));
            EXPECT_GT(pvalue, 0.01 / 3.0) << a << "->" << b << ": " << counts[a][b] << " vs " << counts[b][a];
        }
}

INSTANTIATE_TEST_SUITE_P(Walks, Reversibility,
                         ::testing::Values(WalkKind::baw, WalkKind::dikin, WalkKind::vaidya, WalkKind::john),
                         [](const auto& info) { return to_string(info.param); });

// ---------------------------------------------------------------------------
// non-uniform stationarity: Dirichlet marginals are Beta(α_i, α_0 − α_i)

struct DirichletCase {
    WalkKind kind;
    int n;
    long thinning;
};

class DirichletStationarity : public ::testing::TestWithParam<DirichletCase> {};

TEST_P(DirichletStationarity, MarginalsPassKs) {
    const auto& p = GetParam();
    const auto sx = simplex(p.n);
    Vec alpha(p.n);
    for (int i = 0; i < p.n; ++i) alpha[i] = 1.5 + i;
    const auto target = TargetDensity::dirichlet(alpha).transformed(sx.emb);
    const auto s = sample(sx.body, target, config(p.kind, 300 + p.n, p.thinning, 1000), kStationarityDraws, 1,
                          AffineMap::from_embedding(sx.emb));
    for (int j = 0; j < p.n; ++j) {
        const boost::math::beta_distribution<> beta(alpha[j], alpha.sum() - alpha[j]);
        expect_marginal(*s.lifted, j, [&](double x) { return boost::math::cdf(beta, std::clamp(x, 0.0, 1.0)); }, p.n);
    }
}

INSTANTIATE_TEST_SUITE_P(Walks, DirichletStationarity,
                         ::testing::Values(DirichletCase{WalkKind::baw, 2, 40}, DirichletCase{WalkKind::baw, 5, 80},
                                           DirichletCase{WalkKind::har, 2, 10}, DirichletCase{WalkKind::har, 5, 20},
                                           DirichletCase{WalkKind::cdhr, 2, 10}, DirichletCase{WalkKind::cdhr, 5, 30},
                                           DirichletCase{WalkKind::rehmc, 2, 5}, DirichletCase{WalkKind::rehmc, 5, 5}),
                         [](const auto& info) { return to_string(info.param.kind) + std::to_string(info.param.n); });
