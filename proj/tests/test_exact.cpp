#include "polywalk/exact.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

using namespace polywalk;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Uniform simplex points from the spacings of sorted uniforms; independent of
// the Gamma route used by the library.
MatrixXd spacings_sample(int n, int k, std::uint64_t seed) {
    Rng rng(seed, 99);
    MatrixXd out(k, n);
    std::vector<double> u(n + 1);
    for (int r = 0; r < k; ++r) {
        u[0] = 0.0;
        for (int i = 1; i < n; ++i) u[i] = rng.uniform();
        u[n] = 1.0;
        std::sort(u.begin() + 1, u.begin() + n);
        for (int i = 0; i < n; ++i) out(r, i) = u[i + 1] - u[i];
    }
    return out;
}

VectorXd random_vector(Rng& rng, int n, double lo, double hi) {
    VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.uniform(lo, hi);
    return v;
}

}  // namespace

TEST(Varsi, TrivialAnchors) {
    VectorXd z(2);
    z << 0, 1;
    EXPECT_NEAR(varsi_cdf(z, 0.3), 0.3, 1e-12);
    VectorXd z3(3);
    z3 << 0, 0.5, 1;
    EXPECT_NEAR(varsi_cdf(z3, 0.5), 0.5, 1e-12);
}

TEST(Varsi, ShortCircuits) {
    VectorXd z(3);
    z << 0.2, 0.5, 0.9;
    EXPECT_EQ(varsi_cdf(z, 0.1), 0.0);
    EXPECT_EQ(varsi_cdf(z, 0.9), 1.0);
    EXPECT_EQ(varsi_cdf(z, 5.0), 1.0);
    VectorXd one(1);
    one << 0.4;
    EXPECT_EQ(varsi_cdf(one, 0.39), 0.0);
    EXPECT_EQ(varsi_cdf(one, 0.4), 1.0);
}

TEST(Varsi, MatchesSpacingsMonteCarlo) {
    Rng rng(101);
    const int n = 10;
    const MatrixXd W = spacings_sample(n, 1000000, 7);
    for (int trial = 0; trial < 5; ++trial) {
        const VectorXd z = random_vector(rng, n, -1.0, 1.0);
        const VectorXd stat = W * z;
        const double gamma = rng.uniform(stat.minCoeff(), stat.maxCoeff());
        const double mc = (stat.array() <= gamma).cast<double>().mean();
        EXPECT_NEAR(varsi_cdf(z, gamma), mc, 0.005);
    }
}

TEST(Varsi, ReflectionIdentity) {
    Rng rng(102);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform_index(30));
        const VectorXd z = random_vector(rng, n, -2.0, 3.0);
        const double gamma = rng.uniform(z.minCoeff(), z.maxCoeff());
        EXPECT_NEAR(varsi_cdf(z, gamma) + varsi_cdf(-z, -gamma), 1.0, 1e-10);
    }
}

TEST(Varsi, PermutationAndShiftInvariance) {
    Rng rng(103);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform_index(20));
        VectorXd z = random_vector(rng, n, 0.0, 1.0);
        const double gamma = rng.uniform(0.0, 1.0);
        const double base = varsi_cdf(z, gamma);
        VectorXd perm = z;
        std::vector<int> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        for (int i = n - 1; i > 0; --i) std::swap(idx[i], idx[rng.uniform_index(i + 1)]);
        for (int i = 0; i < n; ++i) perm[i] = z[idx[i]];
        EXPECT_NEAR(varsi_cdf(perm, gamma), base, 1e-12);
        const double c = rng.uniform(-5.0, 5.0);
        EXPECT_NEAR(varsi_cdf((z.array() + c).matrix(), gamma + c), base, 1e-10);
    }
}

TEST(Varsi, LargeNStaysInUnitInterval) {
    Rng rng(104);
    const VectorXd z = random_vector(rng, 200, -1.0, 1.0);
    for (double g = -0.5; g <= 0.5; g += 0.05) {
        const double p = varsi_cdf(z, g);
        EXPECT_GE(p, 0.0);
        EXPECT_LE(p, 1.0);
    }
}

TEST(RpLinearCdf, EndpointsAndMonotone) {
    Rng rng(105);
    const VectorXd z = random_vector(rng, 8, 0.0, 1.0);
    VectorXd below = VectorXd::LinSpaced(5, -2.0, z.minCoeff() - 0.01);
    EXPECT_EQ(rp_linear_cdf(z, below).maxCoeff(), 0.0);
    VectorXd above = VectorXd::LinSpaced(5, z.maxCoeff(), 3.0);
    EXPECT_EQ(rp_linear_cdf(z, above).minCoeff(), 1.0);
    const VectorXd grid = VectorXd::LinSpaced(101, -0.1, 1.1);
    const VectorXd cdf = rp_linear_cdf(z, grid);
    for (Eigen::Index i = 1; i < cdf.size(); ++i) EXPECT_GE(cdf[i], cdf[i - 1]);
    EXPECT_EQ(cdf[0], 0.0);
    EXPECT_EQ(cdf[100], 1.0);
    VectorXd unsorted(2);
    unsorted << 0.5, 0.1;
    EXPECT_THROW(rp_linear_cdf(z, unsorted), Error);
}

TEST(SampleDirichlet, MeanWithinThreeSE) {
    VectorXd alpha(4);
    alpha << 0.5, 1.0, 2.0, 6.5;
    const MatrixXd W = sample_dirichlet(alpha, 100000, 5);
    const double a0 = alpha.sum();
    for (int i = 0; i < 4; ++i) {
        const double p = alpha[i] / a0;
        const double se = std::sqrt(p * (1 - p) / (a0 + 1) / W.rows());
        EXPECT_NEAR(W.col(i).mean(), p, 3 * se);
    }
}

// Flat Dirichlet: E||ω||² = n (Var ω_i + 1/n²) = 2/(n+1).
TEST(SampleDirichlet, FlatSquaredNorm) {
    for (int n : {3, 10, 50}) {
        const MatrixXd W = sample_dirichlet(VectorXd::Ones(n), 200000, 6);
        const double m = W.rowwise().squaredNorm().mean();
        const double exact = 2.0 / (n + 1.0);
        EXPECT_NEAR(m, exact, 0.01 * exact);
        const MatrixXd S = spacings_sample(n, 200000, 16);
        EXPECT_NEAR(S.rowwise().squaredNorm().mean(), exact, 0.01 * exact);
        double closed = 0.0;
        for (int i = 0; i < n; ++i)
            closed += dirichlet_moments(VectorXd::Ones(n), VectorXd::Unit(n, i)).variance + 1.0 / (n * n);
        EXPECT_NEAR(closed, exact, 1e-14);
    }
}

// The (2n-1)/n² second moment belongs to the m = n multinomial bootstrap.
TEST(Bootstrap, SquaredNormWithMEqualN) {
    for (int n : {3, 10}) {
        const MatrixXd W = sample_bootstrap_rp(n, n, VectorXd::Constant(n, 1.0 / n), 200000, 17);
        const double target = (2.0 * n - 1.0) / (n * n);
        EXPECT_NEAR(W.rowwise().squaredNorm().mean(), target, 0.01 * target);
    }
}

TEST(SampleDirichlet, RowsOnSimplexAndDegenerateN) {
    VectorXd alpha(5);
    alpha << 0.01, 0.1, 1, 10, 100;
    const MatrixXd W = sample_dirichlet(alpha, 5000, 8);
    EXPECT_LE((W.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
    EXPECT_GE(W.minCoeff(), 0.0);
    const MatrixXd one = sample_dirichlet(VectorXd::Constant(1, 2.5), 10, 1);
    EXPECT_TRUE((one.array() == 1.0).all());
}

TEST(SampleDirichlet, Deterministic) {
    EXPECT_EQ(sample_dirichlet(VectorXd::Ones(4), 50, 9), sample_dirichlet(VectorXd::Ones(4), 50, 9));
}

TEST(ShadowDirichlet, IdentityIsPlain) {
    const VectorXd alpha = VectorXd::Constant(3, 1.5);
    EXPECT_EQ(sample_shadow_dirichlet(MatrixXd::Identity(3, 3), alpha, 100, 3), sample_dirichlet(alpha, 100, 3));
}

TEST(ShadowDirichlet, MonotoneOrdering) {
    const int n = 6;
    const MatrixXd W = sample_shadow_dirichlet(monotone_M(n), VectorXd::Ones(n), 20000, 4);
    for (Eigen::Index r = 0; r < W.rows(); ++r)
        for (int i = 0; i + 1 < n; ++i) ASSERT_GT(W(r, i), W(r, i + 1));
    EXPECT_LE((W.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
}

TEST(ShadowDirichlet, MeanIsMappedMean) {
    MatrixXd M(3, 3);
    M << 0.6, 0.2, 0.1, 0.3, 0.7, 0.2, 0.1, 0.1, 0.7;
    VectorXd alpha(3);
    alpha << 1, 2, 3;
    const MatrixXd W = sample_shadow_dirichlet(M, alpha, 100000, 10);
    const VectorXd expected = M * (alpha / alpha.sum());
    for (int i = 0; i < 3; ++i) {
        const double sd = std::sqrt((W.col(i).array() - W.col(i).mean()).square().mean());
        EXPECT_NEAR(W.col(i).mean(), expected[i], 3 * sd / std::sqrt(1e5));
    }
}

TEST(ShadowDirichlet, SingularRejected) {
    MatrixXd M(2, 2);
    M << 0.5, 0.5, 0.5, 0.5;
    EXPECT_THROW(sample_shadow_dirichlet(M, VectorXd::Ones(2), 1, 1), Error);
}

TEST(MonotoneM, AscendingColumnFormula) {
    MatrixXd two(2, 2);
    two << 0.5, 0, 0.5, 1;
    EXPECT_EQ(monotone_M(2, MonotoneOrder::ascending), two);
    const MatrixXd three = monotone_M(3, MonotoneOrder::ascending);
    EXPECT_EQ(three.col(2), VectorXd::Unit(3, 2));
    EXPECT_NEAR(three(0, 0), 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(three(1, 1), 0.5, 1e-15);
}

TEST(MonotoneM, ColumnSumsAndOrderings) {
    for (int n = 1; n <= 12; ++n) {
        for (auto order : {MonotoneOrder::descending, MonotoneOrder::ascending}) {
            const MatrixXd M = monotone_M(n, order);
            EXPECT_LE((M.colwise().sum().array() - 1.0).abs().maxCoeff(), 1e-14);
            EXPECT_NO_THROW(check_left_stochastic(M));
        }
    }
    const MatrixXd W = sample_shadow_dirichlet(monotone_M(4, MonotoneOrder::ascending), VectorXd::Ones(4), 2000, 1);
    for (Eigen::Index r = 0; r < W.rows(); ++r)
        for (int i = 0; i < 3; ++i) ASSERT_LT(W(r, i), W(r, i + 1));
}

TEST(Bootstrap, SingleDrawGivesVertices) {
    const MatrixXd W = sample_bootstrap_rp(5, 1, VectorXd::Constant(5, 0.2), 500, 2);
    for (Eigen::Index r = 0; r < W.rows(); ++r) {
        EXPECT_EQ(W.row(r).maxCoeff(), 1.0);
        EXPECT_EQ(W.row(r).sum(), 1.0);
    }
}

TEST(Bootstrap, GridAndMean) {
    const int n = 7, m = 13;
    const MatrixXd W = sample_bootstrap_rp(n, m, VectorXd::Constant(n, 1.0 / n), 50000, 3);
    EXPECT_LE(((W.array() * m) - (W.array() * m).round()).abs().maxCoeff(), 1e-9);
    EXPECT_LE((W.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
    const double p = 1.0 / n;
    const double se = std::sqrt(p * (1 - p) / m / W.rows());
    for (int i = 0; i < n; ++i) EXPECT_NEAR(W.col(i).mean(), p, 3 * se);
}

TEST(Bootstrap, LambdaMappingVariance) {
    const int n = 20, m = 5;
    Rng rng(11);
    const VectorXd z = random_vector(rng, n, -1.0, 1.0);
    const MatrixXd W = sample_bootstrap_rp(n, m, VectorXd::Constant(n, 1.0 / n), 100000, 12);
    const VectorXd stat = W * z;
    const double var = (stat.array() - stat.mean()).square().sum() / (stat.size() - 1);
    const auto mom = dirichlet_moments(VectorXd::Constant(n, bootstrap_lambda(n, m)), z);
    EXPECT_NEAR(var / mom.variance, 1.0, 0.05);
}

TEST(Moments, Examples) {
    EXPECT_NEAR(dirichlet_moments(VectorXd::Constant(4, 2.0), VectorXd::Constant(4, 3.0)).variance, 0.0, 1e-15);
    VectorXd z(2);
    z << 0, 1;
    const auto mom = dirichlet_moments(VectorXd::Ones(2), z);
    EXPECT_NEAR(mom.mean, 0.5, 1e-15);
    EXPECT_NEAR(mom.variance, 1.0 / 12.0, 1e-15);
}

TEST(Moments, MatchMonteCarlo) {
    Rng rng(13);
    const VectorXd alpha = random_vector(rng, 6, 0.3, 3.0);
    const VectorXd z = random_vector(rng, 6, -1.0, 2.0);
    const MatrixXd W = sample_dirichlet(alpha, 1000000, 14);
    const VectorXd stat = W * z;
    const double mean = stat.mean();
    const double var = (stat.array() - mean).square().sum() / (stat.size() - 1);
    const auto mom = dirichlet_moments(alpha, z);
    const double k = static_cast<double>(stat.size());
    EXPECT_NEAR(mean, mom.mean, 3 * std::sqrt(mom.variance / k));
    const double m4 = (stat.array() - mean).pow(4).mean();
    EXPECT_NEAR(var, mom.variance, 3 * std::sqrt((m4 - var * var) / k));
}
