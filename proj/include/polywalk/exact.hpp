#pragma once

#include "polywalk/error.hpp"
#include "polywalk/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace polywalk {

/// P(<ω, z> <= gamma) for ω uniform on the canonical simplex.
///
/// Inputs are standardized to [0, 1] first; the statistic's distribution is
/// unchanged because the weights sum to one. Coordinates with u_i = 0 join the
/// nonnegative group.
inline double varsi_cdf(const Eigen::VectorXd& z, double gamma) {
    require(z.size() >= 1, ErrorKind::structural, "varsi_cdf: z must be non-empty");
    require(z.allFinite() && std::isfinite(gamma), ErrorKind::structural, "varsi_cdf: non-finite input");
    const double lo = z.minCoeff();
    const double hi = z.maxCoeff();
    if (gamma < lo) return 0.0;
    if (gamma >= hi) return 1.0;
    const double range = hi - lo;

    std::vector<double> pos, neg;
    pos.reserve(z.size());
    neg.reserve(z.size());
    const double g = (gamma - lo) / range;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        const double u = (z[i] - lo) / range - g;
        (u >= 0.0 ? pos : neg).push_back(u);
    }

    std::vector<double> A(pos.size() + 1, 0.0);
    A[0] = 1.0;
    for (const double uh : neg) {
        for (std::size_t f = 1; f < A.size(); ++f) {
            const double uf = pos[f - 1];
            A[f] = (uf * A[f] - uh * A[f - 1]) / (uf - uh);
        }
    }
    return std::clamp(A.back(), 0.0, 1.0);
}

/// varsi_cdf over a sorted grid of thresholds.
inline Eigen::VectorXd rp_linear_cdf(const Eigen::VectorXd& z, const Eigen::VectorXd& gammas) {
    for (Eigen::Index i = 1; i < gammas.size(); ++i)
        require(gammas[i - 1] <= gammas[i], ErrorKind::structural, "rp_linear_cdf: gamma grid must be sorted");
    Eigen::VectorXd out(gammas.size());
    for (Eigen::Index i = 0; i < gammas.size(); ++i) out[i] = varsi_cdf(z, gammas[i]);
    // guard against last-ulp non-monotonicity between neighbouring thresholds
    for (Eigen::Index i = 1; i < out.size(); ++i) out[i] = std::max(out[i], out[i - 1]);
    return out;
}

/// One Dirichlet(alpha) draw through normalized Gamma variates, computed in
/// log space.
inline Eigen::VectorXd dirichlet_draw(const Eigen::VectorXd& alpha, Rng& rng) {
    const Eigen::Index n = alpha.size();
    Eigen::VectorXd logs(n);
    for (Eigen::Index i = 0; i < n; ++i) logs[i] = rng.log_gamma_variate(alpha[i]);
    const double top = logs.maxCoeff();
    Eigen::VectorXd w = (logs.array() - top).exp().matrix();
    w /= w.sum();
    return w;
}

inline Eigen::MatrixXd sample_dirichlet(const Eigen::VectorXd& alpha, Eigen::Index k, std::uint64_t seed) {
    require(alpha.size() >= 1, ErrorKind::structural, "sample_dirichlet: alpha must be non-empty");
    require((alpha.array() > 0.0).all() && alpha.allFinite(), ErrorKind::structural,
            "sample_dirichlet: alpha entries must be positive");
    require(k >= 0, ErrorKind::structural, "sample_dirichlet: negative sample count");
    Rng rng(seed, 0);
    Eigen::MatrixXd out(k, alpha.size());
    for (Eigen::Index r = 0; r < k; ++r) out.row(r) = dirichlet_draw(alpha, rng).transpose();
    return out;
}

inline void check_left_stochastic(const Eigen::MatrixXd& M) {
    require(M.rows() == M.cols(), ErrorKind::structural, "shadow Dirichlet: M must be square");
    require((M.array() >= 0.0).all(), ErrorKind::structural, "shadow Dirichlet: M must be nonnegative");
    const Eigen::VectorXd colsum = M.colwise().sum().transpose();
    require((colsum.array() - 1.0).abs().maxCoeff() <= 1e-10, ErrorKind::structural,
            "shadow Dirichlet: columns of M must sum to 1");
    require(Eigen::FullPivLU<Eigen::MatrixXd>(M).isInvertible(), ErrorKind::structural,
            "shadow Dirichlet: M is singular");
}

inline Eigen::MatrixXd sample_shadow_dirichlet(const Eigen::MatrixXd& M, const Eigen::VectorXd& alpha, Eigen::Index k,
                                               std::uint64_t seed) {
    check_left_stochastic(M);
    require(M.cols() == alpha.size(), ErrorKind::structural, "sample_shadow_dirichlet: M and alpha sizes differ");
    return sample_dirichlet(alpha, k, seed) * M.transpose();
}

enum class MonotoneOrder { descending, ascending };

/// Left-stochastic M whose image of the simplex is the ordered cone section.
///
/// descending: column k (1-based) is 1/k on rows 1..k, so ω_1 > ω_2 > ... .
/// ascending:  column k is 1/(n−k+1) on rows k..n, so ω_1 < ω_2 < ... .
inline Eigen::MatrixXd monotone_M(Eigen::Index n, MonotoneOrder order = MonotoneOrder::descending) {
    require(n >= 1, ErrorKind::structural, "monotone_M: n must be positive");
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        if (order == MonotoneOrder::descending) {
            M.col(k).head(k + 1).setConstant(1.0 / static_cast<double>(k + 1));
        } else {
            M.col(k).tail(n - k).setConstant(1.0 / static_cast<double>(n - k));
        }
    }
    return M;
}

/// Rows c/m with c ~ Multinomial(m, p).
inline Eigen::MatrixXd sample_bootstrap_rp(Eigen::Index n, Eigen::Index m, const Eigen::VectorXd& p, Eigen::Index k,
                                           std::uint64_t seed) {
    require(n >= 1 && p.size() == n, ErrorKind::structural, "sample_bootstrap_rp: p must have n entries");
    require(m >= 1, ErrorKind::structural, "sample_bootstrap_rp: m must be at least 1");
    require((p.array() >= 0.0).all() && std::abs(p.sum() - 1.0) <= 1e-10, ErrorKind::structural,
            "sample_bootstrap_rp: p must lie on the simplex");
    std::vector<double> cdf(n);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) cdf[i] = (acc += p[i]);
    cdf.back() = 1.0;

    Rng rng(seed, 0);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(k, n);
    const double unit = 1.0 / static_cast<double>(m);
    for (Eigen::Index r = 0; r < k; ++r) {
        for (Eigen::Index j = 0; j < m; ++j) {
            const double u = rng.uniform();
            auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
            // skip zero-probability cells sitting on the same cumulative value
            const auto idx = std::min<std::ptrdiff_t>(it - cdf.begin(), n - 1);
            out(r, idx) += 1.0;
        }
        out.row(r) *= unit;
    }
    return out;
}

/// Dirichlet concentration whose second moments match Mult(m)/m bootstrap RPs.
inline double bootstrap_lambda(Eigen::Index n, Eigen::Index m) {
    return static_cast<double>(m - 1) / static_cast<double>(n);
}

struct LinearMoments {
    double mean;
    double variance;
};

/// Mean and variance of <ω, z> for ω ~ Dirichlet(alpha).
inline LinearMoments dirichlet_moments(const Eigen::VectorXd& alpha, const Eigen::VectorXd& z) {
    require(alpha.size() == z.size() && alpha.size() >= 1, ErrorKind::structural,
            "dirichlet_moments: alpha and z sizes differ");
    require((alpha.array() > 0.0).all(), ErrorKind::structural, "dirichlet_moments: alpha must be positive");
    const double a0 = alpha.sum();
    const Eigen::VectorXd p = alpha / a0;
    const double mean = p.dot(z);
    // Var = (Σ p_i z_i² − mean²) / (α0 + 1), written around the mean for accuracy
    const double spread = (p.array() * (z.array() - mean).square()).sum();
    return {mean, spread / (a0 + 1.0)};
}

}  // namespace polywalk
