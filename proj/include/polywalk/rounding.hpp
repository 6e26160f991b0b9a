#pragma once

// Multiphase isotropic rounding of a body and its target.

#include "polywalk/densities.hpp"
#include "polywalk/error.hpp"
#include "polywalk/geometry.hpp"
#include "polywalk/walks.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

namespace polywalk {

/// x = Lmap z + shift maps rounded coordinates z to original coordinates x.
struct RoundingTransform {
    Mat Lmap;
    Vec shift;
    double log_det = 0.0;  // log |det Lmap|

    static RoundingTransform identity(Eigen::Index d) { return {Mat::Identity(d, d), Vec::Zero(d), 0.0}; }

    Eigen::Index dim() const { return shift.size(); }
    Vec apply(const Vec& z) const { return Lmap * z + shift; }
    Vec invert(const Vec& x) const { return Lmap.partialPivLu().solve(x - shift); }

    /// Row-wise apply for a k x d sample matrix.
    Mat apply_rows(const Mat& Z) const {
        Mat X = Z * Lmap.transpose();
        X.rowwise() += shift.transpose();
        return X;
    }

    AffineMap as_map() const { return {Lmap, shift}; }

    /// this ∘ inner: first inner, then this.
    RoundingTransform after(const RoundingTransform& inner) const {
        return {Lmap * inner.Lmap, Lmap * inner.shift + shift, log_det + inner.log_det};
    }
};

struct IsotropyReport {
    Vec mean;
    Mat covariance;
    Vec eigenvalues;   // ascending
    Mat eigenvectors;  // columns match eigenvalues
    double ratio = 0.0;  // λmax / λmin, +inf when λmin <= 1e-12 λmax
};

inline constexpr double kEigenFloor = 1e-12;

inline IsotropyReport isotropy_report(const Mat& samples) {
    const Eigen::Index k = samples.rows();
    const Eigen::Index d = samples.cols();
    require(d >= 1, ErrorKind::structural, "isotropy_report: samples have no columns");
    require(k >= d + 1, ErrorKind::insufficient,
            "isotropy_report: need at least d+1 = " + std::to_string(d + 1) + " samples, got " + std::to_string(k));
    IsotropyReport rep;
    rep.mean = samples.colwise().mean().transpose();
    const Mat centered = samples.rowwise() - rep.mean.transpose();
    rep.covariance = centered.transpose() * centered / static_cast<double>(k - 1);
    Eigen::SelfAdjointEigenSolver<Mat> eig(rep.covariance);
    rep.eigenvalues = eig.eigenvalues();
    rep.eigenvectors = eig.eigenvectors();
    const double top = rep.eigenvalues.maxCoeff();
    const double bottom = rep.eigenvalues.minCoeff();
    rep.ratio = (top > 0.0 && bottom > kEigenFloor * top) ? top / bottom : kInf;
    return rep;
}

struct RoundingOptions {
    int max_phases = 10;
    double target_ratio = 4.0;
    int n_chains = 1;
    Eigen::Index samples_per_phase = 0;  // 0: max(1000, 20 d)
};

struct RoundingResult {
    RoundingTransform transform;
    ConvexBody body;
    TargetDensity target;
    int phases = 0;
    bool converged = false;
    std::vector<double> ratios;  // spectrum ratio measured in each phase
};

namespace detail {

inline std::string format_direction(const Vec& v) {
    std::ostringstream os;
    os.precision(4);
    os << "(";
    for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
    os << ")";
    return os.str();
}

}  // namespace detail

/// Whitening map z_old = mean + Q Λ^{1/2} Q' z_new for a phase's samples.
/// `frame` maps the phase's coordinates to the original ones and is only
/// used to report a null direction in original coordinates.
inline RoundingTransform whitening_step(const IsotropyReport& rep, const Mat& frame) {
    if (!std::isfinite(rep.ratio))
        fail(ErrorKind::degenerate, "round_isotropic: sample covariance is rank-deficient along " +
                                        detail::format_direction((frame * rep.eigenvectors.col(0)).normalized()) +
                                        "; the body is not full-dimensional");
    const Vec root = rep.eigenvalues.cwiseMax(kEigenFloor * rep.eigenvalues.maxCoeff()).cwiseSqrt();
    const Mat W = rep.eigenvectors * root.asDiagonal() * rep.eigenvectors.transpose();
    return {W, rep.mean, root.array().log().sum()};
}

/// Repeatedly sample, then whiten by the sample covariance, until the
/// spectrum ratio of a phase's samples is at most `target_ratio`.
/// Uniform targets are sampled with the billiard walk, others with
/// reflective HMC; `walk_cfg` supplies seed, burn-in and thinning.
inline RoundingResult round_isotropic(const ConvexBody& body, const TargetDensity& target, const WalkConfig& walk_cfg,
                                      const RoundingOptions& opts = {}) {
    require(opts.max_phases >= 1, ErrorKind::configuration, "round_isotropic: max_phases must be at least 1");
    const Eigen::Index d = body.dim();
    const Eigen::Index k = opts.samples_per_phase > 0 ? opts.samples_per_phase : std::max<Eigen::Index>(1000, 20 * d);

    RoundingResult res{RoundingTransform::identity(d), body, target, 0, false, {}};
    WalkConfig cfg = walk_cfg;
    cfg.kind = target.is_uniform() ? WalkKind::biw : WalkKind::rehmc;
    // scale-dependent defaults are recomputed for each rounded body
    cfg.delta = cfg.tau = cfg.eta = 0.0;

    for (int phase = 0; phase < opts.max_phases; ++phase) {
        cfg.seed = walk_cfg.seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(phase + 1);
        const SampleSet s = sample(res.body, res.target, cfg, k, opts.n_chains);
        const IsotropyReport rep = isotropy_report(s.draws);
        res.phases = phase + 1;
        res.ratios.push_back(rep.ratio);
        if (std::isfinite(rep.ratio) && rep.ratio <= opts.target_ratio) {
            res.converged = true;
            return res;
        }
        const RoundingTransform step = whitening_step(rep, res.transform.Lmap);

        Vec inner = step.invert(res.body.interior() ? *res.body.interior() : interior_point(res.body));
        res.body = affine_pullback(res.body, step.Lmap, step.shift);
        if (strictly_interior(res.body, inner)) res.body = res.body.with_interior(inner);
        res.target = res.target.transformed(step.as_map());
        res.transform = res.transform.after(step);
    }
    return res;
}

}  // namespace polywalk
