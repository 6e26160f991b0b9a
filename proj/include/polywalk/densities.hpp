#pragma once

#include "polywalk/error.hpp"
#include "polywalk/geometry.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <string>

namespace polywalk {

/// x = T y + offset
struct AffineMap {
    Mat T;
    Vec offset;

    Vec apply(const Vec& y) const { return T * y + offset; }

    /// this ∘ inner: y -> T (inner.T y + inner.offset) + offset
    AffineMap after(const AffineMap& inner) const { return {T * inner.T, T * inner.offset + offset}; }

    static AffineMap from_embedding(const AffineEmbedding& emb) { return {emb.N.transpose(), emb.x0}; }
};

enum class DensityKind { uniform, dirichlet, shadow_dirichlet };

/// Unnormalized target log-density, possibly pulled back through an affine
/// change of coordinates (null-space embedding, rounding, or both).
class TargetDensity {
public:
    static TargetDensity uniform() { return TargetDensity(); }

    static TargetDensity dirichlet(Vec alpha) {
        check_alpha(alpha);
        TargetDensity t;
        t.kind_ = DensityKind::dirichlet;
        t.alpha_ = std::move(alpha);
        return t;
    }

    static TargetDensity shadow_dirichlet(const Mat& M, Vec alpha) {
        check_alpha(alpha);
        require(M.rows() == M.cols() && M.rows() == alpha.size(), ErrorKind::structural,
                "shadow_dirichlet: M must be n x n with n = alpha size");
        const Vec colsum = M.colwise().sum().transpose();
        require((colsum.array() - 1.0).abs().maxCoeff() <= 1e-10, ErrorKind::structural,
                "shadow_dirichlet: columns of M must sum to 1");
        require((M.array() >= 0.0).all(), ErrorKind::structural, "shadow_dirichlet: M must be nonnegative");
        Eigen::FullPivLU<Mat> lu(M);
        require(lu.isInvertible(), ErrorKind::structural, "shadow_dirichlet: M must be invertible");
        TargetDensity t;
        t.kind_ = DensityKind::shadow_dirichlet;
        t.alpha_ = std::move(alpha);
        t.Minv_ = lu.inverse();
        return t;
    }

    /// Same density expressed in coordinates y where base = map(y).
    TargetDensity transformed(const AffineMap& map) const {
        if (dim() >= 0)
            require(map.T.rows() == dim(), ErrorKind::structural,
                    "TargetDensity::transformed: map output dimension does not match the density");
        TargetDensity t = *this;
        t.map_ = map_ ? map_->after(map) : map;
        return t;
    }

    TargetDensity transformed(const AffineEmbedding& emb) const { return transformed(AffineMap::from_embedding(emb)); }

    DensityKind kind() const { return kind_; }
    const Vec& alpha() const { return alpha_; }
    const std::optional<AffineMap>& map() const { return map_; }

    /// Constant log-density on its support (uniform, or Dirichlet with all
    /// alpha equal to one).
    bool is_uniform() const {
        return kind_ == DensityKind::uniform || (alpha_.array() == 1.0).all();
    }

    /// Dimension of the coordinates the density is evaluated in; -1 when any
    /// dimension is accepted (unmapped uniform).
    Eigen::Index dim() const {
        if (map_) return map_->T.cols();
        return base_dim();
    }

    /// Σ(α_i − 1) ln x_i in base coordinates; −∞ outside the support.
    double log_density(const Vec& y) const {
        if (dim() >= 0 && y.size() != dim()) fail(ErrorKind::structural, "log_density: dimension mismatch");
        if (kind_ == DensityKind::uniform) return 0.0;
        const Vec x = weights(y);
        double acc = 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            if (!(x[i] > 0.0)) return -std::numeric_limits<double>::infinity();
            if (alpha_[i] != 1.0) acc += (alpha_[i] - 1.0) * std::log(x[i]);
        }
        return acc;
    }

    Vec grad_log_density(const Vec& y) const {
        if (dim() >= 0 && y.size() != dim()) fail(ErrorKind::structural, "grad_log_density: dimension mismatch");
        if (kind_ == DensityKind::uniform) return Vec::Zero(y.size());
        const Vec x = weights(y);
        if (!((x.array() > 0.0).all())) fail(ErrorKind::degenerate, "grad_log_density: point outside the support");
        Vec g = (alpha_.array() - 1.0) / x.array();
        if (kind_ == DensityKind::shadow_dirichlet) g = Minv_.transpose() * g;
        if (map_) g = map_->T.transpose() * g;
        return g;
    }

    /// The Dirichlet-distributed coordinates at y (after un-shadowing).
    Vec weights(const Vec& y) const {
        Vec x = map_ ? map_->apply(y) : y;
        if (kind_ == DensityKind::shadow_dirichlet) x = Minv_ * x;
        return x;
    }

private:
    TargetDensity() = default;

    Eigen::Index base_dim() const { return kind_ == DensityKind::uniform ? -1 : alpha_.size(); }

    static void check_alpha(const Vec& alpha) {
        require(alpha.size() >= 1, ErrorKind::structural, "Dirichlet: alpha must be non-empty");
        require((alpha.array() > 0.0).all() && alpha.allFinite(), ErrorKind::structural,
                "Dirichlet: all alpha entries must be positive and finite");
    }

    DensityKind kind_ = DensityKind::uniform;
    Vec alpha_;
    Mat Minv_;
    std::optional<AffineMap> map_;
};

}  // namespace polywalk
