#pragma once

// Convex bodies K = P ∩ E and the oracles every walk consumes: membership,
// boundary (ray shooting), reflection, null-space embedding of equality
// constraints, and interior points.

#include "polywalk/error.hpp"
#include "polywalk/optimize.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace polywalk {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kMembershipTol = 1e-9;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// {x : A x <= b}
class HPolytope {
public:
    HPolytope() = default;
    HPolytope(Mat A, Vec b) : A_(std::move(A)), b_(std::move(b)) {
        require(A_.rows() == b_.size(), ErrorKind::structural, "HPolytope: A has " + std::to_string(A_.rows()) +
                                                                   " rows but b has " + std::to_string(b_.size()));
        require(A_.rows() >= 1, ErrorKind::structural, "HPolytope: at least one facet required");
        require(A_.allFinite() && b_.allFinite(), ErrorKind::structural, "HPolytope: non-finite coefficients");
        norms_ = A_.rowwise().norm();
    }

    const Mat& A() const { return A_; }
    const Vec& b() const { return b_; }
    const Vec& row_norms() const { return norms_; }
    Eigen::Index dim() const { return A_.cols(); }
    Eigen::Index facets() const { return A_.rows(); }

    Vec slack(const Vec& x) const { return b_ - A_ * x; }

private:
    Mat A_;
    Vec b_;
    Vec norms_;
};

/// {x : (x - center)' E (x - center) <= c}. Bodies read from files are
/// centered at the origin; embedding and rounding produce shifted centers.
class Ellipsoid {
public:
    Ellipsoid() = default;
    Ellipsoid(Mat E, double c) : Ellipsoid(std::move(E), c, Vec::Zero(0)) {}
    Ellipsoid(Mat E, double c, Vec center) : E_(std::move(E)), c_(c), center_(std::move(center)) {
        require(E_.rows() == E_.cols(), ErrorKind::structural, "Ellipsoid: E must be square");
        if (center_.size() == 0) center_ = Vec::Zero(E_.rows());
        require(center_.size() == E_.rows(), ErrorKind::structural, "Ellipsoid: center dimension mismatch");
        require(E_.allFinite() && std::isfinite(c_), ErrorKind::structural, "Ellipsoid: non-finite coefficients");
        require(c_ > 0.0, ErrorKind::structural, "Ellipsoid: c must be positive");
        const double scale = std::max(1.0, E_.cwiseAbs().maxCoeff());
        require((E_ - E_.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale, ErrorKind::structural,
                "Ellipsoid: E must be symmetric");
        E_ = 0.5 * (E_ + E_.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Mat> eig(E_, Eigen::EigenvaluesOnly);
        require(eig.eigenvalues().minCoeff() >= -1e-10 * scale, ErrorKind::structural,
                "Ellipsoid: E must be positive semidefinite");
    }

    const Mat& E() const { return E_; }
    double c() const { return c_; }
    const Vec& center() const { return center_; }
    Eigen::Index dim() const { return E_.rows(); }

    double quadratic(const Vec& x) const {
        const Vec d = x - center_;
        return d.dot(E_ * d);
    }

private:
    Mat E_;
    double c_ = 1.0;
    Vec center_;
};

class ConvexBody {
public:
    ConvexBody() = default;
    explicit ConvexBody(HPolytope P) : polytope_(std::move(P)) { validate(); }
    explicit ConvexBody(Ellipsoid E) : ellipsoid_(std::move(E)) { validate(); }
    ConvexBody(HPolytope P, Ellipsoid E) : polytope_(std::move(P)), ellipsoid_(std::move(E)) { validate(); }
    ConvexBody(std::optional<HPolytope> P, std::optional<Ellipsoid> E)
        : polytope_(std::move(P)), ellipsoid_(std::move(E)) {
        validate();
    }

    const std::optional<HPolytope>& polytope() const { return polytope_; }
    const std::optional<Ellipsoid>& ellipsoid() const { return ellipsoid_; }
    bool has_polytope() const { return polytope_.has_value(); }
    bool has_ellipsoid() const { return ellipsoid_.has_value(); }

    Eigen::Index dim() const { return polytope_ ? polytope_->dim() : ellipsoid_->dim(); }

    /// Interior point certifying non-emptiness, once computed.
    const std::optional<Vec>& interior() const { return interior_; }
    ConvexBody with_interior(Vec point) const {
        ConvexBody copy = *this;
        copy.interior_ = std::move(point);
        return copy;
    }

private:
    void validate() const {
        require(polytope_ || ellipsoid_, ErrorKind::structural, "ConvexBody: needs a polytope or an ellipsoid");
        if (polytope_ && ellipsoid_)
            require(polytope_->dim() == ellipsoid_->dim(), ErrorKind::structural,
                    "ConvexBody: polytope and ellipsoid dimensions differ");
    }

    std::optional<HPolytope> polytope_;
    std::optional<Ellipsoid> ellipsoid_;
    std::optional<Vec> interior_;
};

inline void check_dim(const ConvexBody& body, const Vec& x, const char* who) {
    if (x.size() != body.dim())
        fail(ErrorKind::structural, std::string(who) + ": point has dimension " + std::to_string(x.size()) +
                                        ", body has " + std::to_string(body.dim()));
}

inline bool membership(const ConvexBody& body, const Vec& x, double tol = kMembershipTol) {
    check_dim(body, x, "membership");
    if (body.polytope()) {
        const auto& P = *body.polytope();
        if (((P.A() * x - P.b()).array() > tol).any()) return false;
    }
    if (body.ellipsoid() && body.ellipsoid()->quadratic(x) > body.ellipsoid()->c() + tol) return false;
    return true;
}

/// Strict interior test used for walk start points.
inline bool strictly_interior(const ConvexBody& body, const Vec& x) {
    if (body.polytope() && body.polytope()->slack(x).minCoeff() <= 0.0) return false;
    if (body.ellipsoid() && body.ellipsoid()->quadratic(x) >= body.ellipsoid()->c()) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Ray shooting
// ---------------------------------------------------------------------------

inline constexpr int kEllipsoidTag = -1;

struct HitRecord {
    double t = 0.0;
    int tag = kEllipsoidTag;  // facet index, or kEllipsoidTag
    Vec point;
    bool on_ellipsoid() const { return tag == kEllipsoidTag; }
};

namespace detail {

/// Positive root of a t^2 + b t + c0 = 0 for a start inside (c0 <= 0), a > 0.
/// Uses the cancellation-free form of the quadratic formula.
inline double forward_root(double a, double b, double c0) {
    c0 = std::min(c0, 0.0);
    const double disc = std::sqrt(std::max(b * b - 4.0 * a * c0, 0.0));
    if (b > 0.0) {
        const double denom = b + disc;
        return denom > 0.0 ? -2.0 * c0 / denom : 0.0;
    }
    return (-b + disc) / (2.0 * a);
}

/// Both roots (t_minus <= 0 <= t_plus) of the line through an inside point.
inline std::pair<double, double> chord_roots(double a, double b, double c0) {
    c0 = std::min(c0, 0.0);
    const double disc = std::sqrt(std::max(b * b - 4.0 * a * c0, 0.0));
    const double q = -0.5 * (b + (b >= 0.0 ? disc : -disc));
    double r1 = q != 0.0 ? q / a : 0.0;
    double r2 = q != 0.0 ? c0 / q : 0.0;
    if (r1 > r2) std::swap(r1, r2);
    return {r1, r2};
}

}  // namespace detail

/// First intersection of the ray p + t v (t > 0) with the boundary.
/// Facet roots t = (b_j - a_j'p) / (a_j'v); ellipsoid root from
/// (v'Ev) t^2 + 2 (p-c)'Ev t + ((p-c)'E(p-c) - c) = 0. The smaller positive
/// root wins; a facet wins ties within 1e-12.
inline HitRecord boundary_oracle(const ConvexBody& body, const Vec& p, const Vec& v) {
    check_dim(body, p, "boundary_oracle");
    check_dim(body, v, "boundary_oracle");
    require(v.norm() > 0.0, ErrorKind::structural, "boundary_oracle: zero direction");
    if (!strictly_interior(body, p)) fail(ErrorKind::degenerate, "boundary_oracle: start point is not strictly interior");

    HitRecord hit;
    hit.t = kInf;
    if (body.polytope()) {
        const auto& P = *body.polytope();
        const Vec slack = P.slack(p);
        const Vec av = P.A() * v;
        for (Eigen::Index j = 0; j < P.facets(); ++j) {
            if (av[j] <= 0.0) continue;
            const double t = slack[j] / av[j];
            if (t < hit.t) {
                hit.t = t;
                hit.tag = static_cast<int>(j);
            }
        }
    }
    if (body.ellipsoid()) {
        const auto& El = *body.ellipsoid();
        const Vec d = p - El.center();
        const Vec Ev = El.E() * v;
        const double a = v.dot(Ev);
        if (a > 0.0) {
            const double t = detail::forward_root(a, 2.0 * d.dot(Ev), d.dot(El.E() * d) - El.c());
            if (t > 0.0 && t < hit.t - 1e-12) {
                hit.t = t;
                hit.tag = kEllipsoidTag;
            }
        }
    }
    if (!std::isfinite(hit.t)) fail(ErrorKind::unbounded, "boundary_oracle: ray never leaves the body");
    hit.point = p + hit.t * v;
    return hit;
}

struct Chord {
    double lower;  // <= 0
    double upper;  // >= 0
    double length() const { return upper - lower; }
};

/// Both chord endpoints of the line p + t v through an interior point.
inline Chord line_chord(const ConvexBody& body, const Vec& p, const Vec& v) {
    Chord ch{-kInf, kInf};
    if (body.polytope()) {
        const auto& P = *body.polytope();
        const Vec slack = P.slack(p);
        const Vec av = P.A() * v;
        for (Eigen::Index j = 0; j < P.facets(); ++j) {
            if (av[j] > 0.0)
                ch.upper = std::min(ch.upper, std::max(slack[j], 0.0) / av[j]);
            else if (av[j] < 0.0)
                ch.lower = std::max(ch.lower, std::max(slack[j], 0.0) / av[j]);
        }
    }
    if (body.ellipsoid()) {
        const auto& El = *body.ellipsoid();
        const Vec d = p - El.center();
        const Vec Ev = El.E() * v;
        const double a = v.dot(Ev);
        if (a > 0.0) {
            auto [lo, hi] = detail::chord_roots(a, 2.0 * d.dot(Ev), d.dot(El.E() * d) - El.c());
            ch.lower = std::max(ch.lower, lo);
            ch.upper = std::min(ch.upper, hi);
        }
    }
    if (!std::isfinite(ch.lower) || !std::isfinite(ch.upper))
        fail(ErrorKind::unbounded, "line_chord: line is unbounded in the body");
    return ch;
}

/// Outward unit normal at a boundary hit.
inline Vec normal_at(const ConvexBody& body, const HitRecord& hit) {
    if (!hit.on_ellipsoid()) {
        require(body.polytope().has_value() && hit.tag < body.polytope()->facets(), ErrorKind::structural,
                "normal_at: facet index out of range");
        const auto& P = *body.polytope();
        const double norm = P.row_norms()[hit.tag];
        if (!(norm > 0.0)) fail(ErrorKind::degenerate, "normal_at: facet has a zero normal");
        return P.A().row(hit.tag).transpose() / norm;
    }
    require(body.ellipsoid().has_value(), ErrorKind::structural, "normal_at: body has no ellipsoid");
    const auto& El = *body.ellipsoid();
    const Vec g = El.E() * (hit.point - El.center());
    const double norm = g.norm();
    if (!(norm > 0.0)) fail(ErrorKind::degenerate, "normal_at: ellipsoid gradient vanishes at the hit point");
    return g / norm;
}

/// Specular reflection v - 2<v,s>s for a unit normal s.
inline Vec reflect(const Vec& v, const Vec& s) { return v - 2.0 * v.dot(s) * s; }

// ---------------------------------------------------------------------------
// Equality constraints: x = N' y + x0 with N orthonormal rows spanning null(B)
// ---------------------------------------------------------------------------

struct AffineEmbedding {
    Mat N;    // (n - k) x n, orthonormal rows
    Vec x0;   // anchor with B x0 = beq
    Mat B;    // independent equality rows actually used
    Vec beq;
    std::vector<Eigen::Index> dropped_rows;  // dependent rows removed from the input B

    Eigen::Index ambient_dim() const { return N.cols(); }
    Eigen::Index reduced_dim() const { return N.rows(); }

    Vec project(const Vec& x) const { return N * (x - x0); }
    Vec lift(const Vec& y) const { return N.transpose() * y + x0; }
    Mat lift_rows(const Mat& Y) const {
        Mat X = Y * N;
        X.rowwise() += x0.transpose();
        return X;
    }
};

inline AffineEmbedding build_embedding(const Mat& B, const Vec& beq, const Vec& x0) {
    require(B.rows() == beq.size(), ErrorKind::structural, "build_embedding: B and beq sizes differ");
    require(B.cols() == x0.size(), ErrorKind::structural, "build_embedding: x0 has the wrong dimension");
    const Eigen::Index n = B.cols();

    AffineEmbedding emb;
    emb.x0 = x0;
    Eigen::ColPivHouseholderQR<Mat> qr(B.transpose());
    qr.setThreshold(1e-12);
    const Eigen::Index rank = qr.rank();
    const Mat Q = qr.householderQ() * Mat::Identity(n, n);
    emb.N = Q.rightCols(n - rank).transpose();

    std::vector<Eigen::Index> keep;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index i = 0; i < rank; ++i) keep.push_back(perm[i]);
    std::sort(keep.begin(), keep.end());
    for (Eigen::Index i = 0; i < B.rows(); ++i)
        if (!std::binary_search(keep.begin(), keep.end(), i)) emb.dropped_rows.push_back(i);
    emb.B.resize(rank, n);
    emb.beq.resize(rank);
    for (Eigen::Index r = 0; r < rank; ++r) {
        emb.B.row(r) = B.row(keep[r]);
        emb.beq[r] = beq[keep[r]];
    }

    const double scale = std::max({1.0, beq.cwiseAbs().maxCoeff(), (B.cwiseAbs() * x0.cwiseAbs()).maxCoeff()});
    if (B.rows() > 0 && (B * x0 - beq).cwiseAbs().maxCoeff() > 1e-10 * scale)
        fail(ErrorKind::infeasible, "build_embedding: anchor x0 violates B x0 = beq");
    return emb;
}

/// Restate a body in the reduced coordinates y of an embedding.
/// Polytope: A' = A N', b' = b - A x0. Ellipsoid: the quadric in y is brought
/// to centered form by completing the square.
inline ConvexBody embed_body(const ConvexBody& body, const AffineEmbedding& emb) {
    require(body.dim() == emb.ambient_dim(), ErrorKind::structural, "embed_body: embedding dimension mismatch");
    const Mat Nt = emb.N.transpose();
    std::optional<HPolytope> P;
    std::optional<Ellipsoid> El;
    if (body.polytope()) {
        const auto& src = *body.polytope();
        P.emplace(src.A() * Nt, src.b() - src.A() * emb.x0);
    }
    if (body.ellipsoid()) {
        const auto& src = *body.ellipsoid();
        const Vec d = emb.x0 - src.center();
        const Mat Ered = emb.N * src.E() * Nt;
        const Vec g = emb.N * (src.E() * d);
        Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (Ered + Ered.transpose()));
        const double top = std::max(eig.eigenvalues().cwiseAbs().maxCoeff(), 1e-300);
        Vec inv_vals = eig.eigenvalues();
        for (Eigen::Index i = 0; i < inv_vals.size(); ++i)
            inv_vals[i] = inv_vals[i] > 1e-12 * top ? 1.0 / inv_vals[i] : 0.0;
        const Mat pinv = eig.eigenvectors() * inv_vals.asDiagonal() * eig.eigenvectors().transpose();
        const Vec yc = -pinv * g;
        const Vec residual = Ered * yc + g;
        if (residual.norm() > 1e-9 * std::max(1.0, g.norm()))
            fail(ErrorKind::structural, "embed_body: restricted quadric is not an ellipsoid (linear term outside range)");
        const double c_red = src.c() - d.dot(src.E() * d) + g.dot(pinv * g);
        if (!(c_red > 0.0)) fail(ErrorKind::infeasible, "embed_body: ellipsoid misses the affine subspace");
        El.emplace(Ered, c_red, yc);
    }
    return ConvexBody(std::move(P), std::move(El));
}

/// Body expressed in coordinates z with x = T z + shift (T square, invertible).
inline ConvexBody affine_pullback(const ConvexBody& body, const Mat& T, const Vec& shift) {
    std::optional<HPolytope> P;
    std::optional<Ellipsoid> El;
    if (body.polytope()) P.emplace(body.polytope()->A() * T, body.polytope()->b() - body.polytope()->A() * shift);
    if (body.ellipsoid()) {
        const auto& src = *body.ellipsoid();
        const Mat E2 = T.transpose() * src.E() * T;
        El.emplace(0.5 * (E2 + E2.transpose()), src.c(), T.partialPivLu().solve(src.center() - shift));
    }
    return ConvexBody(std::move(P), std::move(El));
}

// ---------------------------------------------------------------------------
// Interior points
// ---------------------------------------------------------------------------

struct ChebyshevBall {
    Vec center;
    double radius = 0.0;
    bool full_dimensional = false;
};

/// True when {d : A d <= 0} = {0}: A has full column rank and (Stiemke) some
/// strictly positive y has A'y = 0.
inline bool polytope_bounded(const HPolytope& P) {
    const Mat& A = P.A();
    Eigen::ColPivHouseholderQR<Mat> qr(A);
    qr.setThreshold(1e-12);
    if (qr.rank() < A.cols()) return false;
    // y = 1 + z, z >= 0, A'z = -A'1  (as two inequality blocks)
    const Mat At = A.transpose();
    const Vec rhs = -At * Vec::Ones(A.rows());
    Mat lhs(2 * At.rows(), At.cols());
    lhs << At, -At;
    Vec b(2 * At.rows());
    b << rhs, -rhs;
    const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    b.array() += 1e-9 * scale;  // slack for round-off in the equality
    const LpResult r = solve_lp(lhs, b, Vec::Zero(At.cols()));
    return r.status != LpStatus::infeasible;
}

/// Largest inscribed ball: max r s.t. a_i'x + r ||a_i|| <= b_i.
inline ChebyshevBall chebyshev_ball(const HPolytope& P) {
    const Eigen::Index n = P.dim();
    const Vec& norms = P.row_norms();
    require(norms.minCoeff() > 0.0, ErrorKind::structural, "chebyshev_ball: zero constraint row");
    if (!polytope_bounded(P)) fail(ErrorKind::unbounded, "chebyshev_ball: polytope is unbounded");

    // r = r0 + rho keeps the all-slack basis feasible (r0 <= b_i/||a_i||).
    const double r0 = (P.b().array() / norms.array()).minCoeff();
    Mat lp(P.facets(), n + 1);
    lp << P.A(), norms;
    const Vec rhs = P.b() - r0 * norms;
    Vec obj = Vec::Zero(n + 1);
    obj[n] = 1.0;
    const LpResult res = solve_lp_free(lp, rhs, obj);
    if (res.status == LpStatus::unbounded) fail(ErrorKind::unbounded, "chebyshev_ball: LP is unbounded");
    if (res.status != LpStatus::optimal) fail(ErrorKind::infeasible, "chebyshev_ball: LP is infeasible");

    ChebyshevBall ball;
    ball.center = res.x.head(n);
    // report the radius realized by the center rather than the LP variable
    ball.radius = ((P.b() - P.A() * ball.center).array() / norms.array()).minCoeff();
    const double scale = std::max(1.0, ball.center.cwiseAbs().maxCoeff());
    if (ball.radius < -1e-9 * scale) fail(ErrorKind::infeasible, "chebyshev_ball: polytope is empty");
    ball.full_dimensional = ball.radius > 1e-10 * scale;
    if (!ball.full_dimensional) ball.radius = std::max(ball.radius, 0.0);
    return ball;
}

/// Strictly interior point of the body.
///
/// Polytope alone: Chebyshev center. Ellipsoid alone: its center. P ∩ E:
/// map E onto the unit ball, find the largest ball in the mapped polytope
/// that also fits in the unit ball (an SOCP), and map its center back.
inline Vec interior_point(const ConvexBody& body) {
    if (!body.ellipsoid()) {
        const ChebyshevBall ball = chebyshev_ball(*body.polytope());
        if (!ball.full_dimensional) fail(ErrorKind::infeasible, "interior_point: polytope has empty interior");
        return ball.center;
    }
    const auto& El = *body.ellipsoid();
    if (!body.polytope()) return El.center();

    Eigen::SelfAdjointEigenSolver<Mat> eig(El.E());
    const Vec& lambda = eig.eigenvalues();
    if (!(lambda.minCoeff() > 1e-12 * std::max(1.0, lambda.maxCoeff())))
        fail(ErrorKind::degenerate, "interior_point: ellipsoid matrix must be positive definite");
    // x = center + T u maps the unit ball onto E
    const Mat T = eig.eigenvectors() * (std::sqrt(El.c()) * lambda.cwiseSqrt().cwiseInverse()).asDiagonal();
    const auto& P = *body.polytope();
    const Mat G = P.A() * T;
    const Vec h = P.b() - P.A() * El.center();
    const InscribedBallResult socp = inscribed_ball_socp(G, h);
    if (!(socp.radius > 1e-10)) {
        // a separating certificate: the most violated facet at the SOCP optimum
        const Vec x = El.center() + T * socp.center;
        Eigen::Index worst = 0;
        (P.b() - P.A() * x).minCoeff(&worst);
        fail(ErrorKind::infeasible, "interior_point: polytope and ellipsoid do not intersect with interior (facet " +
                                        std::to_string(worst) + " separates)");
    }
    Vec x = El.center() + T * socp.center;
    if (!strictly_interior(body, x)) fail(ErrorKind::infeasible, "interior_point: could not certify an interior point");
    return x;
}

/// Lower bound on the distance from an interior point to the boundary.
inline double inscribed_radius_at(const ConvexBody& body, const Vec& x) {
    double r = kInf;
    if (body.polytope()) {
        const auto& P = *body.polytope();
        r = ((P.b() - P.A() * x).array() / P.row_norms().array()).minCoeff();
    }
    if (body.ellipsoid()) {
        const auto& El = *body.ellipsoid();
        Eigen::SelfAdjointEigenSolver<Mat> eig(El.E(), Eigen::EigenvaluesOnly);
        const double top = eig.eigenvalues().maxCoeff();
        // sqrt(q) is Lipschitz with constant sqrt(λmax)
        const double gap = std::sqrt(El.c()) - std::sqrt(std::max(El.quadratic(x), 0.0));
        r = std::min(r, top > 0.0 ? gap / std::sqrt(top) : kInf);
    }
    return std::max(r, 0.0);
}

/// Crude diameter estimate used for default step scales: twice the distance
/// across the body along the coordinate axes from an interior point.
inline double diameter_estimate(const ConvexBody& body, const Vec& interior) {
    double best = 0.0;
    for (Eigen::Index k = 0; k < body.dim(); ++k) {
        Vec e = Vec::Zero(body.dim());
        e[k] = 1.0;
        best = std::max(best, line_chord(body, interior, e).length());
    }
    return best;
}

}  // namespace polywalk
