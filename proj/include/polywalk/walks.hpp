#pragma once

// Geometric random walks over convex bodies and the multi-chain sampler.

#include "polywalk/densities.hpp"
#include "polywalk/error.hpp"
#include "polywalk/geometry.hpp"
#include "polywalk/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace polywalk {

enum class WalkKind { baw, har, cdhr, biw, dikin, vaidya, john, rehmc };

inline std::string to_string(WalkKind kind) {
    switch (kind) {
        case WalkKind::baw: return "baw";
        case WalkKind::har: return "har";
        case WalkKind::cdhr: return "cdhr";
        case WalkKind::biw: return "biw";
        case WalkKind::dikin: return "dikin";
        case WalkKind::vaidya: return "vaidya";
        case WalkKind::john: return "john";
        case WalkKind::rehmc: return "rehmc";
    }
    return "unknown";
}

inline WalkKind parse_walk_kind(const std::string& name) {
    for (WalkKind k : {WalkKind::baw, WalkKind::har, WalkKind::cdhr, WalkKind::biw, WalkKind::dikin, WalkKind::vaidya,
                       WalkKind::john, WalkKind::rehmc})
        if (to_string(k) == name) return k;
    fail(ErrorKind::configuration, "unknown walk '" + name + "'");
}

/// Zero-valued numeric fields select the body-dependent defaults.
struct WalkConfig {
    WalkKind kind = WalkKind::har;
    double delta = 0.0;   // ball walk radius
    double tau = 0.0;     // billiard mean trajectory length
    int rho = 0;          // reflection cap (billiard, reflective HMC)
    double eta = 0.0;     // leapfrog step
    int L = 0;            // leapfrog steps
    double radius = 0.0;  // Dikin / Vaidya / John radius
    long burn_in = 100;
    long thinning = 1;
    std::uint64_t seed = 0;
    bool lazy = true;     // fair-coin hold for Vaidya / John
    bool u_turn = false;  // stop leapfrog early when the trajectory turns back
    int chord_mh_steps = 10;
};

struct WalkState {
    Vec x;
    Vec Ax;  // A x for the polytope part, kept in sync by the walks
    Rng rng;
    long since_refresh = 0;

    WalkState(const ConvexBody& body, Vec start, Rng generator) : x(std::move(start)), rng(generator) {
        refresh(body);
    }

    void refresh(const ConvexBody& body) {
        if (body.polytope()) Ax = body.polytope()->A() * x;
        since_refresh = 0;
    }

    void move_to(const ConvexBody& body, Vec y) {
        x = std::move(y);
        refresh(body);
    }
};

// ---------------------------------------------------------------------------
// shared helpers
// ---------------------------------------------------------------------------

namespace detail {

inline bool inside(const ConvexBody& body, const Vec& y) { return strictly_interior(body, y); }

/// Chord of the line x + t v using the cached A x.
inline Chord cached_chord(const ConvexBody& body, const WalkState& s, const Vec& v, const Vec* Av_in = nullptr) {
    Chord ch{-kInf, kInf};
    if (body.polytope()) {
        const auto& P = *body.polytope();
        const Vec Av = Av_in ? *Av_in : Vec(P.A() * v);
        for (Eigen::Index j = 0; j < P.facets(); ++j) {
            const double slack = std::max(P.b()[j] - s.Ax[j], 0.0);
            if (Av[j] > 0.0)
                ch.upper = std::min(ch.upper, slack / Av[j]);
            else if (Av[j] < 0.0)
                ch.lower = std::max(ch.lower, slack / Av[j]);
        }
    }
    if (body.ellipsoid()) {
        const auto& El = *body.ellipsoid();
        const Vec d = s.x - El.center();
        const Vec Ev = El.E() * v;
        const double a = v.dot(Ev);
        if (a > 0.0) {
            auto [lo, hi] = chord_roots(a, 2.0 * d.dot(Ev), d.dot(El.E() * d) - El.c());
            ch.lower = std::max(ch.lower, lo);
            ch.upper = std::min(ch.upper, hi);
        }
    }
    if (!std::isfinite(ch.lower) || !std::isfinite(ch.upper))
        fail(ErrorKind::unbounded, "walk: chord is unbounded; the body must be bounded");
    return ch;
}

/// Pick a point on the chord [lower, upper] of x + t v from the target
/// restricted to the line: exact for flat targets, otherwise a short
/// independence Metropolis chain with uniform chord proposals.
inline double chord_draw(const TargetDensity& target, const Vec& x, const Vec& v, const Chord& ch, int mh_steps,
                         Rng& rng) {
    if (target.is_uniform()) return rng.uniform(ch.lower, ch.upper);
    double t = 0.0;
    double logp = target.log_density(x);
    for (int i = 0; i < mh_steps; ++i) {
        const double cand = rng.uniform(ch.lower, ch.upper);
        const double logc = target.log_density(x + cand * v);
        if (logc == -kInf) continue;
        if (logp == -kInf || std::log(rng.uniform_open()) < logc - logp) {
            t = cand;
            logp = logc;
        }
    }
    return t;
}

struct Trajectory {
    Vec end;
    Vec direction;  // unit direction at the end point
    int reflections = 0;
    bool exceeded = false;
};

/// Travel `length` from p along unit v, reflecting at the boundary.
/// Each reflection point is pushed inside by `nudge` along the inward normal.
inline Trajectory reflect_path(const ConvexBody& body, Vec p, Vec v, double length, int max_reflections,
                               double nudge) {
    Trajectory tr;
    const Vec start = p;
    for (;;) {
        // first boundary hit along the ray; slack clamped at zero so that the
        // facet just left (now with a_j'v < 0) cannot be hit again at t = 0
        double t_hit = kInf;
        int tag = kEllipsoidTag;
        if (body.polytope()) {
            const auto& P = *body.polytope();
            const Vec slack = P.b() - P.A() * p;
            const Vec Av = P.A() * v;
            for (Eigen::Index j = 0; j < P.facets(); ++j) {
                if (Av[j] <= 0.0) continue;
                const double t = std::max(slack[j], 0.0) / Av[j];
                if (t < t_hit) {
                    t_hit = t;
                    tag = static_cast<int>(j);
                }
            }
        }
        if (body.ellipsoid()) {
            const auto& El = *body.ellipsoid();
            const Vec d = p - El.center();
            const Vec Ev = El.E() * v;
            const double a = v.dot(Ev);
            if (a > 0.0) {
                const double t = forward_root(a, 2.0 * d.dot(Ev), d.dot(El.E() * d) - El.c());
                if (t > 0.0 && t < t_hit - 1e-12) {
                    t_hit = t;
                    tag = kEllipsoidTag;
                }
            }
        }
        if (!std::isfinite(t_hit)) fail(ErrorKind::unbounded, "walk: trajectory escapes an unbounded body");
        if (length <= t_hit) {
            tr.end = p + length * v;
            tr.direction = v;
            return tr;
        }
        if (++tr.reflections > max_reflections) {
            tr.exceeded = true;
            tr.end = start;
            tr.direction = v;
            return tr;
        }
        HitRecord hit;
        hit.t = t_hit;
        hit.tag = tag;
        hit.point = p + t_hit * v;
        const Vec s = normal_at(body, hit);
        p = hit.point - nudge * s;
        length -= t_hit;
        v = reflect(v, s);
    }
}

/// Cholesky factor of a metric; throws when it is not positive definite.
inline Eigen::LLT<Mat> metric_factor(const Mat& G, const char* who) {
    Eigen::LLT<Mat> llt(G);
    if (llt.info() != Eigen::Success || !(llt.matrixL().toDenseMatrix().diagonal().array() > 0.0).all())
        fail(ErrorKind::degenerate, std::string(who) + ": barrier Hessian is singular (degenerate polytope)");
    return llt;
}

inline double log_det(const Eigen::LLT<Mat>& llt) {
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

/// Rows a_i / s_i of the polytope at x; requires x strictly inside.
inline Mat scaled_rows(const HPolytope& P, const Vec& x) {
    const Vec s = P.b() - P.A() * x;
    return s.cwiseInverse().asDiagonal() * P.A();
}

/// Leverage scores of the rows of M: squared row norms of its thin Q factor.
/// QR keeps them accurate when one slack is many orders below the others.
inline Vec leverage_scores(const Mat& M) {
    const Eigen::HouseholderQR<Mat> qr(M);
    const Mat Q = qr.householderQ() * Mat::Identity(M.rows(), M.cols());
    return Q.rowwise().squaredNorm();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// barrier metrics
// ---------------------------------------------------------------------------

/// Hessian of the log-barrier, Σ a_i a_i' / s_i².
inline Mat dikin_metric(const HPolytope& P, const Vec& x) {
    const Mat As = detail::scaled_rows(P, x);
    return As.transpose() * As;
}

/// Σ (σ_i + d/m) a_i a_i' / s_i² with σ the leverage scores.
inline Mat vaidya_metric(const HPolytope& P, const Vec& x) {
    const Mat As = detail::scaled_rows(P, x);
    const Vec sigma = detail::leverage_scores(As);
    const double beta = static_cast<double>(P.dim()) / static_cast<double>(P.facets());
    return As.transpose() * (sigma.array() + beta).matrix().asDiagonal() * As;
}

struct JohnWeights {
    Vec weights;
    int iterations = 0;
    std::vector<double> trace;  // ‖Δw‖∞ per iteration
};

/// Approximate John weights: the stationarity condition w = σ(W^a) + β of
/// the weighted log-det program, solved by fixed-point iteration.
inline JohnWeights john_weights(const HPolytope& P, const Vec& x, double tol = 1e-8, int max_iter = 200) {
    const Mat As = detail::scaled_rows(P, x);
    const double d = static_cast<double>(P.dim());
    const double m = static_cast<double>(P.facets());
    const double beta = d / (2.0 * m);
    require(beta < 0.5, ErrorKind::configuration, "john_walk: needs more than d facets");
    const double a = 1.0 - 1.0 / std::log2(1.0 / beta);

    JohnWeights out;
    Vec w = Vec::Constant(P.facets(), d / m);
    for (int it = 0; it < max_iter; ++it) {
        // σ_i(W^a) = w_i^a a_i'(A' W^a A)^{-1} a_i, the leverage of W^{a/2} A
        const Vec half = w.array().pow(0.5 * a);
        const Vec next = (detail::leverage_scores(half.asDiagonal() * As).array() + beta).matrix();
        const double change = (next - w).cwiseAbs().maxCoeff();
        out.trace.push_back(change);
        w = next;
        out.iterations = it + 1;
        if (change < tol) {
            out.weights = w;
            return out;
        }
    }
    std::string msg = "john_weights: no convergence after " + std::to_string(max_iter) + " iterations; last changes";
    for (std::size_t i = out.trace.size() >= 5 ? out.trace.size() - 5 : 0; i < out.trace.size(); ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, " %.3e", out.trace[i]);
        msg += buf;
    }
    fail(ErrorKind::convergence, msg);
}

inline Mat john_metric(const HPolytope& P, const Vec& x) {
    const Mat As = detail::scaled_rows(P, x);
    const Vec w = john_weights(P, x).weights;
    return As.transpose() * w.asDiagonal() * As;
}

// ---------------------------------------------------------------------------
// step kernels; each returns whether the chain moved
// ---------------------------------------------------------------------------

/// Ball walk: uniform proposal in the δ-ball, Metropolis filter on the target.
inline bool baw_step(const ConvexBody& body, const TargetDensity& target, WalkState& s, double delta) {
    const Vec y = s.x + delta * s.rng.unit_ball(s.x.size());
    if (!detail::inside(body, y)) return false;
    if (!target.is_uniform()) {
        const double ly = target.log_density(y);
        if (ly == -kInf) return false;
        if (std::log(s.rng.uniform_open()) >= ly - target.log_density(s.x)) return false;
    }
    s.move_to(body, y);
    return true;
}

/// Hit-and-Run with a uniformly random direction.
inline bool har_step(const ConvexBody& body, const TargetDensity& target, WalkState& s, int mh_steps = 10) {
    for (int attempt = 0; attempt < 100; ++attempt) {
        const Vec v = s.rng.unit_direction(s.x.size());
        const Chord ch = detail::cached_chord(body, s, v);
        if (ch.length() < 1e-12) continue;
        const double t = detail::chord_draw(target, s.x, v, ch, mh_steps, s.rng);
        s.move_to(body, s.x + t * v);
        return t != 0.0;
    }
    fail(ErrorKind::degenerate, "har_step: every sampled chord was degenerate");
}

/// Coordinate-directions Hit-and-Run; A x is updated from one column.
inline bool cdhr_step(const ConvexBody& body, const TargetDensity& target, WalkState& s, int mh_steps = 10) {
    const Eigen::Index d = s.x.size();
    for (int attempt = 0; attempt < 100; ++attempt) {
        const Eigen::Index k = static_cast<Eigen::Index>(s.rng.uniform_index(static_cast<std::size_t>(d)));
        const Vec e = Vec::Unit(d, k);
        Chord ch;
        if (body.polytope()) {
            const Vec col = body.polytope()->A().col(k);
            ch = detail::cached_chord(body, s, e, &col);
        } else {
            ch = detail::cached_chord(body, s, e);
        }
        if (ch.length() < 1e-12) continue;
        const double t = detail::chord_draw(target, s.x, e, ch, mh_steps, s.rng);
        s.x[k] += t;
        if (body.polytope()) {
            s.Ax += t * body.polytope()->A().col(k);
            if (++s.since_refresh >= 1000) s.refresh(body);
        }
        return t != 0.0;
    }
    fail(ErrorKind::degenerate, "cdhr_step: every sampled chord was degenerate");
}

/// One billiard trajectory with explicit length and direction.
inline detail::Trajectory billiard_path(const ConvexBody& body, const Vec& p, const Vec& v, double length, int rho,
                                        double nudge = 0.0) {
    return detail::reflect_path(body, p, v, length, rho, nudge);
}

/// Billiard walk: exponential length L = −τ ln η, specular reflections, and a
/// return to the start if more than ρ reflections are needed.
inline bool biw_step(const ConvexBody& body, WalkState& s, double tau, int rho, double nudge = 0.0) {
    const double length = -tau * std::log(s.rng.uniform_open());
    const Vec v = s.rng.unit_direction(s.x.size());
    const auto tr = detail::reflect_path(body, s.x, v, length, rho, nudge);
    if (tr.exceeded || !detail::inside(body, tr.end)) return false;
    s.move_to(body, tr.end);
    return true;
}

/// Dikin walk: uniform proposal in {y : (y−x)'H(x)(y−x) ≤ r²}, accepted with
/// probability vol(E_x)/vol(E_y) when x also lies in E_y.
inline bool dikin_step(const HPolytope& P, WalkState& s, double r) {
    const ConvexBody body(P);
    const Eigen::LLT<Mat> fx = detail::metric_factor(dikin_metric(P, s.x), "dikin_walk");
    const Vec u = s.rng.unit_ball(s.x.size());
    const Vec y = s.x + r * fx.matrixU().solve(u);
    if (!detail::inside(body, y)) return false;
    const Mat Hy = dikin_metric(P, y);
    const Eigen::LLT<Mat> fy = detail::metric_factor(Hy, "dikin_walk");
    const Vec back = s.x - y;
    if (back.dot(Hy * back) > r * r) return false;
    const double log_alpha = 0.5 * (detail::log_det(fy) - detail::log_det(fx));
    if (log_alpha < 0.0 && std::log(s.rng.uniform_open()) >= log_alpha) return false;
    s.move_to(body, y);
    return true;
}

namespace detail {

/// Gaussian proposal N(x, scale² G(x)⁻¹) with the Metropolis ratio of the
/// two proposal densities.
template <class Metric>
bool gaussian_barrier_step(const HPolytope& P, WalkState& s, double scale, Metric metric, const char* who) {
    const ConvexBody body(P);
    const Mat Gx = metric(P, s.x);
    const Eigen::LLT<Mat> fx = metric_factor(Gx, who);
    const Vec y = s.x + scale * fx.matrixU().solve(s.rng.normal_vector(s.x.size()));
    if (!inside(body, y)) return false;
    const Mat Gy = metric(P, y);
    const Eigen::LLT<Mat> fy = metric_factor(Gy, who);
    const Vec dlt = y - s.x;
    const double inv2 = 0.5 / (scale * scale);
    const double log_fwd = 0.5 * log_det(fx) - inv2 * dlt.dot(Gx * dlt);
    const double log_bwd = 0.5 * log_det(fy) - inv2 * dlt.dot(Gy * dlt);
    const double log_alpha = log_bwd - log_fwd;
    if (log_alpha < 0.0 && std::log(s.rng.uniform_open()) >= log_alpha) return false;
    s.move_to(body, y);
    return true;
}

}  // namespace detail

/// Vaidya walk: lazy, proposal y = x + r/(m d)^{1/4} V(x)^{-1/2} ξ.
inline bool vaidya_step(const HPolytope& P, WalkState& s, double r, bool lazy = true) {
    if (lazy && s.rng.coin()) return false;
    const double scale = r / std::pow(static_cast<double>(P.facets() * P.dim()), 0.25);
    return detail::gaussian_barrier_step(P, s, scale, vaidya_metric, "vaidya_walk");
}

/// John walk: lazy, proposal y ~ N(x, r²/d^{3/2} J(x)⁻¹).
inline bool john_step(const HPolytope& P, WalkState& s, double r, bool lazy = true) {
    if (lazy && s.rng.coin()) return false;
    const double scale = r / std::pow(static_cast<double>(P.dim()), 0.75);
    return detail::gaussian_barrier_step(P, s, scale, john_metric, "john_walk");
}

struct HmcTuning {
    double eta;
    int L;
    int rho;
    bool u_turn = false;
    double nudge = 0.0;
};

/// Reflective HMC step. Returns whether the proposal was accepted; `eta`
/// halves (floor 1e-6) when the trajectory hits a non-finite energy.
inline bool rehmc_step(const ConvexBody& body, const TargetDensity& target, WalkState& s, HmcTuning& tune) {
    const Eigen::Index d = s.x.size();
    const double logp0 = target.log_density(s.x);
    if (!std::isfinite(logp0)) fail(ErrorKind::degenerate, "rehmc_step: current point outside the target support");
    Vec v = s.rng.normal_vector(d);
    const double h0 = -logp0 + 0.5 * v.squaredNorm();

    auto shrink = [&] {
        tune.eta = std::max(0.5 * tune.eta, 1e-6);
        return false;
    };

    Vec p = s.x;
    Vec grad = target.grad_log_density(p);
    const Vec start = s.x;
    for (int step = 0; step < tune.L; ++step) {
        Vec vhat = v + 0.5 * tune.eta * grad;
        const double speed = vhat.norm();
        if (!std::isfinite(speed)) return shrink();
        if (speed > 0.0) {
            const auto tr = detail::reflect_path(body, p, vhat / speed, tune.eta * speed, tune.rho, tune.nudge);
            if (tr.exceeded) return false;
            p = tr.end;
            vhat = speed * tr.direction;
        }
        const double lp = target.log_density(p);
        if (lp == -kInf) return false;
        if (!std::isfinite(lp)) return shrink();
        grad = target.grad_log_density(p);
        if (!grad.allFinite()) return shrink();
        v = vhat + 0.5 * tune.eta * grad;
        if (tune.u_turn && (p - start).dot(v) < 0.0) break;
    }
    if (!detail::inside(body, p)) return false;
    const double logp1 = target.log_density(p);
    const double h1 = -logp1 + 0.5 * v.squaredNorm();
    if (!std::isfinite(h1)) return shrink();
    if (h1 > h0 && std::log(s.rng.uniform_open()) >= h0 - h1) return false;
    s.move_to(body, p);
    return true;
}

// ---------------------------------------------------------------------------
// orchestration
// ---------------------------------------------------------------------------

struct ChainInfo {
    Eigen::Index begin = 0;  // first row in SampleSet::draws
    Eigen::Index end = 0;    // one past the last row
    double acceptance = 0.0;
};

struct SampleSet {
    Mat draws;                  // k x d, one row per retained draw
    std::optional<Mat> lifted;  // k x n when an output map is attached
    std::vector<ChainInfo> chains;
    WalkKind kind = WalkKind::har;

    std::vector<Mat> chain_draws() const {
        std::vector<Mat> out;
        for (const auto& c : chains) out.push_back(draws.middleRows(c.begin, c.end - c.begin));
        return out;
    }
};

/// Walk parameters after defaults are filled in from the body's geometry.
struct ResolvedWalk {
    WalkConfig cfg;
    Vec interior;
    double inradius = 0.0;
    double diameter = 0.0;
    double nudge = 0.0;
};

inline void check_compatibility(const ConvexBody& body, const TargetDensity& target, WalkKind kind) {
    const bool uniform_only = kind == WalkKind::biw || kind == WalkKind::dikin || kind == WalkKind::vaidya ||
                              kind == WalkKind::john;
    const bool polytope_only = kind == WalkKind::dikin || kind == WalkKind::vaidya || kind == WalkKind::john;
    if (uniform_only && !target.is_uniform())
        fail(ErrorKind::configuration, to_string(kind) + " samples only the uniform distribution");
    if (polytope_only && (body.ellipsoid() || !body.polytope()))
        fail(ErrorKind::configuration, to_string(kind) + " requires a polytope-only body (no ellipsoid)");
    if (target.dim() >= 0 && target.dim() != body.dim())
        fail(ErrorKind::structural, "target dimension " + std::to_string(target.dim()) +
                                        " does not match body dimension " + std::to_string(body.dim()));
}

inline ResolvedWalk resolve_walk(const ConvexBody& body, const TargetDensity& target, const WalkConfig& cfg) {
    check_compatibility(body, target, cfg.kind);
    require(cfg.burn_in >= 0 && cfg.thinning >= 1, ErrorKind::configuration,
            "walk: burn_in must be >= 0 and thinning >= 1");
    require(cfg.delta >= 0 && cfg.tau >= 0 && cfg.rho >= 0 && cfg.eta >= 0 && cfg.L >= 0 && cfg.radius >= 0,
            ErrorKind::configuration, "walk: parameters must be non-negative");
    ResolvedWalk rw;
    rw.cfg = cfg;
    rw.interior = body.interior() ? *body.interior() : interior_point(body);
    if (!std::isfinite(target.log_density(rw.interior)))
        fail(ErrorKind::configuration, "walk: the body's interior point lies outside the target's support");
    rw.inradius = inscribed_radius_at(body, rw.interior);
    rw.diameter = diameter_estimate(body, rw.interior);
    rw.nudge = 1e-10 * rw.diameter;
    const double d = static_cast<double>(body.dim());
    auto& c = rw.cfg;
    if (c.delta == 0.0) c.delta = target.is_uniform() ? 4.0 * rw.inradius / std::sqrt(d) : 4.0 * rw.inradius / d;
    if (c.tau == 0.0) c.tau = 2.0 * (2.0 * rw.inradius);
    if (c.rho == 0) c.rho = static_cast<int>(10 * body.dim());
    if (c.L == 0) c.L = 10;
    if (c.eta == 0.0) c.eta = rw.diameter / (2.0 * c.L * std::sqrt(d));
    if (c.radius == 0.0) {
        switch (c.kind) {
            case WalkKind::dikin: c.radius = 1.5; break;
            case WalkKind::vaidya: c.radius = 2.0; break;
            case WalkKind::john: c.radius = 3.0; break;
            default: break;
        }
    }
    return rw;
}

/// One step of the configured walk.
inline bool walk_step(const ConvexBody& body, const TargetDensity& target, const ResolvedWalk& rw, WalkState& s,
                      HmcTuning& hmc) {
    const auto& c = rw.cfg;
    switch (c.kind) {
        case WalkKind::baw: return baw_step(body, target, s, c.delta);
        case WalkKind::har: return har_step(body, target, s, c.chord_mh_steps);
        case WalkKind::cdhr: return cdhr_step(body, target, s, c.chord_mh_steps);
        case WalkKind::biw: return biw_step(body, s, c.tau, c.rho, rw.nudge);
        case WalkKind::dikin: return dikin_step(*body.polytope(), s, c.radius);
        case WalkKind::vaidya: return vaidya_step(*body.polytope(), s, c.radius, c.lazy);
        case WalkKind::john: return john_step(*body.polytope(), s, c.radius, c.lazy);
        case WalkKind::rehmc: return rehmc_step(body, target, s, hmc);
    }
    return false;
}

/// Start point for a chain: the interior point moved a quarter of the way
/// towards a random point of a random chord through it.
inline Vec jittered_start(const ConvexBody& body, const Vec& interior, Rng& rng) {
    const Vec v = rng.unit_direction(interior.size());
    const Chord ch = line_chord(body, interior, v);
    return interior + 0.25 * rng.uniform(ch.lower, ch.upper) * v;
}

inline unsigned worker_count(std::size_t jobs) {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("POLYWALK_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1) hw = std::min<unsigned>(hw, static_cast<unsigned>(cap));
    }
    return static_cast<unsigned>(std::min<std::size_t>(hw, std::max<std::size_t>(jobs, 1)));
}

/// Run `jobs` independent tasks on up to worker_count threads; exceptions
/// from workers are rethrown on the calling thread (first by index).
template <class Task>
void run_parallel(std::size_t jobs, Task task) {
    const unsigned workers = worker_count(jobs);
    std::vector<std::exception_ptr> errors(jobs);
    auto body = [&](unsigned w) {
        for (std::size_t j = w; j < jobs; j += workers) {
            try {
                task(j);
            } catch (...) {
                errors[j] = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        body(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body, w);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

/// k draws split over n_chains independent chains. Chain c uses the random
/// stream (seed, c), so results do not depend on thread scheduling.
inline SampleSet sample(const ConvexBody& body, const TargetDensity& target, const WalkConfig& cfg, Eigen::Index k,
                        int n_chains = 1, const std::optional<AffineMap>& output_map = std::nullopt) {
    require(k >= 0, ErrorKind::configuration, "sample: k must be non-negative");
    require(n_chains >= 1, ErrorKind::configuration, "sample: n_chains must be at least 1");
    const ResolvedWalk rw = resolve_walk(body, target, cfg);
    const Eigen::Index d = body.dim();

    SampleSet out;
    out.kind = cfg.kind;
    out.draws.resize(k, d);
    std::vector<Eigen::Index> counts(n_chains, k / n_chains);
    for (Eigen::Index i = 0; i < k % n_chains; ++i) ++counts[i];
    Eigen::Index offset = 0;
    for (int c = 0; c < n_chains; ++c) {
        out.chains.push_back({offset, offset + counts[c], 0.0});
        offset += counts[c];
    }

    run_parallel(static_cast<std::size_t>(n_chains), [&](std::size_t c) {
        Rng rng(cfg.seed, c);
        Vec start = jittered_start(body, rw.interior, rng);
        if (!std::isfinite(target.log_density(start))) start = rw.interior;
        WalkState state(body, start, rng);
        HmcTuning hmc{rw.cfg.eta, rw.cfg.L, rw.cfg.rho, rw.cfg.u_turn, rw.nudge};
        long moved = 0, steps = 0;
        for (long i = 0; i < cfg.burn_in; ++i) walk_step(body, target, rw, state, hmc);
        const auto& info = out.chains[c];
        for (Eigen::Index row = info.begin; row < info.end; ++row) {
            for (long t = 0; t < cfg.thinning; ++t) {
                moved += walk_step(body, target, rw, state, hmc);
                ++steps;
            }
            out.draws.row(row) = state.x.transpose();
        }
        out.chains[c].acceptance = steps ? static_cast<double>(moved) / static_cast<double>(steps) : 0.0;
    });

    if (output_map) {
        require(output_map->T.cols() == d, ErrorKind::structural, "sample: output map dimension mismatch");
        Mat lifted = out.draws * output_map->T.transpose();
        lifted.rowwise() += output_map->offset.transpose();
        out.lifted = std::move(lifted);
    }
    return out;
}

}  // namespace polywalk
