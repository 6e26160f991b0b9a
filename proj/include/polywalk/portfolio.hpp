#pragma once

// Investor constraints as convex bodies, portfolio statistics and factor scores.

#include "polywalk/densities.hpp"
#include "polywalk/error.hpp"
#include "polywalk/geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace polywalk {

struct MarketSnapshot {
    std::vector<std::string> ids;
    Vec benchmark;  // ω_bm, on the simplex
    Vec returns;    // r_t
    Mat covariance; // Σ_t
    Mat factors;    // assets x factors (β)
    std::vector<std::string> factor_names;
    std::vector<std::string> sectors;  // empty, or one label per asset

    Eigen::Index assets() const { return benchmark.size(); }

    void validate() const {
        const Eigen::Index n = assets();
        require(n >= 1, ErrorKind::structural, "snapshot: no assets");
        require(ids.empty() || static_cast<Eigen::Index>(ids.size()) == n, ErrorKind::structural,
                "snapshot: ids and benchmark sizes differ");
        require(returns.size() == 0 || returns.size() == n, ErrorKind::structural,
                "snapshot: returns and benchmark sizes differ");
        require(covariance.size() == 0 || (covariance.rows() == n && covariance.cols() == n), ErrorKind::structural,
                "snapshot: covariance must be n x n");
        require(factors.size() == 0 || factors.rows() == n, ErrorKind::structural,
                "snapshot: factor matrix must have one row per asset");
        require(factor_names.empty() || static_cast<Eigen::Index>(factor_names.size()) == factors.cols(),
                ErrorKind::structural, "snapshot: factor_names and factor columns differ");
        require(sectors.empty() || static_cast<Eigen::Index>(sectors.size()) == n, ErrorKind::structural,
                "snapshot: sectors and benchmark sizes differ");
        if (covariance.size()) {
            const double scale = std::max(1e-300, covariance.cwiseAbs().maxCoeff());
            require((covariance - covariance.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale,
                    ErrorKind::structural, "snapshot: covariance must be symmetric");
        }
    }

    Eigen::Index factor_index(const std::string& name) const {
        for (std::size_t i = 0; i < factor_names.size(); ++i)
            if (factor_names[i] == name) return static_cast<Eigen::Index>(i);
        fail(ErrorKind::structural, "snapshot: unknown factor '" + name + "'");
    }
};

/// Per-asset bounds; `relative` bounds are offsets from the benchmark weight.
struct AssetBounds {
    Vec lower;
    Vec upper;
    bool relative = false;
};

/// Bounds on the summed weight of a group; `relative` offsets the
/// benchmark's group weight.
struct GroupBound {
    std::string name;
    std::vector<Eigen::Index> members;
    double lower = 0.0;
    double upper = 1.0;
    bool relative = false;
};

/// lower <= <ω, β_factor> <= upper
struct FactorBound {
    std::string factor;
    double lower = -kInf;
    double upper = kInf;
};

/// ω'Σω <= cap; `at_benchmark` sets cap to the benchmark's variance.
struct VarianceCap {
    std::optional<double> cap;
    bool at_benchmark = false;
};

struct ConstraintSpec {
    bool long_only = true;
    double budget = 1.0;
    std::optional<AssetBounds> asset_bounds;
    std::vector<GroupBound> group_bounds;
    std::vector<FactorBound> factor_bounds;
    std::optional<VarianceCap> variance_cap;
};

/// Groups of one bound per sector label, `band` weight-points around the
/// benchmark's sector weight.
inline std::vector<GroupBound> sector_bands(const MarketSnapshot& snap, double band) {
    std::map<std::string, std::vector<Eigen::Index>> groups;
    for (std::size_t i = 0; i < snap.sectors.size(); ++i)
        groups[snap.sectors[i]].push_back(static_cast<Eigen::Index>(i));
    std::vector<GroupBound> out;
    for (auto& [name, members] : groups) out.push_back({name, std::move(members), -band, band, true});
    return out;
}

/// Body in the reduced coordinates of the budget plane, with labels for
/// every polytope row in asset space.
struct PortfolioBody {
    ConvexBody body;
    AffineEmbedding embedding;
    std::vector<std::string> row_groups;  // constraint group of each polytope row
    std::optional<double> variance_cap;

    AffineMap lift_map() const { return AffineMap::from_embedding(embedding); }
};

namespace detail {

struct AssetConstraints {
    std::vector<Vec> rows;
    std::vector<double> rhs;
    std::vector<std::string> groups;
    std::optional<Ellipsoid> ellipsoid;
    double budget = 1.0;
    std::vector<std::string> violated;  // groups with a constant row that fails on the budget plane

    void add(Vec a, double b, const std::string& group) {
        // a constant row is the number a_0 * budget on the plane: vacuous or violated
        if (a.size() > 0 && a.maxCoeff() - a.minCoeff() <= 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff())) {
            if (a[0] * budget > b + 1e-12 * std::max(1.0, std::abs(b)) &&
                std::find(violated.begin(), violated.end(), group) == violated.end())
                violated.push_back(group);
            return;
        }
        rows.push_back(std::move(a));
        rhs.push_back(b);
        groups.push_back(group);
    }

    std::vector<std::string> group_names() const {
        std::vector<std::string> out;
        for (const auto& g : groups)
            if (std::find(out.begin(), out.end(), g) == out.end()) out.push_back(g);
        if (ellipsoid) out.push_back("variance_cap");
        return out;
    }
};

inline AssetConstraints collect_constraints(const ConstraintSpec& spec, const MarketSnapshot& snap,
                                            std::optional<double>& cap_out) {
    const Eigen::Index n = snap.assets();
    AssetConstraints c;
    c.budget = spec.budget;
    if (spec.long_only)
        for (Eigen::Index i = 0; i < n; ++i) c.add(-Vec::Unit(n, i), 0.0, "long_only");

    if (spec.asset_bounds) {
        const auto& ab = *spec.asset_bounds;
        require(ab.lower.size() == n && ab.upper.size() == n, ErrorKind::structural,
                "asset_bounds: lower and upper need one entry per asset");
        require((ab.lower.array() <= ab.upper.array()).all(), ErrorKind::structural,
                "asset_bounds: lower must not exceed upper");
        for (Eigen::Index i = 0; i < n; ++i) {
            const double base = ab.relative ? snap.benchmark[i] : 0.0;
            if (std::isfinite(ab.upper[i])) c.add(Vec::Unit(n, i), base + ab.upper[i], "asset_bounds");
            if (std::isfinite(ab.lower[i])) c.add(-Vec::Unit(n, i), -(base + ab.lower[i]), "asset_bounds");
        }
    }

    for (const auto& g : spec.group_bounds) {
        require(g.lower <= g.upper, ErrorKind::structural, "group '" + g.name + "': lower exceeds upper");
        Vec a = Vec::Zero(n);
        for (Eigen::Index i : g.members) {
            require(i >= 0 && i < n, ErrorKind::structural, "group '" + g.name + "': member index out of range");
            a[i] = 1.0;
        }
        const double base = g.relative ? a.dot(snap.benchmark) : 0.0;
        const std::string label = "group:" + g.name;
        if (std::isfinite(g.upper)) c.add(a, base + g.upper, label);
        if (std::isfinite(g.lower)) c.add(-a, -(base + g.lower), label);
    }

    for (const auto& f : spec.factor_bounds) {
        require(f.lower <= f.upper, ErrorKind::structural, "factor '" + f.factor + "': lower exceeds upper");
        const Vec beta = snap.factors.col(snap.factor_index(f.factor));
        const std::string label = "factor:" + f.factor;
        if (std::isfinite(f.upper)) c.add(beta, f.upper, label);
        if (std::isfinite(f.lower)) c.add(-beta, -f.lower, label);
    }

    if (spec.variance_cap) {
        require(snap.covariance.size() > 0, ErrorKind::structural, "variance_cap: snapshot has no covariance");
        double cap = 0.0;
        if (spec.variance_cap->at_benchmark) {
            cap = snap.benchmark.dot(snap.covariance * snap.benchmark);
        } else {
            require(spec.variance_cap->cap.has_value(), ErrorKind::structural,
                    "variance_cap: give a cap or set at_benchmark");
            cap = *spec.variance_cap->cap;
        }
        require(cap > 0.0, ErrorKind::structural, "variance_cap: cap must be positive");
        c.ellipsoid.emplace(snap.covariance, cap);
        cap_out = cap;
    }
    return c;
}

inline ConvexBody assemble(const AssetConstraints& c, const std::vector<std::string>& dropped, Eigen::Index n,
                           std::vector<std::string>* kept_groups = nullptr) {
    std::vector<Eigen::Index> keep;
    for (std::size_t r = 0; r < c.rows.size(); ++r)
        if (std::find(dropped.begin(), dropped.end(), c.groups[r]) == dropped.end())
            keep.push_back(static_cast<Eigen::Index>(r));
    std::optional<HPolytope> P;
    if (!keep.empty()) {
        Mat A(static_cast<Eigen::Index>(keep.size()), n);
        Vec b(static_cast<Eigen::Index>(keep.size()));
        for (std::size_t k = 0; k < keep.size(); ++k) {
            A.row(static_cast<Eigen::Index>(k)) = c.rows[keep[k]].transpose();
            b[static_cast<Eigen::Index>(k)] = c.rhs[keep[k]];
            if (kept_groups) kept_groups->push_back(c.groups[keep[k]]);
        }
        P.emplace(std::move(A), std::move(b));
    }
    std::optional<Ellipsoid> E;
    if (c.ellipsoid && std::find(dropped.begin(), dropped.end(), "variance_cap") == dropped.end()) E = c.ellipsoid;
    require(P || E, ErrorKind::unbounded, "build_body: no inequality constraints; the budget plane is unbounded");
    return ConvexBody(std::move(P), std::move(E));
}

inline bool feasible_without(const AssetConstraints& c, const std::vector<std::string>& dropped,
                             const AffineEmbedding& emb, Eigen::Index n) {
    try {
        interior_point(embed_body(assemble(c, dropped, n), emb));
        return true;
    } catch (const Error& e) {
        return false;
    }
}

inline std::string join(const std::vector<std::string>& xs) {
    std::string out;
    for (const auto& x : xs) out += (out.empty() ? "" : ", ") + x;
    return out;
}

}  // namespace detail

/// Constraints in asset space, restated on the budget plane Σω = budget.
/// The returned body carries a certified interior point. When the set is
/// empty the error names the constraint groups whose removal restores
/// feasibility (single groups first, then a greedy cumulative drop).
inline PortfolioBody build_body(const ConstraintSpec& spec, const MarketSnapshot& snap) {
    snap.validate();
    const Eigen::Index n = snap.assets();
    require(n >= 2, ErrorKind::structural, "build_body: need at least two assets");
    std::optional<double> cap;
    const auto cons = detail::collect_constraints(spec, snap, cap);
    if (!cons.violated.empty())
        fail(ErrorKind::infeasible, "build_body: constraints are infeasible; [" + detail::join(cons.violated) +
                                        "] cannot hold anywhere on the budget plane");

    PortfolioBody out;
    out.variance_cap = cap;
    out.embedding = build_embedding(Mat::Ones(1, n), Vec::Constant(1, spec.budget),
                                    Vec::Constant(n, spec.budget / static_cast<double>(n)));
    const ConvexBody full = detail::assemble(cons, {}, n, &out.row_groups);
    const ConvexBody reduced = embed_body(full, out.embedding);
    try {
        out.body = reduced.with_interior(interior_point(reduced));
        return out;
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::infeasible) throw;
    }

    const auto groups = cons.group_names();
    std::vector<std::string> culprits;
    for (const auto& g : groups)
        if (detail::feasible_without(cons, {g}, out.embedding, n)) culprits.push_back(g);
    if (!culprits.empty())
        fail(ErrorKind::infeasible, "build_body: constraints are infeasible; dropping any one of [" +
                                        detail::join(culprits) + "] restores feasibility");
    std::vector<std::string> dropped;
    for (const auto& g : groups) {
        dropped.push_back(g);
        if (detail::feasible_without(cons, dropped, out.embedding, n))
            fail(ErrorKind::infeasible, "build_body: constraints are infeasible; the set [" + detail::join(dropped) +
                                            "] must be relaxed together");
    }
    fail(ErrorKind::infeasible, "build_body: constraints are infeasible even with every group dropped (budget " +
                                    std::to_string(spec.budget) + ")");
}

struct PortfolioStats {
    double mean_return = 0.0;
    double variance = 0.0;
    Vec scores;  // γ_s = Σ_i ω_i β_{i,s}
};

inline PortfolioStats portfolio_stats(const Vec& omega, const MarketSnapshot& snap) {
    require(omega.size() == snap.assets(), ErrorKind::structural, "portfolio_stats: weight vector has wrong size");
    PortfolioStats s;
    if (snap.returns.size()) s.mean_return = omega.dot(snap.returns);
    if (snap.covariance.size()) s.variance = omega.dot(snap.covariance * omega);
    s.scores = snap.factors.size() ? Vec(snap.factors.transpose() * omega) : Vec();
    return s;
}

/// Row-wise portfolio scores Ω β for a k x n weight matrix.
inline Mat portfolio_scores(const Mat& weights, const Mat& factors) {
    require(weights.cols() == factors.rows(), ErrorKind::structural, "portfolio_scores: dimension mismatch");
    return weights * factors;
}

/// Standardize to z-scores (sample standard deviation) and clamp to
/// ±limit; sector-wise when labels are given. Groups with fewer than two
/// distinct values become zero and a warning is appended.
inline Vec zscore_winsorize(const Vec& raw, const std::vector<std::string>& sectors = {},
                            std::optional<double> limit = 3.0, std::vector<std::string>* warnings = nullptr) {
    const Eigen::Index n = raw.size();
    require(sectors.empty() || static_cast<Eigen::Index>(sectors.size()) == n, ErrorKind::structural,
            "zscore_winsorize: one sector label per value required");
    require(raw.allFinite(), ErrorKind::structural, "zscore_winsorize: non-finite input");
    std::map<std::string, std::vector<Eigen::Index>> groups;
    for (Eigen::Index i = 0; i < n; ++i) groups[sectors.empty() ? std::string() : sectors[i]].push_back(i);

    Vec out = Vec::Zero(n);
    for (const auto& [name, idx] : groups) {
        const double m = static_cast<double>(idx.size());
        double mean = 0.0;
        for (auto i : idx) mean += raw[i];
        mean /= m;
        double ss = 0.0;
        for (auto i : idx) ss += (raw[i] - mean) * (raw[i] - mean);
        const double sd = idx.size() >= 2 ? std::sqrt(ss / (m - 1.0)) : 0.0;
        if (!(sd > 0.0)) {
            if (warnings)
                warnings->push_back("zscore_winsorize: group '" + name + "' has no variation; scores set to 0");
            continue;
        }
        for (auto i : idx) {
            double z = (raw[i] - mean) / sd;
            if (limit) z = std::clamp(z, -*limit, *limit);
            out[i] = z;
        }
    }
    return out;
}

}  // namespace polywalk
