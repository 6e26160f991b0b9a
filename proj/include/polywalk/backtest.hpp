#pragma once

// Random-portfolio backtests: per-rebalance sampling, buy-and-hold
// simulation, score-ranked concatenation, reporting and a synthetic market.

#include "polywalk/diagnostics.hpp"
#include "polywalk/error.hpp"
#include "polywalk/exact.hpp"
#include "polywalk/portfolio.hpp"
#include "polywalk/rng.hpp"
#include "polywalk/walks.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace polywalk {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Data published at a rebalance date; treated as known before that day's returns.
struct Rebalance {
    Eigen::Index day = 0;                // first day of the holding period
    std::map<std::string, Vec> scores;   // raw characteristics, one entry per asset
    Vec benchmark;                       // benchmark weights, one entry per asset
    std::vector<bool> investable;        // empty means every asset
};

struct MarketData {
    std::vector<std::string> dates;    // yyyy-mm-dd, ascending
    std::vector<std::string> ids;
    std::vector<std::string> sectors;  // empty, or one label per asset
    Mat returns;                       // days x assets, NaN outside an asset's active window
    std::vector<Rebalance> rebalances;

    Eigen::Index days() const { return returns.rows(); }
    Eigen::Index assets() const { return returns.cols(); }

    void validate() const {
        const Eigen::Index T = days(), n = assets();
        require(static_cast<Eigen::Index>(dates.size()) == T, ErrorKind::structural,
                "market data: one date per return row required");
        require(static_cast<Eigen::Index>(ids.size()) == n, ErrorKind::structural,
                "market data: one id per return column required");
        require(sectors.empty() || static_cast<Eigen::Index>(sectors.size()) == n, ErrorKind::structural,
                "market data: one sector per asset required");
        for (Eigen::Index t = 1; t < T; ++t)
            require(dates[t - 1] < dates[t], ErrorKind::structural,
                    "market data: dates must be strictly increasing (" + dates[t - 1] + ", " + dates[t] + ")");
        for (Eigen::Index j = 0; j < n; ++j) {
            Eigen::Index first = -1, last = -1, count = 0;
            for (Eigen::Index t = 0; t < T; ++t)
                if (std::isfinite(returns(t, j))) {
                    if (first < 0) first = t;
                    last = t;
                    ++count;
                }
            require(first < 0 || count == last - first + 1, ErrorKind::structural,
                    "market data: asset " + ids[j] + " has a return gap inside its active window");
        }
        for (std::size_t r = 0; r < rebalances.size(); ++r) {
            const auto& rb = rebalances[r];
            require(rb.day >= 0 && rb.day < T, ErrorKind::structural, "market data: rebalance outside the date range");
            require(r == 0 || rebalances[r - 1].day < rb.day, ErrorKind::structural,
                    "market data: rebalances must be strictly increasing");
            require(rb.benchmark.size() == n, ErrorKind::structural, "market data: benchmark has wrong size");
            require(rb.investable.empty() || static_cast<Eigen::Index>(rb.investable.size()) == n,
                    ErrorKind::structural, "market data: investable mask has wrong size");
            for (const auto& [name, s] : rb.scores)
                require(s.size() == n, ErrorKind::structural, "market data: score '" + name + "' has wrong size");
        }
    }
};

/// Records the latest day each rebalance read.
struct AccessLog {
    struct Entry {
        Eigen::Index cutoff;
        Eigen::Index latest_day;
    };
    std::vector<Entry> entries;
};

/// Read-only view of the data strictly before `cutoff`.
class MarketView {
public:
    MarketView(const MarketData& data, Eigen::Index cutoff, AccessLog* log = nullptr)
        : data_(data), cutoff_(cutoff), log_(log) {}

    Eigen::Index cutoff() const { return cutoff_; }

    /// Returns on days [from, cutoff) for the given assets.
    Mat returns_window(Eigen::Index from, const std::vector<Eigen::Index>& assets) const {
        return returns_between(from, cutoff_, assets);
    }

    Mat returns_between(Eigen::Index from, Eigen::Index to, const std::vector<Eigen::Index>& assets) const {
        require(from >= 0 && from <= to, ErrorKind::structural, "market view: bad window");
        require(to <= cutoff_, ErrorKind::structural,
                "market view: day " + std::to_string(to - 1) + " is not before the cutoff " + std::to_string(cutoff_));
        note(to - 1);
        Mat out(to - from, static_cast<Eigen::Index>(assets.size()));
        for (std::size_t c = 0; c < assets.size(); ++c)
            out.col(static_cast<Eigen::Index>(c)) = data_.returns.col(assets[c]).segment(from, to - from);
        return out;
    }

    /// True when asset j has finite returns on every day of [from, cutoff).
    bool has_history(Eigen::Index j, Eigen::Index from) const {
        if (from < 0) return false;
        note(cutoff_ - 1);
        return data_.returns.col(j).segment(from, cutoff_ - from).allFinite();
    }

    /// The record published at the cutoff date.
    const Rebalance& published(std::size_t index) const {
        const auto& rb = data_.rebalances.at(index);
        require(rb.day == cutoff_, ErrorKind::structural, "market view: rebalance record is not dated at the cutoff");
        note(cutoff_ - 1);
        return rb;
    }

private:
    void note(Eigen::Index day) const {
        if (log_ && day >= 0) log_->entries.push_back({cutoff_, day});
    }

    const MarketData& data_;
    Eigen::Index cutoff_;
    AccessLog* log_;
};

/// Constraint spec restated per rebalance from that date's snapshot.
struct ConstraintTemplate {
    bool long_only = true;
    std::optional<double> asset_band;   // ± weight points around the benchmark
    std::optional<double> sector_band;  // ± weight points around benchmark sector weights
    std::vector<FactorBound> factor_bands;
    bool variance_cap_at_benchmark = false;

    bool simplex_only() const {
        return long_only && !asset_band && !sector_band && factor_bands.empty() && !variance_cap_at_benchmark;
    }

    ConstraintSpec instantiate(const MarketSnapshot& snap) const {
        ConstraintSpec spec;
        spec.long_only = long_only;
        const Eigen::Index n = snap.assets();
        if (asset_band) spec.asset_bounds = AssetBounds{Vec::Constant(n, -*asset_band), Vec::Constant(n, *asset_band), true};
        if (sector_band) spec.group_bounds = sector_bands(snap, *sector_band);
        spec.factor_bounds = factor_bands;
        if (variance_cap_at_benchmark) spec.variance_cap = VarianceCap{std::nullopt, true};
        return spec;
    }
};

enum class TargetKind { uniform, dirichlet };

struct BacktestConfig {
    int k = 50;
    int n_chains = 4;
    Eigen::Index draws_per_chain = 0;  // 0: max(100, ceil(k / n_chains))
    WalkConfig walk{.kind = WalkKind::biw, .thinning = 10};
    ConstraintTemplate constraints;
    TargetKind target = TargetKind::uniform;
    double alpha_scale = 1.0;  // Dirichlet α = alpha_scale · ω_bm
    bool exact_simplex = true;  // direct Dirichlet draws when only the simplex applies
    std::string sort_factor = "value";
    Eigen::Index lookback = 1260;
    bool compute_momentum = false;
    Eigen::Index momentum_window = 252;
    Eigen::Index momentum_skip = 21;
    bool sector_neutral_scores = false;
    std::optional<double> winsor_limit = 3.0;
    int rebalance_every = 1;
    std::string start_date;  // inclusive, empty: first rebalance
    std::string end_date;    // inclusive, empty: last rebalance
    int gate_retries = 3;  // each retry doubles burn-in and thinning

    void validate() const {
        require(k >= 1, ErrorKind::configuration, "backtest: k must be at least 1");
        require(n_chains >= 1, ErrorKind::configuration, "backtest: n_chains must be at least 1");
        require(lookback >= 2, ErrorKind::configuration, "backtest: lookback must be at least 2 days");
        require(gate_retries >= 0, ErrorKind::configuration, "backtest: gate_retries must be non-negative");
        require(rebalance_every >= 1, ErrorKind::configuration, "backtest: rebalance_every must be at least 1");
        require(alpha_scale > 0.0, ErrorKind::configuration, "backtest: alpha_scale must be positive");
        require(momentum_window > momentum_skip && momentum_skip >= 0, ErrorKind::configuration,
                "backtest: momentum window must exceed the skipped days");
    }
};

/// One holding period: k portfolios bought at `begin` and held to `end`.
struct PeriodResult {
    Eigen::Index begin = 0;
    Eigen::Index end = 0;
    std::vector<Eigen::Index> assets;  // columns of `weights`
    Mat weights;                       // k x assets, at the start of the period
    Vec scores;                        // sort-factor exposure of each portfolio
    Mat daily;                         // k x (end - begin)
    Vec period_return;                 // compounded over the period
    std::optional<GateReport> gate;    // absent for exact draws
    int attempts = 0;
    bool carried_forward = false;
};

/// Daily returns of buy-and-hold portfolios (rows of `weights`) whose
/// weights float with asset returns. A NaN return counts as zero.
inline Mat buy_and_hold(const Mat& weights, const Mat& asset_returns) {
    require(weights.cols() == asset_returns.cols(), ErrorKind::structural, "buy_and_hold: dimension mismatch");
    const Mat r = asset_returns.unaryExpr([](double v) { return std::isfinite(v) ? v : 0.0; });
    Mat out(weights.rows(), r.rows());
    for (Eigen::Index p = 0; p < weights.rows(); ++p) {
        Vec value = weights.row(p).transpose();
        for (Eigen::Index t = 0; t < r.rows(); ++t) {
            const double before = value.sum();
            value.array() *= 1.0 + r.row(t).transpose().array();
            out(p, t) = value.sum() / before - 1.0;
        }
    }
    return out;
}

inline Vec compound(const Mat& daily) {
    return ((1.0 + daily.array()).rowwise().prod() - 1.0).matrix();
}

struct ConcatenatedPaths {
    Mat paths;                                    // k x days
    Mat scores;                                   // k x periods, score of the rank-r portfolio
    std::vector<std::vector<Eigen::Index>> order; // per period: portfolio held by each rank
};

/// Rank portfolios in each period by score (descending, ties by period
/// return descending, then index) and chain equal ranks across periods.
inline ConcatenatedPaths concatenate_by_score(const std::vector<PeriodResult>& periods) {
    require(!periods.empty(), ErrorKind::insufficient, "concatenate_by_score: no periods");
    const Eigen::Index k = periods.front().scores.size();
    Eigen::Index days = 0;
    for (std::size_t t = 0; t < periods.size(); ++t) {
        const auto& p = periods[t];
        require(p.scores.size() == k && p.daily.rows() == k && p.period_return.size() == k, ErrorKind::structural,
                "concatenate_by_score: period " + std::to_string(t) + " has " + std::to_string(p.scores.size()) +
                    " portfolios, expected " + std::to_string(k));
        days += p.daily.cols();
    }
    ConcatenatedPaths out;
    out.paths.resize(k, days);
    out.scores.resize(k, static_cast<Eigen::Index>(periods.size()));
    Eigen::Index col = 0;
    for (std::size_t t = 0; t < periods.size(); ++t) {
        const auto& p = periods[t];
        std::vector<Eigen::Index> idx(static_cast<std::size_t>(k));
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
            if (p.scores[a] != p.scores[b]) return p.scores[a] > p.scores[b];
            return p.period_return[a] > p.period_return[b];
        });
        for (Eigen::Index r = 0; r < k; ++r) {
            out.paths.row(r).segment(col, p.daily.cols()) = p.daily.row(idx[r]);
            out.scores(r, static_cast<Eigen::Index>(t)) = p.scores[idx[r]];
        }
        out.order.push_back(std::move(idx));
        col += p.daily.cols();
    }
    return out;
}

struct BacktestResult {
    std::vector<PeriodResult> periods;
    ConcatenatedPaths concatenated;
    std::vector<std::string> dates;  // one per path column
    Vec exposure;                    // mean score along each path
    Vec benchmark;                   // daily returns of the buy-and-hold benchmark
    std::vector<std::string> events;
    int infeasible = 0;
    int gate_failures = 0;
};

namespace detail {

inline Mat sample_covariance(const Mat& X) {
    const Mat centered = X.rowwise() - X.colwise().mean();
    return centered.transpose() * centered / static_cast<double>(X.rows() - 1);
}

inline std::string period_label(const MarketData& data, Eigen::Index day) { return data.dates[day]; }

struct RebalanceInputs {
    std::vector<Eigen::Index> universe;
    MarketSnapshot snapshot;
    Vec benchmark_full;  // normalized over the universe, zero elsewhere
    std::vector<std::string> warnings;
};

/// Snapshot at a rebalance from data strictly before its day.
inline RebalanceInputs rebalance_inputs(const MarketView& view, const MarketData& data, std::size_t index,
                                        const BacktestConfig& cfg) {
    const Rebalance& rb = view.published(index);
    const Eigen::Index d = view.cutoff();
    const Eigen::Index n = data.assets();
    const Eigen::Index need = std::max(cfg.lookback, cfg.compute_momentum ? cfg.momentum_window : Eigen::Index{0});

    std::vector<std::string> factor_names;
    for (const auto& [name, s] : rb.scores)
        if (!(cfg.compute_momentum && name == "momentum")) factor_names.push_back(name);
    if (cfg.compute_momentum) factor_names.push_back("momentum");

    RebalanceInputs in;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (!rb.investable.empty() && !rb.investable[static_cast<std::size_t>(j)]) continue;
        if (!std::isfinite(rb.benchmark[j])) continue;
        bool ok = view.has_history(j, d - need);
        for (const auto& [name, s] : rb.scores) ok = ok && (std::isfinite(s[j]) || (cfg.compute_momentum && name == "momentum"));
        if (ok) in.universe.push_back(j);
    }
    const Eigen::Index m = static_cast<Eigen::Index>(in.universe.size());
    require(m >= 2, ErrorKind::insufficient,
            "backtest: fewer than two investable assets at " + data.dates[d]);

    MarketSnapshot& snap = in.snapshot;
    const Mat window = view.returns_window(d - cfg.lookback, in.universe);
    snap.returns = window.colwise().mean().transpose();
    snap.covariance = sample_covariance(window);
    snap.covariance.diagonal().array() += 1e-6 * snap.covariance.trace() / static_cast<double>(m);
    snap.covariance = 0.5 * (snap.covariance + snap.covariance.transpose()).eval();

    snap.benchmark.resize(m);
    for (Eigen::Index c = 0; c < m; ++c) snap.benchmark[c] = std::max(0.0, rb.benchmark[in.universe[c]]);
    if (snap.benchmark.sum() > 0.0)
        snap.benchmark /= snap.benchmark.sum();
    else
        snap.benchmark.setConstant(1.0 / static_cast<double>(m));
    in.benchmark_full = Vec::Zero(n);
    for (Eigen::Index c = 0; c < m; ++c) in.benchmark_full[in.universe[c]] = snap.benchmark[c];

    for (auto j : in.universe) {
        snap.ids.push_back(data.ids[j]);
        if (!data.sectors.empty()) snap.sectors.push_back(data.sectors[j]);
    }
    const std::vector<std::string> no_sectors;
    const auto& groups = cfg.sector_neutral_scores ? snap.sectors : no_sectors;
    snap.factor_names = factor_names;
    snap.factors.resize(m, static_cast<Eigen::Index>(factor_names.size()));
    for (std::size_t f = 0; f < factor_names.size(); ++f) {
        Vec raw(m);
        if (cfg.compute_momentum && factor_names[f] == "momentum") {
            const Mat r = view.returns_between(d - cfg.momentum_window, d - cfg.momentum_skip, in.universe);
            raw = ((1.0 + r.array()).colwise().prod() - 1.0).transpose().matrix();
        } else {
            const Vec& s = rb.scores.at(factor_names[f]);
            for (Eigen::Index c = 0; c < m; ++c) raw[c] = s[in.universe[c]];
        }
        snap.factors.col(static_cast<Eigen::Index>(f)) = zscore_winsorize(raw, groups, cfg.winsor_limit, &in.warnings);
    }
    return in;
}

inline Mat spread_rows(const Mat& pooled, Eigen::Index k) {
    Mat out(k, pooled.cols());
    const Eigen::Index N = pooled.rows();
    for (Eigen::Index i = 0; i < k; ++i) out.row(i) = pooled.row(i * N / k);
    return out;
}

inline std::vector<Eigen::Index> selected_periods(const MarketData& data, const BacktestConfig& cfg) {
    std::vector<Eigen::Index> out;
    int counter = 0;
    for (std::size_t r = 0; r < data.rebalances.size(); ++r) {
        const std::string& date = data.dates[data.rebalances[r].day];
        if (!cfg.start_date.empty() && date < cfg.start_date) continue;
        if (!cfg.end_date.empty() && date > cfg.end_date) continue;
        if (counter++ % cfg.rebalance_every == 0) out.push_back(static_cast<Eigen::Index>(r));
    }
    return out;
}

}  // namespace detail

/// Run the backtest protocol over every scheduled rebalance.
inline BacktestResult run_backtest(const MarketData& data, const BacktestConfig& cfg, AccessLog* log = nullptr) {
    data.validate();
    cfg.validate();
    const auto schedule = detail::selected_periods(data, cfg);
    require(!schedule.empty(), ErrorKind::configuration, "backtest: no rebalance dates inside the configured range");

    BacktestResult res;
    std::optional<PeriodResult> previous;
    for (std::size_t t = 0; t < schedule.size(); ++t) {
        const std::size_t ri = static_cast<std::size_t>(schedule[t]);
        const Eigen::Index begin = data.rebalances[ri].day;
        const Eigen::Index end = t + 1 < schedule.size() ? data.rebalances[static_cast<std::size_t>(schedule[t + 1])].day
                                                         : data.days();
        const MarketView view(data, begin, log);
        auto in = detail::rebalance_inputs(view, data, ri, cfg);
        for (const auto& w : in.warnings) res.events.push_back(data.dates[begin] + ": " + w);
        const MarketSnapshot& snap = in.snapshot;
        const Eigen::Index sort_col = snap.factor_index(cfg.sort_factor);

        PeriodResult period;
        period.begin = begin;
        period.end = end;
        const std::uint64_t seed = cfg.walk.seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(ri + 1);

        std::optional<PortfolioBody> pb;
        try {
            pb = build_body(cfg.constraints.instantiate(snap), snap);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::infeasible || !previous) throw;
            ++res.infeasible;
            res.events.push_back(data.dates[begin] + ": infeasible, previous weights carried forward (" + e.what() + ")");
        }

        if (pb) {
            period.assets = in.universe;
            Vec alpha = (cfg.alpha_scale * snap.benchmark).cwiseMax(1e-300);
            const bool uniform = cfg.target == TargetKind::uniform;
            if (cfg.exact_simplex && cfg.constraints.simplex_only()) {
                if (uniform) alpha.setOnes();
                period.weights = sample_dirichlet(alpha, cfg.k, seed);
            } else {
                const TargetDensity target =
                    (uniform ? TargetDensity::uniform() : TargetDensity::dirichlet(alpha)).transformed(pb->embedding);
                const Eigen::Index per_chain =
                    cfg.draws_per_chain > 0 ? cfg.draws_per_chain
                                            : std::max<Eigen::Index>(100, (cfg.k + cfg.n_chains - 1) / cfg.n_chains);
                WalkConfig wc = cfg.walk;
                wc.seed = seed;
                SampleSet s;
                for (int attempt = 0; attempt <= cfg.gate_retries; ++attempt) {
                    s = sample(pb->body, target, wc, per_chain * cfg.n_chains, cfg.n_chains, pb->lift_map());
                    period.gate = gate(s.chain_draws(), pb->body.dim());
                    period.attempts = attempt + 1;
                    if (period.gate->pass) break;
                    wc.burn_in *= 2;
                    wc.thinning *= 2;
                    wc.seed = seed ^ (0xA5A5A5A5A5A5A5A5ULL * static_cast<std::uint64_t>(attempt + 1));
                }
                if (!period.gate->pass) {
                    ++res.gate_failures;
                    std::string why;
                    for (const auto& r : period.gate->reasons) why += (why.empty() ? "" : "; ") + r;
                    res.events.push_back(data.dates[begin] + ": diagnostics gate failed (" + why + ")");
                }
                period.weights = detail::spread_rows(*s.lifted, cfg.k);
            }
            period.scores = period.weights * snap.factors.col(sort_col);
        } else {
            period.assets = previous->assets;
            period.weights = previous->weights;
            period.carried_forward = true;
            Vec z = Vec::Zero(static_cast<Eigen::Index>(period.assets.size()));
            for (std::size_t c = 0; c < period.assets.size(); ++c)
                for (std::size_t u = 0; u < in.universe.size(); ++u)
                    if (in.universe[u] == period.assets[c])
                        z[static_cast<Eigen::Index>(c)] = snap.factors(static_cast<Eigen::Index>(u), sort_col);
            period.scores = period.weights * z;
        }

        Mat held(end - begin, static_cast<Eigen::Index>(period.assets.size()));
        for (std::size_t c = 0; c < period.assets.size(); ++c)
            held.col(static_cast<Eigen::Index>(c)) = data.returns.col(period.assets[c]).segment(begin, end - begin);
        period.daily = buy_and_hold(period.weights, held);
        period.period_return = compound(period.daily);

        Mat bench_held(end - begin, data.assets());
        bench_held = data.returns.middleRows(begin, end - begin);
        const Mat bench = buy_and_hold(in.benchmark_full.transpose(), bench_held);
        const Eigen::Index old = res.benchmark.size();
        res.benchmark.conservativeResize(old + bench.cols());
        res.benchmark.tail(bench.cols()) = bench.row(0).transpose();
        for (Eigen::Index day = begin; day < end; ++day) res.dates.push_back(data.dates[day]);

        previous = period;
        res.periods.push_back(std::move(period));
    }
    res.concatenated = concatenate_by_score(res.periods);
    res.exposure = res.concatenated.scores.rowwise().mean();
    return res;
}

/// Daily k x T returns compounded into calendar months (keyed by yyyy-mm).
inline Mat monthly_returns(const Mat& daily, const std::vector<std::string>& dates,
                           std::vector<std::string>* months = nullptr) {
    require(static_cast<Eigen::Index>(dates.size()) == daily.cols(), ErrorKind::structural,
            "monthly_returns: one date per column required");
    std::vector<std::pair<Eigen::Index, Eigen::Index>> spans;
    std::vector<std::string> keys;
    for (Eigen::Index t = 0; t < daily.cols(); ++t) {
        const std::string key = dates[t].substr(0, 7);
        if (keys.empty() || keys.back() != key) {
            keys.push_back(key);
            spans.push_back({t, t});
        }
        spans.back().second = t + 1;
    }
    Mat out(daily.rows(), static_cast<Eigen::Index>(spans.size()));
    for (std::size_t m = 0; m < spans.size(); ++m)
        out.col(static_cast<Eigen::Index>(m)) =
            compound(daily.middleCols(spans[m].first, spans[m].second - spans[m].first));
    if (months) *months = keys;
    return out;
}

struct Summary {
    Vec annual_return;
    Vec annual_vol;
    Vec exposure;
    Vec scaled_exposure;  // in [-1, 1]
    std::optional<Vec> information_ratio;
    double corr_return = kNaN;
    double corr_vol = kNaN;
    Vec fit_return;  // c0 + c1 x + c2 x² on the scaled exposure
    Vec fit_vol;
    Eigen::Index months = 0;
};

inline double pearson(const Vec& x, const Vec& y) {
    require(x.size() == y.size(), ErrorKind::structural, "pearson: size mismatch");
    if (x.size() < 2) return kNaN;
    const Vec a = x.array() - x.mean();
    const Vec b = y.array() - y.mean();
    const double den = std::sqrt(a.squaredNorm() * b.squaredNorm());
    return den > 0.0 ? a.dot(b) / den : kNaN;
}

inline Vec polyfit2(const Vec& x, const Vec& y) {
    Mat V(x.size(), 3);
    V.col(0).setOnes();
    V.col(1) = x;
    V.col(2) = x.array().square().matrix();
    return V.colPivHouseholderQr().solve(y);
}

inline Vec rescale_symmetric(const Vec& x) {
    const double lo = x.minCoeff(), hi = x.maxCoeff();
    if (!(hi > lo)) return Vec::Zero(x.size());
    return (2.0 * (x.array() - lo) / (hi - lo) - 1.0).matrix();
}

/// Annualized statistics from monthly returns (k paths x M months).
inline Summary report(const Mat& monthly, const Vec& exposure, const std::optional<Vec>& benchmark_monthly = std::nullopt) {
    require(monthly.rows() >= 1 && monthly.cols() >= 1, ErrorKind::insufficient, "report: no paths");
    require(exposure.size() == monthly.rows(), ErrorKind::structural, "report: one exposure per path required");
    const Eigen::Index k = monthly.rows(), M = monthly.cols();
    Summary s;
    s.months = M;
    s.exposure = exposure;
    s.scaled_exposure = rescale_symmetric(exposure);
    s.annual_return.resize(k);
    s.annual_vol.resize(k);
    for (Eigen::Index p = 0; p < k; ++p) {
        const auto row = monthly.row(p).array();
        s.annual_return[p] = std::pow((1.0 + row).prod(), 12.0 / static_cast<double>(M)) - 1.0;
        const double mean = row.mean();
        s.annual_vol[p] = M > 1 && row.maxCoeff() > row.minCoeff() ? std::sqrt((row - mean).square().sum() / static_cast<double>(M - 1) * 12.0) : 0.0;
    }
    if (benchmark_monthly) {
        require(benchmark_monthly->size() == M, ErrorKind::structural, "report: benchmark has wrong length");
        Vec ir(k);
        for (Eigen::Index p = 0; p < k; ++p) {
            const Eigen::ArrayXd active = monthly.row(p).transpose().array() - benchmark_monthly->array();
            const double sd = M > 1 ? std::sqrt((active - active.mean()).square().sum() / static_cast<double>(M - 1)) : 0.0;
            ir[p] = sd > 0.0 ? active.mean() / sd * std::sqrt(12.0) : kNaN;
        }
        s.information_ratio = ir;
    }
    s.corr_return = pearson(s.scaled_exposure, s.annual_return);
    s.corr_vol = pearson(s.scaled_exposure, s.annual_vol);
    s.fit_return = polyfit2(s.scaled_exposure, s.annual_return);
    s.fit_vol = polyfit2(s.scaled_exposure, s.annual_vol);
    return s;
}

inline Summary report(const BacktestResult& res) {
    const Mat monthly = monthly_returns(res.concatenated.paths, res.dates);
    const Mat bench = monthly_returns(res.benchmark.transpose(), res.dates);
    return report(monthly, res.exposure, Vec(bench.row(0).transpose()));
}

enum class Weighting { equal, cap };

struct QuintileResult {
    Mat paths;                       // 5 x days, top quintile first
    Mat scores;                      // 5 x periods
    std::vector<std::string> dates;
    Vec exposure;
    std::vector<std::vector<std::vector<Eigen::Index>>> members;  // period, quintile, assets
};

/// Quintile portfolios by descending score (ties in asset-id order).
inline QuintileResult quintile_baseline(const MarketData& data, const std::string& factor, Weighting weighting,
                                        const BacktestConfig& cfg = {}, AccessLog* log = nullptr) {
    data.validate();
    const auto schedule = detail::selected_periods(data, cfg);
    require(!schedule.empty(), ErrorKind::configuration, "quintile_baseline: no rebalance dates in range");
    QuintileResult out;
    std::vector<PeriodResult> periods;
    for (std::size_t t = 0; t < schedule.size(); ++t) {
        const std::size_t ri = static_cast<std::size_t>(schedule[t]);
        const Eigen::Index begin = data.rebalances[ri].day;
        const Eigen::Index end = t + 1 < schedule.size() ? data.rebalances[static_cast<std::size_t>(schedule[t + 1])].day
                                                         : data.days();
        const MarketView view(data, begin, log);
        const auto in = detail::rebalance_inputs(view, data, ri, cfg);
        const Eigen::Index m = static_cast<Eigen::Index>(in.universe.size());
        require(m >= 5, ErrorKind::insufficient, "quintile_baseline: fewer than five assets at " + data.dates[begin]);
        const Vec z = in.snapshot.factors.col(in.snapshot.factor_index(factor));

        std::vector<Eigen::Index> idx(static_cast<std::size_t>(m));
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
            if (z[a] != z[b]) return z[a] > z[b];
            return in.snapshot.ids[a] < in.snapshot.ids[b];
        });

        PeriodResult p;
        p.begin = begin;
        p.end = end;
        p.assets = in.universe;
        p.weights = Mat::Zero(5, m);
        std::vector<std::vector<Eigen::Index>> groups(5);
        for (Eigen::Index q = 0; q < 5; ++q) {
            const Eigen::Index lo = q * m / 5, hi = (q + 1) * m / 5;
            double total = 0.0;
            for (Eigen::Index i = lo; i < hi; ++i) total += in.snapshot.benchmark[idx[i]];
            for (Eigen::Index i = lo; i < hi; ++i) {
                const Eigen::Index a = idx[i];
                groups[q].push_back(in.universe[a]);
                p.weights(q, a) = (weighting == Weighting::cap && total > 0.0) ? in.snapshot.benchmark[a] / total
                                                                               : 1.0 / static_cast<double>(hi - lo);
            }
        }
        p.scores = p.weights * z;
        Mat held(end - begin, m);
        for (Eigen::Index c = 0; c < m; ++c) held.col(c) = data.returns.col(in.universe[c]).segment(begin, end - begin);
        p.daily = buy_and_hold(p.weights, held);
        p.period_return = compound(p.daily);
        for (Eigen::Index day = begin; day < end; ++day) out.dates.push_back(data.dates[day]);
        out.members.push_back(std::move(groups));
        periods.push_back(std::move(p));
    }
    Eigen::Index days = 0;
    for (const auto& p : periods) days += p.daily.cols();
    out.paths.resize(5, days);
    out.scores.resize(5, static_cast<Eigen::Index>(periods.size()));
    Eigen::Index col = 0;
    for (std::size_t t = 0; t < periods.size(); ++t) {
        out.paths.middleCols(col, periods[t].daily.cols()) = periods[t].daily;
        out.scores.col(static_cast<Eigen::Index>(t)) = periods[t].scores;
        col += periods[t].daily.cols();
    }
    out.exposure = out.scores.rowwise().mean();
    return out;
}

struct SynthConfig {
    int n_assets = 50;
    int years = 5;
    int warmup_years = 5;  // history before the first rebalance
    std::map<std::string, double> premia;  // daily drift per unit score
    std::vector<std::string> factors{"value", "momentum", "quality", "size"};
    double market_drift = 3e-4;
    double market_vol = 0.01;
    double idio_vol = 0.015;
    double score_persistence = 0.9;  // monthly AR(1) coefficient
    int n_sectors = 5;
    bool orthogonal_noise = true;
    std::string start = "2000-01-03";
    std::uint64_t seed = 1;
};

namespace detail {

inline std::chrono::sys_days parse_date(const std::string& s) {
    int y = 0;
    unsigned m = 0, d = 0;
    require(std::sscanf(s.c_str(), "%d-%u-%u", &y, &m, &d) == 3, ErrorKind::configuration, "bad date '" + s + "'");
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    require(ymd.ok(), ErrorKind::configuration, "bad date '" + s + "'");
    return std::chrono::sys_days{ymd};
}

inline std::string format_date(std::chrono::sys_days day) {
    const std::chrono::year_month_day ymd{day};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()));
    return buf;
}

/// Orthonormal basis of span(basis columns).
inline Mat orthonormal_span(const Mat& basis) {
    const Eigen::HouseholderQR<Mat> qr(basis);
    return qr.householderQ() * Mat::Identity(basis.rows(), std::min(basis.rows(), basis.cols()));
}

}  // namespace detail

/// Synthetic daily market: r_i = f_mkt + Σ_s premium_s z_{i,s} + ε_i with
/// monthly AR(1) scores z, published at the first trading day of each month.
/// With `orthogonal_noise` each day's ε is projected off span{1, z_s, w, w∘z_s}
/// (w the benchmark weights) so it carries no cross-sectional score premium.
inline MarketData synth_market(const SynthConfig& cfg) {
    require(cfg.n_assets >= 10, ErrorKind::configuration, "synth_market: need at least 10 assets");
    require(cfg.years >= 1 && cfg.warmup_years >= 0, ErrorKind::configuration, "synth_market: bad year counts");
    require(std::abs(cfg.score_persistence) < 1.0, ErrorKind::configuration, "synth_market: persistence must be in (-1, 1)");
    require(cfg.n_sectors >= 1, ErrorKind::configuration, "synth_market: need at least one sector");
    for (const auto& [name, p] : cfg.premia)
        require(std::find(cfg.factors.begin(), cfg.factors.end(), name) != cfg.factors.end(), ErrorKind::configuration,
                "synth_market: premium for unknown factor '" + name + "'");

    using namespace std::chrono;
    const sys_days start = detail::parse_date(cfg.start);
    const year_month_day s{start};
    const sys_days bt_start = sys_days{year_month_day{s.year() + years{cfg.warmup_years}, s.month(), day{1}}};
    const sys_days stop = sys_days{year_month_day{s.year() + years{cfg.warmup_years + cfg.years}, s.month(), day{1}}};

    MarketData data;
    const int n = cfg.n_assets;
    char buf[16];
    for (int i = 0; i < n; ++i) {
        std::snprintf(buf, sizeof buf, "A%03d", i + 1);
        data.ids.push_back(buf);
        data.sectors.push_back("S" + std::to_string(i % cfg.n_sectors + 1));
    }
    std::vector<sys_days> days;
    for (sys_days d = start; d < stop; d += std::chrono::days{1}) {
        const weekday wd{d};
        if (wd != Saturday && wd != Sunday) days.push_back(d);
    }
    data.dates.reserve(days.size());
    for (auto d : days) data.dates.push_back(detail::format_date(d));

    Rng rng(cfg.seed, 0);
    const Eigen::Index F = static_cast<Eigen::Index>(cfg.factors.size());
    Vec premium = Vec::Zero(F);
    for (Eigen::Index f = 0; f < F; ++f)
        if (auto it = cfg.premia.find(cfg.factors[static_cast<std::size_t>(f)]); it != cfg.premia.end())
            premium[f] = it->second;
    Mat z(n, F);
    for (Eigen::Index f = 0; f < F; ++f) z.col(f) = rng.normal_vector(n);
    Vec cap(n);
    for (int i = 0; i < n; ++i) cap[i] = std::exp(rng.normal());

    const double phi = cfg.score_persistence, innov = std::sqrt(1.0 - phi * phi);
    const Eigen::Index T = static_cast<Eigen::Index>(days.size());
    data.returns.resize(T, n);
    Vec w = cap / cap.sum();
    Mat Q;
    for (Eigen::Index t = 0; t < T; ++t) {
        const bool month_start = t == 0 || year_month_day{days[t]}.month() != year_month_day{days[t - 1]}.month();
        if (month_start) {
            if (t > 0)
                for (Eigen::Index f = 0; f < F; ++f) z.col(f) = phi * z.col(f) + innov * rng.normal_vector(n);
            w = cap / cap.sum();
            Mat basis(n, 2 + 2 * F);
            basis.col(0).setOnes();
            basis.col(1) = w;
            for (Eigen::Index f = 0; f < F; ++f) {
                basis.col(2 + 2 * f) = z.col(f);
                basis.col(3 + 2 * f) = w.cwiseProduct(z.col(f));
            }
            Q = detail::orthonormal_span(basis);
            if (days[t] >= bt_start) {
                Rebalance rb;
                rb.day = t;
                for (Eigen::Index f = 0; f < F; ++f) rb.scores[cfg.factors[static_cast<std::size_t>(f)]] = z.col(f);
                rb.benchmark = w;
                data.rebalances.push_back(std::move(rb));
            }
        }
        const double market = cfg.market_drift + cfg.market_vol * rng.normal();
        Vec eps = cfg.idio_vol * rng.normal_vector(n);
        if (cfg.orthogonal_noise) eps -= Q * (Q.transpose() * eps);
        const Vec r = (market + (z * premium).array() + eps.array()).cwiseMax(-0.95).matrix();
        data.returns.row(t) = r.transpose();
        cap.array() *= 1.0 + r.array();
    }
    return data;
}

}  // namespace polywalk
