#pragma once

// File formats: JSON bodies and densities, long-format market CSVs,
// TOML/JSON backtest configs and deterministic number formatting.

#include "polywalk/backtest.hpp"
#include "polywalk/densities.hpp"
#include "polywalk/error.hpp"
#include "polywalk/geometry.hpp"

#include <json.hpp>
#include <toml.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace polywalk::io {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Shortest round-trip formatting; identical bytes for identical doubles.
inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json to_json(const Vec& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v[i]));
    return out;
}

inline json to_json(const Mat& m) {
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(to_json(Vec(m.row(i).transpose())));
    return out;
}

inline Vec vector_from(const json& j, const std::string& what) {
    require(j.is_array(), ErrorKind::structural, what + ": expected an array of numbers");
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        require(j[i].is_number(), ErrorKind::structural, what + ": entry " + std::to_string(i) + " is not a number");
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

inline Mat matrix_from(const json& j, const std::string& what) {
    require(j.is_array(), ErrorKind::structural, what + ": expected an array of rows");
    if (j.empty()) return Mat(0, 0);
    const std::size_t cols = j[0].size();
    Mat m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < j.size(); ++r) {
        require(j[r].is_array() && j[r].size() == cols, ErrorKind::structural,
                what + ": row " + std::to_string(r) + " has the wrong length");
        m.row(static_cast<Eigen::Index>(r)) = vector_from(j[r], what).transpose();
    }
    return m;
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::io, "cannot open '" + path.string() + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorKind::io, "cannot write '" + path.string() + "'");
    out << text;
    require(static_cast<bool>(out), ErrorKind::io, "write failed for '" + path.string() + "'");
}

inline json read_json(const std::filesystem::path& path) {
    const std::string text = read_text(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::structural, "'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

/// TOML or JSON, chosen by extension; returned as JSON.
inline json read_config(const std::filesystem::path& path) {
    if (path.extension() == ".json") return read_json(path);
    const std::string text = read_text(path);
    try {
        const toml::table tbl = toml::parse(text, path.string());
        std::ostringstream os;
        os << toml::json_formatter{tbl};
        return json::parse(os.str());
    } catch (const toml::parse_error& e) {
        fail(ErrorKind::structural, "'" + path.string() + "' is not valid TOML: " + std::string(e.description()));
    }
}

// ---------------------------------------------------------------------------
// Bodies and densities
// ---------------------------------------------------------------------------

/// A body in its ambient coordinates plus an optional equality embedding;
/// sampling happens in the reduced coordinates when the embedding is set.
struct BodyFile {
    ConvexBody ambient;
    std::optional<AffineEmbedding> embedding;
    ConvexBody sampled;  // ambient restated on the embedding, or ambient itself

    Eigen::Index ambient_dim() const { return ambient.dim(); }
};

/// {"simplex": n} | {"polytope": {"A","b"}, "ellipsoid": {"E","c","center"}, "equality": {"B","beq"}}
inline BodyFile parse_body(const json& j) {
    require(j.is_object(), ErrorKind::structural, "body: expected a JSON object");
    std::optional<HPolytope> P;
    std::optional<Ellipsoid> E;
    std::optional<std::pair<Mat, Vec>> eq;
    if (j.contains("simplex")) {
        const auto n = j.at("simplex").get<Eigen::Index>();
        require(n >= 2, ErrorKind::structural, "body: simplex needs at least two coordinates");
        P.emplace(-Mat::Identity(n, n), Vec::Zero(n));
        eq = std::make_pair(Mat(Mat::Ones(1, n)), Vec(Vec::Ones(1)));
    }
    if (j.contains("polytope")) {
        require(!P, ErrorKind::structural, "body: give either simplex or polytope");
        const auto& p = j.at("polytope");
        P.emplace(matrix_from(p.at("A"), "polytope.A"), vector_from(p.at("b"), "polytope.b"));
    }
    if (j.contains("ellipsoid")) {
        const auto& e = j.at("ellipsoid");
        const Mat Em = matrix_from(e.at("E"), "ellipsoid.E");
        const double c = e.at("c").get<double>();
        if (e.contains("center"))
            E.emplace(Em, c, vector_from(e.at("center"), "ellipsoid.center"));
        else
            E.emplace(Em, c);
    }
    if (j.contains("equality")) {
        require(!eq, ErrorKind::structural, "body: the simplex already fixes the equality constraints");
        const auto& q = j.at("equality");
        eq = std::make_pair(matrix_from(q.at("B"), "equality.B"), vector_from(q.at("beq"), "equality.beq"));
    }
    require(P || E, ErrorKind::structural, "body: needs a polytope, an ellipsoid or a simplex");

    ConvexBody ambient(std::move(P), std::move(E));
    if (!eq) return BodyFile{ambient, std::nullopt, ambient};
    const Eigen::Index n = ambient.dim();
    require(eq->first.cols() == n, ErrorKind::structural, "body: equality.B has the wrong number of columns");
    // anchor: least-norm solution of B x = beq
    const Vec x0 = eq->first.completeOrthogonalDecomposition().solve(eq->second);
    AffineEmbedding emb = build_embedding(eq->first, eq->second, x0);
    ConvexBody sampled = embed_body(ambient, emb);
    return BodyFile{std::move(ambient), std::move(emb), std::move(sampled)};
}

inline json body_to_json(const ConvexBody& body) {
    json j;
    j["schema_version"] = kSchemaVersion;
    if (body.polytope()) j["polytope"] = {{"A", to_json(body.polytope()->A())}, {"b", to_json(body.polytope()->b())}};
    if (body.ellipsoid())
        j["ellipsoid"] = {{"E", to_json(body.ellipsoid()->E())},
                          {"c", body.ellipsoid()->c()},
                          {"center", to_json(body.ellipsoid()->center())}};
    return j;
}

inline Vec parse_list(const std::string& text, const std::string& what) {
    std::vector<double> vals;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            vals.push_back(std::stod(item, &used));
            require(item.find_first_not_of(" \t", used) == std::string::npos, ErrorKind::configuration,
                    what + ": bad number '" + item + "'");
        } catch (const std::logic_error&) {
            fail(ErrorKind::configuration, what + ": bad number '" + item + "'");
        }
    }
    require(!vals.empty(), ErrorKind::configuration, what + ": empty list");
    return Eigen::Map<Vec>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

/// Target in ambient coordinates: "flat" | "uniform" | "dirichlet" (with
/// `alpha`, broadcast when a single value) | a JSON file
/// {"kind": "dirichlet" | "shadow_dirichlet", "alpha": [...], "alpha_scale": s, "M": [[...]]}.
inline TargetDensity parse_target(const std::string& spec, Eigen::Index ambient_dim,
                                  const std::optional<std::string>& alpha_text) {
    const auto broadcast = [&](Vec a) {
        if (a.size() == 1) a = Vec::Constant(ambient_dim, a[0]);
        require(a.size() == ambient_dim, ErrorKind::configuration,
                "target: alpha needs " + std::to_string(ambient_dim) + " entries");
        return a;
    };
    if (spec == "flat" || spec == "uniform") return TargetDensity::uniform();
    if (spec == "dirichlet") {
        require(alpha_text.has_value(), ErrorKind::configuration, "target: dirichlet needs --alpha");
        return TargetDensity::dirichlet(broadcast(parse_list(*alpha_text, "alpha")));
    }
    const json j = read_json(spec);
    const std::string kind = j.value("kind", std::string("dirichlet"));
    const double scale = j.value("alpha_scale", 1.0);
    require(scale > 0.0, ErrorKind::configuration, "target: alpha_scale must be positive");
    if (kind == "uniform" || kind == "flat") return TargetDensity::uniform();
    const Vec alpha = scale * vector_from(j.at("alpha"), "target.alpha");
    if (kind == "dirichlet") return TargetDensity::dirichlet(broadcast(alpha));
    if (kind == "shadow_dirichlet") return TargetDensity::shadow_dirichlet(matrix_from(j.at("M"), "target.M"), alpha);
    fail(ErrorKind::configuration, "target: unknown kind '" + kind + "'");
}

/// "a:b:step" (inclusive of b up to rounding) or a comma list.
inline Vec parse_grid(const std::string& text) {
    if (std::count(text.begin(), text.end(), ':') == 2) {
        const Vec parts = parse_list(std::string(text).replace(text.find(':'), 1, ",").replace(text.rfind(':'), 1, ","),
                                     "grid");
        const double lo = parts[0], hi = parts[1], step = parts[2];
        require(step > 0.0 && hi >= lo, ErrorKind::configuration, "grid: need lo <= hi and a positive step");
        const auto count = static_cast<Eigen::Index>(std::floor((hi - lo) / step + 1e-9)) + 1;
        Vec g(count);
        for (Eigen::Index i = 0; i < count; ++i) g[i] = lo + static_cast<double>(i) * step;
        return g;
    }
    return parse_list(text, "grid");
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline const std::string kCsvPreamble = "# schema_version: " + std::to_string(kSchemaVersion) + "\n";

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        const auto it = std::find(header.begin(), header.end(), name);
        require(it != header.end(), ErrorKind::structural, "csv: missing column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    }
};

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        const auto a = cell.find_first_not_of(" \t\r");
        const auto b = cell.find_last_not_of(" \t\r");
        out.push_back(a == std::string::npos ? std::string() : cell.substr(a, b - a + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

/// Comma-separated, header row first; lines starting with '#' are skipped.
inline CsvTable read_csv(const std::filesystem::path& path) {
    std::stringstream in(read_text(path));
    CsvTable t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto cells = split_line(line);
        if (t.header.empty()) {
            t.header = std::move(cells);
            continue;
        }
        require(cells.size() == t.header.size(), ErrorKind::structural,
                path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                    " fields");
        t.rows.push_back(std::move(cells));
    }
    require(!t.header.empty(), ErrorKind::structural, "csv: '" + path.string() + "' has no header");
    return t;
}

inline double parse_double(const std::string& s, const std::string& where) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        require(used == s.size(), ErrorKind::structural, where + ": bad number '" + s + "'");
        return v;
    } catch (const std::logic_error&) {
        if (s == "nan" || s == "NaN" || s.empty()) return kNaN;
        fail(ErrorKind::structural, where + ": bad number '" + s + "'");
    }
}

/// Matrix CSV with a header; optional leading `chain` column.
inline std::string matrix_csv(const Mat& X, const std::vector<std::string>& names,
                              const std::vector<int>* chain = nullptr) {
    std::string out = kCsvPreamble;
    if (chain) out += "chain,";
    for (std::size_t j = 0; j < names.size(); ++j) out += (j ? "," : "") + names[j];
    out += "\n";
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        if (chain) out += std::to_string((*chain)[static_cast<std::size_t>(i)]) + ",";
        for (Eigen::Index j = 0; j < X.cols(); ++j) out += (j ? "," : "") + fmt(X(i, j));
        out += "\n";
    }
    return out;
}

/// Draws grouped by an optional `chain` column (one chain when absent).
inline ChainSet read_chains(const std::filesystem::path& path) {
    const CsvTable t = read_csv(path);
    const bool has_chain = !t.header.empty() && t.header[0] == "chain";
    const std::size_t first = has_chain ? 1 : 0;
    std::map<long, std::vector<Vec>> groups;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const std::string where = path.string() + " row " + std::to_string(r + 1);
        const long c = has_chain ? static_cast<long>(parse_double(t.rows[r][0], where)) : 0;
        Vec x(static_cast<Eigen::Index>(t.header.size() - first));
        for (std::size_t j = first; j < t.header.size(); ++j)
            x[static_cast<Eigen::Index>(j - first)] = parse_double(t.rows[r][j], where);
        groups[c].push_back(std::move(x));
    }
    require(!groups.empty(), ErrorKind::insufficient, "draws: '" + path.string() + "' has no rows");
    ChainSet out;
    for (auto& [c, rows] : groups) {
        Mat m(static_cast<Eigen::Index>(rows.size()), rows.front().size());
        for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
        out.push_back(std::move(m));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Market data directories
// ---------------------------------------------------------------------------

/// returns.csv (date,asset_id,return), scores.csv (date,asset_id,factor,score),
/// benchmark.csv (date,asset_id,weight), optional sectors.csv (asset_id,sector).
/// Rebalance dates are the benchmark dates; an asset is investable at a
/// rebalance when it has a benchmark row there.
inline MarketData read_market(const std::filesystem::path& dir) {
    const CsvTable ret = read_csv(dir / "returns.csv");
    const CsvTable sc = read_csv(dir / "scores.csv");
    const CsvTable bm = read_csv(dir / "benchmark.csv");

    std::set<std::string> date_set, id_set;
    const auto rd = ret.column("date"), ra = ret.column("asset_id"), rv = ret.column("return");
    for (const auto& row : ret.rows) {
        date_set.insert(row[rd]);
        id_set.insert(row[ra]);
    }
    MarketData data;
    data.dates.assign(date_set.begin(), date_set.end());
    data.ids.assign(id_set.begin(), id_set.end());
    std::map<std::string, Eigen::Index> day_of, asset_of;
    for (std::size_t i = 0; i < data.dates.size(); ++i) day_of[data.dates[i]] = static_cast<Eigen::Index>(i);
    for (std::size_t i = 0; i < data.ids.size(); ++i) asset_of[data.ids[i]] = static_cast<Eigen::Index>(i);
    const Eigen::Index n = static_cast<Eigen::Index>(data.ids.size());
    data.returns = Mat::Constant(static_cast<Eigen::Index>(data.dates.size()), n, kNaN);
    for (std::size_t r = 0; r < ret.rows.size(); ++r) {
        const auto& row = ret.rows[r];
        data.returns(day_of[row[rd]], asset_of[row[ra]]) = parse_double(row[rv], "returns.csv row " + std::to_string(r + 1));
    }

    const auto asset_index = [&](const std::string& id, const std::string& file) {
        const auto it = asset_of.find(id);
        require(it != asset_of.end(), ErrorKind::structural, file + ": asset '" + id + "' has no returns");
        return it->second;
    };
    const auto rebalance_day = [&](const std::string& date, const std::string& file) {
        const auto it = std::lower_bound(data.dates.begin(), data.dates.end(), date);
        require(it != data.dates.end(), ErrorKind::structural, file + ": date " + date + " is after the last return");
        return static_cast<Eigen::Index>(it - data.dates.begin());
    };

    std::map<Eigen::Index, Rebalance> rebs;
    const auto bd = bm.column("date"), ba = bm.column("asset_id"), bw = bm.column("weight");
    for (std::size_t r = 0; r < bm.rows.size(); ++r) {
        const auto& row = bm.rows[r];
        const Eigen::Index day = rebalance_day(row[bd], "benchmark.csv");
        auto& rb = rebs[day];
        if (rb.benchmark.size() == 0) {
            rb.day = day;
            rb.benchmark = Vec::Constant(n, kNaN);
            rb.investable.assign(static_cast<std::size_t>(n), false);
        }
        const Eigen::Index a = asset_index(row[ba], "benchmark.csv");
        rb.benchmark[a] = parse_double(row[bw], "benchmark.csv row " + std::to_string(r + 1));
        rb.investable[static_cast<std::size_t>(a)] = true;
    }
    const auto sd = sc.column("date"), sa = sc.column("asset_id"), sf = sc.column("factor"), sv = sc.column("score");
    for (std::size_t r = 0; r < sc.rows.size(); ++r) {
        const auto& row = sc.rows[r];
        const Eigen::Index day = rebalance_day(row[sd], "scores.csv");
        const auto it = rebs.find(day);
        require(it != rebs.end(), ErrorKind::structural,
                "scores.csv: date " + row[sd] + " has no benchmark weights");
        auto& s = it->second.scores[row[sf]];
        if (s.size() == 0) s = Vec::Constant(n, kNaN);
        s[asset_index(row[sa], "scores.csv")] = parse_double(row[sv], "scores.csv row " + std::to_string(r + 1));
    }
    for (auto& [day, rb] : rebs) data.rebalances.push_back(std::move(rb));

    if (std::filesystem::exists(dir / "sectors.csv")) {
        const CsvTable st = read_csv(dir / "sectors.csv");
        const auto ia = st.column("asset_id"), is = st.column("sector");
        data.sectors.assign(static_cast<std::size_t>(n), "unassigned");
        for (const auto& row : st.rows) data.sectors[static_cast<std::size_t>(asset_index(row[ia], "sectors.csv"))] = row[is];
    }
    data.validate();
    return data;
}

inline void write_market(const MarketData& data, const std::filesystem::path& dir) {
    std::string ret = kCsvPreamble + "date,asset_id,return\n";
    for (Eigen::Index t = 0; t < data.days(); ++t)
        for (Eigen::Index j = 0; j < data.assets(); ++j)
            if (std::isfinite(data.returns(t, j)))
                ret += data.dates[t] + "," + data.ids[j] + "," + fmt(data.returns(t, j)) + "\n";
    std::string sc = kCsvPreamble + "date,asset_id,factor,score\n";
    std::string bm = kCsvPreamble + "date,asset_id,weight\n";
    for (const auto& rb : data.rebalances) {
        for (Eigen::Index j = 0; j < data.assets(); ++j) {
            if (!rb.investable.empty() && !rb.investable[static_cast<std::size_t>(j)]) continue;
            bm += data.dates[rb.day] + "," + data.ids[j] + "," + fmt(rb.benchmark[j]) + "\n";
            for (const auto& [name, s] : rb.scores)
                sc += data.dates[rb.day] + "," + data.ids[j] + "," + name + "," + fmt(s[j]) + "\n";
        }
    }
    write_text(dir / "returns.csv", ret);
    write_text(dir / "scores.csv", sc);
    write_text(dir / "benchmark.csv", bm);
    if (!data.sectors.empty()) {
        std::string st = kCsvPreamble + "asset_id,sector\n";
        for (Eigen::Index j = 0; j < data.assets(); ++j) st += data.ids[j] + "," + data.sectors[j] + "\n";
        write_text(dir / "sectors.csv", st);
    }
}

// ---------------------------------------------------------------------------
// Backtest configuration
// ---------------------------------------------------------------------------

namespace detail {

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, value] : j.items())
        require(allowed.count(key) > 0, ErrorKind::configuration, where + ": unknown key '" + key + "'");
}

template <class T>
void maybe(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        fail(ErrorKind::configuration, std::string("config: '") + key + "' has the wrong type");
    }
}

}  // namespace detail

struct BacktestFile {
    BacktestConfig config;
    bool allow_gate_failures = false;
    std::optional<std::string> quintile_factor;  // also run the quintile baseline
};

inline BacktestFile parse_backtest_config(const json& j) {
    detail::check_keys(j,
                       {"schema_version", "k", "chains", "draws_per_chain", "sort_factor", "lookback", "target",
                        "alpha_scale", "exact_simplex", "compute_momentum", "momentum_window", "momentum_skip",
                        "sector_neutral_scores", "winsor_limit", "rebalance_every", "start_date", "end_date",
                        "allow_gate_failures", "gate_retries", "quintile_baseline", "walk", "constraints"},
                       "config");
    BacktestFile f;
    auto& c = f.config;
    detail::maybe(j, "k", c.k);
    detail::maybe(j, "chains", c.n_chains);
    detail::maybe(j, "draws_per_chain", c.draws_per_chain);
    detail::maybe(j, "sort_factor", c.sort_factor);
    detail::maybe(j, "lookback", c.lookback);
    detail::maybe(j, "alpha_scale", c.alpha_scale);
    detail::maybe(j, "exact_simplex", c.exact_simplex);
    detail::maybe(j, "compute_momentum", c.compute_momentum);
    detail::maybe(j, "momentum_window", c.momentum_window);
    detail::maybe(j, "momentum_skip", c.momentum_skip);
    detail::maybe(j, "sector_neutral_scores", c.sector_neutral_scores);
    detail::maybe(j, "rebalance_every", c.rebalance_every);
    detail::maybe(j, "start_date", c.start_date);
    detail::maybe(j, "end_date", c.end_date);
    detail::maybe(j, "gate_retries", c.gate_retries);
    detail::maybe(j, "allow_gate_failures", f.allow_gate_failures);
    if (j.contains("winsor_limit")) {
        double w = 0.0;
        detail::maybe(j, "winsor_limit", w);
        c.winsor_limit = w > 0.0 ? std::optional<double>(w) : std::nullopt;
    }
    if (j.contains("quintile_baseline")) {
        std::string q;
        detail::maybe(j, "quintile_baseline", q);
        f.quintile_factor = q;
    }
    if (j.contains("target")) {
        std::string t;
        detail::maybe(j, "target", t);
        if (t == "uniform" || t == "flat")
            c.target = TargetKind::uniform;
        else if (t == "dirichlet")
            c.target = TargetKind::dirichlet;
        else
            fail(ErrorKind::configuration, "config: target must be uniform or dirichlet");
    }
    if (j.contains("walk")) {
        const json& w = j.at("walk");
        detail::check_keys(w, {"kind", "burn_in", "thinning", "seed", "delta", "tau", "rho", "eta", "L", "radius", "lazy"},
                           "config.walk");
        if (w.contains("kind")) c.walk.kind = parse_walk_kind(w.at("kind").get<std::string>());
        detail::maybe(w, "burn_in", c.walk.burn_in);
        detail::maybe(w, "thinning", c.walk.thinning);
        detail::maybe(w, "seed", c.walk.seed);
        detail::maybe(w, "delta", c.walk.delta);
        detail::maybe(w, "tau", c.walk.tau);
        detail::maybe(w, "rho", c.walk.rho);
        detail::maybe(w, "eta", c.walk.eta);
        detail::maybe(w, "L", c.walk.L);
        detail::maybe(w, "radius", c.walk.radius);
        detail::maybe(w, "lazy", c.walk.lazy);
    }
    if (j.contains("constraints")) {
        const json& k = j.at("constraints");
        detail::check_keys(k, {"long_only", "asset_band", "sector_band", "variance_cap_at_benchmark", "factor_bands"},
                           "config.constraints");
        auto& t = c.constraints;
        detail::maybe(k, "long_only", t.long_only);
        detail::maybe(k, "variance_cap_at_benchmark", t.variance_cap_at_benchmark);
        if (k.contains("asset_band")) t.asset_band = k.at("asset_band").get<double>();
        if (k.contains("sector_band")) t.sector_band = k.at("sector_band").get<double>();
        if (k.contains("factor_bands"))
            for (const auto& fb : k.at("factor_bands")) {
                detail::check_keys(fb, {"factor", "lower", "upper"}, "config.constraints.factor_bands");
                FactorBound b;
                b.factor = fb.at("factor").get<std::string>();
                detail::maybe(fb, "lower", b.lower);
                detail::maybe(fb, "upper", b.upper);
                t.factor_bands.push_back(b);
            }
    }
    c.validate();
    return f;
}

}  // namespace polywalk::io
