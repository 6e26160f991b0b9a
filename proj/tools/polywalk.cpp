// polywalk: command-line front end for sampling, exact CDFs, rounding,
// diagnostics, backtests and synthetic markets.

#include "polywalk/polywalk.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

using namespace polywalk;
using io::json;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kUsage = 2, kInfeasible = 3, kGate = 4, kIo = 5 };

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::structural:
        case ErrorKind::configuration: return kUsage;
        case ErrorKind::infeasible:
        case ErrorKind::unbounded:
        case ErrorKind::degenerate: return kInfeasible;
        case ErrorKind::io: return kIo;
        default: return kFailure;
    }
}

void report_error(const std::string& kind, const std::string& message, int code) {
    json j{{"schema_version", io::kSchemaVersion}, {"error", {{"kind", kind}, {"message", message}}}, {"exit_code", code}};
    std::cerr << j.dump() << "\n";
}

void emit(const std::string& out, const std::string& text) {
    if (out.empty() || out == "-")
        std::cout << text;
    else
        io::write_text(out, text);
}

std::vector<std::string> coordinate_names(Eigen::Index n) {
    std::vector<std::string> names;
    for (Eigen::Index i = 0; i < n; ++i) names.push_back("x" + std::to_string(i + 1));
    return names;
}

struct SampleArgs {
    std::string body, target = "flat", alpha, walk = "har", out, meta;
    Eigen::Index k = 1000;
    int chains = 1;
    long burn_in = 100, thinning = 1;
    std::uint64_t seed = 0;
};

int run_sample(const SampleArgs& a) {
    const auto body = io::parse_body(io::read_json(a.body));
    TargetDensity target = io::parse_target(a.target, body.ambient_dim(),
                                            a.alpha.empty() ? std::nullopt : std::optional<std::string>(a.alpha));
    std::optional<AffineMap> lift;
    if (body.embedding) {
        target = target.transformed(*body.embedding);
        lift = AffineMap::from_embedding(*body.embedding);
    }
    WalkConfig cfg;
    cfg.kind = parse_walk_kind(a.walk);
    cfg.burn_in = a.burn_in;
    cfg.thinning = a.thinning;
    cfg.seed = a.seed;
    require(a.thinning >= 1 && a.burn_in >= 0, ErrorKind::configuration, "sample: bad burn-in or thinning");
    const SampleSet s = sample(body.sampled, target, cfg, a.k, a.chains, lift);
    const Mat& X = s.lifted ? *s.lifted : s.draws;

    std::vector<int> chain(static_cast<std::size_t>(X.rows()));
    for (std::size_t c = 0; c < s.chains.size(); ++c)
        for (Eigen::Index r = s.chains[c].begin; r < s.chains[c].end; ++r) chain[static_cast<std::size_t>(r)] = static_cast<int>(c);
    emit(a.out, io::matrix_csv(X, coordinate_names(X.cols()), &chain));

    if (!a.meta.empty()) {
        json m{{"schema_version", io::kSchemaVersion}, {"walk", to_string(cfg.kind)}, {"seed", a.seed},
               {"k", a.k}, {"burn_in", a.burn_in}, {"thinning", a.thinning}, {"dimension", body.sampled.dim()},
               {"ambient_dimension", body.ambient_dim()}};
        json acc = json::array();
        for (const auto& c : s.chains) acc.push_back(io::number(c.acceptance));
        m["acceptance"] = acc;
        io::write_text(a.meta, m.dump(2) + "\n");
    }
    return kOk;
}

int run_cdf(const std::string& zfile, const std::string& grid, const std::string& out) {
    const json j = io::read_json(zfile);
    const Vec z = io::vector_from(j.is_object() ? j.at("z") : j, "z");
    const Vec gammas = io::parse_grid(grid);
    const Vec p = rp_linear_cdf(z, gammas);
    std::string text = io::kCsvPreamble + "gamma,cdf\n";
    for (Eigen::Index i = 0; i < gammas.size(); ++i) text += io::fmt(gammas[i]) + "," + io::fmt(p[i]) + "\n";
    emit(out, text);
    return kOk;
}

struct RoundArgs {
    std::string body, target = "flat", alpha, out, out_body;
    int max_phases = 10, chains = 1;
    double ratio = 4.0;
    std::uint64_t seed = 0;
};

int run_round(const RoundArgs& a) {
    const auto body = io::parse_body(io::read_json(a.body));
    TargetDensity target = io::parse_target(a.target, body.ambient_dim(),
                                            a.alpha.empty() ? std::nullopt : std::optional<std::string>(a.alpha));
    if (body.embedding) target = target.transformed(*body.embedding);
    WalkConfig cfg;
    cfg.seed = a.seed;
    RoundingOptions opts;
    opts.max_phases = a.max_phases;
    opts.target_ratio = a.ratio;
    opts.n_chains = a.chains;
    const auto res = round_isotropic(body.sampled, target, cfg, opts);
    json j{{"schema_version", io::kSchemaVersion},
           {"seed", a.seed},
           {"phases", res.phases},
           {"converged", res.converged},
           {"ratios", io::to_json(Vec(Eigen::Map<const Vec>(res.ratios.data(), static_cast<Eigen::Index>(res.ratios.size()))))},
           {"transform", {{"L", io::to_json(res.transform.Lmap)}, {"shift", io::to_json(res.transform.shift)},
                          {"log_det", res.transform.log_det}}}};
    if (body.embedding) {
        const AffineMap m = AffineMap::from_embedding(*body.embedding);
        j["embedding"] = {{"T", io::to_json(m.T)}, {"offset", io::to_json(m.offset)}};
    }
    emit(a.out, j.dump(2) + "\n");
    if (!a.out_body.empty()) io::write_text(a.out_body, io::body_to_json(res.body).dump(2) + "\n");
    return kOk;
}

int run_diagnose(const std::string& draws, Eigen::Index effective_dim, const std::string& out) {
    const ChainSet chains = io::read_chains(draws);
    const Eigen::Index d = effective_dim > 0 ? effective_dim : chains.front().cols();
    const GateReport rep = gate(chains, d);
    json j{{"schema_version", io::kSchemaVersion},
           {"pass", rep.pass},
           {"chains", chains.size()},
           {"effective_dimension", d},
           {"max_psrf", io::number(rep.max_psrf)},
           {"min_ess", io::number(rep.min_ess)},
           {"ess_required", rep.ess_required},
           {"psrf", io::to_json(rep.psrf)},
           {"ess", io::to_json(rep.ess)},
           {"reasons", rep.reasons}};
    emit(out, j.dump(2) + "\n");
    return rep.pass ? kOk : kGate;
}

json summary_json(const Summary& s) {
    return {{"months", s.months},
            {"corr_exposure_return", io::number(s.corr_return)},
            {"corr_exposure_vol", io::number(s.corr_vol)},
            {"fit_return", io::to_json(s.fit_return)},
            {"fit_vol", io::to_json(s.fit_vol)}};
}

std::string scatter_csv(const Summary& s) {
    std::string text = io::kCsvPreamble + "path,exposure,scaled_exposure,annual_return,annual_vol,information_ratio\n";
    for (Eigen::Index p = 0; p < s.exposure.size(); ++p)
        text += std::to_string(p + 1) + "," + io::fmt(s.exposure[p]) + "," + io::fmt(s.scaled_exposure[p]) + "," +
                io::fmt(s.annual_return[p]) + "," + io::fmt(s.annual_vol[p]) + "," +
                io::fmt(s.information_ratio ? (*s.information_ratio)[p] : kNaN) + "\n";
    return text;
}

int run_backtest_cmd(const std::string& config, const std::string& data_dir, const std::string& out,
                     std::optional<std::uint64_t> seed) {
    auto file = io::parse_backtest_config(io::read_config(config));
    if (seed) file.config.walk.seed = *seed;
    const MarketData data = io::read_market(data_dir);
    const BacktestResult res = run_backtest(data, file.config);
    const Summary s = report(res);

    const std::filesystem::path dir(out);
    const Eigen::Index k = res.concatenated.paths.rows();
    std::string paths = io::kCsvPreamble + "date,benchmark";
    for (Eigen::Index p = 0; p < k; ++p) paths += ",path_" + std::to_string(p + 1);
    paths += "\n";
    for (std::size_t t = 0; t < res.dates.size(); ++t) {
        const auto col = static_cast<Eigen::Index>(t);
        paths += res.dates[t] + "," + io::fmt(res.benchmark[col]);
        for (Eigen::Index p = 0; p < k; ++p) paths += "," + io::fmt(res.concatenated.paths(p, col));
        paths += "\n";
    }
    io::write_text(dir / "paths.csv", paths);
    io::write_text(dir / "scatter.csv", scatter_csv(s));

    json periods = json::array();
    for (const auto& p : res.periods) {
        json e{{"date", data.dates[p.begin]}, {"assets", p.assets.size()}, {"carried_forward", p.carried_forward},
               {"attempts", p.attempts}};
        if (p.gate) e["gate"] = {{"pass", p.gate->pass}, {"max_psrf", io::number(p.gate->max_psrf)},
                                 {"min_ess", io::number(p.gate->min_ess)}, {"ess_required", p.gate->ess_required}};
        periods.push_back(e);
    }
    json j{{"schema_version", io::kSchemaVersion},
           {"seed", file.config.walk.seed},
           {"k", k},
           {"sort_factor", file.config.sort_factor},
           {"rebalances", res.periods.size()},
           {"infeasible_rebalances", res.infeasible},
           {"gate_failures", res.gate_failures},
           {"events", res.events},
           {"summary", summary_json(s)},
           {"periods", periods}};
    if (file.quintile_factor) {
        const auto q = quintile_baseline(data, *file.quintile_factor, Weighting::equal, file.config);
        const Summary qs = report(monthly_returns(q.paths, q.dates), q.exposure);
        j["quintile_baseline"] = summary_json(qs);
        j["quintile_baseline"]["annual_return"] = io::to_json(qs.annual_return);
        j["quintile_baseline"]["annual_vol"] = io::to_json(qs.annual_vol);
    }
    io::write_text(dir / "summary.json", j.dump(2) + "\n");
    if (res.gate_failures > 0 && !file.allow_gate_failures) {
        report_error("gate", std::to_string(res.gate_failures) + " rebalance(s) failed the diagnostics gate", kGate);
        return kGate;
    }
    return kOk;
}

int run_synth(const SynthConfig& cfg, const std::vector<std::string>& premia, const std::string& out) {
    SynthConfig c = cfg;
    for (const auto& p : premia) {
        const auto eq = p.find('=');
        require(eq != std::string::npos, ErrorKind::configuration, "synth: premium must look like factor=value");
        c.premia[p.substr(0, eq)] = io::parse_list(p.substr(eq + 1), "premium")[0];
    }
    io::write_market(synth_market(c), out);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random portfolios and geometric random walks on convex bodies"};
    app.require_subcommand(1);

    SampleArgs sa;
    auto* sample_cmd = app.add_subcommand("sample", "Draw points from a body under a target density (CSV)");
    sample_cmd->add_option("--body", sa.body, "Body JSON")->required()->check(CLI::ExistingFile);
    sample_cmd->add_option("--target", sa.target, "flat | dirichlet | density JSON")->capture_default_str();
    sample_cmd->add_option("--alpha", sa.alpha, "Dirichlet parameters, comma separated");
    sample_cmd->add_option("--walk", sa.walk, "baw | har | cdhr | biw | dikin | vaidya | john | rehmc")->capture_default_str();
    sample_cmd->add_option("--k", sa.k, "Number of draws")->capture_default_str()->check(CLI::NonNegativeNumber);
    sample_cmd->add_option("--chains", sa.chains, "Independent chains")->capture_default_str()->check(CLI::PositiveNumber);
    sample_cmd->add_option("--burn-in", sa.burn_in, "Steps discarded per chain")->capture_default_str();
    sample_cmd->add_option("--thinning", sa.thinning, "Steps per retained draw")->capture_default_str();
    sample_cmd->add_option("--seed", sa.seed, "Random seed")->capture_default_str();
    sample_cmd->add_option("--out", sa.out, "Output CSV (stdout when omitted)");
    sample_cmd->add_option("--meta", sa.meta, "Optional JSON with run metadata");

    std::string zfile, grid, cdf_out;
    std::uint64_t cdf_seed = 0;
    auto* cdf_cmd = app.add_subcommand("cdf", "Exact CDF of <w, z> for uniform portfolios (CSV)");
    cdf_cmd->add_option("--z", zfile, "JSON array (or {\"z\": [...]}) of asset values")->required()->check(CLI::ExistingFile);
    cdf_cmd->add_option("--gammas", grid, "lo:hi:step or comma list")->required();
    cdf_cmd->add_option("--seed", cdf_seed, "Accepted for uniformity; the CDF is exact");
    cdf_cmd->add_option("--out", cdf_out, "Output CSV (stdout when omitted)");

    RoundArgs ra;
    auto* round_cmd = app.add_subcommand("round", "Isotropic rounding transform (JSON)");
    round_cmd->add_option("--body", ra.body, "Body JSON")->required()->check(CLI::ExistingFile);
    round_cmd->add_option("--target", ra.target, "flat | dirichlet | density JSON")->capture_default_str();
    round_cmd->add_option("--alpha", ra.alpha, "Dirichlet parameters, comma separated");
    round_cmd->add_option("--max-phases", ra.max_phases, "Phase cap")->capture_default_str();
    round_cmd->add_option("--ratio", ra.ratio, "Target covariance spectrum ratio")->capture_default_str();
    round_cmd->add_option("--chains", ra.chains, "Chains per phase")->capture_default_str();
    round_cmd->add_option("--seed", ra.seed, "Random seed")->capture_default_str();
    round_cmd->add_option("--out", ra.out, "Output JSON (stdout when omitted)");
    round_cmd->add_option("--out-body", ra.out_body, "Rounded body JSON");

    std::string draws, diag_out;
    Eigen::Index eff_dim = 0;
    std::uint64_t diag_seed = 0;
    auto* diag_cmd = app.add_subcommand("diagnose", "PSRF / ESS gate on sampled draws (JSON; exit 4 on failure)");
    diag_cmd->add_option("--draws", draws, "CSV from `sample` (optional chain column)")->required()->check(CLI::ExistingFile);
    diag_cmd->add_option("--effective-dim", eff_dim, "Dimension for the ESS threshold (default: columns)");
    diag_cmd->add_option("--seed", diag_seed, "Accepted for uniformity; diagnostics are deterministic");
    diag_cmd->add_option("--out", diag_out, "Output JSON (stdout when omitted)");

    std::string config, data_dir, bt_out;
    std::optional<std::uint64_t> bt_seed;
    auto* bt_cmd = app.add_subcommand("backtest", "Random-portfolio backtest (paths.csv, scatter.csv, summary.json)");
    bt_cmd->add_option("--config", config, "TOML or JSON config")->required()->check(CLI::ExistingFile);
    bt_cmd->add_option("--data", data_dir, "Directory with returns.csv, scores.csv, benchmark.csv")->required()->check(CLI::ExistingDirectory);
    bt_cmd->add_option("--out", bt_out, "Output directory")->required();
    bt_cmd->add_option("--seed", bt_seed, "Random seed (overrides walk.seed)");

    SynthConfig sc;
    std::vector<std::string> premia;
    std::string synth_out;
    bool raw_noise = false;
    auto* synth_cmd = app.add_subcommand("synth", "Synthetic market data directory");
    synth_cmd->add_option("--out", synth_out, "Output directory")->required();
    synth_cmd->add_option("--assets", sc.n_assets, "Number of assets")->capture_default_str();
    synth_cmd->add_option("--years", sc.years, "Years after the warm-up")->capture_default_str();
    synth_cmd->add_option("--warmup-years", sc.warmup_years, "History before the first rebalance")->capture_default_str();
    synth_cmd->add_option("--premium", premia, "factor=daily drift per unit score (repeatable)");
    synth_cmd->add_option("--seed", sc.seed, "Random seed")->capture_default_str();
    synth_cmd->add_flag("--raw-noise", raw_noise, "Keep idiosyncratic noise unprojected");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        report_error("usage", e.what(), kUsage);
        return kUsage;
    }

    try {
        if (*sample_cmd) return run_sample(sa);
        if (*cdf_cmd) return run_cdf(zfile, grid, cdf_out);
        if (*round_cmd) return run_round(ra);
        if (*diag_cmd) return run_diagnose(draws, eff_dim, diag_out);
        if (*bt_cmd) return run_backtest_cmd(config, data_dir, bt_out, bt_seed);
        if (*synth_cmd) {
            sc.orthogonal_noise = !raw_noise;
            return run_synth(sc, premia, synth_out);
        }
    } catch (const Error& e) {
        const int code = exit_code_for(e.kind());
        report_error(std::string(to_string(e.kind())), e.what(), code);
        return code;
    } catch (const std::exception& e) {
        report_error("internal", e.what(), kFailure);
        return kFailure;
    }
    return kUsage;
}
