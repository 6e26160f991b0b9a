#pragma once

#include "polywalk/error.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

namespace polywalk {

using ChainSet = std::vector<Eigen::MatrixXd>;

namespace detail {

inline void check_chains(const ChainSet& chains, Eigen::Index min_draws, const char* who) {
    require(!chains.empty(), ErrorKind::insufficient, std::string(who) + ": no chains");
    const Eigen::Index d = chains.front().cols();
    for (const auto& c : chains) {
        require(c.cols() == d, ErrorKind::structural, std::string(who) + ": chains differ in dimension");
        require(c.rows() >= min_draws, ErrorKind::insufficient,
                std::string(who) + ": each chain needs at least " + std::to_string(min_draws) + " draws");
    }
}

}  // namespace detail

/// Gelman-Rubin potential scale reduction per dimension.
///
/// With `split` each chain is halved first (a trailing odd draw is dropped).
/// Chains of unequal length are truncated to the shortest.
inline Eigen::VectorXd psrf(const ChainSet& chains, bool split = true) {
    detail::check_chains(chains, 10, "psrf");
    require(chains.size() >= 2 || split, ErrorKind::insufficient, "psrf: at least two chains required");

    Eigen::Index k = chains.front().rows();
    for (const auto& c : chains) k = std::min(k, c.rows());
    std::vector<Eigen::MatrixXd> parts;
    if (split) {
        const Eigen::Index half = k / 2;
        for (const auto& c : chains) {
            parts.push_back(c.topRows(half));
            parts.push_back(c.middleRows(half, half));
        }
        k = half;
    } else {
        for (const auto& c : chains) parts.push_back(c.topRows(k));
    }

    const Eigen::Index d = chains.front().cols();
    const double m = static_cast<double>(parts.size());
    const double kk = static_cast<double>(k);
    Eigen::MatrixXd means(parts.size(), d);
    Eigen::VectorXd within = Eigen::VectorXd::Zero(d);
    for (std::size_t j = 0; j < parts.size(); ++j) {
        const Eigen::RowVectorXd mu = parts[j].colwise().mean();
        means.row(j) = mu;
        within += ((parts[j].rowwise() - mu).array().square().colwise().sum() / (kk - 1.0)).matrix().transpose();
    }
    within /= m;
    const Eigen::RowVectorXd grand = means.colwise().mean();
    const Eigen::VectorXd between_over_k =
        ((means.rowwise() - grand).array().square().colwise().sum() / (m - 1.0)).matrix().transpose();

    Eigen::VectorXd out(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        if (!(within[i] > 0.0)) {
            out[i] = std::numeric_limits<double>::infinity();
            continue;
        }
        const double pooled = (kk - 1.0) / kk * within[i] + between_over_k[i];
        out[i] = std::sqrt(pooled / within[i]);
    }
    return out;
}

/// Normalized autocorrelation of a series at all lags (FFT, zero padded).
inline Eigen::VectorXd autocorrelation(const Eigen::VectorXd& x) {
    const Eigen::Index k = x.size();
    Eigen::Index len = 1;
    while (len < 2 * k) len <<= 1;
    std::vector<double> buf(len, 0.0);
    const double mean = x.mean();
    for (Eigen::Index i = 0; i < k; ++i) buf[i] = x[i] - mean;
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> freq;
    fft.fwd(freq, buf);
    for (auto& f : freq) f = std::norm(f);
    std::vector<double> acov;
    fft.inv(acov, freq);
    Eigen::VectorXd rho(k);
    const double c0 = acov[0];
    for (Eigen::Index t = 0; t < k; ++t) rho[t] = c0 > 0.0 ? acov[t] / c0 : 0.0;
    return rho;
}

/// Effective sample size per dimension with Geyer's initial positive
/// sequence: autocorrelation pairs are summed until the first negative pair,
/// each pair capped by its predecessor (initial monotone sequence).
inline Eigen::VectorXd ess(const Eigen::MatrixXd& chain) {
    require(chain.rows() >= 100, ErrorKind::insufficient, "ess: at least 100 draws required");
    const Eigen::Index k = chain.rows();
    Eigen::VectorXd out(chain.cols());
    for (Eigen::Index j = 0; j < chain.cols(); ++j) {
        const Eigen::VectorXd col = chain.col(j);
        if ((col.array() == col[0]).all()) {
            out[j] = 0.0;
            continue;
        }
        const Eigen::VectorXd rho = autocorrelation(col);
        double tau = -1.0;
        double previous = std::numeric_limits<double>::infinity();
        for (Eigen::Index t = 0; t + 1 < k; t += 2) {
            double pair = rho[t] + rho[t + 1];
            if (pair < 0.0) break;
            pair = std::min(pair, previous);
            previous = pair;
            tau += 2.0 * pair;
        }
        tau = std::max(tau, 1e-300);
        out[j] = std::min(static_cast<double>(k), static_cast<double>(k) / tau);
    }
    return out;
}

/// Per-dimension ESS summed across chains.
inline Eigen::VectorXd total_ess(const ChainSet& chains) {
    detail::check_chains(chains, 100, "total_ess");
    Eigen::VectorXd total = Eigen::VectorXd::Zero(chains.front().cols());
    for (const auto& c : chains) total += ess(c);
    return total;
}

inline constexpr double kPsrfThreshold = 1.1;
inline constexpr double kEssFraction = 0.95;

struct GateReport {
    bool pass = false;
    double max_psrf = 0.0;
    double min_ess = 0.0;
    double ess_required = 0.0;
    Eigen::VectorXd psrf;
    Eigen::VectorXd ess;
    std::vector<std::string> reasons;
};

/// Pass iff max PSRF < 1.1 and min total ESS > 0.95 * n_effective_dim.
inline GateReport gate(const ChainSet& chains, Eigen::Index n_effective_dim) {
    GateReport rep;
    rep.psrf = psrf(chains);
    rep.ess = total_ess(chains);
    rep.max_psrf = rep.psrf.maxCoeff();
    rep.min_ess = rep.ess.minCoeff();
    rep.ess_required = kEssFraction * static_cast<double>(n_effective_dim);
    if (!(rep.max_psrf < kPsrfThreshold))
        rep.reasons.push_back("psrf " + std::to_string(rep.max_psrf) + " >= " + std::to_string(kPsrfThreshold));
    if (!(rep.min_ess > rep.ess_required))
        rep.reasons.push_back("ess " + std::to_string(rep.min_ess) + " <= " + std::to_string(rep.ess_required));
    rep.pass = rep.reasons.empty();
    return rep;
}

}  // namespace polywalk
