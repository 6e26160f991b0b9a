#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>

namespace polywalk {

/// SplitMix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// xoshiro256** generator with splittable streams.
///
/// `Rng(seed, stream)` gives a generator whose sequence depends only on the
/// pair, so chain `i` of a run is reproducible regardless of which thread runs
/// it or in which order chains are scheduled. All variate transforms below are
/// written out here rather than taken from <random>, whose distributions are
/// implementation-defined and would break byte-identical outputs across
/// standard libraries.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0) {
        std::uint64_t sm = seed ^ (0xD1B54A32D192ED03ULL * (stream + 1));
        // one extra round decorrelates nearby (seed, stream) pairs
        sm = splitmix64(sm) ^ stream;
        for (auto& word : s_) word = splitmix64(sm);
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() { return next(); }

    result_type next() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Derive a child generator; the parent advances by one draw.
    Rng split() { return Rng(next(), next()); }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform on the open interval (0, 1); safe for logarithms.
    double uniform_open() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::size_t uniform_index(std::size_t n) {
        // Lemire's multiply-shift; bias is below 2^-64 * n and irrelevant here.
        return static_cast<std::size_t>((static_cast<unsigned __int128>(next()) * n) >> 64);
    }

    bool coin() { return (next() >> 63) != 0; }

    /// Standard normal via the Marsaglia polar method.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double factor = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * factor;
        has_spare_ = true;
        return u * factor;
    }

    double exponential() { return -std::log(uniform_open()); }

    /// log of a Gamma(shape, 1) variate.
    ///
    /// Marsaglia-Tsang squeeze for shape >= 1; for shape < 1 the boost
    /// Gamma(shape + 1) * U^(1/shape), kept in log space so tiny shapes do not
    /// underflow to an exact zero.
    double log_gamma_variate(double shape) {
        if (shape < 1.0) {
            const double boosted = log_gamma_variate(shape + 1.0);
            return boosted + std::log(uniform_open()) / shape;
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform_open();
            if (u < 1.0 - 0.0331 * x * x * x * x) return std::log(d * v);
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return std::log(d * v);
        }
    }

    double gamma(double shape) { return std::exp(log_gamma_variate(shape)); }

    Eigen::VectorXd normal_vector(Eigen::Index n) {
        Eigen::VectorXd g(n);
        for (Eigen::Index i = 0; i < n; ++i) g[i] = normal();
        return g;
    }

    /// Uniform direction on the unit sphere S^{n-1}.
    Eigen::VectorXd unit_direction(Eigen::Index n) {
        for (;;) {
            Eigen::VectorXd g = normal_vector(n);
            const double norm = g.norm();
            if (norm > 1e-300) return g / norm;
        }
    }

    /// Uniform point in the unit ball B^n.
    Eigen::VectorXd unit_ball(Eigen::Index n) {
        const double radius = std::pow(uniform(), 1.0 / static_cast<double>(n));
        return radius * unit_direction(n);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t s_[4]{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace polywalk
