#pragma once

#include "polywalk/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace testsupport {

using polywalk::ConvexBody;
using polywalk::HPolytope;
using polywalk::Mat;
using polywalk::Vec;

/// [-h, h]^n
inline ConvexBody box(int n, double h = 1.0) {
    Mat A(2 * n, n);
    A << Mat::Identity(n, n), -Mat::Identity(n, n);
    return ConvexBody(HPolytope(A, Vec::Constant(2 * n, h)));
}

/// {x >= 0} in R^n, to be cut by the budget embedding.
inline ConvexBody orthant(int n) { return ConvexBody(HPolytope(-Mat::Identity(n, n), Vec::Zero(n))); }

/// Kolmogorov-Smirnov statistic of a sample against a continuous CDF.
inline double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

/// Critical value of the one-sample KS statistic (Stephens' approximation).
inline double ks_critical(std::size_t n, double alpha) {
    const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
    const double rn = std::sqrt(static_cast<double>(n));
    return c / (rn + 0.12 + 0.11 / rn);
}

inline std::vector<double> column(const Mat& m, Eigen::Index j) {
    std::vector<double> out(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = m(i, j);
    return out;
}

}  // namespace testsupport
