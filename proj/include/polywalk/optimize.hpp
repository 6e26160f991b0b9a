#pragma once

// Small self-contained solvers: a dense two-phase simplex for LPs and a
// damped-Newton log-barrier path follower for the inscribed-ball SOCP.

#include "polywalk/error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

namespace polywalk {

enum class LpStatus { optimal, unbounded, infeasible };

struct LpResult {
    LpStatus status = LpStatus::infeasible;
    Eigen::VectorXd x;
    double value = -std::numeric_limits<double>::infinity();
};

namespace detail {

// Dictionary-form simplex: maximize c'x s.t. Ax <= b, x >= 0, with b of any
// sign. Phase one introduces a single artificial column (index -1 in the
// nonbasic list). Entering variable is the most negative reduced cost, ties
// broken on the smallest variable index.
class DenseSimplex {
public:
    DenseSimplex(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c)
        : m_(static_cast<int>(A.rows())), n_(static_cast<int>(A.cols())),
          D_(Eigen::MatrixXd::Zero(m_ + 2, n_ + 2)), basis_(m_), nonbasis_(n_ + 1) {
        for (int i = 0; i < m_; ++i) {
            for (int j = 0; j < n_; ++j) D_(i, j) = A(i, j);
            basis_[i] = n_ + i;
            D_(i, n_) = -1.0;
            D_(i, n_ + 1) = b[i];
        }
        for (int j = 0; j < n_; ++j) {
            nonbasis_[j] = j;
            D_(m_, j) = -c[j];
        }
        nonbasis_[n_] = -1;
        D_(m_ + 1, n_) = 1.0;
    }

    LpResult solve() {
        LpResult out;
        int r = 0;
        for (int i = 1; i < m_; ++i)
            if (D_(i, n_ + 1) < D_(r, n_ + 1)) r = i;
        if (m_ > 0 && D_(r, n_ + 1) < -kEps) {
            pivot(r, n_);
            if (!run(1) || D_(m_ + 1, n_ + 1) < -kEps) {
                out.status = LpStatus::infeasible;
                return out;
            }
            for (int i = 0; i < m_; ++i) {
                if (basis_[i] != -1) continue;
                int s = -1;
                for (int j = 0; j <= n_; ++j)
                    if (s == -1 || D_(i, j) < D_(i, s) || (D_(i, j) == D_(i, s) && nonbasis_[j] < nonbasis_[s]))
                        s = j;
                pivot(i, s);
            }
        }
        if (!run(2)) {
            out.status = LpStatus::unbounded;
            return out;
        }
        out.status = LpStatus::optimal;
        out.x = Eigen::VectorXd::Zero(n_);
        for (int i = 0; i < m_; ++i)
            if (basis_[i] >= 0 && basis_[i] < n_) out.x[basis_[i]] = D_(i, n_ + 1);
        out.value = D_(m_, n_ + 1);
        return out;
    }

private:
    static constexpr double kEps = 1e-11;

    void pivot(int r, int s) {
        const double inv = 1.0 / D_(r, s);
        for (int i = 0; i < m_ + 2; ++i) {
            if (i == r || D_(i, s) == 0.0) continue;
            const double factor = D_(i, s) * inv;
            for (int j = 0; j < n_ + 2; ++j)
                if (j != s) D_(i, j) -= D_(r, j) * factor;
        }
        for (int j = 0; j < n_ + 2; ++j)
            if (j != s) D_(r, j) *= inv;
        for (int i = 0; i < m_ + 2; ++i)
            if (i != r) D_(i, s) *= -inv;
        D_(r, s) = inv;
        std::swap(basis_[r], nonbasis_[s]);
    }

    bool run(int phase) {
        const int row = phase == 1 ? m_ + 1 : m_;
        // generous cap; the tie-breaking rule prevents cycling in practice
        const long max_iter = 50L * (m_ + n_ + 10) * (m_ + n_ + 10);
        for (long iter = 0; iter < max_iter; ++iter) {
            int s = -1;
            for (int j = 0; j <= n_; ++j) {
                if (phase == 2 && nonbasis_[j] == -1) continue;
                if (s == -1 || D_(row, j) < D_(row, s) ||
                    (D_(row, j) == D_(row, s) && nonbasis_[j] < nonbasis_[s]))
                    s = j;
            }
            if (D_(row, s) > -kEps) return true;
            int r = -1;
            for (int i = 0; i < m_; ++i) {
                if (D_(i, s) < kEps) continue;
                if (r == -1) {
                    r = i;
                    continue;
                }
                const double lhs = D_(i, n_ + 1) / D_(i, s);
                const double rhs = D_(r, n_ + 1) / D_(r, s);
                if (lhs < rhs || (lhs == rhs && basis_[i] < basis_[r])) r = i;
            }
            if (r == -1) return false;
            pivot(r, s);
        }
        fail(ErrorKind::convergence, "simplex method exceeded its iteration cap");
    }

    int m_, n_;
    Eigen::MatrixXd D_;
    std::vector<int> basis_, nonbasis_;
};

}  // namespace detail

/// maximize c'x subject to Ax <= b, x >= 0.
inline LpResult solve_lp(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c) {
    require(A.rows() == b.size() && A.cols() == c.size(), ErrorKind::structural, "solve_lp: dimension mismatch");
    return detail::DenseSimplex(A, b, c).solve();
}

/// maximize c'x subject to Ax <= b with x free (split into positive and
/// negative parts internally).
inline LpResult solve_lp_free(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c) {
    const Eigen::Index n = A.cols();
    Eigen::MatrixXd split(A.rows(), 2 * n);
    split << A, -A;
    Eigen::VectorXd c2(2 * n);
    c2 << c, -c;
    LpResult r = solve_lp(split, b, c2);
    if (r.status == LpStatus::optimal) r.x = (r.x.head(n) - r.x.tail(n)).eval();
    return r;
}

struct InscribedBallResult {
    Eigen::VectorXd center;
    double radius = 0.0;
    int newton_iterations = 0;
};

/// Largest ball inside {u : G u <= h} intersected with the unit ball,
///   max r  s.t.  g_i'u + r ||g_i|| <= h_i,  ||u|| <= 1 - r,
/// solved by a log-barrier path-following method with damped Newton steps.
/// The start (u = 0, r very negative) is always strictly feasible, so no
/// phase one is needed. A non-positive optimal radius means the set has no
/// interior.
inline InscribedBallResult inscribed_ball_socp(const Eigen::MatrixXd& G, const Eigen::VectorXd& h) {
    const Eigen::Index d = G.cols();
    const Eigen::Index m = G.rows();
    const Eigen::VectorXd norms = G.rowwise().norm();
    const Eigen::Index nz = d + 1;  // z = (u, r)

    Eigen::VectorXd z = Eigen::VectorXd::Zero(nz);
    double r0 = 1.0;
    for (Eigen::Index i = 0; i < m; ++i)
        if (norms[i] > 0.0) r0 = std::min(r0, h[i] / norms[i]);
    z[d] = r0 - 1.0;

    auto feasible = [&](const Eigen::VectorXd& zz) {
        const auto u = zz.head(d);
        const double r = zz[d];
        if ((h - G * u - r * norms).minCoeff() <= 0.0 && m > 0) return false;
        const double room = 1.0 - r;
        return room > 0.0 && room * room - u.squaredNorm() > 0.0;
    };
    auto barrier = [&](const Eigen::VectorXd& zz, double t) {
        const auto u = zz.head(d);
        const double r = zz[d];
        double f = -t * r;
        if (m > 0) f -= (h - G * u - r * norms).array().log().sum();
        const double room = 1.0 - r;
        f -= std::log(room * room - u.squaredNorm());
        return f;
    };

    InscribedBallResult out;
    double t = 1.0;
    const double mu = 8.0;
    const double n_barrier = static_cast<double>(m) + 2.0;
    while (true) {
        for (int it = 0; it < 200; ++it) {
            const auto u = z.head(d);
            const double r = z[d];
            Eigen::VectorXd grad = Eigen::VectorXd::Zero(nz);
            Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(nz, nz);
            grad[d] = -t;
            if (m > 0) {
                const Eigen::ArrayXd slack = (h - G * u - r * norms).array();
                Eigen::MatrixXd Gz(m, nz);
                Gz << G, norms;
                const Eigen::VectorXd inv = slack.inverse().matrix();
                grad += Gz.transpose() * inv;
                hess += Gz.transpose() * (inv.array().square().matrix().asDiagonal()) * Gz;
            }
            const double room = 1.0 - r;
            const double phi = room * room - u.squaredNorm();
            Eigen::VectorXd dphi(nz);
            dphi << -2.0 * u, -2.0 * room;
            grad -= dphi / phi;
            hess += dphi * dphi.transpose() / (phi * phi);
            Eigen::VectorXd d2(nz);
            d2.head(d).setConstant(-2.0);
            d2[d] = 2.0;
            hess.diagonal() -= d2 / phi;

            const Eigen::VectorXd step = hess.ldlt().solve(-grad);
            const double decrement = -grad.dot(step);
            ++out.newton_iterations;
            if (!(decrement > 1e-14) || !step.allFinite()) break;
            double alpha = 1.0;
            const double f0 = barrier(z, t);
            Eigen::VectorXd trial = z + alpha * step;
            while (alpha > 1e-16 && (!feasible(trial) || barrier(trial, t) > f0 - 0.25 * alpha * decrement)) {
                alpha *= 0.5;
                trial = z + alpha * step;
            }
            if (alpha <= 1e-16) break;
            z = trial;
            if (decrement < 1e-12) break;
        }
        if (n_barrier / t < 1e-11) break;
        t *= mu;
    }
    out.center = z.head(d);
    out.radius = z[d];
    return out;
}

}  // namespace polywalk
