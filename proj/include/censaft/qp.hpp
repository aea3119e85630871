#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "censaft/errors.hpp"
#include "censaft/linalg.hpp"

namespace censaft {

// min -d'b + 1/2 b'Db  subject to  Ab >= b0, with D symmetric positive
// definite.
struct QpProblem {
    Vector d;
    Matrix D;
    Matrix A;   // m x p, m >= 0
    Vector b0;  // length m
};

struct QpSolution {
    Vector b;
    std::vector<std::size_t> active_set;
    double kkt_residual = 0.0;
    std::size_t iterations = 0;
    bool hit_iteration_limit = false;
};

namespace detail {

inline void validate_qp(const QpProblem& prob) {
    const std::size_t p = prob.d.size();
    if (prob.D.rows() != p || prob.D.cols() != p) {
        throw InvalidDataset("QP matrix D must be p x p");
    }
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i + 1; j < p; ++j) {
            if (std::abs(prob.D(i, j) - prob.D(j, i)) > 1e-10) {
                throw InvalidDataset("QP matrix D must be symmetric");
            }
        }
    }
    if (prob.A.rows() != prob.b0.size() || (prob.A.rows() > 0 && prob.A.cols() != p)) {
        throw InvalidDataset("QP constraint dimensions are inconsistent");
    }
}

struct KktPoint {
    Vector b;
    Vector mu;  // multipliers for the working set, aligned with its order
    bool dependent = false;
};

// Equality-constrained minimizer over the working set via the range-space
// system (A_W D^-1 A_W') mu = b0_W - A_W D^-1 d, b = D^-1 (d + A_W' mu).
inline KktPoint solve_working_set(const Matrix& dchol, const Vector& d,
                                  const Matrix& a, const Vector& b0,
                                  const std::vector<std::size_t>& ws) {
    KktPoint out;
    const std::size_t p = d.size();
    const Vector b_free = cholesky_solve(dchol, d);
    if (ws.empty()) {
        out.b = b_free;
        return out;
    }
    const std::size_t k = ws.size();
    std::vector<Vector> dinv_rows(k);
    for (std::size_t r = 0; r < k; ++r) {
        dinv_rows[r] = cholesky_solve(dchol, a.row(ws[r]));
    }
    Matrix s(k, k);
    Vector rhs(k);
    for (std::size_t r = 0; r < k; ++r) {
        double arb = 0.0;
        for (std::size_t j = 0; j < p; ++j) arb += a(ws[r], j) * b_free[j];
        rhs[r] = b0[ws[r]] - arb;
        for (std::size_t c = 0; c <= r; ++c) {
            double v = 0.0;
            for (std::size_t j = 0; j < p; ++j) v += a(ws[r], j) * dinv_rows[c][j];
            s(r, c) = v;
            s(c, r) = v;
        }
    }
    try {
        out.mu = cholesky_solve(cholesky(s), rhs);
    } catch (const NotPositiveDefinite&) {
        out.dependent = true;
        return out;
    }
    out.b = b_free;
    for (std::size_t r = 0; r < k; ++r) {
        for (std::size_t j = 0; j < p; ++j) out.b[j] += out.mu[r] * dinv_rows[r][j];
    }
    return out;
}

// Euclidean projection of `start` onto {b : Ab >= b0}, computed by a dual
// active-set scheme on the distance problem: pick the most violated
// constraint, then either step until it holds (it joins the working set) or
// drop the working-set constraint whose multiplier would turn negative
// first.  Every pass adds a constraint or certifies the system inconsistent,
// so unlike one-constraint-at-a-time projection this cannot stall when the
// feasible region is a thin sliver between nearly parallel constraints.
inline Vector project_onto_constraints(const Matrix& a, const Vector& b0,
                                       const std::vector<double>& row_norm2,
                                       const Vector& start, double tol) {
    const std::size_t m = a.rows();
    const std::size_t p = start.size();
    Vector x = start;
    std::vector<std::size_t> ws;
    Vector mu;  // aligned with ws, kept nonnegative

    auto residual = [&](std::size_t i) {
        double ab = 0.0;
        for (std::size_t j = 0; j < p; ++j) ab += a(i, j) * x[j];
        return b0[i] - ab;  // positive when violated
    };

    const std::size_t cap = 50 * (m + 1) * (p + 1) + 100;  // defensive only
    for (std::size_t pass = 0; pass < cap; ++pass) {
        double worst = tol;
        std::size_t q = m;
        for (std::size_t i = 0; i < m; ++i) {
            if (row_norm2[i] <= 1e-28) continue;
            const double v = residual(i);
            if (v > worst) {
                worst = v;
                q = i;
            }
        }
        if (q == m) return x;

        double mu_q = 0.0;  // multiplier accumulated by the entering constraint
        for (;;) {
            // z: component of the entering normal orthogonal to the working
            // set; r: how the working-set multipliers trade against it.
            Vector z(p);
            for (std::size_t j = 0; j < p; ++j) z[j] = a(q, j);
            Vector r;
            const std::size_t k = ws.size();
            if (k > 0) {
                Matrix s(k, k);
                Vector rhs(k);
                for (std::size_t rr = 0; rr < k; ++rr) {
                    double v = 0.0;
                    for (std::size_t j = 0; j < p; ++j) v += a(ws[rr], j) * a(q, j);
                    rhs[rr] = v;
                    for (std::size_t cc = 0; cc <= rr; ++cc) {
                        double g = 0.0;
                        for (std::size_t j = 0; j < p; ++j) {
                            g += a(ws[rr], j) * a(ws[cc], j);
                        }
                        s(rr, cc) = g;
                        s(cc, rr) = g;
                    }
                }
                r = cholesky_solve(cholesky(s), rhs);
                for (std::size_t rr = 0; rr < k; ++rr) {
                    for (std::size_t j = 0; j < p; ++j) z[j] -= r[rr] * a(ws[rr], j);
                }
            }
            double ztaq = 0.0;
            for (std::size_t j = 0; j < p; ++j) ztaq += z[j] * a(q, j);
            const bool dependent = ztaq <= 1e-12 * row_norm2[q];

            const double inf = std::numeric_limits<double>::infinity();
            double t1 = inf;
            std::size_t drop = k;
            for (std::size_t rr = 0; rr < k; ++rr) {
                if (r[rr] <= 1e-12) continue;
                const double c = std::max(0.0, mu[rr] / r[rr]);
                if (c < t1 - 1e-14 ||
                    (std::abs(c - t1) <= 1e-14 && drop < k && ws[rr] < ws[drop])) {
                    t1 = c;
                    drop = rr;
                }
            }
            const double t2 = dependent ? inf : std::max(0.0, residual(q)) / ztaq;
            if (dependent && drop == k) {
                // The entering normal is a nonpositive combination of active
                // normals, yet its constraint is violated: Farkas certificate.
                throw Infeasible("constraints are inconsistent: no point satisfies them all");
            }
            const double t = std::min(t1, t2);
            if (!dependent) {
                for (std::size_t j = 0; j < p; ++j) x[j] += t * z[j];
            }
            for (std::size_t rr = 0; rr < k; ++rr) mu[rr] -= t * r[rr];
            mu_q += t;
            if (!dependent && t2 <= t1) {
                ws.push_back(q);
                mu.push_back(mu_q);
                break;
            }
            ws.erase(ws.begin() + static_cast<std::ptrdiff_t>(drop));
            mu.erase(mu.begin() + static_cast<std::ptrdiff_t>(drop));
        }
    }
    throw Infeasible("feasibility restoration did not converge");
}

}  // namespace detail

inline std::size_t qp_default_max_iter(const QpProblem& prob) {
    return 50 * (prob.d.size() + prob.A.rows());
}

inline double b0_violation(double ab, double b0) { return std::max(0.0, b0 - ab); }

inline double qp_kkt_residual(const QpProblem& prob, const Vector& b,
                              const std::vector<std::size_t>& active,
                              const Vector& mu_active) {
    const std::size_t p = prob.d.size();
    const std::size_t m = prob.A.rows();
    Vector stat(p);
    for (std::size_t j = 0; j < p; ++j) {
        double s = -prob.d[j];
        for (std::size_t k = 0; k < p; ++k) s += prob.D(j, k) * b[k];
        stat[j] = s;
    }
    for (std::size_t r = 0; r < active.size(); ++r) {
        for (std::size_t j = 0; j < p; ++j) stat[j] -= mu_active[r] * prob.A(active[r], j);
    }
    double res = norm_inf(stat);
    for (std::size_t i = 0; i < m; ++i) {
        double ab = 0.0;
        for (std::size_t j = 0; j < p; ++j) ab += prob.A(i, j) * b[j];
        res = std::max(res, b0_violation(ab, prob.b0[i]));
    }
    for (std::size_t r = 0; r < active.size(); ++r) {
        res = std::max(res, std::max(0.0, -mu_active[r]));
        double ab = 0.0;
        for (std::size_t j = 0; j < p; ++j) ab += prob.A(active[r], j) * b[j];
        res = std::max(res, std::abs(mu_active[r] * (ab - prob.b0[active[r]])));
    }
    return res;
}

// Primal active-set method: unconstrained start, exact projection onto the
// constraint polyhedron to restore feasibility, then working-set iterations
// with the smallest-index rule for entering and leaving constraints.
inline QpSolution solve_qp(const QpProblem& prob, double tol = 1e-8,
                           std::size_t max_iter = 0) {
    detail::validate_qp(prob);
    if (!(tol > 0.0)) throw InvalidDataset("QP tolerance must be positive");
    if (max_iter == 0) max_iter = qp_default_max_iter(prob);

    const std::size_t p = prob.d.size();
    const std::size_t m = prob.A.rows();
    const Matrix dchol = cholesky(prob.D);

    std::vector<double> row_norm2(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < p; ++j) row_norm2[i] += prob.A(i, j) * prob.A(i, j);
        if (row_norm2[i] <= 1e-28 && prob.b0[i] > tol) {
            throw Infeasible("constraint " + std::to_string(i) +
                             " has a zero row and positive bound");
        }
    }

    QpSolution sol;
    sol.b = cholesky_solve(dchol, prob.d);

    auto violation = [&](const Vector& b, std::size_t i) {
        double ab = 0.0;
        for (std::size_t j = 0; j < p; ++j) ab += prob.A(i, j) * b[j];
        return prob.b0[i] - ab;
    };

    sol.b = detail::project_onto_constraints(prob.A, prob.b0, row_norm2, sol.b, tol);

    std::vector<std::size_t> ws;
    for (std::size_t i = 0; i < m; ++i) {
        if (row_norm2[i] > 1e-28 && std::abs(violation(sol.b, i)) <= tol &&
            ws.size() < p) {
            std::vector<std::size_t> trial = ws;
            trial.push_back(i);
            if (!detail::solve_working_set(dchol, prob.d, prob.A, prob.b0, trial)
                     .dependent) {
                ws = std::move(trial);
            }
        }
    }

    // Each iteration minimizes over the plane through the current iterate
    // parallel to the working-set constraints (A_W p = 0), not over the
    // constraints' own planes.  This pins the iterate's offsets instead of
    // re-deriving them, so a blocking constraint always has a_i'p < 0 while
    // A_W p = 0 and is therefore independent of the working set, and a
    // working set of p constraints forces p = 0; degenerate vertices need no
    // special cases.
    Vector mu(ws.size(), 0.0);
    while (sol.iterations < max_iter) {
        ++sol.iterations;
        Vector plane_b0 = prob.b0;
        for (std::size_t idx : ws) {
            double av = 0.0;
            for (std::size_t j = 0; j < p; ++j) av += prob.A(idx, j) * sol.b[j];
            plane_b0[idx] = av;
        }
        detail::KktPoint kkt =
            detail::solve_working_set(dchol, prob.d, prob.A, plane_b0, ws);
        if (kkt.dependent) {
            // Unreachable for working sets grown below; defends the seeds.
            ws.pop_back();
            continue;
        }

        if (ws.size() < p) {
            double dir_norm2 = 0.0;
            for (std::size_t j = 0; j < p; ++j) {
                const double dj = kkt.b[j] - sol.b[j];
                dir_norm2 += dj * dj;
            }
            double block_alpha = 1.0;
            std::size_t block_i = m;
            for (std::size_t i = 0; i < m; ++i) {
                if (row_norm2[i] <= 1e-28) continue;
                if (std::find(ws.begin(), ws.end(), i) != ws.end()) continue;
                double a_dir = 0.0, a_cur = 0.0;
                for (std::size_t j = 0; j < p; ++j) {
                    a_dir += prob.A(i, j) * (kkt.b[j] - sol.b[j]);
                    a_cur += prob.A(i, j) * sol.b[j];
                }
                // Angular threshold: rounding-level descent along a normal
                // almost inside the working-set span must not enter, or the
                // next subproblem would be near-singular.
                if (a_dir >= -1e-12 * std::sqrt(row_norm2[i] * dir_norm2)) continue;
                const double alpha = std::max(0.0, (prob.b0[i] - a_cur) / a_dir);
                if (alpha < block_alpha - 1e-14 ||
                    (std::abs(alpha - block_alpha) <= 1e-14 && i < block_i)) {
                    block_alpha = alpha;
                    block_i = i;
                }
            }
            if (block_i != m && block_alpha < 1.0) {
                for (std::size_t j = 0; j < p; ++j) {
                    sol.b[j] += block_alpha * (kkt.b[j] - sol.b[j]);
                }
                ws.push_back(block_i);
                continue;
            }
        }

        sol.b = kkt.b;
        mu = kkt.mu;
        std::size_t drop = ws.size();
        for (std::size_t r = 0; r < ws.size(); ++r) {
            if (kkt.mu[r] < -tol && (drop == ws.size() || ws[r] < ws[drop])) drop = r;
        }
        if (drop == ws.size()) break;
        ws.erase(ws.begin() + static_cast<std::ptrdiff_t>(drop));
        mu = Vector(ws.size(), 0.0);
    }

    sol.hit_iteration_limit = sol.iterations >= max_iter;
    if (mu.size() != ws.size()) {
        mu.assign(ws.size(), 0.0);
    }
    std::vector<std::size_t> order(ws.size());
    for (std::size_t r = 0; r < order.size(); ++r) order[r] = r;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return ws[a] < ws[b]; });
    sol.active_set.resize(ws.size());
    Vector mu_sorted(ws.size());
    for (std::size_t r = 0; r < order.size(); ++r) {
        sol.active_set[r] = ws[order[r]];
        mu_sorted[r] = mu[order[r]];
    }
    mu = std::move(mu_sorted);
    for (double& v : mu) v = std::max(0.0, v);
    sol.kkt_residual = qp_kkt_residual(prob, sol.b, sol.active_set, mu);
    return sol;
}

// Independent verification path: projected-gradient ascent on the dual with
// the nonnegativity clamp, step 1/L.
inline Vector qp_dual_pg_oracle(const QpProblem& prob, std::size_t iters = 200000) {
    const std::size_t p = prob.d.size();
    const std::size_t m = prob.A.rows();
    const Matrix dchol = cholesky(prob.D);
    if (m == 0) return cholesky_solve(dchol, prob.d);

    std::vector<Vector> dinv_rows(m);
    for (std::size_t i = 0; i < m; ++i) dinv_rows[i] = cholesky_solve(dchol, prob.A.row(i));
    Matrix s(m, m);
    double trace = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < m; ++c) {
            double v = 0.0;
            for (std::size_t j = 0; j < p; ++j) v += prob.A(r, j) * dinv_rows[c][j];
            s(r, c) = v;
        }
        trace += s(r, r);
    }
    const double step = 1.0 / std::max(trace, 1e-300);

    Vector mu(m, 0.0), b(p);
    for (std::size_t it = 0; it < iters; ++it) {
        Vector dmu = prob.d;
        for (std::size_t r = 0; r < m; ++r) {
            for (std::size_t j = 0; j < p; ++j) dmu[j] += mu[r] * prob.A(r, j);
        }
        b = cholesky_solve(dchol, dmu);
        for (std::size_t r = 0; r < m; ++r) {
            double ab = 0.0;
            for (std::size_t j = 0; j < p; ++j) ab += prob.A(r, j) * b[j];
            mu[r] = std::max(0.0, mu[r] + step * (prob.b0[r] - ab));
        }
    }
    Vector dmu = prob.d;
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t j = 0; j < p; ++j) dmu[j] += mu[r] * prob.A(r, j);
    }
    return cholesky_solve(dchol, dmu);
}

}  // namespace censaft
