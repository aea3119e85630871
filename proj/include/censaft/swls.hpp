#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "censaft/data.hpp"
#include "censaft/errors.hpp"
#include "censaft/km.hpp"
#include "censaft/linalg.hpp"
#include "censaft/qp.hpp"

namespace censaft {

inline double default_ridge(std::size_t p) {
    if (p <= 1) return 0.0;
    return 0.01 * std::sqrt(2.0 * std::log(static_cast<double>(p)));
}

// How censored observations enter the QP as lower-bound constraints on the
// fitted values. WeightScaled multiplies each constraint row by the square
// root of the observation weight, which annihilates censored rows (their
// Kaplan-Meier weight is zero) and leaves the fit unconstrained in practice.
// UnweightedCentered keeps the raw centered rows and is offered for
// sensitivity analysis; on real censored datasets it is frequently
// infeasible.
enum class ConstraintMode { WeightScaled, UnweightedCentered };

struct WeightedDesign {
    Matrix xc;      // covariates centered at the weighted means
    Vector yc;      // log responses centered at the weighted mean
    Vector weights; // ordered-scale Kaplan-Meier weights
    Vector x_mean;
    double y_mean = 0.0;
    std::vector<int> statuses; // after any tail correction
    bool tail_corrected = false;
};

inline WeightedDesign weighted_center(const OrderedDataset& data,
                                      bool tail_correction) {
    const std::size_t n = data.n();
    const std::size_t p = data.p();
    WeightedDesign out;
    const StuteWeights sw = stute_weights(data, tail_correction);
    out.weights = sw.weights;
    out.tail_corrected = sw.tail_corrected;
    out.statuses = data.statuses;
    if (out.tail_corrected) out.statuses.back() = 1;

    double wsum = 0.0;
    for (double w : out.weights) wsum += w;
    if (wsum <= 0.0) throw AllWeightsZero("all observation weights are zero");

    out.x_mean.assign(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        out.y_mean += out.weights[i] * data.log_times[i];
        for (std::size_t j = 0; j < p; ++j) {
            out.x_mean[j] += out.weights[i] * data.covariates(i, j);
        }
    }
    out.y_mean /= wsum;
    for (double& v : out.x_mean) v /= wsum;

    out.xc = Matrix(n, p);
    out.yc.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        out.yc[i] = data.log_times[i] - out.y_mean;
        for (std::size_t j = 0; j < p; ++j) {
            out.xc(i, j) = data.covariates(i, j) - out.x_mean[j];
        }
    }
    return out;
}

// Quadratic program for the penalized weighted least squares fit with one
// lower-bound constraint per censored observation. Identically zero
// constraint rows are vacuous when their bound is nonpositive and
// contradictory otherwise.
inline QpProblem build_qp(const WeightedDesign& design, double lambda2,
                          ConstraintMode mode = ConstraintMode::WeightScaled) {
    const std::size_t n = design.yc.size();
    const std::size_t p = design.x_mean.size();
    if (lambda2 < 0.0) throw InvalidDataset("ridge penalty must be nonnegative");

    QpProblem prob;
    prob.d.assign(p, 0.0);
    prob.D = Matrix(p, p);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = design.weights[i];
        if (w == 0.0) continue;
        for (std::size_t j = 0; j < p; ++j) {
            prob.d[j] += w * design.xc(i, j) * design.yc[i];
            for (std::size_t k = 0; k <= j; ++k) {
                prob.D(j, k) += w * design.xc(i, j) * design.xc(i, k);
            }
        }
    }
    for (std::size_t j = 0; j < p; ++j) {
        prob.D(j, j) += lambda2;
        for (std::size_t k = 0; k < j; ++k) prob.D(k, j) = prob.D(j, k);
    }
    try {
        cholesky(prob.D);
    } catch (const NotPositiveDefinite&) {
        throw RankDeficient("normal matrix is rank deficient; add a ridge penalty");
    }

    std::vector<Vector> rows;
    Vector bounds;
    for (std::size_t i = 0; i < n; ++i) {
        if (design.statuses[i] != 0) continue;
        const double scale =
            mode == ConstraintMode::WeightScaled ? std::sqrt(design.weights[i]) : 1.0;
        Vector row(p);
        double maxabs = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            row[j] = scale * design.xc(i, j);
            maxabs = std::max(maxabs, std::abs(row[j]));
        }
        const double bound = scale * design.yc[i];
        if (maxabs <= 1e-12) {
            if (bound > 1e-10) {
                throw Infeasible("censored observation " + std::to_string(i) +
                                 " demands a positive bound from a zero row");
            }
            continue;
        }
        rows.push_back(std::move(row));
        bounds.push_back(bound);
    }
    prob.A = Matrix(rows.size(), p);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t j = 0; j < p; ++j) prob.A(r, j) = rows[r][j];
    }
    prob.b0 = std::move(bounds);
    return prob;
}

struct FitOptions {
    bool tail_correction = true;
    std::optional<double> lambda2; // defaults to the log-p ridge rule
    ConstraintMode constraint_mode = ConstraintMode::WeightScaled;
    double qp_tol = 1e-8;
    std::size_t qp_max_iter = 0; // 0 lets the solver pick
};

struct AftFit {
    Vector beta;
    double intercept = 0.0;
    double lambda2 = 0.0;
    double kkt_residual = 0.0;
    std::size_t qp_iterations = 0;
    bool hit_iteration_limit = false;
    std::size_t n_censoring_constraints = 0;
    std::size_t n_active_censoring_constraints = 0;
};

inline double predict_log_time(const AftFit& fit, const Vector& x) {
    if (x.size() != fit.beta.size()) {
        throw InvalidDataset("covariate vector length does not match the fit");
    }
    return fit.intercept + dot(fit.beta, x);
}

inline AftFit fit_penalized_swls(const OrderedDataset& data,
                                 const FitOptions& opts = {}) {
    std::size_t events = 0;
    for (int s : data.statuses) events += s == 1;
    if (events == 0 && !opts.tail_correction) {
        throw NoUncensored("dataset has no uncensored observations");
    }

    const WeightedDesign design = weighted_center(data, opts.tail_correction);
    const double lambda2 = opts.lambda2 ? *opts.lambda2 : default_ridge(data.p());
    const QpProblem prob = build_qp(design, lambda2, opts.constraint_mode);
    const QpSolution qs = solve_qp(prob, opts.qp_tol, opts.qp_max_iter);

    AftFit fit;
    fit.beta = qs.b;
    fit.intercept = design.y_mean - dot(design.x_mean, fit.beta);
    fit.lambda2 = lambda2;
    fit.kkt_residual = qs.kkt_residual;
    fit.qp_iterations = qs.iterations;
    fit.hit_iteration_limit = qs.hit_iteration_limit;
    fit.n_censoring_constraints = prob.A.rows();
    fit.n_active_censoring_constraints = qs.active_set.size();
    return fit;
}

inline AftFit fit_penalized_swls(const SurvivalDataset& data,
                                 const FitOptions& opts = {}) {
    return fit_penalized_swls(order_dataset(data), opts);
}

// Refit used inside the resampling imputation schemes: the normal equations
// are reweighted by positive multipliers z while the centering and the
// censoring constraints stay on the original weighted scale.
inline AftFit fit_resampled_swls(const OrderedDataset& data, const Vector& z,
                                 const FitOptions& opts = {}) {
    if (z.size() != data.n()) {
        throw InvalidDataset("resampling weights length does not match the data");
    }
    for (double v : z) {
        if (!(v > 0.0)) throw NonPositiveZ("resampling weights must be positive");
    }

    FitOptions local = opts;
    local.tail_correction = true;
    const WeightedDesign design = weighted_center(data, local.tail_correction);
    const double lambda2 = local.lambda2 ? *local.lambda2 : default_ridge(data.p());
    const std::size_t p = data.p();

    QpProblem prob = build_qp(design, lambda2, local.constraint_mode);
    prob.d.assign(p, 0.0);
    prob.D = Matrix(p, p);
    for (std::size_t i = 0; i < data.n(); ++i) {
        const double w = z[i] * design.weights[i];
        if (w == 0.0) continue;
        for (std::size_t j = 0; j < p; ++j) {
            prob.d[j] += w * design.xc(i, j) * design.yc[i];
            for (std::size_t k = 0; k <= j; ++k) {
                prob.D(j, k) += w * design.xc(i, j) * design.xc(i, k);
            }
        }
    }
    for (std::size_t j = 0; j < p; ++j) {
        prob.D(j, j) += lambda2;
        for (std::size_t k = 0; k < j; ++k) prob.D(k, j) = prob.D(j, k);
    }
    try {
        cholesky(prob.D);
    } catch (const NotPositiveDefinite&) {
        throw RankDeficient("normal matrix is rank deficient; add a ridge penalty");
    }

    const QpSolution qs = solve_qp(prob, local.qp_tol, local.qp_max_iter);
    AftFit fit;
    fit.beta = qs.b;
    fit.intercept = design.y_mean - dot(design.x_mean, fit.beta);
    fit.lambda2 = lambda2;
    fit.kkt_residual = qs.kkt_residual;
    fit.qp_iterations = qs.iterations;
    fit.hit_iteration_limit = qs.hit_iteration_limit;
    fit.n_censoring_constraints = prob.A.rows();
    fit.n_active_censoring_constraints = qs.active_set.size();
    return fit;
}

}  // namespace censaft
