#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "censaft/data.hpp"
#include "censaft/errors.hpp"
#include "censaft/linalg.hpp"
#include "censaft/rng.hpp"
#include "censaft/swls.hpp"

namespace censaft {

// Distribution of regression residuals: atoms in ascending order with the
// product-limit jump masses. The total mass can fall short of one when the
// largest residual is censored.
struct ResidualKm {
    Vector atoms;
    Vector jumps;
    double total_mass = 0.0;
};

// Product-limit over residuals with positive case multipliers z; the at-risk
// totals are positional suffix sums of z after ordering by residual (events
// first at ties). Constant z reduces to the unweighted estimator.
inline ResidualKm residual_km_weighted(const Vector& residuals,
                                       const std::vector<int>& statuses,
                                       const Vector& z) {
    const std::size_t n = residuals.size();
    if (statuses.size() != n || z.size() != n) {
        throw InvalidDataset("residuals, statuses and multipliers must align");
    }
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (residuals[a] != residuals[b]) return residuals[a] < residuals[b];
        return statuses[a] > statuses[b];
    });

    Vector at_risk(n + 1, 0.0);
    for (std::size_t k = n; k-- > 0;) at_risk[k] = at_risk[k + 1] + z[idx[k]];

    ResidualKm out;
    double surv = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = idx[k];
        if (statuses[i] != 1) continue;
        if (!(z[i] > 0.0)) throw NonPositiveZ("case multipliers must be positive");
        const double next = surv * (1.0 - z[i] / at_risk[k]);
        const double jump = surv - next;
        if (!out.atoms.empty() && out.atoms.back() == residuals[i]) {
            out.jumps.back() += jump;
        } else {
            out.atoms.push_back(residuals[i]);
            out.jumps.push_back(jump);
        }
        out.total_mass += jump;
        surv = next;
    }
    return out;
}

inline ResidualKm residual_km(const Vector& residuals,
                              const std::vector<int>& statuses) {
    return residual_km_weighted(residuals, statuses, Vector(residuals.size(), 1.0));
}

struct TailValue {
    double value = 0.0;
    bool empty = false;  // no residual mass beyond the anchor
};

// Mean of the residual distribution conditional on exceeding the anchor,
// normalized by the mass actually realized beyond it. With an empty tail the
// anchor itself is returned, flagged.
inline TailValue conditional_tail_mean(const ResidualKm& km, double anchor) {
    double mass = 0.0, acc = 0.0;
    for (std::size_t k = 0; k < km.atoms.size(); ++k) {
        if (km.atoms[k] > anchor) {
            mass += km.jumps[k];
            acc += km.atoms[k] * km.jumps[k];
        }
    }
    if (mass <= 0.0) return {anchor, true};
    return {acc / mass, false};
}

// Smallest tail atom whose cumulative conditional mass reaches one half;
// exact halves resolve to the smaller atom.
inline TailValue conditional_tail_median(const ResidualKm& km, double anchor) {
    double mass = 0.0;
    for (std::size_t k = 0; k < km.atoms.size(); ++k) {
        if (km.atoms[k] > anchor) mass += km.jumps[k];
    }
    if (mass <= 0.0) return {anchor, true};
    double cum = 0.0;
    for (std::size_t k = 0; k < km.atoms.size(); ++k) {
        if (km.atoms[k] <= anchor) continue;
        cum += km.jumps[k] / mass;
        if (cum >= 0.5 - 1e-15) return {km.atoms[k], false};
    }
    return {km.atoms.back(), false};
}

struct BjImputed {
    Vector values;  // log responses, censored entries lifted to the tail mean
    std::vector<std::size_t> empty_tail_positions;
};

// Censored responses are replaced by the fitted value plus the conditional
// residual tail mean; empty tails leave the entry unchanged.
inline BjImputed bj_imputed_responses(const OrderedDataset& data,
                                      const Vector& beta, const Vector* z = nullptr) {
    const std::size_t n = data.n();
    if (beta.size() != data.p()) {
        throw InvalidDataset("coefficient length does not match the data");
    }
    Vector xb(n), resid(n);
    for (std::size_t i = 0; i < n; ++i) {
        xb[i] = dot(data.covariates.row(i), beta);
        resid[i] = data.log_times[i] - xb[i];
    }
    const ResidualKm km = z ? residual_km_weighted(resid, data.statuses, *z)
                            : residual_km(resid, data.statuses);
    BjImputed out;
    out.values = data.log_times;
    for (std::size_t i = 0; i < n; ++i) {
        if (data.statuses[i] != 0) continue;
        const TailValue tv = conditional_tail_mean(km, resid[i]);
        if (tv.empty) {
            out.empty_tail_positions.push_back(i);
        } else {
            out.values[i] = xb[i] + tv.value;
        }
    }
    return out;
}

namespace detail {

// Least-squares map over imputed responses, centered at plain means; the case
// multipliers z weight the normal equations only.
inline Vector bj_ls_map(const OrderedDataset& data, const Vector& yhat,
                        const Vector* z) {
    const std::size_t n = data.n();
    const std::size_t p = data.p();
    Vector x_mean(p, 0.0);
    double y_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        y_mean += yhat[i];
        for (std::size_t j = 0; j < p; ++j) x_mean[j] += data.covariates(i, j);
    }
    y_mean /= static_cast<double>(n);
    for (double& v : x_mean) v /= static_cast<double>(n);

    Matrix g(p, p);
    Vector r(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double zi = z ? (*z)[i] : 1.0;
        for (std::size_t j = 0; j < p; ++j) {
            const double xcj = data.covariates(i, j) - x_mean[j];
            r[j] += zi * xcj * (yhat[i] - y_mean);
            for (std::size_t k = 0; k <= j; ++k) {
                g(j, k) += zi * xcj * (data.covariates(i, k) - x_mean[k]);
            }
        }
    }
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t k = 0; k < j; ++k) g(k, j) = g(j, k);
    }
    try {
        return cholesky_solve(cholesky(g), r);
    } catch (const NotPositiveDefinite&) {
        throw SingularDesign("centered design matrix is not invertible");
    }
}

}  // namespace detail

struct BjIteration {
    Vector beta;
    std::vector<Vector> trace;  // beta0 followed by each iterate
    std::size_t iterations = 0;
    bool converged = false;
};

inline BjIteration bj_iterate(const OrderedDataset& data, const Vector& beta0,
                              std::size_t max_m = 50, double tol = 1e-6) {
    BjIteration out;
    out.beta = beta0;
    out.trace.push_back(beta0);
    for (std::size_t m = 1; m <= max_m; ++m) {
        const BjImputed imp = bj_imputed_responses(data, out.beta);
        Vector next = detail::bj_ls_map(data, imp.values, nullptr);
        double delta = 0.0;
        for (std::size_t j = 0; j < next.size(); ++j) {
            delta = std::max(delta, std::abs(next[j] - out.beta[j]));
        }
        out.beta = std::move(next);
        out.trace.push_back(out.beta);
        out.iterations = m;
        if (delta < tol) {
            out.converged = true;
            break;
        }
    }
    return out;
}

// One resampling draw: start from the multiplier-weighted penalized fit and
// apply m weighted least-squares steps.
inline Vector bj_resample_single(const OrderedDataset& data, const Vector& z,
                                 double lambda2, std::size_t m) {
    FitOptions opts;
    opts.lambda2 = lambda2;
    Vector beta = fit_resampled_swls(data, z, opts).beta;
    for (std::size_t k = 0; k < m; ++k) {
        const BjImputed imp = bj_imputed_responses(data, beta, &z);
        beta = detail::bj_ls_map(data, imp.values, &z);
    }
    return beta;
}

// Draws of the m-step resampled estimator; row b is reproducibly derived
// from (rng_seed, b) with unit-exponential multipliers.
inline Matrix bj_resample_distribution(const OrderedDataset& data, double lambda2,
                                       std::size_t m, std::size_t n_draws,
                                       std::uint64_t rng_seed) {
    if (n_draws == 0) throw InvalidDataset("at least one resampling draw is required");
    const std::size_t n = data.n();
    Matrix draws(n_draws, data.p());
    for (std::size_t b = 0; b < n_draws; ++b) {
        Rng rng(child_seed(rng_seed, b));
        Vector z(n);
        for (double& v : z) v = rng.exponential();
        const Vector beta = bj_resample_single(data, z, lambda2, m);
        for (std::size_t j = 0; j < data.p(); ++j) draws(b, j) = beta[j];
    }
    return draws;
}

}  // namespace censaft
